//! Homodyne projections, coherent-state variances and optimal squeezing.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fluctuation::{back_propagate_with, LinearizationOptions};
use crate::grid::{inner_product_real, l2_norm_sq, ComplexField};
use crate::propagator::{propagate, StepConfig, Trajectory};
use crate::pulse::CqParams;

/// Relative agreement required between the two-quadrature shortcut and a
/// direct back-propagation of `f_L(θ)`.
pub const LINEARITY_TOLERANCE: f64 = 1e-8;

/// Normalized local oscillator `U_L e^{iθ} / ‖U_L‖`.
pub fn local_oscillator(u_final: &ComplexField, theta: f64) -> Result<ComplexField> {
    let n = l2_norm_sq(u_final);
    if !(n > 0.0) {
        return Err(Error::Usage("local oscillator needs a nonzero pulse".into()));
    }
    Ok(u_final.scale(Complex64::from_polar(1.0 / n.sqrt(), theta)))
}

/// Variance of `⟨f|û⟩` for coherent (vacuum-level) input fluctuations.
pub fn coherent_variance(f: &ComplexField) -> f64 {
    0.25 * l2_norm_sq(f)
}

/// `R(θ) = a cos²θ + b sin²θ + 2c sinθ cosθ` for a unit-norm local oscillator.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct QuadratureForm {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl QuadratureForm {
    /// Form built from the back-propagated in-phase and quadrature projections.
    pub fn from_projections(f0_q1: &ComplexField, f0_q2: &ComplexField) -> Result<Self> {
        Ok(Self {
            a: l2_norm_sq(f0_q1),
            b: l2_norm_sq(f0_q2),
            c: inner_product_real(f0_q1, f0_q2)?,
        })
    }

    pub fn ratio(&self, theta: f64) -> f64 {
        let (s, c) = theta.sin_cos();
        self.a * c * c + self.b * s * s + 2.0 * self.c * s * c
    }

    /// Closed-form minimum over θ and the minimizing phase in `[0, π)`.
    pub fn optimum(&self) -> (f64, f64) {
        let mean = 0.5 * (self.a + self.b);
        let half_diff = 0.5 * (self.a - self.b);
        let radius = half_diff.hypot(self.c);
        let r_min = mean - radius;
        // R(θ) = mean + half_diff cos2θ + c sin2θ, minimized where 2θ points opposite (half_diff, c)
        let theta = if radius == 0.0 {
            0.0
        } else {
            wrap_half_turn(0.5 * (-self.c).atan2(-half_diff))
        };
        (r_min, theta)
    }

    pub fn maximum(&self) -> f64 {
        0.5 * (self.a + self.b) + (0.5 * (self.a - self.b)).hypot(self.c)
    }

    pub fn determinant(&self) -> f64 {
        self.a * self.b - self.c * self.c
    }
}

fn wrap_half_turn(theta: f64) -> f64 {
    let t = theta.rem_euclid(PI);
    // ties at the wrap point go to the smaller angle
    if PI - t < 1e-15 {
        0.0
    } else {
        t
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SqueezingOptimum {
    pub r_opt: f64,
    pub theta_opt: f64,
    pub form: QuadratureForm,
}

/// Optimal squeezing ratio from the two back-propagated quadrature projections.
pub fn optimal_squeezing(f0_q1: &ComplexField, f0_q2: &ComplexField) -> Result<SqueezingOptimum> {
    let form = QuadratureForm::from_projections(f0_q1, f0_q2)?;
    let (r_opt, theta_opt) = form.optimum();
    Ok(SqueezingOptimum {
        r_opt,
        theta_opt,
        form,
    })
}

/// Converts a linear ratio to decibels.
pub fn to_db(r: f64) -> f64 {
    10.0 * r.log10()
}

/// Back-propagated quadrature form for the local oscillator built from the
/// background at `step`.
pub fn quadrature_form_at(traj: &Trajectory, step: usize, opts: LinearizationOptions) -> Result<QuadratureForm> {
    let u_l = traj.field_at_step(step)?;
    let f1 = local_oscillator(&u_l, 0.0)?;
    let f2 = local_oscillator(&u_l, 0.5 * PI)?;
    let g1 = back_propagate_with(&f1, traj, step, opts)?;
    let g2 = back_propagate_with(&f2, traj, step, opts)?;
    QuadratureForm::from_projections(&g1, &g2)
}

/// Ratio obtained by back-propagating `f_L(θ)` directly.
pub fn direct_ratio(traj: &Trajectory, step: usize, theta: f64, opts: LinearizationOptions) -> Result<f64> {
    let u_l = traj.field_at_step(step)?;
    let f = local_oscillator(&u_l, theta)?;
    let f0 = back_propagate_with(&f, traj, step, opts)?;
    Ok(coherent_variance(&f0) / coherent_variance(&f))
}

#[derive(Clone, Debug, Serialize)]
pub struct SqueezingCurve {
    pub z_points: Vec<f64>,
    /// Soliton period used to express `z` in periods.
    pub soliton_period: f64,
    pub r_opt: Vec<f64>,
    pub theta_opt: Vec<f64>,
    pub forms: Vec<QuadratureForm>,
    /// Relative gap between the quadratic form and a direct back-propagation
    /// at one pseudo-random (sample, θ).
    pub linearity_check: f64,
    pub photon_drift: f64,
    pub hamiltonian_drift: f64,
}

impl SqueezingCurve {
    pub fn z_in_periods(&self) -> Vec<f64> {
        self.z_points.iter().map(|z| z / self.soliton_period).collect()
    }

    pub fn r_opt_db(&self) -> Vec<f64> {
        self.r_opt.iter().map(|&r| to_db(r)).collect()
    }

    /// Linear interpolation of `R_opt` at `z`.
    pub fn r_opt_at(&self, z: f64) -> f64 {
        interpolate(&self.z_points, &self.r_opt, z)
    }

    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["z", "z_in_soliton_periods", "R_opt", "R_opt_dB", "theta_opt"])?;
        for i in 0..self.z_points.len() {
            let z = self.z_points[i];
            w.write_record([
                format!("{z:.12e}"),
                format!("{:.12e}", z / self.soliton_period),
                format!("{:.12e}", self.r_opt[i]),
                format!("{:.12e}", to_db(self.r_opt[i])),
                format!("{:.12e}", self.theta_opt[i]),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

pub(crate) fn interpolate(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    match xs.iter().position(|&v| v >= x) {
        Some(0) => ys[0],
        Some(i) => {
            let f = (x - xs[i - 1]) / (xs[i] - xs[i - 1]);
            ys[i - 1] + f * (ys[i] - ys[i - 1])
        }
        None => *ys.last().expect("nonempty curve"),
    }
}

/// Step indices of `n_samples` evenly spaced distances on `[0, L]`.
pub fn sample_steps(n_steps: usize, n_samples: usize) -> Vec<usize> {
    if n_samples <= 1 || n_steps == 0 {
        return vec![n_steps];
    }
    let mut steps: Vec<usize> = (0..n_samples)
        .map(|i| ((i as f64) * n_steps as f64 / (n_samples - 1) as f64).round() as usize)
        .collect();
    steps.dedup();
    steps
}

/// Optimal squeezing ratio along one classical run, sampled at `n_samples`
/// evenly spaced distances including both ends.
pub fn squeezing_curve(
    initial: &ComplexField,
    params: CqParams,
    length: f64,
    n_samples: usize,
    cfg: &StepConfig,
    soliton_period: f64,
) -> Result<SqueezingCurve> {
    let traj = propagate(initial, params, length, cfg)?;
    squeezing_curve_on(&traj, n_samples, soliton_period, LinearizationOptions::default())
}

/// [`squeezing_curve`] over an existing trajectory.
pub fn squeezing_curve_on(
    traj: &Trajectory,
    n_samples: usize,
    soliton_period: f64,
    opts: LinearizationOptions,
) -> Result<SqueezingCurve> {
    if n_samples == 0 {
        return Err(Error::Usage("need at least one sample".into()));
    }
    let steps = sample_steps(traj.n_steps(), n_samples);
    let forms = steps
        .par_iter()
        .map(|&k| quadrature_form_at(traj, k, opts))
        .collect::<Result<Vec<_>>>()?;

    let mut r_opt = Vec::with_capacity(forms.len());
    let mut theta_opt = Vec::with_capacity(forms.len());
    for (form, &k) in forms.iter().zip(&steps) {
        if k == 0 {
            // identity back-propagation
            r_opt.push(1.0);
            theta_opt.push(0.0);
        } else {
            let (r, th) = form.optimum();
            r_opt.push(r);
            theta_opt.push(th);
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_c0de ^ traj.n_steps() as u64);
    let pick = rng.random_range(0..steps.len());
    let theta = rng.random_range(0.0..2.0 * PI);
    let direct = direct_ratio(traj, steps[pick], theta, opts)?;
    let via_form = forms[pick].ratio(theta);
    let linearity_check = (direct - via_form).abs() / direct.abs().max(f64::MIN_POSITIVE);
    if linearity_check > LINEARITY_TOLERANCE {
        return Err(Error::Consistency(format!(
            "quadrature shortcut disagrees with direct back-propagation by {linearity_check:e}"
        )));
    }

    Ok(SqueezingCurve {
        z_points: steps.iter().map(|&k| traj.z_at_step(k)).collect(),
        soliton_period,
        r_opt,
        theta_opt,
        forms,
        linearity_check,
        photon_drift: traj.photon_drift(),
        hamiltonian_drift: traj.hamiltonian_drift(),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ThetaScan {
    pub theta: Vec<f64>,
    pub r: Vec<f64>,
    pub form: QuadratureForm,
}

impl ThetaScan {
    pub fn min(&self) -> f64 {
        self.r.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.r.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["theta", "R"])?;
        for (t, r) in self.theta.iter().zip(&self.r) {
            w.write_record([format!("{t:.12e}"), format!("{r:.12e}")])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// `R(θ)` at distance `length` for each phase in `thetas`.
pub fn theta_scan(initial: &ComplexField, params: CqParams, length: f64, thetas: &[f64], cfg: &StepConfig) -> Result<ThetaScan> {
    let traj = propagate(initial, params, length, cfg)?;
    theta_scan_on(&traj, thetas, LinearizationOptions::default())
}

pub fn theta_scan_on(traj: &Trajectory, thetas: &[f64], opts: LinearizationOptions) -> Result<ThetaScan> {
    let form = quadrature_form_at(traj, traj.n_steps(), opts)?;
    Ok(ThetaScan {
        theta: thetas.to_vec(),
        r: thetas.iter().map(|&t| form.ratio(t)).collect(),
        form,
    })
}

/// `n` evenly spaced phases on `[0, 2π)`.
pub fn theta_grid(n: usize) -> Vec<f64> {
    (0..n).map(|i| 2.0 * PI * i as f64 / n as f64).collect()
}
