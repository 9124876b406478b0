//! Linearized fluctuation dynamics around a classical background and the
//! adjoint flow used for back-propagation of projection functions.
//!
//! Forward:  `u_z  = i u_tt  + iα u  + iκ u*`
//! Adjoint:  `uA_z = i uA_tt + iα uA − iκ uA*`
//!
//! with `α = 4χ|U₀|² + 9γ|U₀|⁴` and `κ = 2χU₀² + 6γU₀³U₀*`.  Both flows are
//! split the same way (dispersion half step, exact local 2×2 exponential at
//! the midpoint background, dispersion half step), so the real pairing
//! `Re Σ uA* u dt` between the two is preserved step by step.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{self, ComplexField, TimeGrid};
use crate::propagator::{dispersion_phases, SplitStepper, Trajectory};
use crate::pulse::CqParams;

/// Largest tolerated gap between a backward-reconstructed background and a
/// stored checkpoint.
pub const BACKGROUND_TOLERANCE: f64 = 1e-7;

const SERIES_THRESHOLD: f64 = 1e-4;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

/// A perturbation (forward) or projection function (backward) at `z`.
#[derive(Clone, Debug)]
pub struct LinearizedState {
    pub u: ComplexField,
    pub z: f64,
    pub direction: Direction,
}

/// Switches for diagnostic variants of the linearization.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct LinearizationOptions {
    /// Drop the conjugate coupling `κ`, leaving a phase-insensitive flow.
    pub zero_conjugate_coupling: bool,
}

/// Local coefficients `(α, κ)` for background sample `u0`.
pub fn local_coupling(u0: Complex64, params: CqParams) -> (f64, Complex64) {
    let p = u0.norm_sqr();
    let (chi, gamma) = (params.chi(), params.gamma());
    let alpha = 4.0 * chi * p + 9.0 * gamma * p * p;
    let kappa = u0 * u0 * (2.0 * chi + 6.0 * gamma * p);
    (alpha, kappa)
}

/// `exp(G h) = c·I + s·G` with `G = [[iα, iκ], [−iκ*, −iα]]`, since
/// `G² = (|κ|² − α²) I`.  Returns `(c, s)`.
fn exp_coefficients(alpha: f64, kappa: Complex64, h: f64) -> (f64, f64) {
    let disc = kappa.norm_sqr() - alpha * alpha;
    let x = disc * h * h;
    if x.abs() < SERIES_THRESHOLD {
        let c = 1.0 + x / 2.0 + x * x / 24.0 + x * x * x / 720.0;
        let s = h * (1.0 + x / 6.0 + x * x / 120.0 + x * x * x / 5040.0);
        (c, s)
    } else if disc > 0.0 {
        let r = disc.sqrt();
        ((r * h).cosh(), (r * h).sinh() / r)
    } else {
        let w = (-disc).sqrt();
        ((w * h).cos(), (w * h).sin() / w)
    }
}

/// Pointwise exact evolution of the (u, u*) pair over `h`.
/// `sign = +1` advances the forward flow; `sign = −1` applies the adjoint
/// flow backward by `h`, i.e. the transpose of the forward map.
fn apply_local(u: &mut [Complex64], background: &[Complex64], params: CqParams, h: f64, sign: f64, opts: LinearizationOptions) {
    let i = Complex64::i();
    for (x, &b) in u.iter_mut().zip(background) {
        let (alpha, mut kappa) = local_coupling(b, params);
        if opts.zero_conjugate_coupling {
            kappa = Complex64::new(0.0, 0.0);
        }
        let (c, s) = exp_coefficients(alpha, kappa, h);
        let v = *x;
        let g = i * alpha * v + sign * i * kappa * v.conj();
        *x = v * c + g * (sign * s);
    }
}

fn disperse(grid: &TimeGrid, u: &mut [Complex64], phases: &[Complex64]) {
    grid.fft_in_place(u);
    u.iter_mut().zip(phases).for_each(|(x, p)| *x *= p);
    grid.ifft_in_place(u);
}

struct LinearizedStepper {
    grid: TimeGrid,
    params: CqParams,
    dz: f64,
    forward_half: Vec<Complex64>,
    backward_half: Vec<Complex64>,
    opts: LinearizationOptions,
    mid: Vec<Complex64>,
}

impl LinearizedStepper {
    fn new(grid: &TimeGrid, params: CqParams, dz: f64, opts: LinearizationOptions) -> Self {
        Self {
            grid: grid.clone(),
            params,
            dz,
            forward_half: dispersion_phases(grid, 0.5 * dz),
            backward_half: dispersion_phases(grid, -0.5 * dz),
            opts,
            mid: vec![Complex64::new(0.0, 0.0); grid.n()],
        }
    }

    fn set_midpoint(&mut self, a: &[Complex64], b: &[Complex64]) {
        for ((m, x), y) in self.mid.iter_mut().zip(a).zip(b) {
            *m = (x + y) * 0.5;
        }
    }

    fn forward(&mut self, u: &mut [Complex64], start: &[Complex64], end: &[Complex64]) {
        self.set_midpoint(start, end);
        disperse(&self.grid, u, &self.forward_half);
        apply_local(u, &self.mid, self.params, self.dz, 1.0, self.opts);
        disperse(&self.grid, u, &self.forward_half);
    }

    fn adjoint_back(&mut self, u: &mut [Complex64], start: &[Complex64], end: &[Complex64]) {
        self.set_midpoint(start, end);
        disperse(&self.grid, u, &self.backward_half);
        apply_local(u, &self.mid, self.params, self.dz, -1.0, self.opts);
        disperse(&self.grid, u, &self.backward_half);
    }
}

/// One forward split step of the linearized equation with background
/// `u0_mid` taken at the step midpoint.
pub fn linearized_step(u: &ComplexField, u0_mid: &ComplexField, params: CqParams, dz: f64) -> Result<ComplexField> {
    u.grid().check_same(u0_mid.grid())?;
    let mut stepper = LinearizedStepper::new(u.grid(), params, dz, LinearizationOptions::default());
    let mut v = u.values().to_vec();
    stepper.forward(&mut v, u0_mid.values(), u0_mid.values());
    Ok(ComplexField::from_values_unchecked(u.grid(), v))
}

/// One backward step of the adjoint equation from `z + dz` to `z`.
pub fn adjoint_backstep(u_adj: &ComplexField, u0_mid: &ComplexField, params: CqParams, dz: f64) -> Result<ComplexField> {
    u_adj.grid().check_same(u0_mid.grid())?;
    let mut stepper = LinearizedStepper::new(u_adj.grid(), params, dz, LinearizationOptions::default());
    let mut v = u_adj.values().to_vec();
    stepper.adjoint_back(&mut v, u0_mid.values(), u0_mid.values());
    Ok(ComplexField::from_values_unchecked(u_adj.grid(), v))
}

/// Supplies `U₀` at consecutive step boundaries of a trajectory, reading
/// checkpoints directly when every step is stored and re-integrating otherwise.
struct BackgroundCursor<'a> {
    traj: &'a Trajectory,
    step: usize,
    current: Vec<Complex64>,
    stepper: Option<SplitStepper>,
}

impl<'a> BackgroundCursor<'a> {
    fn forward(traj: &'a Trajectory) -> Self {
        Self {
            traj,
            step: 0,
            current: traj.stored(0).to_vec(),
            stepper: (traj.stride() > 1).then(|| traj.stepper(false)),
        }
    }

    fn backward(traj: &'a Trajectory, from_step: usize) -> Result<Self> {
        let current = traj.field_at_step(from_step)?.into_values();
        Ok(Self {
            traj,
            step: from_step,
            current,
            stepper: (traj.stride() > 1).then(|| traj.stepper(true)),
        })
    }

    fn current(&self) -> &[Complex64] {
        &self.current
    }

    fn advance(&mut self) {
        self.step += 1;
        match (&self.stepper, self.traj.checkpoint_index(self.step)) {
            (_, Some(i)) => self.current.copy_from_slice(self.traj.stored(i)),
            (Some(stepper), None) => stepper.advance(&mut self.current),
            (None, None) => unreachable!("every step is a checkpoint at stride 1"),
        }
    }

    fn retreat(&mut self) -> Result<()> {
        self.step -= 1;
        let stored = self.traj.checkpoint_index(self.step);
        match &self.stepper {
            None => {
                let i = stored.expect("every step is a checkpoint at stride 1");
                self.current.copy_from_slice(self.traj.stored(i));
            }
            Some(stepper) => {
                stepper.advance(&mut self.current);
                if let Some(i) = stored {
                    let reference = self.traj.stored(i);
                    let deviation = self
                        .current
                        .iter()
                        .zip(reference)
                        .map(|(a, b)| (a - b).norm())
                        .fold(0.0, f64::max);
                    if deviation > BACKGROUND_TOLERANCE {
                        return Err(Error::Background {
                            z: self.traj.z_at_step(self.step),
                            deviation,
                            limit: BACKGROUND_TOLERANCE,
                        });
                    }
                    self.current.copy_from_slice(reference);
                }
            }
        }
        Ok(())
    }
}

fn check_grid(f: &ComplexField, traj: &Trajectory) -> Result<()> {
    f.grid().check_same(traj.grid()).map_err(|_| {
        Error::Usage(format!(
            "projection grid {:?} does not match trajectory grid {:?}",
            f.grid(),
            traj.grid()
        ))
    })
}

/// Propagate a perturbation `u(0)` forward to the end of the trajectory.
pub fn forward_propagate_perturbation(u0: &ComplexField, traj: &Trajectory) -> Result<ComplexField> {
    forward_propagate_perturbation_with(u0, traj, traj.n_steps(), LinearizationOptions::default())
}

/// Forward propagation up to step `to_step`.
pub fn forward_propagate_perturbation_with(
    u0: &ComplexField,
    traj: &Trajectory,
    to_step: usize,
    opts: LinearizationOptions,
) -> Result<ComplexField> {
    check_grid(u0, traj)?;
    if to_step > traj.n_steps() {
        return Err(Error::Usage(format!("step {to_step} beyond trajectory end")));
    }
    let mut stepper = LinearizedStepper::new(traj.grid(), traj.params(), traj.dz(), opts);
    let mut cursor = BackgroundCursor::forward(traj);
    let mut u = u0.values().to_vec();
    let mut prev = cursor.current().to_vec();
    for _ in 0..to_step {
        cursor.advance();
        stepper.forward(&mut u, &prev, cursor.current());
        prev.copy_from_slice(cursor.current());
    }
    Ok(ComplexField::from_values_unchecked(traj.grid(), u))
}

/// Back-propagate a projection function from `z = L` to `z = 0` so that
/// `⟨f₀|u(0)⟩ = ⟨f_L|u(L)⟩` for every linearized solution `u`.
pub fn back_propagate(f_final: &ComplexField, traj: &Trajectory) -> Result<ComplexField> {
    back_propagate_with(f_final, traj, traj.n_steps(), LinearizationOptions::default())
}

/// Back-propagation starting from step `from_step` (`z = from_step·dz`).
pub fn back_propagate_with(
    f_final: &ComplexField,
    traj: &Trajectory,
    from_step: usize,
    opts: LinearizationOptions,
) -> Result<ComplexField> {
    check_grid(f_final, traj)?;
    if from_step > traj.n_steps() {
        return Err(Error::Usage(format!("step {from_step} beyond trajectory end")));
    }
    let mut stepper = LinearizedStepper::new(traj.grid(), traj.params(), traj.dz(), opts);
    let mut cursor = BackgroundCursor::backward(traj, from_step)?;
    let mut f = f_final.values().to_vec();
    let mut upper = cursor.current().to_vec();
    for _ in 0..from_step {
        cursor.retreat()?;
        stepper.adjoint_back(&mut f, cursor.current(), &upper);
        upper.copy_from_slice(cursor.current());
    }
    Ok(ComplexField::from_values_unchecked(traj.grid(), f))
}

/// One row of the pairing-defect log.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct PairingSample {
    pub z: f64,
    pub defect: f64,
}

/// `|⟨f(z)|u(z)⟩ − ⟨f_L|u(L)⟩|` at every checkpoint, for one perturbation
/// `u0` and one final projection `f_final`.
pub fn pairing_defect_log(u0: &ComplexField, f_final: &ComplexField, traj: &Trajectory) -> Result<Vec<PairingSample>> {
    check_grid(u0, traj)?;
    check_grid(f_final, traj)?;
    let dt = traj.grid().dt();
    let opts = LinearizationOptions::default();
    let n_steps = traj.n_steps();

    // forward pass, keeping u at checkpoints
    let mut stepper = LinearizedStepper::new(traj.grid(), traj.params(), traj.dz(), opts);
    let mut cursor = BackgroundCursor::forward(traj);
    let mut u = u0.values().to_vec();
    let mut prev = cursor.current().to_vec();
    let mut saved = vec![u.clone()];
    for k in 1..=n_steps {
        cursor.advance();
        stepper.forward(&mut u, &prev, cursor.current());
        prev.copy_from_slice(cursor.current());
        if traj.checkpoint_index(k).is_some() {
            saved.push(u.clone());
        }
    }
    let reference = grid::pairing(f_final.values(), &u, dt);

    let mut cursor = BackgroundCursor::backward(traj, n_steps)?;
    let mut f = f_final.values().to_vec();
    let mut upper = cursor.current().to_vec();
    let mut log = vec![PairingSample {
        z: traj.length(),
        defect: 0.0,
    }];
    let mut idx = saved.len() - 1;
    for k in (0..n_steps).rev() {
        cursor.retreat()?;
        stepper.adjoint_back(&mut f, cursor.current(), &upper);
        upper.copy_from_slice(cursor.current());
        if traj.checkpoint_index(k).is_some() {
            idx -= 1;
            log.push(PairingSample {
                z: traj.z_at_step(k),
                defect: (grid::pairing(&f, &saved[idx], dt) - reference).abs(),
            });
        }
    }
    log.reverse();
    Ok(log)
}

/// Symplectic form `Im Σ u₁* u₂ dt`.
pub fn symplectic_pairing(u1: &ComplexField, u2: &ComplexField) -> Result<f64> {
    Ok(grid::overlap(u1, u2)?.im)
}
