//! Cubic-quintic soliton family, the amplitude/width relation with its fold,
//! and Gaussian input pulses.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{ComplexField, TimeGrid};
use crate::roots::{bisect, golden_min};

/// Nonlinearity coefficients of `iU_z + U_tt + 2χ|U|²U + 3γ|U|⁴U = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams", into = "RawParams")]
pub struct CqParams {
    chi: f64,
    gamma: f64,
}

#[derive(Serialize, Deserialize)]
struct RawParams {
    chi: f64,
    gamma: f64,
}

impl TryFrom<RawParams> for CqParams {
    type Error = Error;
    fn try_from(raw: RawParams) -> Result<Self> {
        CqParams::new(raw.chi, raw.gamma)
    }
}

impl From<CqParams> for RawParams {
    fn from(p: CqParams) -> Self {
        RawParams {
            chi: p.chi,
            gamma: p.gamma,
        }
    }
}

impl CqParams {
    /// `chi` must be exactly `+1` or `-1`.
    pub fn new(chi: f64, gamma: f64) -> Result<Self> {
        if chi != 1.0 && chi != -1.0 {
            return Err(Error::Domain(format!("chi must be +1 or -1, got {chi}")));
        }
        if !gamma.is_finite() {
            return Err(Error::Domain(format!("gamma must be finite, got {gamma}")));
        }
        Ok(Self { chi, gamma })
    }

    /// `χ = γ = 0`: pure dispersion, for checks against the linear
    /// Schrödinger flow.  Not a member of the soliton family.
    pub fn dispersion_only() -> Self {
        Self {
            chi: 0.0,
            gamma: 0.0,
        }
    }

    /// Focusing cubic term with quintic coefficient `gamma`.
    pub fn focusing(gamma: f64) -> Self {
        Self::new(1.0, gamma).expect("finite gamma")
    }

    pub fn chi(&self) -> f64 {
        self.chi
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Soliton peak power for propagation constant `beta`.
    pub fn peak_power_at(&self, beta: f64) -> Result<f64> {
        let disc = 1.0 + 4.0 * self.gamma * beta;
        if !(beta > 0.0) || !(disc > 0.0) {
            return Err(Error::Domain(format!(
                "no soliton for beta = {beta}: need beta > 0 and 1 + 4*gamma*beta > 0"
            )));
        }
        let root = disc.sqrt();
        let denom = if self.chi < 0.0 {
            // sqrt(1 + x) - 1 without cancellation
            4.0 * self.gamma * beta / (root + 1.0)
        } else {
            root + self.chi
        };
        if !(denom > 0.0) {
            return Err(Error::Domain(format!(
                "no soliton for beta = {beta}: sqrt(1 + 4*gamma*beta) + chi <= 0"
            )));
        }
        Ok(2.0 * beta / denom)
    }

    /// Both amplitude-window conditions `χ + 2γA² > 0` and `χA² + γA⁴ > 0`.
    pub fn is_admissible(&self, amplitude: f64) -> bool {
        let a2 = amplitude * amplitude;
        amplitude > 0.0 && self.chi + 2.0 * self.gamma * a2 > 0.0 && self.chi * a2 + self.gamma * a2 * a2 > 0.0
    }

    /// Upper edge of the admissible amplitude window, if bounded.
    pub fn max_amplitude(&self) -> Option<f64> {
        (self.chi > 0.0 && self.gamma < 0.0).then(|| (-self.chi / (2.0 * self.gamma)).sqrt())
    }
}

/// Exact stationary soliton labelled by its propagation constant.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolitonSpec {
    pub params: CqParams,
    pub beta: f64,
}

impl SolitonSpec {
    pub fn new(params: CqParams, beta: f64) -> Result<Self> {
        params.peak_power_at(beta)?;
        Ok(Self { params, beta })
    }

    pub fn from_amplitude(params: CqParams, amplitude: f64) -> Result<Self> {
        let beta = beta_from_amplitude(params, amplitude)?;
        Self::new(params, beta)
    }

    pub fn peak_power(&self) -> f64 {
        self.params
            .peak_power_at(self.beta)
            .expect("validated at construction")
    }

    pub fn amplitude(&self) -> f64 {
        self.peak_power().sqrt()
    }

    /// Width from the amplitude/width relation, when the amplitude is admissible.
    pub fn width(&self) -> Option<f64> {
        width_from_amplitude(self.params, self.amplitude())
    }

    /// Soliton period `π / (2β)`.
    pub fn period(&self) -> f64 {
        soliton_period(self.beta)
    }
}

/// Propagation-distance unit used on every squeezing-curve axis.
pub fn soliton_period(beta: f64) -> f64 {
    PI / (2.0 * beta)
}

pub fn peak_power(spec: &SolitonSpec) -> f64 {
    spec.peak_power()
}

/// `U(0,t) = sqrt(2β / (sqrt(1+4γβ) cosh(2 sqrt(β) t) + χ))`.
pub fn soliton_profile(spec: &SolitonSpec, grid: &TimeGrid) -> Result<ComplexField> {
    let SolitonSpec { params, beta } = *spec;
    params.peak_power_at(beta)?;
    let root = (1.0 + 4.0 * params.gamma() * beta).sqrt();
    let k = 2.0 * beta.sqrt();
    let mut values = Vec::with_capacity(grid.n());
    for &t in grid.t() {
        let denom = if params.chi() < 0.0 {
            // (root - 1) cosh + (cosh - 1), both without cancellation
            4.0 * params.gamma() * beta / (root + 1.0) * (k * t).cosh() + 2.0 * (0.5 * k * t).sinh().powi(2)
        } else {
            root * (k * t).cosh() + params.chi()
        };
        if !(denom > 0.0) {
            return Err(Error::Domain(format!(
                "soliton denominator is nonpositive at t = {t}"
            )));
        }
        values.push(Complex64::new((2.0 * beta / denom).sqrt(), 0.0));
    }
    ComplexField::from_values(grid, values)
}

/// Propagation constant whose soliton has peak amplitude `amplitude`.
pub fn beta_from_amplitude(params: CqParams, amplitude: f64) -> Result<f64> {
    if !(amplitude > 0.0 && amplitude.is_finite()) {
        return Err(Error::Domain(format!(
            "amplitude must be positive, got {amplitude}"
        )));
    }
    let target = amplitude * amplitude;
    let residual = |beta: f64| match params.peak_power_at(beta) {
        Ok(p) => p - target,
        Err(_) => f64::NAN,
    };
    let gamma = params.gamma();
    let (lo, hi) = if gamma < 0.0 {
        let edge = -1.0 / (4.0 * gamma);
        (edge * 1e-15, edge * (1.0 - 1e-14))
    } else {
        let lo = 1e-12;
        let mut hi = 1.0;
        while residual(hi) < 0.0 && hi < 1e12 {
            hi *= 2.0;
        }
        (lo, hi)
    };
    bisect(residual, lo, hi, 1e-12)
        .filter(|&b| residual(b).abs() <= 1e-10 * target.max(1.0))
        .ok_or_else(|| {
            Error::Domain(format!(
                "no soliton with amplitude {amplitude} for chi = {}, gamma = {gamma}",
                params.chi()
            ))
        })
}

/// `cosh(τ/2 · sqrt(χA² + γA⁴)) − (3χ + 4γA²)/(χ + 2γA²)`.
pub fn width_amplitude_residual(params: CqParams, amplitude: f64, tau: f64) -> Result<f64> {
    let a2 = amplitude * amplitude;
    let q = params.chi() * a2 + params.gamma() * a2 * a2;
    let d = params.chi() + 2.0 * params.gamma() * a2;
    if !(q > 0.0) {
        return Err(Error::Domain(format!(
            "chi*A^2 + gamma*A^4 must be positive, got {q}"
        )));
    }
    if d == 0.0 {
        return Err(Error::Domain("chi + 2*gamma*A^2 vanishes".into()));
    }
    Ok((0.5 * tau * q.sqrt()).cosh() - (3.0 * params.chi() + 4.0 * params.gamma() * a2) / d)
}

/// Width `τ(A)` solving the amplitude/width relation; `None` outside the window.
pub fn width_from_amplitude(params: CqParams, amplitude: f64) -> Option<f64> {
    if !params.is_admissible(amplitude) {
        return None;
    }
    let a2 = amplitude * amplitude;
    let q = params.chi() * a2 + params.gamma() * a2 * a2;
    let rhs = (3.0 * params.chi() + 4.0 * params.gamma() * a2) / (params.chi() + 2.0 * params.gamma() * a2);
    (rhs >= 1.0).then(|| 2.0 * rhs.acosh() / q.sqrt())
}

const SCAN_POINTS: usize = 4000;

fn amplitude_scan_bounds(params: CqParams, tau: f64) -> (f64, f64) {
    let lo = 1e-4;
    if let Some(a_max) = params.max_amplitude() {
        return (lo, a_max * (1.0 - 1e-9));
    }
    // unbounded window: stop before cosh overflows
    let lo = if params.chi() < 0.0 {
        (1.0 / params.gamma()).sqrt() * (1.0 + 1e-9)
    } else {
        lo
    };
    let mut hi = lo.max(1.0) * 2.0;
    let arg = |a: f64| {
        let a2 = a * a;
        0.5 * tau * (params.chi() * a2 + params.gamma() * a2 * a2).abs().sqrt()
    };
    while arg(hi) < 600.0 && hi < 1e6 {
        hi *= 1.5;
    }
    (lo, hi)
}

fn log_space(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    let (llo, lhi) = (lo.ln(), hi.ln());
    (0..n).map(move |i| (llo + (lhi - llo) * i as f64 / (n - 1) as f64).exp())
}

/// All admissible amplitudes with width `tau`, ascending.  Two roots form a
/// bistable pair; no roots means `tau` is below the fold.
pub fn solve_bistable_amplitudes(params: CqParams, tau: f64) -> Vec<f64> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Vec::new();
    }
    let (lo, hi) = amplitude_scan_bounds(params, tau);
    let residual = |a: f64| width_amplitude_residual(params, a, tau).unwrap_or(f64::NAN);
    let samples: Vec<(f64, f64)> = log_space(lo, hi, SCAN_POINTS)
        .filter(|&a| params.is_admissible(a))
        .map(|a| (a, residual(a)))
        .filter(|(_, r)| r.is_finite())
        .collect();
    let mut roots = Vec::new();
    for w in samples.windows(2) {
        let ((a0, r0), (a1, r1)) = (w[0], w[1]);
        if r0 == 0.0 {
            roots.push(a0);
        } else if r0.signum() != r1.signum() && r1 != 0.0 {
            if let Some(root) = bisect(residual, a0, a1, 1e-12) {
                if residual(root).abs() <= 1e-10 {
                    roots.push(root);
                }
            }
        }
    }
    roots
}

/// Turning point of the bistability fold: minimal admissible width and the
/// amplitude where it is attained.
pub fn min_width(params: CqParams) -> Result<(f64, f64)> {
    let a_max = match params.max_amplitude() {
        Some(a) => a * (1.0 - 1e-9),
        None => {
            return Err(Error::Domain(format!(
                "no turning point for chi = {}, gamma = {}",
                params.chi(),
                params.gamma()
            )))
        }
    };
    let tau = |a: f64| width_from_amplitude(params, a).unwrap_or(f64::INFINITY);
    let grid: Vec<f64> = log_space(1e-3, a_max, 2000).collect();
    let (i_min, _) = grid
        .iter()
        .map(|&a| tau(a))
        .enumerate()
        .fold((0, f64::INFINITY), |best, (i, t)| if t < best.1 { (i, t) } else { best });
    let lo = grid[i_min.saturating_sub(1)];
    let hi = grid[(i_min + 1).min(grid.len() - 1)];
    let (a_at_min, tau_min) = golden_min(tau, lo, hi, 1e-12);
    Ok((tau_min, a_at_min))
}

/// One row of the width/amplitude family.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FamilyPoint {
    pub amplitude: f64,
    pub tau: f64,
}

/// `τ(A)` for each admissible amplitude; inadmissible rows are dropped.
pub fn family_curve(params: CqParams, amplitudes: &[f64]) -> Vec<FamilyPoint> {
    amplitudes
        .iter()
        .filter_map(|&a| width_from_amplitude(params, a).map(|tau| FamilyPoint { amplitude: a, tau }))
        .collect()
}

/// Gaussian ansatz `A exp(−t²/(2α²) + i a t²)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianSpec {
    pub amplitude: f64,
    pub alpha: f64,
    #[serde(default)]
    pub chirp: f64,
}

impl GaussianSpec {
    pub fn new(amplitude: f64, alpha: f64, chirp: f64) -> Result<Self> {
        if !(alpha > 0.0) {
            return Err(Error::Domain(format!("gaussian width must be positive, got {alpha}")));
        }
        if !amplitude.is_finite() || !chirp.is_finite() {
            return Err(Error::Domain("gaussian amplitude and chirp must be finite".into()));
        }
        Ok(Self {
            amplitude,
            alpha,
            chirp,
        })
    }

    /// Pulse with energy `E₀ = α A²`.
    pub fn from_energy(energy: f64, alpha: f64, chirp: f64) -> Result<Self> {
        if !(energy >= 0.0) || !(alpha > 0.0) {
            return Err(Error::Domain(format!(
                "need energy >= 0 and alpha > 0, got E0 = {energy}, alpha = {alpha}"
            )));
        }
        Self::new((energy / alpha).sqrt(), alpha, chirp)
    }

    pub fn energy(&self) -> f64 {
        self.alpha * self.amplitude * self.amplitude
    }

    /// Propagation constant of the cubic soliton `sqrt(β) sech(sqrt(β) t)`
    /// whose width parameter equals `α`.
    pub fn equal_width_beta(&self) -> f64 {
        1.0 / (self.alpha * self.alpha)
    }
}

pub fn gaussian_pulse(spec: &GaussianSpec, grid: &TimeGrid) -> ComplexField {
    let GaussianSpec {
        amplitude,
        alpha,
        chirp,
    } = *spec;
    ComplexField::from_fn(grid, |t| {
        Complex64::new(-t * t / (2.0 * alpha * alpha), chirp * t * t).exp() * amplitude
    })
}

/// Full width at half maximum of `|f|²`, linearly interpolated between samples.
pub fn fwhm_from_profile(f: &ComplexField) -> Result<f64> {
    let p: Vec<f64> = f.values().iter().map(|v| v.norm_sqr()).collect();
    let (peak, &pmax) = p
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .ok_or_else(|| Error::Usage("empty field".into()))?;
    if !(pmax > 0.0) {
        return Err(Error::Usage("field has no peak".into()));
    }
    let half = 0.5 * pmax;
    let t = f.grid().t();
    let right = (peak + 1..p.len())
        .find(|&j| p[j] < half)
        .ok_or_else(|| Error::Usage("half maximum not reached on the right".into()))?;
    let left = (0..peak)
        .rev()
        .find(|&j| p[j] < half)
        .ok_or_else(|| Error::Usage("half maximum not reached on the left".into()))?;
    let cross = |inside: usize, outside: usize| {
        let frac = (p[inside] - half) / (p[inside] - p[outside]);
        t[inside] + frac * (t[outside] - t[inside])
    };
    Ok(cross(right - 1, right) - cross(left + 1, left))
}
