//! Split-step spectral integration of the classical cubic-quintic NLS
//! `U_z = i U_tt + i (2χ|U|² + 3γ|U|⁴) U`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{self, ComplexField, TimeGrid};
use crate::pulse::CqParams;

/// Abort threshold on `max|U|` relative to the initial peak.
pub const DIVERGENCE_FACTOR: f64 = 1e3;

/// 2 GiB of stored checkpoints before the stride is widened.
pub const DEFAULT_MEMORY_CAP: u64 = 2 << 30;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Splitting {
    #[default]
    Strang,
    Lie,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StepConfig {
    pub dz: f64,
    pub scheme: Splitting,
    pub checkpoint_stride: usize,
    pub memory_cap_bytes: u64,
}

impl Default for StepConfig {
    fn default() -> Self {
        Self {
            dz: 1e-3,
            scheme: Splitting::Strang,
            checkpoint_stride: 1,
            memory_cap_bytes: DEFAULT_MEMORY_CAP,
        }
    }
}

impl StepConfig {
    pub fn with_dz(dz: f64) -> Self {
        Self {
            dz,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dz > 0.0 && self.dz.is_finite()) {
            return Err(Error::Usage(format!("dz must be positive, got {}", self.dz)));
        }
        if self.checkpoint_stride == 0 {
            return Err(Error::Usage("checkpoint stride must be >= 1".into()));
        }
        Ok(())
    }

    /// Number of equal steps covering `length`, and the step that lands on it.
    pub fn steps_for(&self, length: f64) -> (usize, f64) {
        if length == 0.0 {
            return (0, self.dz);
        }
        let n = (length / self.dz).round().max(1.0) as usize;
        (n, length / n as f64)
    }
}

/// Reusable split-step integrator for one grid, parameter set and signed step.
pub(crate) struct SplitStepper {
    grid: TimeGrid,
    params: CqParams,
    h: f64,
    scheme: Splitting,
    linear: Vec<Complex64>,
}

impl SplitStepper {
    pub(crate) fn new(grid: &TimeGrid, params: CqParams, h: f64, scheme: Splitting) -> Self {
        let frac = match scheme {
            Splitting::Strang => 0.5,
            Splitting::Lie => 1.0,
        };
        Self {
            grid: grid.clone(),
            params,
            h,
            scheme,
            linear: dispersion_phases(grid, frac * h),
        }
    }

    fn apply_linear(&self, u: &mut [Complex64]) {
        self.grid.fft_in_place(u);
        u.iter_mut().zip(&self.linear).for_each(|(x, p)| *x *= p);
        self.grid.ifft_in_place(u);
    }

    fn apply_nonlinear(&self, u: &mut [Complex64]) {
        let (chi, gamma) = (self.params.chi(), self.params.gamma());
        for x in u.iter_mut() {
            let p = x.norm_sqr();
            let phase = (2.0 * chi * p + 3.0 * gamma * p * p) * self.h;
            *x *= Complex64::from_polar(1.0, phase);
        }
    }

    pub(crate) fn advance(&self, u: &mut [Complex64]) {
        match self.scheme {
            Splitting::Strang => {
                self.apply_linear(u);
                self.apply_nonlinear(u);
                self.apply_linear(u);
            }
            Splitting::Lie => {
                self.apply_linear(u);
                self.apply_nonlinear(u);
            }
        }
    }
}

/// `exp(−i ω² h)` for each grid frequency.
pub(crate) fn dispersion_phases(grid: &TimeGrid, h: f64) -> Vec<Complex64> {
    grid.omega()
        .iter()
        .map(|w| Complex64::from_polar(1.0, -w * w * h))
        .collect()
}

fn check_divergence(u: &[Complex64], limit: f64, z: f64) -> Result<()> {
    let mut peak = 0.0f64;
    for x in u {
        if !x.is_finite() {
            return Err(Error::Diverged {
                z,
                reason: "non-finite field sample".into(),
            });
        }
        peak = peak.max(x.norm());
    }
    if peak > limit {
        return Err(Error::Diverged {
            z,
            reason: format!("max |U| = {peak:.3e} exceeds collapse guard {limit:.3e}"),
        });
    }
    Ok(())
}

fn divergence_limit(peak: f64) -> f64 {
    DIVERGENCE_FACTOR * if peak > 0.0 { peak } else { 1.0 }
}

/// One split step of size `cfg.dz`.
pub fn step(field: &ComplexField, params: CqParams, cfg: &StepConfig) -> Result<ComplexField> {
    cfg.validate()?;
    let stepper = SplitStepper::new(field.grid(), params, cfg.dz, cfg.scheme);
    let mut u = field.values().to_vec();
    stepper.advance(&mut u);
    check_divergence(&u, divergence_limit(field.max_abs()), cfg.dz)?;
    Ok(ComplexField::from_values_unchecked(field.grid(), u))
}

pub fn photon_number(field: &ComplexField) -> f64 {
    grid::l2_norm_sq(field)
}

/// `Σ (|∂_t U|² − χ|U|⁴ − γ|U|⁶) dt`, conserved by the classical flow.
pub fn hamiltonian(field: &ComplexField, params: CqParams) -> f64 {
    let du = grid::spectral_derivative(field, 1);
    let dt = field.grid().dt();
    field
        .values()
        .iter()
        .zip(du.values())
        .map(|(u, d)| {
            let p = u.norm_sqr();
            d.norm_sqr() - params.chi() * p * p - params.gamma() * p * p * p
        })
        .sum::<f64>()
        * dt
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ConservedSample {
    pub z: f64,
    pub photon_number: f64,
    pub hamiltonian: f64,
}

/// Checkpointed classical background `U₀(z, t)` on `[0, L]`.
#[derive(Clone, Debug)]
pub struct Trajectory {
    params: CqParams,
    grid: TimeGrid,
    scheme: Splitting,
    dz: f64,
    n_steps: usize,
    stride: usize,
    steps: Vec<usize>,
    fields: Vec<Vec<Complex64>>,
    log: Vec<ConservedSample>,
}

fn effective_stride(cfg: &StepConfig, n_steps: usize, n: usize) -> usize {
    let bytes_per = (n * std::mem::size_of::<Complex64>()) as u64;
    let mut stride = cfg.checkpoint_stride.max(1);
    while stride < n_steps.max(1) && ((n_steps / stride) as u64 + 2) * bytes_per > cfg.memory_cap_bytes {
        stride *= 2;
    }
    stride
}

fn checkpoint_steps(n_steps: usize, stride: usize) -> Vec<usize> {
    let mut steps: Vec<usize> = (0..=n_steps).step_by(stride).collect();
    if *steps.last().unwrap() != n_steps {
        steps.push(n_steps);
    }
    steps
}

fn sample(field: &[Complex64], grid: &TimeGrid, params: CqParams, z: f64) -> ConservedSample {
    let f = ComplexField::from_values_unchecked(grid, field.to_vec());
    ConservedSample {
        z,
        photon_number: photon_number(&f),
        hamiltonian: hamiltonian(&f, params),
    }
}

/// Integrate from `z = 0` to `z = length`.
pub fn propagate(initial: &ComplexField, params: CqParams, length: f64, cfg: &StepConfig) -> Result<Trajectory> {
    integrate(initial, params, length, cfg, false)
}

/// Integrate from `final_field` at `z = length` back to `z = 0`.  The result
/// is indexed by ascending `z` like a forward trajectory.
pub fn propagate_backward(
    final_field: &ComplexField,
    params: CqParams,
    length: f64,
    cfg: &StepConfig,
) -> Result<Trajectory> {
    integrate(final_field, params, length, cfg, true)
}

fn integrate(
    start: &ComplexField,
    params: CqParams,
    length: f64,
    cfg: &StepConfig,
    backward: bool,
) -> Result<Trajectory> {
    cfg.validate()?;
    if !(length >= 0.0 && length.is_finite()) {
        return Err(Error::Usage(format!("propagation length must be >= 0, got {length}")));
    }
    if !start.is_finite() {
        return Err(Error::Usage("initial field is not finite".into()));
    }
    let grid = start.grid().clone();
    let (n_steps, dz) = cfg.steps_for(length);
    let stride = effective_stride(cfg, n_steps, grid.n());
    let steps = checkpoint_steps(n_steps, stride);
    let h = if backward { -dz } else { dz };
    let stepper = SplitStepper::new(&grid, params, h, cfg.scheme);
    let limit = divergence_limit(start.max_abs());

    let z_of = |k: usize| if k == n_steps { length } else { k as f64 * dz };
    let mut u = start.values().to_vec();
    let mut fields = Vec::with_capacity(steps.len());
    let mut log = Vec::with_capacity(steps.len());
    let mut stored = 0;
    // visit step indices in integration order
    let order: Box<dyn Iterator<Item = usize>> = if backward {
        Box::new((0..=n_steps).rev())
    } else {
        Box::new(0..=n_steps)
    };
    let rev_steps: Vec<usize> = if backward {
        steps.iter().rev().copied().collect()
    } else {
        steps.clone()
    };
    for (count, k) in order.enumerate() {
        if count > 0 {
            stepper.advance(&mut u);
            check_divergence(&u, limit, z_of(k))?;
        }
        if stored < rev_steps.len() && rev_steps[stored] == k {
            fields.push(u.clone());
            log.push(sample(&u, &grid, params, z_of(k)));
            stored += 1;
        }
    }
    if backward {
        fields.reverse();
        log.reverse();
    }
    Ok(Trajectory {
        params,
        grid,
        scheme: cfg.scheme,
        dz,
        n_steps,
        stride,
        steps,
        fields,
        log,
    })
}

impl Trajectory {
    pub fn params(&self) -> CqParams {
        self.params
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn scheme(&self) -> Splitting {
        self.scheme
    }

    /// Step actually used (`length / n_steps`).
    pub fn dz(&self) -> f64 {
        self.dz
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn stride(&self) -> usize {
        self.stride
    }

    pub fn length(&self) -> f64 {
        self.log.last().map(|s| s.z).unwrap_or(0.0)
    }

    /// Coordinate of integration step `k`.
    pub fn z_at_step(&self, k: usize) -> f64 {
        if k == self.n_steps {
            self.length()
        } else {
            k as f64 * self.dz
        }
    }

    pub fn z_samples(&self) -> Vec<f64> {
        self.log.iter().map(|s| s.z).collect()
    }

    pub fn checkpoint_steps(&self) -> &[usize] {
        &self.steps
    }

    pub fn n_checkpoints(&self) -> usize {
        self.fields.len()
    }

    pub fn checkpoint(&self, i: usize) -> ComplexField {
        ComplexField::from_values_unchecked(&self.grid, self.fields[i].clone())
    }

    pub fn initial(&self) -> ComplexField {
        self.checkpoint(0)
    }

    pub fn final_field(&self) -> ComplexField {
        self.checkpoint(self.fields.len() - 1)
    }

    pub fn conserved_log(&self) -> &[ConservedSample] {
        &self.log
    }

    /// Largest relative deviation of the photon number from its initial value.
    pub fn photon_drift(&self) -> f64 {
        relative_drift(self.log.iter().map(|s| s.photon_number))
    }

    pub fn hamiltonian_drift(&self) -> f64 {
        relative_drift(self.log.iter().map(|s| s.hamiltonian))
    }

    pub(crate) fn stored(&self, i: usize) -> &[Complex64] {
        &self.fields[i]
    }

    pub(crate) fn checkpoint_index(&self, step: usize) -> Option<usize> {
        self.steps.binary_search(&step).ok()
    }

    pub(crate) fn stepper(&self, backward: bool) -> SplitStepper {
        let h = if backward { -self.dz } else { self.dz };
        SplitStepper::new(&self.grid, self.params, h, self.scheme)
    }

    /// Field at an arbitrary step, re-integrated from the previous checkpoint.
    pub fn field_at_step(&self, k: usize) -> Result<ComplexField> {
        if k > self.n_steps {
            return Err(Error::Usage(format!("step {k} beyond trajectory end {}", self.n_steps)));
        }
        let i = match self.steps.binary_search(&k) {
            Ok(i) => return Ok(self.checkpoint(i)),
            Err(i) => i - 1,
        };
        let stepper = self.stepper(false);
        let mut u = self.fields[i].clone();
        for _ in self.steps[i]..k {
            stepper.advance(&mut u);
        }
        Ok(ComplexField::from_values_unchecked(&self.grid, u))
    }
}

fn relative_drift(values: impl Iterator<Item = f64>) -> f64 {
    let mut first = None;
    let mut worst = 0.0f64;
    for v in values {
        let v0 = *first.get_or_insert(v);
        let scale = if v0.abs() > 0.0 { v0.abs() } else { 1.0 };
        worst = worst.max((v - v0).abs() / scale);
    }
    worst
}
