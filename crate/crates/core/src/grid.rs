//! Periodic time grid, complex envelope fields and the spectral transform.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Uniform periodic grid on `[-t_span/2, t_span/2)` with matching angular
/// frequencies in FFT wraparound order.
#[derive(Clone)]
pub struct TimeGrid {
    inner: Arc<GridInner>,
}

struct GridInner {
    n: usize,
    t_span: f64,
    dt: f64,
    t: Vec<f64>,
    omega: Vec<f64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl TimeGrid {
    pub fn new(n: usize, t_span: f64) -> Result<Self> {
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::Usage(format!(
                "grid size must be a power of two >= 8, got {n}"
            )));
        }
        if !(t_span.is_finite() && t_span > 0.0) {
            return Err(Error::Usage(format!(
                "grid window must be positive, got {t_span}"
            )));
        }
        let dt = t_span / n as f64;
        let t = (0..n).map(|j| -0.5 * t_span + j as f64 * dt).collect();
        let half = (n / 2) as i64;
        let omega = (0..n as i64)
            .map(|j| {
                let k = if j < half { j } else { j - n as i64 };
                2.0 * PI * k as f64 / t_span
            })
            .collect();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        Ok(Self {
            inner: Arc::new(GridInner {
                n,
                t_span,
                dt,
                t,
                omega,
                forward,
                inverse,
            }),
        })
    }

    pub fn n(&self) -> usize {
        self.inner.n
    }

    pub fn t_span(&self) -> f64 {
        self.inner.t_span
    }

    pub fn dt(&self) -> f64 {
        self.inner.dt
    }

    /// Sample times `t_j`.
    pub fn t(&self) -> &[f64] {
        &self.inner.t
    }

    /// Angular frequencies `ω_k` aligned with the transform output.
    pub fn omega(&self) -> &[f64] {
        &self.inner.omega
    }

    /// Two grids are interchangeable when they sample the same window with
    /// the same point count.
    pub fn same_as(&self, other: &TimeGrid) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner)
            || (self.inner.n == other.inner.n && self.inner.t_span == other.inner.t_span)
    }

    /// In-place unitary forward DFT.
    pub(crate) fn fft_in_place(&self, buf: &mut [Complex64]) {
        self.inner.forward.process(buf);
        let scale = 1.0 / (self.inner.n as f64).sqrt();
        buf.iter_mut().for_each(|x| *x *= scale);
    }

    /// In-place unitary inverse DFT.
    pub(crate) fn ifft_in_place(&self, buf: &mut [Complex64]) {
        self.inner.inverse.process(buf);
        let scale = 1.0 / (self.inner.n as f64).sqrt();
        buf.iter_mut().for_each(|x| *x *= scale);
    }

    pub(crate) fn check_same(&self, other: &TimeGrid) -> Result<()> {
        if self.same_as(other) {
            Ok(())
        } else {
            Err(Error::Usage(format!(
                "grid mismatch: (n={}, t_span={}) vs (n={}, t_span={})",
                self.n(),
                self.t_span(),
                other.n(),
                other.t_span()
            )))
        }
    }
}

impl PartialEq for TimeGrid {
    fn eq(&self, other: &Self) -> bool {
        self.same_as(other)
    }
}

impl fmt::Debug for TimeGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TimeGrid")
            .field("n", &self.inner.n)
            .field("t_span", &self.inner.t_span)
            .field("dt", &self.inner.dt)
            .finish()
    }
}

/// Complex envelope sampled on a [`TimeGrid`].
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexField {
    grid: TimeGrid,
    values: Vec<Complex64>,
}

impl ComplexField {
    pub fn zeros(grid: &TimeGrid) -> Self {
        Self {
            grid: grid.clone(),
            values: vec![Complex64::new(0.0, 0.0); grid.n()],
        }
    }

    pub fn from_values(grid: &TimeGrid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.n() {
            return Err(Error::Usage(format!(
                "field has {} samples but grid has {}",
                values.len(),
                grid.n()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Usage("field contains non-finite samples".into()));
        }
        Ok(Self {
            grid: grid.clone(),
            values,
        })
    }

    /// Samples `f(t_j)` for every grid time.
    pub fn from_fn(grid: &TimeGrid, f: impl Fn(f64) -> Complex64) -> Self {
        let values = grid.t().iter().map(|&t| f(t)).collect();
        Self {
            grid: grid.clone(),
            values,
        }
    }

    pub(crate) fn from_values_unchecked(grid: &TimeGrid, values: Vec<Complex64>) -> Self {
        debug_assert_eq!(values.len(), grid.n());
        Self {
            grid: grid.clone(),
            values,
        }
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| v * s).collect(),
        }
    }

    /// `a·self + b·other` with real coefficients.
    pub fn lin_comb(&self, a: f64, other: &ComplexField, b: f64) -> Result<Self> {
        self.grid.check_same(&other.grid)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(x, y)| x * a + y * b)
            .collect();
        Ok(Self {
            grid: self.grid.clone(),
            values,
        })
    }

    pub fn max_abs_diff(&self, other: &ComplexField) -> Result<f64> {
        self.grid.check_same(&other.grid)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max))
    }
}

/// Real pairing `Re Σ f_j^* g_j dt`.
pub fn inner_product_real(f: &ComplexField, g: &ComplexField) -> Result<f64> {
    f.grid.check_same(&g.grid)?;
    Ok(pairing(&f.values, &g.values, f.grid.dt()))
}

pub(crate) fn pairing(f: &[Complex64], g: &[Complex64], dt: f64) -> f64 {
    f.iter()
        .zip(g)
        .map(|(a, b)| a.re * b.re + a.im * b.im)
        .sum::<f64>()
        * dt
}

/// Complex overlap `Σ f_j^* g_j dt`.
pub fn overlap(f: &ComplexField, g: &ComplexField) -> Result<Complex64> {
    f.grid.check_same(&g.grid)?;
    Ok(f.values
        .iter()
        .zip(&g.values)
        .map(|(a, b)| a.conj() * b)
        .sum::<Complex64>()
        * f.grid.dt())
}

pub fn l2_norm_sq(f: &ComplexField) -> f64 {
    norm_sq(&f.values, f.grid.dt())
}

pub(crate) fn norm_sq(v: &[Complex64], dt: f64) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum::<f64>() * dt
}

/// Unitary forward transform; the result is indexed like [`TimeGrid::omega`].
pub fn to_spectrum(f: &ComplexField) -> ComplexField {
    let mut buf = f.values.clone();
    f.grid.fft_in_place(&mut buf);
    ComplexField::from_values_unchecked(&f.grid, buf)
}

pub fn from_spectrum(spectrum: &ComplexField) -> ComplexField {
    let mut buf = spectrum.values.clone();
    spectrum.grid.ifft_in_place(&mut buf);
    ComplexField::from_values_unchecked(&spectrum.grid, buf)
}

/// Spectral derivative `∂_t^order f`.
pub fn spectral_derivative(f: &ComplexField, order: u32) -> ComplexField {
    let mut spec = to_spectrum(f);
    let grid = f.grid.clone();
    let nyquist = grid.n() / 2;
    for (k, (s, &w)) in spec.values.iter_mut().zip(grid.omega()).enumerate() {
        // odd derivatives of the unpaired Nyquist mode are not real-representable
        if k == nyquist && order % 2 == 1 {
            *s = Complex64::new(0.0, 0.0);
        } else {
            *s *= Complex64::new(0.0, w).powu(order);
        }
    }
    from_spectrum(&spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn grid() -> TimeGrid {
        TimeGrid::new(64, 10.0).unwrap()
    }

    #[test]
    fn rejects_bad_sizes() {
        assert!(TimeGrid::new(4, 1.0).is_err());
        assert!(TimeGrid::new(100, 1.0).is_err());
        assert!(TimeGrid::new(64, 0.0).is_err());
    }

    #[test]
    fn grid_layout() {
        let g = grid();
        assert_relative_eq!(g.dt() * g.n() as f64, g.t_span());
        assert_relative_eq!(g.t()[0], -5.0);
        assert_eq!(g.omega()[0], 0.0);
        assert_relative_eq!(g.omega()[1], 2.0 * PI / 10.0);
        assert_relative_eq!(g.omega()[32], -32.0 * 2.0 * PI / 10.0);
        assert_relative_eq!(g.omega()[63], -2.0 * PI / 10.0);
    }

    #[test]
    fn self_pairing_and_quadrature() {
        let g = grid();
        let f = ComplexField::from_fn(&g, |t| Complex64::new((-t * t).exp(), 0.3 * t));
        let n = l2_norm_sq(&f);
        let f = f.scale(Complex64::new(1.0 / n.sqrt(), 0.0));
        assert_relative_eq!(inner_product_real(&f, &f).unwrap(), 1.0, epsilon = 1e-14);
        let g2 = f.scale(Complex64::i());
        assert!(inner_product_real(&f, &g2).unwrap().abs() < 1e-15);
    }

    #[test]
    fn mismatched_grids_are_rejected() {
        let a = ComplexField::zeros(&grid());
        let b = ComplexField::zeros(&TimeGrid::new(32, 10.0).unwrap());
        assert!(matches!(inner_product_real(&a, &b), Err(Error::Usage(_))));
    }

    #[test]
    fn norms_of_simple_fields() {
        let g = grid();
        assert_eq!(l2_norm_sq(&ComplexField::zeros(&g)), 0.0);
        let one = ComplexField::from_fn(&g, |_| Complex64::new(1.0, 0.0));
        assert_relative_eq!(l2_norm_sq(&one), 10.0, epsilon = 1e-13);
        let big = TimeGrid::new(1024, 40.0).unwrap();
        let sech = ComplexField::from_fn(&big, |t| Complex64::new(1.0 / t.cosh(), 0.0));
        assert!((l2_norm_sq(&sech) - 2.0).abs() < 1e-8);
    }

    #[test]
    fn constant_and_plane_wave_spectra() {
        let g = grid();
        let one = ComplexField::from_fn(&g, |_| Complex64::new(1.0, 0.0));
        let s = to_spectrum(&one);
        assert!(s.values()[0].norm() > 1.0);
        assert!(s.values()[1..].iter().all(|v| v.norm() < 1e-12));

        let w1 = g.omega()[3];
        let wave = ComplexField::from_fn(&g, |t| Complex64::new(0.0, w1 * t).exp());
        let s = to_spectrum(&wave);
        let nonzero: Vec<usize> = (0..g.n()).filter(|&k| s.values()[k].norm() > 1e-9).collect();
        assert_eq!(nonzero, vec![3]);

        let d2 = spectral_derivative(&wave, 2);
        for (a, b) in d2.values().iter().zip(wave.values()) {
            assert!((a - b * (-w1 * w1)).norm() < 1e-11);
        }
    }
}
