//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;

use cqsqueeze::{ComplexField, QuadratureForm};
use num_complex::Complex64;

/// Dense complex matrices on small truncated Fock spaces.
struct Mat {
    n: usize,
    v: Vec<Complex64>,
}

impl Mat {
    fn zeros(n: usize) -> Self {
        Self {
            n,
            v: vec![Complex64::new(0.0, 0.0); n * n],
        }
    }

    fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.v[i * n + i] = Complex64::new(1.0, 0.0);
        }
        m
    }

    fn annihilation(d: usize) -> Self {
        let mut m = Self::zeros(d);
        for k in 1..d {
            m.v[(k - 1) * d + k] = Complex64::new((k as f64).sqrt(), 0.0);
        }
        m
    }

    fn dagger(&self) -> Self {
        let mut m = Self::zeros(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                m.v[j * self.n + i] = self.v[i * self.n + j].conj();
            }
        }
        m
    }

    fn kron(&self, other: &Mat) -> Self {
        let n = self.n * other.n;
        let mut m = Self::zeros(n);
        for i in 0..self.n {
            for j in 0..self.n {
                for k in 0..other.n {
                    for l in 0..other.n {
                        m.v[(i * other.n + k) * n + j * other.n + l] = self.v[i * self.n + j] * other.v[k * other.n + l];
                    }
                }
            }
        }
        m
    }

    fn add_scaled(&mut self, other: &Mat, s: Complex64) {
        for (a, b) in self.v.iter_mut().zip(&other.v) {
            *a += s * b;
        }
    }

    fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.v[i * self.n + j] * x[j]).sum())
            .collect()
    }
}

fn expect(op: &Mat, psi: &[Complex64]) -> Complex64 {
    psi.iter().zip(op.apply(psi)).map(|(a, b)| a.conj() * b).sum()
}

/// Brute force over every pair of modes: builds the two-mode quadrature
/// operator on a tensor-product Fock space and sums all second moments of
/// `X = Σ_j (√dt/2)(f_j* a_j + f_j a_j†)` in the vacuum.
pub fn brute_force_variance(f: &ComplexField) -> f64 {
    let d = 4;
    let dt = f.grid().dt();
    let a = Mat::annihilation(d);
    let id = Mat::identity(d);
    let a1 = a.kron(&id);
    let a2 = id.kron(&a);
    let mut vacuum = vec![Complex64::new(0.0, 0.0); d * d];
    vacuum[0] = Complex64::new(1.0, 0.0);
    let quad = |fj: Complex64, aj: &Mat| {
        let mut x = Mat::zeros(d * d);
        let c = 0.5 * dt.sqrt();
        x.add_scaled(aj, fj.conj() * c);
        x.add_scaled(&aj.dagger(), fj * c);
        x
    };
    let vals = f.values();
    let mut total = 0.0;
    for j in 0..vals.len() {
        for k in 0..vals.len() {
            let xj = quad(vals[j], &a1);
            let xk = if j == k { quad(vals[k], &a1) } else { quad(vals[k], &a2) };
            let xk_psi = xk.apply(&vacuum);
            let xj_xk: Complex64 = xj.dagger().apply(&vacuum).iter().zip(&xk_psi).map(|(p, q)| p.conj() * q).sum();
            total += xj_xk.re - expect(&xj, &vacuum).re * expect(&xk, &vacuum).re;
        }
    }
    total
}

/// Minimum of `R(θ)` by a 10⁴-point scan of `[0, π)` followed by ternary
/// search between the neighbours of the best sample.
pub fn scanned_minimum(form: &QuadratureForm) -> (f64, f64) {
    let n = 10_000;
    let h = PI / n as f64;
    let best = (0..n)
        .map(|i| i as f64 * h)
        .min_by(|x, y| form.ratio(*x).total_cmp(&form.ratio(*y)))
        .unwrap();
    let (mut lo, mut hi) = (best - h, best + h);
    for _ in 0..200 {
        let m1 = lo + (hi - lo) / 3.0;
        let m2 = hi - (hi - lo) / 3.0;
        if form.ratio(m1) < form.ratio(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    let theta = 0.5 * (lo + hi);
    (form.ratio(theta), theta.rem_euclid(PI))
}

