use std::f64::consts::PI;

use cqsqueeze::fluctuation::LinearizationOptions;
use cqsqueeze::squeezing::{direct_ratio, quadrature_form_at, squeezing_curve_on};
use cqsqueeze::validation::random_probe;
use cqsqueeze::*;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

mod common;
use common::brute_force_variance;

/// Uniform background under a uniform local oscillator: only the ω = 0 mode
/// is involved and its linearized dynamics is a shear,
/// `R_opt = 1 + 2m² − 2m√(1+m²)` with `m = A²(2χ + 6γA²) z`.
fn cw_squeezing(chi: f64, gamma: f64, a: f64, z: f64) -> f64 {
    let m = a * a * (2.0 * chi + 6.0 * gamma * a * a) * z;
    1.0 + 2.0 * m * m - 2.0 * m * (1.0 + m * m).sqrt()
}

#[test]
fn cw_background_matches_closed_form_squeezing() {
    let g = TimeGrid::new(64, 20.0).unwrap();
    for (gamma, a, z) in [(0.0, 0.5, 2.0), (0.1, 0.5, 2.0), (-0.1, 0.8, 1.0), (0.2, 0.3, 3.0)] {
        let params = CqParams::focusing(gamma);
        let u = ComplexField::from_fn(&g, |_| Complex64::new(a, 0.0));
        let expected = cw_squeezing(1.0, gamma, a, z);
        let error = |dz: f64| {
            let traj = propagate(&u, params, z, &StepConfig::with_dz(dz)).unwrap();
            let form = quadrature_form_at(&traj, traj.n_steps(), LinearizationOptions::default()).unwrap();
            ((form.optimum().0 - expected) / expected).abs()
        };
        let (coarse, fine) = (error(2e-3), error(1e-3));
        assert!(fine < 1e-5, "gamma {gamma}, A {a}, z {z}: relative error {fine}");
        let ratio = coarse / fine;
        assert!(fine < 1e-12 || (3.2..4.8).contains(&ratio), "gamma {gamma}: error ratio {ratio}");
    }
}

#[test]
fn variance_rule_matches_discrete_mode_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for n in [8, 16, 32, 64] {
        let g = TimeGrid::new(n, 12.0).unwrap();
        let f = random_probe(&g, &mut rng);
        let f = f.scale((1.0 / l2_norm_sq(&f).sqrt()).into());
        let rule = coherent_variance(&f);
        assert!((rule - 0.25).abs() < 1e-12);
        let brute = brute_force_variance(&f);
        assert!((rule - brute).abs() < 1e-12, "n = {n}: {rule} vs {brute}");
    }
}

#[test]
fn variance_is_independent_of_coherent_amplitude() {
    let g = TimeGrid::new(32, 12.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let f = random_probe(&g, &mut rng);
    let mean = ComplexField::from_fn(&g, |t| Complex64::new(1.2 / t.cosh(), 0.4 * (-t * t).exp()));
    let oracle = validation::fock_variance(&f, &mean, 48);
    assert!((oracle - coherent_variance(&f)).abs() < 1e-12);
    let doubled = f.scale(2.0.into());
    assert!((coherent_variance(&doubled) - 4.0 * coherent_variance(&f)).abs() < 1e-14);
}

#[test]
fn local_oscillator_of_unit_sech() {
    let g = TimeGrid::new(1024, 40.0).unwrap();
    let spec = SolitonSpec::new(CqParams::focusing(0.0), 1.0).unwrap();
    let u = soliton_profile(&spec, &g).unwrap();
    let f = local_oscillator(&u, PI / 2.0).unwrap();
    for (v, &t) in f.values().iter().zip(g.t()) {
        let expected = Complex64::new(0.0, 1.0 / (t.cosh() * 2f64.sqrt()));
        assert!((v - expected).norm() < 1e-12);
    }
    assert!((l2_norm_sq(&f) - 1.0).abs() < 1e-13);
}

fn soliton_traj(gamma: f64, amplitude: f64, length: f64) -> Trajectory {
    let g = TimeGrid::new(512, 40.0).unwrap();
    let s = SolitonSpec::from_amplitude(CqParams::focusing(gamma), amplitude).unwrap();
    propagate(&soliton_profile(&s, &g).unwrap(), s.params, length, &StepConfig::default()).unwrap()
}

#[test]
fn quadrature_shortcut_matches_direct_back_propagation() {
    let traj = soliton_traj(-0.1, 1.147, 3.0);
    let form = quadrature_form_at(&traj, traj.n_steps(), LinearizationOptions::default()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for _ in 0..5 {
        let theta = rng.random_range(0.0..2.0 * PI);
        let direct = direct_ratio(&traj, traj.n_steps(), theta, LinearizationOptions::default()).unwrap();
        let via = form.ratio(theta);
        assert!(((direct - via) / direct).abs() < 1e-8, "theta {theta}: {direct} vs {via}");
    }
}

#[test]
fn uncertainty_product_is_at_least_one() {
    for gamma in [-0.1, 0.0, 0.1] {
        let traj = soliton_traj(gamma, 1.0, 4.0);
        let curve = squeezing_curve_on(&traj, 9, 1.0, LinearizationOptions::default()).unwrap();
        for form in &curve.forms {
            let (r_min, _) = form.optimum();
            let product = r_min * form.maximum();
            assert!(product >= 1.0 - 1e-9, "R_max R_min = {product}");
            assert!((product - form.determinant()).abs() < 1e-9 * product);
        }
    }
}

#[test]
fn no_squeezing_without_conjugate_coupling() {
    let traj = soliton_traj(0.1, 1.0, 3.0);
    let thetas = squeezing::theta_grid(12);
    let dev = validation::phase_insensitive_deviation(&traj, &thetas).unwrap();
    assert!(dev < 1e-9, "|R - 1| = {dev}");
}

#[test]
fn optimal_ratio_falls_over_first_period() {
    for gamma in [0.0, 0.1, 0.2] {
        let s = SolitonSpec::from_amplitude(CqParams::focusing(gamma), 1.0).unwrap();
        let traj = soliton_traj(gamma, 1.0, s.period());
        let curve = squeezing_curve_on(&traj, 21, s.period(), LinearizationOptions::default()).unwrap();
        assert_eq!(curve.r_opt[0], 1.0);
        for w in curve.r_opt.windows(2) {
            assert!(w[1] < w[0], "gamma {gamma}: R_opt rose from {} to {}", w[0], w[1]);
        }
        assert!(curve.r_opt.iter().all(|&r| r > 0.0));
    }
}

#[test]
fn strang_splitting_is_second_order() {
    let g = TimeGrid::new(512, 40.0).unwrap();
    let gauss = gaussian_pulse(&GaussianSpec::new(1.2, 1.1, 0.05).unwrap(), &g);
    let s = SolitonSpec::from_amplitude(CqParams::focusing(-0.13), 1.5).unwrap();
    let sol = soliton_profile(&s, &g).unwrap();
    for (u, params) in [(gauss, CqParams::focusing(0.1)), (sol, s.params)] {
        let (e1, e2) = validation::classical_convergence(&u, params, 1.0, &StepConfig::with_dz(4e-3)).unwrap();
        let ratio = e1 / e2;
        assert!((3.2..4.8).contains(&ratio), "error ratio {ratio} ({e1:e}, {e2:e})");
    }
}

#[test]
fn forward_then_backward_returns_the_input() {
    let g = TimeGrid::new(512, 40.0).unwrap();
    let u = gaussian_pulse(&GaussianSpec::from_energy(6.66, 1.3, 0.0).unwrap(), &g);
    let traj = propagate(&u, CqParams::focusing(-0.1), 2.0, &StepConfig::default()).unwrap();
    assert!(validation::reversibility_error(&traj).unwrap() < 1e-8);
}
