use cqsqueeze::fluctuation::{pairing_defect_log, symplectic_pairing};
use cqsqueeze::validation::random_probe;
use cqsqueeze::*;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn grid() -> TimeGrid {
    TimeGrid::new(512, 40.0).unwrap()
}

fn soliton(gamma: f64, amplitude: f64, g: &TimeGrid) -> (SolitonSpec, ComplexField) {
    let s = SolitonSpec::from_amplitude(CqParams::focusing(gamma), amplitude).unwrap();
    let u = soliton_profile(&s, g).unwrap();
    (s, u)
}

fn d_dbeta(s: &SolitonSpec, g: &TimeGrid) -> ComplexField {
    let h = 1e-6;
    let up = soliton_profile(&SolitonSpec::new(s.params, s.beta + h).unwrap(), g).unwrap();
    let dn = soliton_profile(&SolitonSpec::new(s.params, s.beta - h).unwrap(), g).unwrap();
    up.lin_comb(0.5 / h, &dn, -0.5 / h).unwrap()
}

/// Nonlinear difference quotient against the linearized flow.
#[test]
fn linearization_matches_nonlinear_difference_quadratically() {
    let g = grid();
    let (s, u0) = soliton(-0.1, 1.147, &g);
    let length = s.period();
    let cfg = StepConfig::default();
    let traj = propagate(&u0, s.params, length, &cfg).unwrap();
    let dir = d_dbeta(&s, &g);
    let lin = forward_propagate_perturbation(&dir, &traj).unwrap();
    let base = traj.final_field();

    let errors: Vec<f64> = [1e-3, 1e-4, 1e-5]
        .iter()
        .map(|&eps| {
            let shifted = u0.lin_comb(1.0, &dir, eps).unwrap();
            let out = propagate(&shifted, s.params, length, &cfg).unwrap().final_field();
            let diff = out.lin_comb(1.0, &base, -1.0).unwrap();
            diff.max_abs_diff(&lin.scale(eps.into())).unwrap()
        })
        .collect();
    println!("nonlinear-vs-linearized errors {errors:?}");
    for w in errors.windows(2) {
        let ratio = w[0] / w[1];
        assert!((50.0..200.0).contains(&ratio), "error ratio {ratio} for errors {errors:?}");
    }
}

#[test]
fn global_phase_is_a_zero_mode() {
    let g = grid();
    let (s, u0) = soliton(0.1, 1.0, &g);
    let c = 0.3;
    let mode = u0.scale(Complex64::new(0.0, c));
    let drift = |dz: f64| {
        let traj = propagate(&u0, s.params, 2.0, &StepConfig::with_dz(dz)).unwrap();
        let out = forward_propagate_perturbation(&mode, &traj).unwrap();
        let expected = traj.final_field().scale(Complex64::new(0.0, c));
        (out.max_abs_diff(&expected).unwrap(), traj)
    };
    let (coarse, _) = drift(2e-3);
    let (fine, traj) = drift(1e-3);
    println!("phase-mode drift {coarse:e} -> {fine:e}");
    assert!(fine < 1e-4 * c, "phase mode drifted by {fine}");
    let ratio = coarse / fine;
    assert!((3.2..4.8).contains(&ratio), "phase-mode drift ratio {ratio}");

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let f_l = random_probe(&g, &mut rng);
    let log = pairing_defect_log(&mode, &f_l, &traj).unwrap();
    let worst = log.iter().map(|p| p.defect).fold(0.0, f64::max);
    assert!(worst < 1e-8, "pairing with the phase mode varies by {worst}");
}

#[test]
fn symplectic_form_is_conserved() {
    let g = grid();
    let (s, u0) = soliton(-0.13, 1.3, &g);
    let traj = propagate(&u0, s.params, 3.0, &StepConfig::default()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..5 {
        let a = random_probe(&g, &mut rng);
        let b = random_probe(&g, &mut rng);
        let before = symplectic_pairing(&a, &b).unwrap();
        let after = symplectic_pairing(
            &forward_propagate_perturbation(&a, &traj).unwrap(),
            &forward_propagate_perturbation(&b, &traj).unwrap(),
        )
        .unwrap();
        assert!((before - after).abs() < 1e-8, "{before} -> {after}");
    }
}

#[test]
fn pairing_is_conserved_on_random_pairs() {
    let g = grid();
    let (s, u0) = soliton(0.0, 1.0, &g);
    let traj = propagate(&u0, s.params, 2.0, &StepConfig::default()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..10 {
        let u = random_probe(&g, &mut rng);
        let f = random_probe(&g, &mut rng);
        let d = validation::pairing_defect(&traj, &u, &f).unwrap();
        assert!(d < 1e-6, "relative pairing defect {d}");
    }
}

#[test]
fn back_propagation_is_real_linear() {
    let g = grid();
    let (s, u0) = soliton(-0.1, 2.033, &g);
    let traj = propagate(&u0, s.params, 1.0, &StepConfig::default()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let f1 = random_probe(&g, &mut rng);
    let f2 = random_probe(&g, &mut rng);
    for (a, b) in [(1.0, 1.0), (0.3, -2.5), (-4.0, 0.01)] {
        let d = validation::linearity_defect(&traj, &f1, &f2, a, b).unwrap();
        assert!(d < 1e-12, "linearity defect {d} for ({a}, {b})");
    }
}

#[test]
fn zero_background_reduces_to_free_dispersion() {
    let g = grid();
    let zero = ComplexField::zeros(&g);
    let traj = propagate(&zero, CqParams::focusing(0.1), 1.5, &StepConfig::default()).unwrap();
    let free = propagate(&ComplexField::zeros(&g), CqParams::dispersion_only(), 1.5, &StepConfig::default()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let u = random_probe(&g, &mut rng);
    let lin = forward_propagate_perturbation(&u, &traj).unwrap();
    // free linear evolution: multiply the spectrum by exp(-i ω² z)
    let mut spec = to_spectrum(&u);
    for (v, &w) in spec.values_mut().iter_mut().zip(g.omega()) {
        *v *= Complex64::new(0.0, -w * w * 1.5).exp();
    }
    let exact = from_spectrum(&spec);
    assert!(lin.max_abs_diff(&exact).unwrap() < 1e-11);
    assert!(free.final_field().max_abs() == 0.0);
}
