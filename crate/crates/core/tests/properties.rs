use std::f64::consts::PI;

use cqsqueeze::grid::overlap;
use cqsqueeze::pulse::width_from_amplitude;
use cqsqueeze::*;
use num_complex::Complex64;
use proptest::prelude::*;

mod common;
use common::scanned_minimum;

fn field_from(values: &[(f64, f64)]) -> ComplexField {
    let g = TimeGrid::new(values.len(), 10.0).unwrap();
    ComplexField::from_values(&g, values.iter().map(|&(re, im)| Complex64::new(re, im)).collect()).unwrap()
}

fn values(n: usize) -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-3.0..3.0f64, -3.0..3.0f64), n)
}

fn forms() -> impl Strategy<Value = QuadratureForm> {
    (0.01..20.0f64, 0.01..20.0f64, -1.0..1.0f64).prop_map(|(a, b, s)| QuadratureForm {
        a,
        b,
        c: s * (a * b).sqrt(),
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn parseval(v in values(64)) {
        let f = field_from(&v);
        let spectral: f64 = to_spectrum(&f).values().iter().map(|x| x.norm_sqr()).sum::<f64>() * f.grid().dt();
        let direct = l2_norm_sq(&f);
        prop_assert!((spectral - direct).abs() <= 1e-12 * direct.max(1e-300));
        let back = from_spectrum(&to_spectrum(&f));
        prop_assert!(back.max_abs_diff(&f).unwrap() <= 1e-12 * f.max_abs().max(1e-300));
    }

    #[test]
    fn real_inner_product_is_symmetric_and_bilinear(
        u in values(32), v in values(32), w in values(32), a in -5.0..5.0f64, b in -5.0..5.0f64
    ) {
        let (f, g, h) = (field_from(&u), field_from(&v), field_from(&w));
        let fg = inner_product_real(&f, &g).unwrap();
        prop_assert!((fg - inner_product_real(&g, &f).unwrap()).abs() <= 1e-12 * (1.0 + fg.abs()));
        let lhs = inner_product_real(&f.lin_comb(a, &g, b).unwrap(), &h).unwrap();
        let rhs = a * inner_product_real(&f, &h).unwrap() + b * inner_product_real(&g, &h).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + lhs.abs()));
        prop_assert!((inner_product_real(&f, &f).unwrap() - l2_norm_sq(&f)).abs() <= 1e-12 * l2_norm_sq(&f));
        prop_assert!((overlap(&f, &g).unwrap().re - fg).abs() <= 1e-12 * (1.0 + fg.abs()));
    }

    #[test]
    fn beta_round_trips_through_amplitude(gamma in -0.3..0.3f64, beta in 0.05..3.0f64, defocusing in any::<bool>()) {
        let chi = if defocusing { -1.0 } else { 1.0 };
        let params = CqParams::new(chi, gamma).unwrap();
        prop_assume!(params.peak_power_at(beta).is_ok());
        let spec = SolitonSpec::new(params, beta).unwrap();
        let again = beta_from_amplitude(params, spec.amplitude()).unwrap();
        prop_assert!((again - beta).abs() <= 1e-9 * beta, "{} vs {}", again, beta);
        let g = TimeGrid::new(256, 40.0).unwrap();
        let peak = soliton_profile(&spec, &g).unwrap().max_abs();
        prop_assert!((peak - spec.amplitude()).abs() <= 1e-12 * peak);
    }

    #[test]
    fn fold_has_two_branches_above_turning_point(gamma in -0.2..-0.05f64, excess in 0.05..2.0f64) {
        let params = CqParams::focusing(gamma);
        let (tau_min, a_turn) = min_width(params).unwrap();
        let tau = tau_min + excess;
        let roots = solve_bistable_amplitudes(params, tau);
        prop_assert_eq!(roots.len(), 2, "roots {:?} at tau {}", roots, tau);
        prop_assert!(roots[0] < a_turn && a_turn < roots[1]);
        for &a in &roots {
            prop_assert!((width_from_amplitude(params, a).unwrap() - tau).abs() < 1e-8);
        }
        prop_assert!(solve_bistable_amplitudes(params, tau_min - 0.05).is_empty());
    }

    #[test]
    fn quadrature_ratio_is_pi_periodic(form in forms(), theta in 0.0..(2.0 * PI)) {
        prop_assert!((form.ratio(theta + PI) - form.ratio(theta)).abs() < 1e-10);
    }

    #[test]
    fn closed_form_optimum_matches_scan(form in forms()) {
        let (r_opt, theta_opt) = form.optimum();
        let (r_scan, theta_scan) = scanned_minimum(&form);
        prop_assert!((r_opt - r_scan).abs() < 1e-8, "{} vs {}", r_opt, r_scan);
        prop_assert!((0.0..PI).contains(&theta_opt));
        prop_assert!((form.ratio(theta_opt) - r_opt).abs() < 1e-10);
        // the optimum phase is unique unless the form is nearly isotropic
        let spread = form.maximum() - r_opt;
        if spread > 1e-3 {
            let d = (theta_opt - theta_scan).abs();
            prop_assert!(d.min(PI - d) < 1e-4, "{} vs {}", theta_opt, theta_scan);
        }
        prop_assert!((form.maximum() * r_opt - form.determinant()).abs() < 1e-9 * (1.0 + form.determinant().abs()));
    }
}
