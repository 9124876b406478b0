use std::path::Path;

use cqsqueeze::*;

fn figure_runs() -> Vec<(String, Trajectory)> {
    let mut out = Vec::new();
    for i in 2..=6 {
        let path = Path::new(env!("CARGO_MANIFEST_DIR")).join(format!("../../configs/fig{i}.cfg"));
        let cfg = ExperimentConfig::load(&path, &[]).unwrap();
        let grid = cfg.time_grid().unwrap();
        let step = StepConfig {
            checkpoint_stride: 500,
            ..cfg.integrator
        };
        for p in cfg.resolved_pulses().unwrap() {
            let traj = propagate(&p.field(&grid).unwrap(), p.params, cfg.analysis.length(), &step).unwrap();
            out.push((format!("fig{i}/{}", p.label), traj));
        }
    }
    out
}

#[test]
fn photon_number_and_hamiltonian_are_conserved_on_figure_inputs() {
    let mut failures = Vec::new();
    for (label, traj) in figure_runs() {
        let (dn, dh) = (traj.photon_drift(), traj.hamiltonian_drift());
        println!("{label}: photon drift {dn:.2e}, hamiltonian drift {dh:.2e}");
        if dn >= 1e-10 || dh >= 1e-8 {
            failures.push(format!("{label} (N {dn:.2e}, H {dh:.2e})"));
        }
    }
    assert!(failures.is_empty(), "drift limits exceeded: {}", failures.join(", "));
}
