"""Smoke test for the pycqsqueeze extension module."""

import json
import math
import pathlib
import tempfile

import pycqsqueeze as cq


def main():
    grid = cq.TimeGrid(256, 40.0)
    params = cq.CqParams(-0.1)

    roots = cq.solve_bistable_amplitudes(params, 3.5)
    assert len(roots) == 2, roots
    tau_min, _ = cq.min_width(params)
    assert abs(tau_min - 3.0) < 0.1, tau_min

    spec = cq.SolitonSpec.from_amplitude(params, roots[0])
    assert abs(spec.period - math.pi / (2 * spec.beta)) < 1e-14
    u0 = spec.profile(grid)
    assert abs(max(abs(v) for v in u0) - roots[0]) < 1e-10

    traj = cq.propagate(u0, grid, params, spec.period, dz=2e-3)
    assert traj.photon_drift() < 1e-10
    drift = max(abs(abs(a) - abs(b)) for a, b in zip(u0, traj.final_field()))
    assert drift < 1e-4, drift

    f_l = [1j * v / math.sqrt(2.0) for v in traj.final_field()]
    norm = sum(abs(v) ** 2 for v in f_l) * grid.dt
    f_l = [v / math.sqrt(norm) for v in f_l]
    assert abs(cq.coherent_variance(f_l, grid) - 0.25) < 1e-12
    f0 = cq.back_propagate(f_l, traj)
    assert len(f0) == grid.n

    curve = cq.squeezing_curve(traj, 5, spec.period)
    assert curve.r_opt[0] == 1.0
    assert all(0.0 < r < 1.0 for r in curve.r_opt[1:]), curve.r_opt
    form = curve.forms[-1]
    r_opt, theta_opt = form.optimum()
    assert abs(form.ratio(theta_opt) - r_opt) < 1e-12

    thetas, ratios = cq.theta_scan(traj, 64)
    assert min(ratios) >= r_opt - 1e-12

    gauss = cq.GaussianSpec.from_energy(1.30, 1.3)
    assert abs(gauss.energy - 1.30) < 1e-12

    try:
        cq.SolitonSpec(params, -1.0)
    except ValueError:
        pass
    else:
        raise AssertionError("negative beta accepted")

    with tempfile.TemporaryDirectory() as tmp:
        cfg = pathlib.Path(tmp) / "run.cfg"
        cfg.write_text(
            f'name = "smoke"\noutput_dir = "{tmp}/out"\n'
            "[grid]\nn = 128\nt_span = 30.0\n"
            "[analysis]\nlength_periods = 0.5\nn_samples = 3\n"
            '[[pulses]]\nlabel = "s"\nkind = "soliton"\ngamma = 0.1\namplitude = 1.0\n'
        )
        passed, manifest = cq.run("squeeze", cfg)
        manifest = json.loads(manifest)
        assert passed and len(manifest["config_hash"]) == 64

    print(f"smoke test passed: R_opt after one period = {curve.r_opt[-1]:.4f}")


if __name__ == "__main__":
    main()
