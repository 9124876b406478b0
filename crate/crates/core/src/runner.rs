//! Subcommand implementations: each reads an [`ExperimentConfig`], writes
//! CSV data files into the output directory and a JSON manifest describing
//! them.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{ExperimentConfig, ResolvedPulse, PERIOD_CONVENTION};
use crate::error::Result;
use crate::fluctuation::{pairing_defect_log, LinearizationOptions};
use crate::grid::{l2_norm_sq, ComplexField, TimeGrid};
use crate::propagator::{propagate, Trajectory};
use crate::pulse::{family_curve, min_width, solve_bistable_amplitudes, CqParams, SolitonSpec};
use crate::squeezing::{
    coherent_variance, squeezing_curve_on, theta_grid, theta_scan_on, SqueezingCurve, ThetaScan,
};
use crate::validation::{self, Check};

/// Grid size of the discrete-mode variance oracle.
const ORACLE_GRID: usize = 64;
const ORACLE_CUTOFF: usize = 40;
const GRID_SEARCH_POINTS: usize = 10_000;
/// Bound on `|⟨f₀|u₀⟩ − ⟨f_L|u(L)⟩|/(‖f_L‖‖u₀‖)` when `f₀` comes from the run
/// at `dz` and `u(L)` from the refined reference.
pub const PAIRING_DISCRETIZATION_LIMIT: f64 = 1e-4;

/// Manifest entry for one written file.
#[derive(Clone, Debug, Serialize)]
pub struct OutputEntry {
    pub file: String,
    pub kind: String,
    pub label: Option<String>,
    pub config_hash: String,
    pub period_convention: String,
}

/// Everything a command produced.
#[derive(Clone, Debug)]
pub struct RunSummary {
    pub manifest: PathBuf,
    pub outputs: Vec<PathBuf>,
    /// `false` only for a failed validation run.
    pub passed: bool,
}

struct Writer<'a> {
    cfg: &'a ExperimentConfig,
    dir: PathBuf,
    hash: String,
    entries: Vec<OutputEntry>,
    paths: Vec<PathBuf>,
}

impl<'a> Writer<'a> {
    fn new(cfg: &'a ExperimentConfig) -> Result<Self> {
        fs::create_dir_all(&cfg.output_dir)?;
        Ok(Self {
            cfg,
            dir: cfg.output_dir.clone(),
            hash: cfg.hash()?,
            entries: Vec::new(),
            paths: Vec::new(),
        })
    }

    fn create(&mut self, name: &str, kind: &str, label: Option<&str>) -> Result<BufWriter<File>> {
        let path = self.dir.join(name);
        let file = File::create(&path)?;
        self.entries.push(OutputEntry {
            file: name.to_string(),
            kind: kind.to_string(),
            label: label.map(str::to_string),
            config_hash: self.hash.clone(),
            period_convention: PERIOD_CONVENTION.to_string(),
        });
        self.paths.push(path);
        Ok(BufWriter::new(file))
    }

    fn json(&mut self, name: &str, kind: &str, label: Option<&str>, value: &Value) -> Result<()> {
        let out = self.create(name, kind, label)?;
        serde_json::to_writer_pretty(out, value)?;
        Ok(())
    }

    fn finish(self, command: &str, body: Value, passed: bool) -> Result<RunSummary> {
        let manifest = json!({
            "name": self.cfg.name,
            "command": command,
            "config_hash": self.hash,
            "period_convention": PERIOD_CONVENTION,
            "axis_beta": self.cfg.analysis.axis_beta,
            "axis_soliton_period": self.cfg.analysis.axis_period(),
            "config": self.cfg,
            "outputs": self.entries,
            "results": body,
        });
        let path = self.dir.join(format!("{command}_manifest.json"));
        serde_json::to_writer_pretty(BufWriter::new(File::create(&path)?), &manifest)?;
        Ok(RunSummary {
            manifest: path,
            outputs: self.paths,
            passed,
        })
    }
}

/// File-name-safe form of a label.
pub fn slug(label: &str) -> String {
    label
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' || c == '.' { c } else { '_' })
        .collect()
}

fn pulse_json(p: &ResolvedPulse) -> Value {
    json!({
        "label": p.label,
        "chi": p.params.chi(),
        "gamma": p.params.gamma(),
        "shape": p.shape,
        "amplitude": p.amplitude,
        "period_beta": p.period_beta,
        "soliton_period": p.soliton_period,
    })
}

fn require_pulses(cfg: &ExperimentConfig) -> Result<Vec<ResolvedPulse>> {
    let pulses = cfg.resolved_pulses()?;
    if pulses.is_empty() {
        return Err(crate::Error::Config("no [[pulses]] configured".into()));
    }
    Ok(pulses)
}

/// Width/amplitude curves for each `γ`, turning points, and marker pairs.
pub fn cmd_family(cfg: &ExperimentConfig) -> Result<RunSummary> {
    let family = cfg
        .family
        .as_ref()
        .ok_or_else(|| crate::Error::Config("family command needs a [family] table".into()))?;
    let mut w = Writer::new(cfg)?;
    let mut curves = Vec::new();
    for &gamma in &family.gammas {
        let params = CqParams::new(family.chi, gamma).map_err(|e| crate::Error::Config(e.to_string()))?;
        let hi = family
            .a_max
            .or_else(|| params.max_amplitude().map(|a| a * (1.0 - 1e-6)))
            .unwrap_or(3.0);
        let n = family.a_points;
        let amps: Vec<f64> = (0..n)
            .map(|i| family.a_min + (hi - family.a_min) * i as f64 / (n - 1) as f64)
            .collect();
        let points = family_curve(params, &amps);
        let name = format!("family_gamma_{}.csv", slug(&format!("{gamma}")));
        let mut csv = csv::Writer::from_writer(w.create(&name, "family_curve", None)?);
        csv.write_record(["A", "tau"])?;
        for p in &points {
            csv.write_record([format!("{:.12e}", p.amplitude), format!("{:.12e}", p.tau)])?;
        }
        csv.flush()?;
        let turning = match min_width(params) {
            Ok((tau_min, a_min)) => json!({ "tau_min": tau_min, "amplitude_at_min": a_min }),
            Err(_) => Value::Null,
        };
        curves.push(json!({
            "gamma": gamma,
            "file": name,
            "points": points.len(),
            "max_amplitude": params.max_amplitude(),
            "turning_point": turning,
        }));
    }

    let mut markers = Vec::new();
    if !family.markers.is_empty() {
        let mut csv = csv::Writer::from_writer(w.create("family_markers.csv", "family_markers", None)?);
        csv.write_record(["label", "gamma", "tau", "branch", "A", "beta", "A_quoted"])?;
        for m in &family.markers {
            let params = CqParams::new(family.chi, m.gamma).map_err(|e| crate::Error::Config(e.to_string()))?;
            let roots = solve_bistable_amplitudes(params, m.tau);
            for (i, &a) in roots.iter().enumerate() {
                let beta = SolitonSpec::from_amplitude(params, a).map(|s| s.beta).unwrap_or(f64::NAN);
                let quoted = m.quoted.get(i).map(|q| format!("{q}")).unwrap_or_default();
                csv.write_record([
                    format!("{}{}", m.label, i + 1),
                    format!("{}", m.gamma),
                    format!("{}", m.tau),
                    format!("{}", i + 1),
                    format!("{a:.12e}"),
                    format!("{beta:.12e}"),
                    quoted,
                ])?;
            }
            markers.push(json!({ "label": m.label, "gamma": m.gamma, "tau": m.tau, "roots": roots, "quoted": m.quoted }));
        }
        csv.flush()?;
    }
    w.finish("family", json!({ "curves": curves, "markers": markers }), true)
}

fn write_field(w: &mut Writer, name: &str, label: &str, field: &ComplexField) -> Result<()> {
    let mut csv = csv::Writer::from_writer(w.create(name, "field", Some(label))?);
    csv.write_record(["t", "re", "im", "abs2"])?;
    for (t, v) in field.grid().t().iter().zip(field.values()) {
        csv.write_record([
            format!("{t:.12e}"),
            format!("{:.12e}", v.re),
            format!("{:.12e}", v.im),
            format!("{:.12e}", v.norm_sqr()),
        ])?;
    }
    csv.flush()?;
    Ok(())
}

fn trajectories(cfg: &ExperimentConfig, grid: &TimeGrid, pulses: &[ResolvedPulse], length: f64) -> Result<Vec<Trajectory>> {
    pulses
        .par_iter()
        .map(|p| propagate(&p.field(grid)?, p.params, length, &cfg.integrator))
        .collect()
}

/// Classical runs with evenly spaced field dumps and conserved-quantity logs.
pub fn cmd_propagate(cfg: &ExperimentConfig) -> Result<RunSummary> {
    let pulses = require_pulses(cfg)?;
    let grid = cfg.time_grid()?;
    let length = cfg.analysis.length();
    let runs = trajectories(cfg, &grid, &pulses, length)?;
    let mut w = Writer::new(cfg)?;
    let mut results = Vec::new();
    for (p, traj) in pulses.iter().zip(&runs) {
        let tag = slug(&p.label);
        let dumps = crate::squeezing::sample_steps(traj.n_steps(), cfg.analysis.field_dumps.max(1));
        let mut files = Vec::new();
        for (i, &k) in dumps.iter().enumerate() {
            let name = format!("propagate_{tag}_{i:03}.csv");
            write_field(&mut w, &name, &p.label, &traj.field_at_step(k)?)?;
            files.push(json!({ "file": name, "z": traj.z_at_step(k), "step": k }));
        }
        let initial = traj.initial();
        let fin = traj.final_field();
        let log = traj.conserved_log();
        let manifest = json!({
            "pulse": pulse_json(p),
            "grid": { "n": grid.n(), "t_span": grid.t_span(), "dt": grid.dt() },
            "dz": traj.dz(),
            "n_steps": traj.n_steps(),
            "scheme": traj.scheme(),
            "checkpoint_stride": traj.stride(),
            "length": traj.length(),
            "dumps": files,
            "photon_drift": traj.photon_drift(),
            "hamiltonian_drift": traj.hamiltonian_drift(),
            "max_modulus_deviation": modulus_deviation(&initial, &fin)?,
            "conserved_log": log,
        });
        let name = format!("propagate_{tag}.json");
        w.json(&name, "trajectory", Some(&p.label), &manifest)?;
        results.push(json!({ "label": p.label, "trajectory": name }));
    }
    w.finish("propagate", json!({ "runs": results }), true)
}

fn modulus_deviation(a: &ComplexField, b: &ComplexField) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for (x, y) in a.values().iter().zip(b.values()) {
        worst = worst.max((x.norm() - y.norm()).abs());
    }
    Ok(worst)
}

/// Optimal squeezing ratio against distance for every configured pulse.
pub fn squeeze_curves(cfg: &ExperimentConfig) -> Result<Vec<(ResolvedPulse, SqueezingCurve)>> {
    let pulses = require_pulses(cfg)?;
    let grid = cfg.time_grid()?;
    let length = cfg.analysis.length();
    let axis = cfg.analysis.axis_period();
    let runs = trajectories(cfg, &grid, &pulses, length)?;
    let curves = runs
        .iter()
        .map(|t| squeezing_curve_on(t, cfg.analysis.n_samples, axis, LinearizationOptions::default()))
        .collect::<Result<Vec<_>>>()?;
    Ok(pulses.into_iter().zip(curves).collect())
}

pub fn cmd_squeeze(cfg: &ExperimentConfig) -> Result<RunSummary> {
    let curves = squeeze_curves(cfg)?;
    let mut w = Writer::new(cfg)?;
    let mut results = Vec::new();
    for (p, curve) in &curves {
        let name = format!("squeeze_{}.csv", slug(&p.label));
        curve.write_csv(w.create(&name, "squeezing_curve", Some(&p.label))?)?;
        let (i_min, r_min) = curve
            .r_opt
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::INFINITY), |b, (i, r)| if r < b.1 { (i, r) } else { b });
        results.push(json!({
            "file": name,
            "pulse": pulse_json(p),
            "samples": curve.z_points.len(),
            "best_R_opt": r_min,
            "best_R_opt_dB": crate::squeezing::to_db(r_min),
            "best_z": curve.z_points[i_min],
            "final_R_opt": curve.r_opt.last(),
            "linearity_check": curve.linearity_check,
            "photon_drift": curve.photon_drift,
            "hamiltonian_drift": curve.hamiltonian_drift,
        }));
    }
    w.finish("squeeze", json!({ "curves": results }), true)
}

/// `R(θ)` at `z = L` for every configured pulse.
pub fn theta_scans(cfg: &ExperimentConfig) -> Result<Vec<(ResolvedPulse, ThetaScan)>> {
    let pulses = require_pulses(cfg)?;
    let grid = cfg.time_grid()?;
    let runs = trajectories(cfg, &grid, &pulses, cfg.analysis.length())?;
    let thetas = theta_grid(cfg.analysis.theta_points);
    let scans = runs
        .par_iter()
        .map(|t| theta_scan_on(t, &thetas, LinearizationOptions::default()))
        .collect::<Result<Vec<_>>>()?;
    Ok(pulses.into_iter().zip(scans).collect())
}

pub fn cmd_theta_scan(cfg: &ExperimentConfig) -> Result<RunSummary> {
    let scans = theta_scans(cfg)?;
    let mut w = Writer::new(cfg)?;
    let mut results = Vec::new();
    for (p, scan) in &scans {
        let name = format!("theta_scan_{}.csv", slug(&p.label));
        scan.write_csv(w.create(&name, "theta_scan", Some(&p.label))?)?;
        let (r_opt, theta_opt) = scan.form.optimum();
        results.push(json!({
            "file": name,
            "pulse": pulse_json(p),
            "length": cfg.analysis.length(),
            "R_min_on_grid": scan.min(),
            "R_max_on_grid": scan.max(),
            "R_opt": r_opt,
            "theta_opt": theta_opt,
            "R_max": scan.form.maximum(),
            "determinant": scan.form.determinant(),
            "periodicity_defect": validation::periodicity_defect(&scan.form, &scan.theta),
        }));
    }
    w.finish("theta-scan", json!({ "scans": results }), true)
}

/// Runs the invariant suite on one pulse.
pub fn validate_pulse(cfg: &ExperimentConfig, grid: &TimeGrid, pulse: &ResolvedPulse) -> Result<(Vec<Check>, Trajectory)> {
    let length = cfg.validation.length_periods * cfg.analysis.axis_period();
    let initial = pulse.field(grid)?;
    let step = &cfg.integrator;
    let traj = propagate(&initial, pulse.params, length, step)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.validation.seed);
    let mut checks = Vec::new();

    let mut worst_pairing: f64 = 0.0;
    for _ in 0..cfg.validation.pairs {
        let u0 = validation::random_probe(grid, &mut rng);
        let f_l = validation::random_probe(grid, &mut rng);
        worst_pairing = worst_pairing.max(validation::pairing_defect(&traj, &u0, &f_l)?);
    }
    checks.push(Check::below("pairing_conservation", worst_pairing, 1e-6));

    if traj.n_steps() == 0 {
        checks.push(Check::skipped("pairing_convergence_order", "zero-length run"));
        checks.push(Check::skipped("strang_convergence_order", "zero-length run"));
    } else {
        let u0 = validation::random_probe(grid, &mut rng);
        let f_l = validation::random_probe(grid, &mut rng);
        let (e1, e2) = validation::pairing_convergence(&initial, pulse.params, length, step, &u0, &f_l)?;
        checks.push(Check::below("pairing_discretization_error", e1, PAIRING_DISCRETIZATION_LIMIT));
        checks.push(Check::ratio("pairing_convergence_order", e1 / e2));
        let (c1, c2) = validation::classical_convergence(&initial, pulse.params, length, step)?;
        checks.push(Check::ratio("strang_convergence_order", c1 / c2));
    }

    checks.push(Check::below("photon_number_drift", traj.photon_drift(), 1e-10));
    checks.push(Check::below("hamiltonian_drift", traj.hamiltonian_drift(), 1e-8));
    checks.push(Check::below("reversibility", validation::reversibility_error(&traj)?, 1e-8));

    let f1 = validation::random_probe(grid, &mut rng);
    let f2 = validation::random_probe(grid, &mut rng);
    checks.push(Check::below(
        "back_propagation_linearity",
        validation::linearity_defect(&traj, &f1, &f2, 0.7, -1.3)?,
        1e-12,
    ));

    // discrete-mode variance oracle on a small grid
    let small = TimeGrid::new(ORACLE_GRID, grid.t_span())?;
    let f = validation::random_probe(&small, &mut rng);
    let f = f.scale((1.0 / l2_norm_sq(&f).sqrt()).into());
    let mean = pulse.field(&small)?;
    let oracle = validation::fock_variance(&f, &mean, ORACLE_CUTOFF);
    checks.push(Check::below("variance_oracle", (coherent_variance(&f) - oracle).abs(), 1e-12));

    let form = validation::final_form(&traj)?;
    let (r_opt, _) = form.optimum();
    let (_, r_grid) = validation::grid_search_minimum(&form, GRID_SEARCH_POINTS);
    checks.push(Check::below("theta_optimum_vs_grid", (r_opt - r_grid).abs(), 1e-8));
    let thetas = theta_grid(64);
    checks.push(Check::below(
        "theta_periodicity",
        validation::periodicity_defect(&form, &thetas),
        1e-10,
    ));
    checks.push(Check::below(
        "phase_insensitive_without_conjugate_coupling",
        validation::phase_insensitive_deviation(&traj, &thetas[..8])?,
        1e-9,
    ));
    Ok((checks, traj))
}

pub fn cmd_validate(cfg: &ExperimentConfig) -> Result<RunSummary> {
    let pulses = require_pulses(cfg)?;
    let grid = cfg.time_grid()?;
    let mut w = Writer::new(cfg)?;
    let mut reports = Vec::new();
    let mut all_passed = true;
    for p in &pulses {
        let (checks, traj) = validate_pulse(cfg, &grid, p)?;
        let passed = checks.iter().all(|c| c.passed);
        all_passed &= passed;

        let mut rng = ChaCha8Rng::seed_from_u64(cfg.validation.seed ^ 0xdef);
        let u0 = validation::random_probe(&grid, &mut rng);
        let f_l = validation::random_probe(&grid, &mut rng);
        let log = pairing_defect_log(&u0, &f_l, &traj)?;
        let name = format!("validate_{}_pairing.csv", slug(&p.label));
        let mut csv = csv::Writer::from_writer(w.create(&name, "pairing_defect_log", Some(&p.label))?);
        csv.write_record(["z", "defect"])?;
        for s in &log {
            csv.write_record([format!("{:.12e}", s.z), format!("{:.12e}", s.defect)])?;
        }
        csv.flush()?;
        reports.push(json!({ "pulse": pulse_json(p), "passed": passed, "checks": checks, "pairing_log": name }));
    }
    let report = json!({ "passed": all_passed, "pulses": reports });
    w.json("validate_report.json", "validation_report", None, &report)?;
    w.finish("validate", report, all_passed)
}

/// Reads the manifest written by a command.
pub fn read_manifest(path: &Path) -> Result<Value> {
    Ok(serde_json::from_reader(File::open(path)?)?)
}
