//! Experiment configuration: a TOML file plus `--set key=value` overrides.

use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::grid::{ComplexField, TimeGrid};
use crate::propagator::StepConfig;
use crate::pulse::{
    gaussian_pulse, soliton_period, soliton_profile, solve_bistable_amplitudes, CqParams, GaussianSpec, SolitonSpec,
};

/// Text recorded in every manifest next to the distance axis.
pub const PERIOD_CONVENTION: &str = "z_sp = pi/(2*beta); the z axis of every curve is in periods of analysis.axis_beta; \
     per-pulse periods use the soliton's own beta, beta = 1/alpha^2 for gaussians, beta = A^2 for cw";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub integrator: StepConfig,
    #[serde(default)]
    pub analysis: AnalysisConfig,
    #[serde(default)]
    pub validation: ValidationConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<FamilyConfig>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub pulses: Vec<PulseConfig>,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub n: usize,
    pub t_span: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { n: 1024, t_span: 40.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisConfig {
    /// Propagation length in units of the reference soliton period.
    pub length_periods: f64,
    /// `β` whose soliton period `π/(2β)` sets the common distance axis.
    pub axis_beta: f64,
    pub n_samples: usize,
    pub theta_points: usize,
    /// Number of evenly spaced field dumps written by `propagate`.
    pub field_dumps: usize,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            length_periods: 10.0,
            axis_beta: 1.0,
            n_samples: 21,
            theta_points: 360,
            field_dumps: 11,
        }
    }
}

impl AnalysisConfig {
    pub fn axis_period(&self) -> f64 {
        soliton_period(self.axis_beta)
    }

    pub fn length(&self) -> f64 {
        self.length_periods * self.axis_period()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ValidationConfig {
    /// Random (u₀, f_L) pairs for the pairing check.
    pub pairs: usize,
    pub seed: u64,
    /// Length of the validation runs, in reference soliton periods.
    pub length_periods: f64,
}

impl Default for ValidationConfig {
    fn default() -> Self {
        Self {
            pairs: 20,
            seed: 1,
            length_periods: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyConfig {
    #[serde(default = "one")]
    pub chi: f64,
    pub gammas: Vec<f64>,
    #[serde(default = "default_a_min")]
    pub a_min: f64,
    /// Upper amplitude; defaults to the edge of the admissible window.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a_max: Option<f64>,
    #[serde(default = "default_a_points")]
    pub a_points: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub markers: Vec<MarkerConfig>,
}

fn one() -> f64 {
    1.0
}

fn default_a_min() -> f64 {
    0.2
}

fn default_a_points() -> usize {
    400
}

/// A labelled bistable pair: both roots of the width relation at `tau`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarkerConfig {
    pub label: String,
    pub gamma: f64,
    pub tau: f64,
    /// Reference amplitudes quoted alongside the solved roots.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub quoted: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PulseKind {
    Soliton,
    Gaussian,
    /// Uniform background of the given amplitude.
    Cw,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Lower,
    Upper,
}

/// One input pulse.  Solitons take exactly one of `beta`, `amplitude`, or
/// `width` + `branch`; Gaussians take `alpha` and one of `amplitude`, `energy`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseConfig {
    pub label: String,
    pub kind: PulseKind,
    #[serde(default = "one")]
    pub chi: f64,
    #[serde(default)]
    pub gamma: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitude: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub width: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub branch: Option<Branch>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub energy: Option<f64>,
    #[serde(default)]
    pub chirp: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum PulseShape {
    Soliton(SolitonSpec),
    Gaussian(GaussianSpec),
    Cw { amplitude: f64 },
}

/// A pulse with every derived quantity resolved.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResolvedPulse {
    pub label: String,
    pub params: CqParams,
    pub shape: PulseShape,
    /// `β` entering the soliton-period convention for this pulse.
    pub period_beta: f64,
    pub soliton_period: f64,
    pub amplitude: f64,
}

impl ResolvedPulse {
    pub fn field(&self, grid: &TimeGrid) -> Result<ComplexField> {
        match &self.shape {
            PulseShape::Soliton(s) => soliton_profile(s, grid),
            PulseShape::Gaussian(g) => Ok(gaussian_pulse(g, grid)),
            PulseShape::Cw { amplitude } => Ok(ComplexField::from_fn(grid, |_| Complex64::new(*amplitude, 0.0))),
        }
    }
}

impl PulseConfig {
    pub fn resolve(&self) -> Result<ResolvedPulse> {
        let cfg_err = |msg: String| Error::Config(format!("pulse '{}': {msg}", self.label));
        let linear = self.chi == 0.0 && self.gamma == 0.0;
        let params = if linear {
            CqParams::dispersion_only()
        } else {
            CqParams::new(self.chi, self.gamma).map_err(|e| cfg_err(e.to_string()))?
        };
        if linear && self.kind == PulseKind::Soliton {
            return Err(cfg_err("solitons need chi = +1 or -1".into()));
        }
        match self.kind {
            PulseKind::Soliton => {
                let given = [self.beta.is_some(), self.amplitude.is_some(), self.width.is_some()]
                    .iter()
                    .filter(|&&b| b)
                    .count();
                if given != 1 {
                    return Err(cfg_err("soliton needs exactly one of beta, amplitude, width".into()));
                }
                if self.alpha.is_some() || self.energy.is_some() {
                    return Err(cfg_err("alpha/energy only apply to gaussian pulses".into()));
                }
                let spec = if let Some(beta) = self.beta {
                    SolitonSpec::new(params, beta)
                } else if let Some(a) = self.amplitude {
                    SolitonSpec::from_amplitude(params, a)
                } else {
                    let tau = self.width.expect("counted above");
                    let roots = solve_bistable_amplitudes(params, tau);
                    let a = match (self.branch.unwrap_or(Branch::Lower), roots.as_slice()) {
                        (_, []) => return Err(cfg_err(format!("no soliton of width {tau}"))),
                        (Branch::Lower, r) => r[0],
                        (Branch::Upper, r) => *r.last().expect("nonempty"),
                    };
                    SolitonSpec::from_amplitude(params, a)
                }
                .map_err(|e| cfg_err(e.to_string()))?;
                Ok(ResolvedPulse {
                    label: self.label.clone(),
                    params,
                    shape: PulseShape::Soliton(spec),
                    period_beta: spec.beta,
                    soliton_period: spec.period(),
                    amplitude: spec.amplitude(),
                })
            }
            PulseKind::Gaussian => {
                if self.beta.is_some() || self.width.is_some() || self.branch.is_some() {
                    return Err(cfg_err("beta/width/branch only apply to solitons".into()));
                }
                let alpha = self.alpha.ok_or_else(|| cfg_err("gaussian needs alpha".into()))?;
                let spec = match (self.amplitude, self.energy) {
                    (Some(a), None) => GaussianSpec::new(a, alpha, self.chirp),
                    (None, Some(e)) => GaussianSpec::from_energy(e, alpha, self.chirp),
                    _ => return Err(cfg_err("gaussian needs exactly one of amplitude, energy".into())),
                }
                .map_err(|e| cfg_err(e.to_string()))?;
                let beta = spec.equal_width_beta();
                Ok(ResolvedPulse {
                    label: self.label.clone(),
                    params,
                    shape: PulseShape::Gaussian(spec),
                    period_beta: beta,
                    soliton_period: soliton_period(beta),
                    amplitude: spec.amplitude,
                })
            }
            PulseKind::Cw => {
                if self.beta.is_some() || self.width.is_some() || self.alpha.is_some() || self.energy.is_some() {
                    return Err(cfg_err("cw takes only amplitude".into()));
                }
                let a = self.amplitude.ok_or_else(|| cfg_err("cw needs amplitude".into()))?;
                if !(a > 0.0 && a.is_finite()) {
                    return Err(cfg_err(format!("cw amplitude must be positive, got {a}")));
                }
                // cubic soliton with the same peak
                let beta = a * a;
                Ok(ResolvedPulse {
                    label: self.label.clone(),
                    params,
                    shape: PulseShape::Cw { amplitude: a },
                    period_beta: beta,
                    soliton_period: soliton_period(beta),
                    amplitude: a,
                })
            }
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str, overrides: &[String]) -> Result<Self> {
        let mut table: toml::Table = text.parse().map_err(|e| Error::Config(format!("{e}")))?;
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let cfg: ExperimentConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text, overrides)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// SHA-256 of the canonical serialization.
    pub fn hash(&self) -> Result<String> {
        let digest = Sha256::digest(self.to_toml_string()?.as_bytes());
        Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
    }

    pub fn time_grid(&self) -> Result<TimeGrid> {
        TimeGrid::new(self.grid.n, self.grid.t_span).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn resolved_pulses(&self) -> Result<Vec<ResolvedPulse>> {
        self.pulses.iter().map(PulseConfig::resolve).collect()
    }

    /// Checks every precondition that can be checked before computing.
    pub fn validate(&self) -> Result<()> {
        self.time_grid()?;
        self.integrator
            .validate()
            .map_err(|e| Error::Config(e.to_string()))?;
        let a = &self.analysis;
        if !(a.length_periods >= 0.0 && a.length_periods.is_finite()) {
            return Err(Error::Config("analysis.length_periods must be >= 0".into()));
        }
        if !(a.axis_beta > 0.0) {
            return Err(Error::Config("analysis.axis_beta must be positive".into()));
        }
        if a.n_samples == 0 || a.theta_points == 0 {
            return Err(Error::Config("analysis.n_samples and theta_points must be >= 1".into()));
        }
        if !(self.validation.length_periods >= 0.0) {
            return Err(Error::Config("validation.length_periods must be >= 0".into()));
        }
        let mut labels = std::collections::HashSet::new();
        for p in &self.pulses {
            if !labels.insert(p.label.as_str()) {
                return Err(Error::Config(format!("duplicate pulse label '{}'", p.label)));
            }
            p.resolve()?;
        }
        if let Some(f) = &self.family {
            if f.chi != 1.0 && f.chi != -1.0 {
                return Err(Error::Config("family.chi must be +1 or -1".into()));
            }
            if !(f.a_min > 0.0) || f.a_points < 2 {
                return Err(Error::Config("family.a_min must be positive and a_points >= 2".into()));
            }
            if let Some(hi) = f.a_max {
                if !(hi > f.a_min) {
                    return Err(Error::Config("family.a_max must exceed a_min".into()));
                }
            }
        }
        Ok(())
    }
}

/// Applies `a.b.c=value`; numeric path segments index arrays.  The value is
/// parsed as a TOML literal and falls back to a bare string.
pub fn apply_override(table: &mut toml::Table, assignment: &str) -> Result<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override '{assignment}' is not key=value")))?;
    let key = key.trim();
    let raw = raw.trim();
    let value = format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));

    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(Error::Config(format!("bad override key '{key}'")));
    }
    let mut node = table;
    for (depth, part) in parts.iter().enumerate() {
        let last = depth + 1 == parts.len();
        if last {
            node.insert(part.to_string(), value);
            return Ok(());
        }
        let next = parts[depth + 1];
        let entry = node
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        node = match entry {
            toml::Value::Table(t) => t,
            toml::Value::Array(items) => {
                let idx: usize = next
                    .parse()
                    .map_err(|_| Error::Config(format!("'{part}' is an array; expected an index, got '{next}'")))?;
                let item = items
                    .get_mut(idx)
                    .ok_or_else(|| Error::Config(format!("index {idx} out of range for '{part}'")))?;
                if depth + 2 == parts.len() {
                    *item = value;
                    return Ok(());
                }
                match item {
                    toml::Value::Table(t) => {
                        // skip the index segment
                        return apply_override(t, &format!("{}={raw}", parts[depth + 2..].join(".")));
                    }
                    _ => return Err(Error::Config(format!("'{part}.{idx}' is not a table"))),
                }
            }
            _ => return Err(Error::Config(format!("'{part}' is not a table"))),
        };
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
name = "demo"
output_dir = "out/demo"

[grid]
n = 256
t_span = 30.0

[integrator]
dz = 0.002

[[pulses]]
label = "b1"
kind = "soliton"
gamma = -0.1
width = 3.5
branch = "lower"

[[pulses]]
label = "g"
kind = "gaussian"
gamma = -0.1
alpha = 1.3
energy = 6.66
"#;

    #[test]
    fn parses_and_resolves() {
        let cfg = ExperimentConfig::from_toml_str(SAMPLE, &[]).unwrap();
        assert_eq!(cfg.grid.n, 256);
        assert_eq!(cfg.integrator.checkpoint_stride, 1);
        let pulses = cfg.resolved_pulses().unwrap();
        assert!((pulses[0].amplitude - 1.147).abs() < 0.03);
        assert!((pulses[1].amplitude - (6.66f64 / 1.3).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn round_trips() {
        let cfg = ExperimentConfig::from_toml_str(SAMPLE, &[]).unwrap();
        let text = cfg.to_toml_string().unwrap();
        let again = ExperimentConfig::from_toml_str(&text, &[]).unwrap();
        assert_eq!(cfg, again);
        assert_eq!(cfg.hash().unwrap(), again.hash().unwrap());
    }

    #[test]
    fn overrides_reach_nested_keys() {
        let cfg = ExperimentConfig::from_toml_str(
            SAMPLE,
            &[
                "integrator.dz=0.01".into(),
                "pulses.1.energy=1.3".into(),
                "analysis.n_samples=5".into(),
                "name=other".into(),
            ],
        )
        .unwrap();
        assert_eq!(cfg.integrator.dz, 0.01);
        assert_eq!(cfg.pulses[1].energy, Some(1.3));
        assert_eq!(cfg.analysis.n_samples, 5);
        assert_eq!(cfg.name, "other");
    }

    #[test]
    fn rejects_bad_configs() {
        for bad in [
            vec!["grid.n=100".to_string()],
            vec!["integrator.dz=-1".to_string()],
            vec!["pulses.0.width=1.0".to_string()],
            vec!["pulses.0.chi=0.5".to_string()],
            vec!["bogus=1".to_string()],
            vec!["pulses.7.gamma=1".to_string()],
        ] {
            let err = ExperimentConfig::from_toml_str(SAMPLE, &bad).unwrap_err();
            assert!(matches!(err, Error::Config(_)), "{bad:?}: {err}");
        }
    }
}
