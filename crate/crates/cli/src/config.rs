//! Run configuration. Every table rejects unknown keys.

use std::path::{Path, PathBuf};

use qdrive::state::Grid1d;
use serde::{Deserialize, Serialize};

use crate::RunError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Output subdirectory name; defaults to the config file stem.
    #[serde(default)]
    pub name: Option<String>,
    pub scenario: Scenario,
    #[serde(default)]
    pub budget: Option<Budget>,
    #[serde(default)]
    pub numerics: Numerics,
    #[serde(default)]
    pub output: OutputOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Scenario {
    Lz(LzParams),
    Gaussian(GaussianParams),
    CustomDiscrete(CustomDiscrete),
    CustomGrid(CustomGrid),
    Mixed(MixedParams),
    Bohmian(BohmianParams),
}

impl Scenario {
    pub fn kind(&self) -> &'static str {
        match self {
            Scenario::Lz(_) => "lz",
            Scenario::Gaussian(_) => "gaussian",
            Scenario::CustomDiscrete(_) => "custom-discrete",
            Scenario::CustomGrid(_) => "custom-grid",
            Scenario::Mixed(_) => "mixed",
            Scenario::Bohmian(_) => "bohmian",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LzParams {
    pub epsilon: f64,
    pub gamma0: f64,
    /// Also run a linear sweep of this fraction of the adiabatic time, with
    /// and without counterdiabatic driving.
    #[serde(default)]
    pub sweep_fraction: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianParams {
    pub m: f64,
    pub omega0: f64,
    pub mu: f64,
    #[serde(default = "one")]
    pub hbar: f64,
    pub s_f: f64,
    #[serde(default)]
    pub grid: Option<Grid1d>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Latitude {
    pub theta: f64,
    #[serde(default = "one")]
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomFamily {
    pub dim: usize,
    pub seed: u64,
}

/// An n-level path: a CSV file or one built-in family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomDiscrete {
    #[serde(default)]
    pub csv: Option<PathBuf>,
    #[serde(default)]
    pub latitude: Option<Latitude>,
    #[serde(default)]
    pub random: Option<RandomFamily>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Translation {
    pub sigma: f64,
    pub distance: f64,
}

/// A grid-wavefunction path: a CSV file or a rigid translation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomGrid {
    pub grid: Grid1d,
    #[serde(default)]
    pub csv: Option<PathBuf>,
    #[serde(default)]
    pub translation: Option<Translation>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RotatingQubit {
    pub kappa: f64,
}

/// A latitude state at unit rate and its orthogonal partner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatitudePair {
    pub theta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixedParams {
    pub weights: Vec<f64>,
    #[serde(default)]
    pub rotating_qubit: Option<RotatingQubit>,
    #[serde(default)]
    pub latitude_pair: Option<LatitudePair>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BohmianParams {
    pub m: f64,
    pub omega: f64,
    #[serde(default = "one")]
    pub hbar: f64,
    /// Packet speed; defaults to `√(ħω/m)`.
    #[serde(default)]
    pub mu: Option<f64>,
    pub z_min: f64,
    pub z_max: f64,
    pub n_points: usize,
    pub t_end: f64,
    pub n_times: usize,
    #[serde(default)]
    pub threshold: Option<f64>,
    /// Verdict the run is expected to reach; a mismatch is a threshold breach.
    #[serde(default)]
    pub expect_local: Option<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Budget {
    pub omega_max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Numerics {
    #[serde(default = "default_dt")]
    pub dt: f64,
    /// Gauge-fixing lattice size.
    #[serde(default = "default_samples")]
    pub n_samples: usize,
    /// Simpson intervals for time integrals.
    #[serde(default = "default_quad")]
    pub quad_steps: usize,
    #[serde(default = "default_stride")]
    pub checkpoint_every: usize,
}

impl Default for Numerics {
    fn default() -> Self {
        Self {
            dt: default_dt(),
            n_samples: default_samples(),
            quad_steps: default_quad(),
            checkpoint_every: default_stride(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Report {
    Propagation,
    Reparam,
    Field,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputOptions {
    /// Output directory, relative to the config file.
    #[serde(default)]
    pub dir: Option<PathBuf>,
    /// CSV series to write; all applicable ones when absent.
    #[serde(default)]
    pub reports: Option<Vec<Report>>,
}

impl OutputOptions {
    pub fn wants(&self, r: Report) -> bool {
        self.reports.as_ref().is_none_or(|v| v.contains(&r))
    }
}

fn one() -> f64 {
    1.0
}
fn default_dt() -> f64 {
    1e-3
}
fn default_samples() -> usize {
    2048
}
fn default_quad() -> usize {
    1024
}
fn default_stride() -> usize {
    10
}

fn positive(name: &str, v: f64) -> Result<(), RunError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(RunError::Config(format!("{name} must be positive, got {v}")))
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, RunError> {
        toml::from_str(text).map_err(|e| RunError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, RunError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| RunError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            RunError::Config(msg) => RunError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn omega_max(&self) -> Result<f64, RunError> {
        self.budget
            .map(|b| b.omega_max)
            .ok_or_else(|| RunError::Config(format!("scenario {} needs [budget] omega_max", self.scenario.kind())))
    }

    pub fn validate(&self) -> Result<(), RunError> {
        let n = &self.numerics;
        positive("numerics.dt", n.dt)?;
        for (name, v) in [
            ("numerics.n_samples", n.n_samples),
            ("numerics.quad_steps", n.quad_steps),
            ("numerics.checkpoint_every", n.checkpoint_every),
        ] {
            if v == 0 {
                return Err(RunError::Config(format!("{name} must be positive")));
            }
        }
        if n.n_samples < 3 {
            return Err(RunError::Config("numerics.n_samples must be at least 3".into()));
        }
        if let Some(b) = self.budget {
            positive("budget.omega_max", b.omega_max)?;
        }
        match &self.scenario {
            Scenario::Bohmian(_) => {}
            _ => {
                self.omega_max()?;
            }
        }
        let exactly_one = |what: &str, n: usize| {
            if n == 1 {
                Ok(())
            } else {
                Err(RunError::Config(format!("{what}: give exactly one source, found {n}")))
            }
        };
        match &self.scenario {
            Scenario::CustomDiscrete(c) => exactly_one(
                "custom-discrete (csv, latitude, random)",
                [c.csv.is_some(), c.latitude.is_some(), c.random.is_some()].iter().filter(|&&b| b).count(),
            )?,
            Scenario::CustomGrid(c) => exactly_one(
                "custom-grid (csv, translation)",
                [c.csv.is_some(), c.translation.is_some()].iter().filter(|&&b| b).count(),
            )?,
            Scenario::Mixed(m) => exactly_one(
                "mixed (rotating_qubit, latitude_pair)",
                [m.rotating_qubit.is_some(), m.latitude_pair.is_some()].iter().filter(|&&b| b).count(),
            )?,
            Scenario::Bohmian(b) => {
                positive("scenario.m", b.m)?;
                positive("scenario.omega", b.omega)?;
                positive("scenario.hbar", b.hbar)?;
                positive("scenario.t_end", b.t_end)?;
                if let Some(t) = b.threshold {
                    positive("scenario.threshold", t)?;
                }
                if b.n_times < 3 || b.n_points < 3 {
                    return Err(RunError::Config("bohmian needs n_times >= 3 and n_points >= 3".into()));
                }
            }
            Scenario::Lz(p) => {
                if let Some(f) = p.sweep_fraction {
                    positive("scenario.sweep_fraction", f)?;
                }
            }
            Scenario::Gaussian(_) => {}
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_lz_config_parses_with_defaults() {
        let cfg = RunConfig::parse(
            "[scenario]\nkind = \"lz\"\nepsilon = 1\ngamma0 = 10\n[budget]\nomega_max = 1.0\n",
        )
        .unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.numerics, Numerics::default());
        assert!(matches!(cfg.scenario, Scenario::Lz(LzParams { gamma0, .. }) if gamma0 == 10.0));
    }

    #[test]
    fn unknown_keys_are_rejected_with_location() {
        let err = RunConfig::parse("[scenario]\nkind = \"lz\"\nepsilon = 1\ngamma0 = 10\ngamma = 3\n").unwrap_err();
        assert!(err.to_string().contains("gamma"), "{err}");
        let err = RunConfig::parse(
            "[scenario]\nkind = \"lz\"\nepsilon = 1\ngamma0 = 10\n[numerics]\nstep = 0.1\n",
        )
        .unwrap_err();
        assert!(err.to_string().contains("line"), "{err}");
        assert!(RunConfig::parse("[scenario]\nkind = \"nope\"\n").is_err());
    }

    #[test]
    fn validation_catches_bad_knobs() {
        let mut cfg = RunConfig::parse(
            "[scenario]\nkind = \"lz\"\nepsilon = 1\ngamma0 = 10\n[budget]\nomega_max = 1.0\n",
        )
        .unwrap();
        cfg.numerics.dt = -1.0;
        assert!(cfg.validate().is_err());
        cfg.numerics.dt = 0.1;
        cfg.budget = None;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn custom_sources_are_exclusive() {
        let cfg = RunConfig::parse(
            "[scenario]\nkind = \"custom-discrete\"\ncsv = \"a.csv\"\n[scenario.random]\ndim = 3\nseed = 1\n[budget]\nomega_max = 1\n",
        )
        .unwrap();
        assert!(cfg.validate().is_err());
    }
}
