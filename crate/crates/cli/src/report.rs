//! `summary.json` layout and the threshold checks it records.

use std::path::Path;

use serde::Serialize;
use serde_json::{Map, Value};

use crate::config::RunConfig;
use crate::RunError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Relation {
    AtMost,
    AtLeast,
}

/// One acceptance threshold. NaN values never pass.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub relation: Relation,
    pub limit: f64,
    pub passed: bool,
}

impl Check {
    pub fn at_most(name: &str, value: f64, limit: f64) -> Self {
        Self { name: name.into(), value, relation: Relation::AtMost, limit, passed: value <= limit }
    }

    pub fn at_least(name: &str, value: f64, limit: f64) -> Self {
        Self { name: name.into(), value, relation: Relation::AtLeast, limit, passed: value >= limit }
    }

    /// A yes/no condition, recorded as 1 or 0 against a limit of 1.
    pub fn holds(name: &str, ok: bool) -> Self {
        Self::at_least(name, if ok { 1.0 } else { 0.0 }, 1.0)
    }
}

/// Scalar results keyed by name. Keys come out sorted, non-finite numbers
/// as `null`.
#[derive(Debug, Clone, Default, Serialize)]
#[serde(transparent)]
pub struct Results(Map<String, Value>);

impl Results {
    pub fn num(&mut self, key: &str, v: f64) {
        self.0.insert(key.into(), serde_json::Number::from_f64(v).map_or(Value::Null, Value::Number));
    }

    pub fn int(&mut self, key: &str, v: usize) {
        self.0.insert(key.into(), Value::from(v));
    }

    pub fn flag(&mut self, key: &str, v: bool) {
        self.0.insert(key.into(), Value::Bool(v));
    }

    pub fn text(&mut self, key: &str, v: &str) {
        self.0.insert(key.into(), Value::String(v.into()));
    }
}

/// What a pipeline produced before anything is written to disk.
#[derive(Debug, Default)]
pub struct Outcome {
    pub results: Results,
    pub checks: Vec<Check>,
    pub artifacts: Vec<String>,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

#[derive(Debug, Serialize)]
struct Provenance<'a> {
    tool: &'static str,
    version: &'static str,
    config_file: String,
    config: &'a RunConfig,
}

#[derive(Debug, Serialize)]
struct ErrorBlock {
    code: String,
    message: String,
}

#[derive(Debug, Serialize)]
struct Summary<'a> {
    provenance: Provenance<'a>,
    scenario: &'static str,
    results: &'a Results,
    checks: &'a [Check],
    passed: bool,
    artifacts: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<ErrorBlock>,
}

/// Writes `summary.json` into `dir`. A failed run still records whatever
/// results it reached, plus the error.
pub fn write_summary(
    dir: &Path,
    config_file: &Path,
    cfg: &RunConfig,
    outcome: &Outcome,
    error: Option<&RunError>,
) -> Result<(), RunError> {
    let mut artifacts = outcome.artifacts.clone();
    artifacts.push("summary.json".into());
    artifacts.sort();
    let summary = Summary {
        provenance: Provenance {
            tool: "qdrive",
            version: env!("CARGO_PKG_VERSION"),
            config_file: config_file.file_name().map_or_else(String::new, |f| f.to_string_lossy().into_owned()),
            config: cfg,
        },
        scenario: cfg.scenario.kind(),
        results: &outcome.results,
        checks: &outcome.checks,
        passed: error.is_none() && outcome.passed(),
        artifacts,
        error: error.map(|e| ErrorBlock { code: e.code().into(), message: e.to_string() }),
    };
    let text = qdrive::output::to_json_string(&summary).map_err(RunError::Numerical)?;
    let path = dir.join("summary.json");
    std::fs::write(&path, text + "\n").map_err(|e| RunError::Io(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nan_never_passes() {
        assert!(!Check::at_most("x", f64::NAN, 1.0).passed);
        assert!(!Check::at_least("x", f64::NAN, 1.0).passed);
        assert!(Check::holds("ok", true).passed);
        assert!(!Check::holds("ok", false).passed);
    }

    #[test]
    fn results_are_sorted_and_null_for_infinities() {
        let mut r = Results::default();
        r.num("zeta", 1.0);
        r.num("alpha", f64::INFINITY);
        let text = qdrive::output::to_json_string(&r).unwrap();
        assert!(text.find("alpha").unwrap() < text.find("zeta").unwrap());
        assert!(text.contains("null"));
    }
}
