use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::ExperimentKind;

/// One embedded invariant check and its outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Check {
    pub name: String,
    /// What the check demonstrates, in one line.
    pub claim: String,
    pub expected: String,
    pub computed: String,
    pub tolerance: String,
    pub passed: bool,
}

impl Check {
    /// |computed − expected| ≤ tol.
    pub fn within(name: &str, claim: &str, expected: f64, computed: f64, tol: f64) -> Self {
        Self {
            name: name.into(),
            claim: claim.into(),
            expected: fmt_num(expected),
            computed: fmt_num(computed),
            tolerance: fmt_num(tol),
            passed: (computed - expected).abs() <= tol,
        }
    }

    /// |computed / expected − 1| ≤ rtol.
    pub fn relative(name: &str, claim: &str, expected: f64, computed: f64, rtol: f64) -> Self {
        Self {
            name: name.into(),
            claim: claim.into(),
            expected: fmt_num(expected),
            computed: fmt_num(computed),
            tolerance: format!("rel {}", fmt_num(rtol)),
            passed: (computed / expected - 1.0).abs() <= rtol,
        }
    }

    pub fn at_most(name: &str, claim: &str, computed: f64, bound: f64) -> Self {
        Self {
            name: name.into(),
            claim: claim.into(),
            expected: format!("<= {}", fmt_num(bound)),
            computed: fmt_num(computed),
            tolerance: "-".into(),
            passed: computed <= bound,
        }
    }

    pub fn at_least(name: &str, claim: &str, computed: f64, bound: f64) -> Self {
        Self {
            name: name.into(),
            claim: claim.into(),
            expected: format!(">= {}", fmt_num(bound)),
            computed: fmt_num(computed),
            tolerance: "-".into(),
            passed: computed >= bound,
        }
    }

    pub fn greater(name: &str, claim: &str, computed: f64, bound: f64) -> Self {
        Self {
            name: name.into(),
            claim: claim.into(),
            expected: format!("> {}", fmt_num(bound)),
            computed: fmt_num(computed),
            tolerance: "-".into(),
            passed: computed > bound,
        }
    }

    pub fn flag(name: &str, claim: &str, expected: bool, computed: bool) -> Self {
        Self {
            name: name.into(),
            claim: claim.into(),
            expected: expected.to_string(),
            computed: computed.to_string(),
            tolerance: "exact".into(),
            passed: expected == computed,
        }
    }

    /// A check that could not be evaluated.
    pub fn failed(name: &str, claim: &str, expected: &str, reason: &str) -> Self {
        Self {
            name: name.into(),
            claim: claim.into(),
            expected: expected.into(),
            computed: reason.into(),
            tolerance: "-".into(),
            passed: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Headline {
    pub name: String,
    pub value: String,
}

impl Headline {
    pub fn new(name: &str, value: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            value: value.into(),
        }
    }

    pub fn num(name: &str, value: f64) -> Self {
        Self::new(name, fmt_num(value))
    }
}

impl std::fmt::Display for Headline {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} = {}", self.name, self.value)
    }
}

/// Everything needed to re-run an experiment and audit its outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub experiment: ExperimentKind,
    pub tool_version: String,
    pub seed: u64,
    pub wall_clock_seconds: f64,
    /// The resolved config, seed and output directory included.
    pub config: serde_json::Value,
    pub headlines: Vec<Headline>,
    pub checks: Vec<Check>,
    /// Artifact file names, relative to the manifest's directory.
    pub artifacts: Vec<String>,
    pub passed: bool,
}

impl RunManifest {
    pub fn read(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| e.to_string())?;
        serde_json::from_str(&text).map_err(|e| e.to_string())
    }

    pub fn failed_checks(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

/// Compact, stable rendering of a number for manifests and reports.
pub fn fmt_num(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || (1e-4..1e9).contains(&a) || !x.is_finite() {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}
