//! Markdown summary over one or more run manifests.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use thiserror::Error;

use super::manifest::{Check, RunManifest};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReportError {
    #[error("manifest not found: {0}")]
    Missing(PathBuf),
    #[error("corrupt manifest {path}: {message}")]
    Corrupt { path: PathBuf, message: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub markdown: String,
    pub warnings: Vec<String>,
    pub all_passed: bool,
}

fn escape(s: &str) -> String {
    s.replace('|', "\\|")
}

fn row(c: &Check) -> String {
    let cells = [&c.name, &c.claim, &c.expected, &c.computed, &c.tolerance];
    if c.passed {
        let joined: Vec<String> = cells.iter().map(|s| escape(s)).collect();
        format!("| {} | PASS |", joined.join(" | "))
    } else {
        let joined: Vec<String> = cells.iter().map(|s| format!("**{}**", escape(s))).collect();
        format!("| {} | **FAIL** |", joined.join(" | "))
    }
}

fn section(out: &mut String, path: &Path, m: &RunManifest) {
    let status = if m.passed { "pass" } else { "FAIL" };
    let _ = writeln!(out, "## {} — {status}\n", m.experiment);
    let _ = writeln!(
        out,
        "manifest `{}`, version {}, seed {}, {:.3} s\n",
        path.display(),
        m.tool_version,
        m.seed,
        m.wall_clock_seconds
    );
    for h in &m.headlines {
        let _ = writeln!(out, "- {h}");
    }
    if !m.headlines.is_empty() {
        out.push('\n');
    }
    out.push_str("| check | claim | expected | computed | tolerance | result |\n");
    out.push_str("|---|---|---|---|---|---|\n");
    for c in &m.checks {
        out.push_str(&row(c));
        out.push('\n');
    }
    out.push('\n');
}

/// Reads every manifest and renders one table per experiment. Any missing
/// or unreadable manifest aborts the whole report.
pub fn report(paths: &[PathBuf]) -> Result<Report, ReportError> {
    if paths.is_empty() {
        return Ok(Report {
            markdown: String::new(),
            warnings: vec!["no manifests given; report is empty".into()],
            all_passed: true,
        });
    }
    let mut manifests = Vec::with_capacity(paths.len());
    for path in paths {
        if !path.is_file() {
            return Err(ReportError::Missing(path.clone()));
        }
        let m = RunManifest::read(path).map_err(|message| ReportError::Corrupt {
            path: path.clone(),
            message,
        })?;
        manifests.push((path, m));
    }
    let mut markdown = String::from("# Experiment report\n\n");
    let failed: usize = manifests.iter().map(|(_, m)| m.failed_checks().count()).sum();
    let total: usize = manifests.iter().map(|(_, m)| m.checks.len()).sum();
    let _ = writeln!(markdown, "{} of {total} checks passed.\n", total - failed);
    for (path, m) in &manifests {
        section(&mut markdown, path, m);
    }
    Ok(Report {
        markdown,
        warnings: Vec::new(),
        all_passed: failed == 0,
    })
}
