//! Config-driven experiment runner.
//!
//! One invocation runs one experiment: it writes CSV artifacts and a JSON
//! [`RunManifest`] into the output directory. The manifest records every
//! embedded check; a run passes iff all of them do.

pub mod config;
pub mod manifest;
pub mod report;
mod run;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use thiserror::Error;

use crate::estimators::EstimatorError;
use crate::grid::GridError;
use crate::hierarchy::HierarchyError;
use crate::inversion::InversionError;
use crate::reparam::ReparamError;
use crate::sphere::SphereError;

pub use config::{ConfigError, ExperimentConfig, ExperimentKind, ExperimentParams};
pub use manifest::{Check, Headline, RunManifest};
pub use report::{report, Report, ReportError};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Error)]
pub enum ModuleError {
    #[error(transparent)]
    Sphere(#[from] SphereError),
    #[error(transparent)]
    Inversion(#[from] InversionError),
    #[error(transparent)]
    Reparam(#[from] ReparamError),
    #[error(transparent)]
    Estimator(#[from] EstimatorError),
    #[error(transparent)]
    Hierarchy(#[from] HierarchyError),
    #[error(transparent)]
    Grid(#[from] GridError),
}

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("experiment {experiment} failed: {source}")]
    Module {
        experiment: ExperimentKind,
        #[source]
        source: ModuleError,
    },
    #[error("cannot write {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

/// Command-line overrides applied on top of a config.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub manifest: RunManifest,
    pub manifest_path: PathBuf,
}

/// What an experiment body hands back to the runner.
#[derive(Debug, Default)]
pub(crate) struct Findings {
    pub headlines: Vec<Headline>,
    pub checks: Vec<Check>,
}

/// Writes artifacts into one directory and remembers their names.
pub(crate) struct ArtifactSink {
    dir: PathBuf,
    names: Vec<String>,
}

impl ArtifactSink {
    fn io(path: &Path, source: std::io::Error) -> ExperimentError {
        ExperimentError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    /// Writes a CSV: optional `# ...` comment line, header, then rows.
    pub fn csv<R>(&mut self, name: &str, comment: Option<&str>, header: &[&str], rows: R) -> Result<(), ExperimentError>
    where
        R: IntoIterator<Item = Vec<String>>,
    {
        let path = self.dir.join(name);
        let file = File::create(&path).map_err(|e| Self::io(&path, e))?;
        let mut out = BufWriter::new(file);
        if let Some(c) = comment {
            writeln!(out, "# {c}").map_err(|e| Self::io(&path, e))?;
        }
        let mut w = csv::Writer::from_writer(out);
        let csv_err = |e: csv::Error| Self::io(&path, std::io::Error::other(e));
        w.write_record(header).map_err(csv_err)?;
        for row in rows {
            w.write_record(&row).map_err(csv_err)?;
        }
        w.flush().map_err(|e| Self::io(&path, e))?;
        self.names.push(name.to_string());
        Ok(())
    }
}

/// Shortest round-trip rendering of a float for CSV cells.
pub(crate) fn cell(x: f64) -> String {
    format!("{x:?}")
}

/// Resolves overrides, runs the experiment, and writes the manifest.
pub fn run(config: &ExperimentConfig, options: &RunOptions) -> Result<RunOutcome, ExperimentError> {
    config.validate()?;
    let mut resolved = config.clone();
    resolved.seed = Some(options.seed.unwrap_or(config.effective_seed()));
    resolved.output_dir = Some(
        options
            .output_dir
            .clone()
            .or_else(|| config.output_dir.clone())
            .unwrap_or_else(|| Path::new("out").join(config.experiment.name())),
    );
    let dir = resolved.output_dir.clone().expect("set above");
    std::fs::create_dir_all(&dir).map_err(|e| ArtifactSink::io(&dir, e))?;

    let seed = resolved.effective_seed();
    let mut sink = ArtifactSink {
        dir: dir.clone(),
        names: Vec::new(),
    };
    let started = Instant::now();
    let findings = run::dispatch(&resolved, seed, &mut sink)?;
    let wall_clock_seconds = started.elapsed().as_secs_f64();

    let manifest = RunManifest {
        experiment: resolved.experiment,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        seed,
        wall_clock_seconds,
        config: serde_json::to_value(&resolved).expect("config serializes"),
        passed: findings.checks.iter().all(|c| c.passed),
        headlines: findings.headlines,
        checks: findings.checks,
        artifacts: sink.names,
    };
    let manifest_path = dir.join(MANIFEST_FILE);
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    std::fs::write(&manifest_path, text + "\n").map_err(|e| ArtifactSink::io(&manifest_path, e))?;
    Ok(RunOutcome {
        manifest,
        manifest_path,
    })
}
