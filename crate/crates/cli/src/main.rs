use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use condlab::experiment::{self, ExperimentConfig, ExperimentError, ReportError, RunOptions};

/// Seeded experiments on conditional densities, likelihood formulations and
/// reparameterization.
#[derive(Debug, Parser)]
#[command(name = "condlab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the experiment described by a TOML config.
    Run {
        config: PathBuf,
        /// Override the config's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the config's output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Summarize run manifests as a Markdown document on stdout.
    Report { manifests: Vec<PathBuf> },
}

const EXIT_CHECK_FAILED: u8 = 1;
const EXIT_CONFIG: u8 = 2;

fn run(config: PathBuf, seed: Option<u64>, out: Option<PathBuf>) -> ExitCode {
    let config = match ExperimentConfig::from_path(&config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    match experiment::run(&config, &RunOptions { seed, output_dir: out }) {
        Ok(outcome) => {
            let m = &outcome.manifest;
            for h in &m.headlines {
                println!("{h}");
            }
            for c in m.failed_checks() {
                eprintln!(
                    "FAIL {}: expected {}, computed {} ({})",
                    c.name, c.expected, c.computed, c.claim
                );
            }
            println!(
                "{}: {}/{} checks passed; manifest {}",
                m.experiment,
                m.checks.len() - m.failed_checks().count(),
                m.checks.len(),
                outcome.manifest_path.display()
            );
            if m.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_CHECK_FAILED)
            }
        }
        Err(ExperimentError::Config(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_CHECK_FAILED)
        }
    }
}

fn report(manifests: Vec<PathBuf>) -> ExitCode {
    match experiment::report(&manifests) {
        Ok(r) => {
            for w in &r.warnings {
                eprintln!("warning: {w}");
            }
            print!("{}", r.markdown);
            if r.all_passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_CHECK_FAILED)
            }
        }
        Err(e @ (ReportError::Missing(_) | ReportError::Corrupt { .. })) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_CONFIG)
        }
    }
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run { config, seed, out } => run(config, seed, out),
        Command::Report { manifests } => report(manifests),
    }
}
