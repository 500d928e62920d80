//! Command-line front end: runs a λ-sweep for one section, writes a CSV
//! table and log-log plots, and reports whether every asserted identity
//! and bound held.

pub mod config;
pub mod plot;
pub mod sweep;

use std::fs;
use std::path::PathBuf;

use clap::Parser;

use config::{Overrides, Section, SweepConfig};
use sweep::{run_sweep, SweepError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ASSERTION: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "stein-lab", version, about = "Stein factor sweeps for Poisson-type approximations")]
pub struct Cli {
    #[arg(value_enum)]
    pub section: Section,
    /// Flat key = value configuration file.
    #[arg(long)]
    pub config: PathBuf,
    /// Comma-separated λ values, replacing `lambda_grid` from the file.
    #[arg(long, value_name = "CSV")]
    pub lambda_grid: Option<String>,
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub no_plots: bool,
    #[arg(long, value_name = "N")]
    pub seed: Option<u64>,
}

impl Cli {
    fn overrides(&self) -> Overrides {
        Overrides {
            lambda_grid: self.lambda_grid.clone(),
            out: self.out.clone(),
            no_plots: self.no_plots,
            seed: self.seed,
        }
    }
}

/// Runs the sweep and returns the process exit code.
pub fn run(cli: &Cli) -> i32 {
    let cfg = match SweepConfig::load(cli.section, &cli.config, &cli.overrides()) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("stein-lab: invalid config: {e}");
            return EXIT_CONFIG;
        }
    };
    let output = match run_sweep(&cfg) {
        Ok(o) => o,
        Err(SweepError::Config(e)) => {
            eprintln!("stein-lab: invalid config: {e}");
            return EXIT_CONFIG;
        }
        Err(e) => {
            eprintln!("stein-lab: {e}");
            return EXIT_ASSERTION;
        }
    };
    if let Err(e) = fs::create_dir_all(&cfg.out) {
        eprintln!("stein-lab: cannot create {}: {e}", cfg.out.display());
        return EXIT_CONFIG;
    }
    for artifact in std::iter::once(&output.csv).chain(&output.plots) {
        let path = cfg.out.join(&artifact.name);
        if let Err(e) = fs::write(&path, &artifact.contents) {
            eprintln!("stein-lab: cannot write {}: {e}", path.display());
            return EXIT_CONFIG;
        }
        println!("wrote {}", path.display());
    }
    if output.failures.is_empty() {
        println!("{}: all assertions passed over {} grid points", cfg.section.name(), cfg.lambda_grid.len());
        EXIT_OK
    } else {
        for f in &output.failures {
            eprintln!("FAILED: {f}");
        }
        EXIT_ASSERTION
    }
}
