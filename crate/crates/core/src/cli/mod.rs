//! Batch driver: configs in, deterministic CSV out.

pub mod check;
pub mod config;
pub mod csv;
pub mod run;

use std::path::PathBuf;

use clap::{Parser, ValueEnum};

pub use check::{run_checks, CheckRow};
pub use config::{ExperimentConfig, LawConfig};
pub use csv::{extract_config, CsvDoc};

use crate::parallel::Pool;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Subcommand {
    Simulate,
    Metric,
    ChaosCurve,
    OmegaN,
    Check,
}

impl Subcommand {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Simulate => "simulate",
            Self::Metric => "metric",
            Self::ChaosCurve => "chaos-curve",
            Self::OmegaN => "omega-n",
            Self::Check => "check",
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "propchaos", version, about = "Particle systems, mean-field limits and propagation-of-chaos measurements")]
pub struct Args {
    #[arg(value_enum)]
    pub subcommand: Subcommand,
    /// Experiment config (TOML). Optional for `check`.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Overrides `master_seed` from the config.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads; 0 uses every available core. Output does not depend
    /// on this.
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    /// Output CSV path; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Exit status for an error: 2 for config and argument problems, 3 for
/// numerical failures, 4 for I/O.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config { .. } | Error::InvalidArgument(_) | Error::AssignmentBudget { .. } => 2,
        Error::Io(_) => 4,
        _ => 3,
    }
}

/// Produces the CSV for a resolved config. `check` ignores the config
/// except for its seed and reports pass/fail rows.
pub fn render(sub: Subcommand, cfg: &ExperimentConfig, pool: &Pool) -> Result<(String, bool)> {
    let doc = match sub {
        Subcommand::Simulate => run::simulate(cfg)?,
        Subcommand::Metric => run::metric(cfg)?,
        Subcommand::ChaosCurve => run::chaos_curve(cfg, pool)?,
        Subcommand::OmegaN => run::omega_n(cfg, pool)?,
        Subcommand::Check => {
            let rows = run_checks(cfg.master_seed);
            let passed = rows.iter().all(|r| r.passed);
            let mut doc = CsvDoc::new("check");
            doc.meta("master_seed", cfg.master_seed);
            doc.columns(&["check", "passed", "detail"]);
            for r in rows {
                doc.row(vec![r.name.to_string(), r.passed.to_string(), r.detail]);
            }
            return Ok((doc.render(), passed));
        }
    };
    Ok((doc.render(), true))
}

pub fn load_config(args: &Args) -> Result<ExperimentConfig> {
    let mut cfg = match &args.config {
        Some(p) => ExperimentConfig::load(p)?,
        None if args.subcommand == Subcommand::Check => ExperimentConfig::default(),
        None => return Err(Error::config("--config", "a config file is required for this subcommand")),
    };
    if let Some(s) = args.seed {
        cfg.master_seed = s;
    }
    cfg.resolve()
}

/// Full CLI behaviour; returns the process exit code.
pub fn main_with(args: Args) -> i32 {
    let outcome = (|| -> Result<bool> {
        let cfg = load_config(&args)?;
        let pool = Pool::new(args.workers)?;
        let (text, passed) = render(args.subcommand, &cfg, &pool)?;
        match &args.out {
            Some(p) => std::fs::write(p, text).map_err(|e| Error::Io(format!("{}: {e}", p.display())))?,
            None => print!("{text}"),
        }
        Ok(passed)
    })();
    match outcome {
        Ok(true) => 0,
        Ok(false) => {
            eprintln!("propchaos: {} failed", args.subcommand.as_str());
            1
        }
        Err(e) => {
            eprintln!("propchaos: {e}");
            exit_code(&e)
        }
    }
}
