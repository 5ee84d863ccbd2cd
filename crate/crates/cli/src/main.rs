mod check;
mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use falsify_core::{Formulation, HessianKind, KktMethod};

use crate::commands::Failure;
use crate::config::RunConfig;

/// Exit status for malformed configuration or command lines (EX_USAGE).
const EXIT_USAGE: u8 = 64;
/// Exit status for unreadable inputs or unwritable outputs (EX_IOERR).
const EXIT_IO: u8 = 74;

#[derive(Debug, Parser)]
#[command(name = "falsify", version, about = "Search for error trajectories by multiple shooting and SQP")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve one instance and write a JSON report.
    Solve {
        #[command(flatten)]
        common: Common,
        /// JSON-lines record of every iteration.
        #[arg(long, value_name = "PATH")]
        trace: Option<PathBuf>,
        /// Sampled trajectory of the final iterate.
        #[arg(long, value_name = "PATH")]
        dump_trajectory: Option<PathBuf>,
        /// Report destination (stdout when omitted).
        #[arg(long, value_name = "PATH")]
        report: Option<PathBuf>,
    },
    /// Run a benchmark table and write it as CSV.
    Bench {
        #[command(flatten)]
        common: Common,
        /// CSV destination (stdout when omitted).
        #[arg(long, value_name = "PATH")]
        csv: Option<PathBuf>,
    },
    /// Check derivatives, Jacobian rank and the KKT solvers at the initial guess.
    Check {
        #[command(flatten)]
        common: Common,
        /// Place the first segment start at the center of Init.
        #[arg(long)]
        start_at_center: bool,
    },
}

#[derive(Debug, Args)]
struct Common {
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// eq5 .. eq13
    #[arg(long, value_name = "eqK")]
    formulation: Option<Formulation>,
    /// full, blockdiag or banded
    #[arg(long)]
    hessian: Option<HessianKind>,
    /// ppcg or direct
    #[arg(long)]
    kkt: Option<KktMethod>,
    /// Worker threads (defaults to the number of cores).
    #[arg(long, value_name = "K")]
    jobs: Option<usize>,
}

impl Common {
    /// Loads the config file and lets command-line flags override it.
    fn resolve(&self) -> Result<RunConfig, Failure> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path).map_err(Failure::Usage)?,
            None => RunConfig::default(),
        };
        if let Some(f) = &self.formulation {
            cfg.formulation.name = f.to_string();
        }
        if let Some(h) = self.hessian {
            cfg.sqp.hessian = h;
        }
        if let Some(k) = self.kkt {
            cfg.sqp.kkt = k;
        }
        if let Some(jobs) = self.jobs {
            if jobs == 0 {
                return Err(Failure::Usage("--jobs must be at least 1".into()));
            }
            rayon::ThreadPoolBuilder::new()
                .num_threads(jobs)
                .build_global()
                .map_err(|e| Failure::Usage(format!("--jobs: {e}")))?;
        }
        Ok(cfg)
    }
}

fn dispatch(command: Command) -> Result<u8, Failure> {
    match command {
        Command::Solve {
            common,
            trace,
            dump_trajectory,
            report,
        } => {
            let mut cfg = common.resolve()?;
            cfg.output.trace = trace.or(cfg.output.trace);
            cfg.output.trajectory = dump_trajectory.or(cfg.output.trajectory);
            cfg.output.report = report.or(cfg.output.report);
            commands::solve(&cfg)
        }
        Command::Bench { common, csv } => {
            let mut cfg = common.resolve()?;
            cfg.output.csv = csv.or(cfg.output.csv);
            commands::bench(&cfg)
        }
        Command::Check {
            common,
            start_at_center,
        } => commands::check(&common.resolve()?, start_at_center),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("FALSIFY_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    match dispatch(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(Failure::Usage(msg)) => {
            eprintln!("falsify: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Io(msg)) => {
            eprintln!("falsify: {msg}");
            ExitCode::from(EXIT_IO)
        }
    }
}
