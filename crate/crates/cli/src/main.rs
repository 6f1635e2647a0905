//! `gcf`: experiment runner for the α-Gauss curvature flow.
//!
//! Exit codes: 0 success, 1 configuration or I/O error, 2 step failure
//! (the body left the convex cone), 3 no convergence, 4 candidate
//! violation of the lemma inequality. Verbosity comes from `GCF_LOG`
//! (`off`, `info`, `debug`; default `warn`).

mod commands;
mod config;
mod error;

use std::error::Error as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::{Backend, ExperimentConfig};
use crate::error::{exit, CliError};

#[derive(Debug, Parser)]
#[command(name = "gcf", version, about = "α-Gauss curvature flow experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the normalised flow described by a JSON config.
    Flow { config: PathBuf },
    /// Solve `K^α = h` by Newton from the config's initial body.
    Soliton { config: PathBuf },
    /// Write the `quantity,min,max,mean` report of a snapshot.
    Diagnose {
        snapshot: PathBuf,
        #[arg(long)]
        alpha: f64,
        #[arg(long, value_enum)]
        backend: Backend,
        /// Output CSV (default stdout).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Random search for negative values of the lemma's quadratic form.
    LemmaQ {
        #[arg(long)]
        n: usize,
        /// Comma-separated exponents.
        #[arg(long, value_delimiter = ',', required = true)]
        alpha: Vec<f64>,
        /// Number of samples per exponent; `1e5` is accepted.
        #[arg(long, value_parser = parse_count)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Skip the simplex refinement of the best samples.
        #[arg(long)]
        no_refine: bool,
        /// Violation threshold, relative to the scale of the minimiser.
        #[arg(long, default_value_t = 1e-9)]
        tolerance: f64,
        /// Output CSV (default stdout).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_count(s: &str) -> Result<usize, String> {
    if let Ok(n) = s.parse::<usize>() {
        return Ok(n);
    }
    match s.parse::<f64>() {
        Ok(x) if x >= 0.0 && x.fract() == 0.0 && x <= usize::MAX as f64 => Ok(x as usize),
        _ => Err(format!("`{s}` is not a non-negative integer")),
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Flow { config } => commands::flow(&ExperimentConfig::load(&config)?),
        Command::Soliton { config } => commands::soliton(&ExperimentConfig::load(&config)?),
        Command::Diagnose {
            snapshot,
            alpha,
            backend,
            out,
        } => commands::diagnose(&snapshot, alpha, backend, out.as_deref()),
        Command::LemmaQ {
            n,
            alpha,
            trials,
            seed,
            no_refine,
            tolerance,
            out,
        } => commands::lemma_q(&commands::LemmaArgs {
            n,
            alphas: alpha,
            trials,
            seed,
            refine: !no_refine,
            tolerance,
            out,
        }),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("GCF_LOG", "warn"))
        .format_timestamp(None)
        .init();

    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(exit::CONFIG)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::from(exit::OK),
        Err(e) => {
            let code = e.exit_code();
            eprintln!("error (exit {code}): {e}");
            let mut source = e.source();
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            ExitCode::from(code)
        }
    }
}
