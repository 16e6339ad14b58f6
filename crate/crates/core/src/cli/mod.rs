//! Command-line front end.
//!
//! ```text
//! crowd-alloc analyze   --config recipe.toml [--out table.csv]
//! crowd-alloc simulate  --config recipe.toml [--seed N] [--jobs N]
//! crowd-alloc calibrate --config recipe.toml [--quiet]
//! ```
//!
//! Every command writes a long-format CSV table (see [`OutputRow`]). Exit
//! codes: 0 on success, 2 for configuration or validation errors, 3 when a
//! required numerical computation does not converge.

mod commands;
mod config;
mod output;

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use commands::{cmd_analyze, cmd_calibrate, cmd_simulate, run_replications, Report};
pub use config::{
    AnalysisSection, Config, ExperimentSection, ModeName, PopulationConfig, PriorConfig,
    SweepSection,
};
pub use output::{format_g, read_rows, write_rows, OutputRow, METRICS};

use crate::error::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "crowd-alloc", version, about = "Crowdsourcing allocation analysis and simulation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Theory tables: densities, calibrated thresholds, walks and bounds.
    Analyze(CommonArgs),
    /// Monte Carlo policy comparison, optionally along a sweep.
    Simulate(CommonArgs),
    /// Thresholds matched to each uniform budget.
    Calibrate(CommonArgs),
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// TOML recipe.
    #[arg(long)]
    config: PathBuf,
    /// Output CSV; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the recipe's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; defaults to the number of cores.
    #[arg(long)]
    jobs: Option<usize>,
    /// Suppress warnings.
    #[arg(long)]
    quiet: bool,
}

/// Exit code for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::NotConverged(_) | Error::NoSignChange(_) | Error::Unattainable { .. } => EXIT_NUMERICAL,
        _ => EXIT_CONFIG,
    }
}

fn error_class(e: &Error) -> &'static str {
    if exit_code(e) == EXIT_NUMERICAL {
        "numerical"
    } else {
        "config"
    }
}

fn report_error(e: &Error) {
    eprintln!("error\t{}\t{}", error_class(e), e);
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let (args, command): (&CommonArgs, fn(&Config) -> crate::Result<Report>) = match &cli.command {
        Command::Analyze(a) => (a, cmd_analyze),
        Command::Simulate(a) => (a, cmd_simulate),
        Command::Calibrate(a) => (a, cmd_calibrate),
    };
    let mut cfg = match Config::load(&args.config) {
        Ok(c) => c,
        Err(e) => {
            report_error(&e);
            return exit_code(&e);
        }
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(jobs) = args.jobs {
        if jobs == 0 {
            report_error(&Error::Config("--jobs must be positive".into()));
            return EXIT_CONFIG;
        }
        pool = pool.num_threads(jobs);
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            report_error(&Error::Config(format!("cannot start worker threads: {e}")));
            return EXIT_CONFIG;
        }
    };
    let report = match pool.install(|| command(&cfg)) {
        Ok(r) => r,
        Err(e) => {
            report_error(&e);
            return exit_code(&e);
        }
    };
    if !args.quiet {
        for w in &report.warnings {
            eprintln!("warning\t{w}");
        }
    }
    let written = match &args.out {
        Some(path) => File::create(path)
            .map_err(|e| Error::Config(format!("cannot create {}: {e}", path.display())))
            .and_then(|f| write_rows(BufWriter::new(f), &report.rows)),
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            write_rows(&mut lock, &report.rows).and_then(|_| {
                lock.flush().map_err(|e| Error::Config(e.to_string()))
            })
        }
    };
    if let Err(e) = written {
        report_error(&e);
        return EXIT_CONFIG;
    }
    match &report.failure {
        Some(e) => {
            report_error(e);
            exit_code(e)
        }
        None => EXIT_OK,
    }
}
