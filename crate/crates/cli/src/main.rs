//! `grazing`: simulation, verification and grazing-limit reports.

mod commands;
mod config;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

/// Environment variable holding the worker thread count.
const THREADS_ENV: &str = "GRAZING_THREADS";

#[derive(Debug, Parser)]
#[command(name = "grazing", version, about = "Concentrated-kernel Boltzmann solver and checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a time evolution described by a TOML config.
    Simulate { config: PathBuf },
    /// Run a randomized inequality suite and write its report.
    Verify {
        /// geometry, kernel, young, rearrange, llogl, convolution or all.
        suite: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 200)]
        trials: usize,
        /// Output directory for the report and manifest.
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Compare Boltzmann and Landau weak forms over a list of eps.
    Grazing { config: PathBuf },
    /// Print the moments of a snapshot file.
    Moments {
        snapshot: PathBuf,
        /// L^p exponents to report (use `inf` for the max norm).
        #[arg(long, value_delimiter = ',', default_value = "1,2,inf")]
        lp: Vec<f64>,
    },
}

fn init_threads() -> Result<(), String> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| format!("{THREADS_ENV} must be a positive integer, got {raw:?}"))?;
    if n == 0 {
        return Err(format!("{THREADS_ENV} must be positive"));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { commands::EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Err(msg) = init_threads() {
        eprintln!("error: {msg}");
        return ExitCode::from(commands::EXIT_CONFIG);
    }
    let code = match cli.command {
        Command::Simulate { config } => commands::simulate(&config),
        Command::Verify { suite, seed, trials, out } => commands::verify(&suite, seed, trials, &out),
        Command::Grazing { config } => commands::grazing(&config),
        Command::Moments { snapshot, lp } => commands::moments(&snapshot, &lp),
    };
    ExitCode::from(code)
}
