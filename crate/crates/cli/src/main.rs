use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use tdm_cli::{load_config, run, CliError, Mode, Overrides};

/// Environment variable that caps the worker thread count.
const THREADS_ENV: &str = "TDM_THREADS";

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Optimize,
    Evaluate,
    Roc,
    Compare,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Optimize => Mode::Optimize,
            ModeArg::Evaluate => Mode::Evaluate,
            ModeArg::Roc => Mode::Roc,
            ModeArg::Compare => Mode::Compare,
        }
    }
}

/// Optimize and evaluate TDM transmitter schedules for a radar platoon.
///
/// Exit codes: 0 success, 1 output I/O failure, 2 config error,
/// 3 numerical failure, 4 infeasible constraints. Set TDM_THREADS to cap
/// the worker threads.
#[derive(Debug, Parser)]
#[command(name = "tdm", version)]
struct Args {
    /// Experiment config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config's mode.
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    /// Seed for optimizer restarts and Monte Carlo.
    #[arg(long)]
    seed: Option<u64>,
    /// Monte Carlo trials per hypothesis.
    #[arg(long)]
    trials: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    restarts: Option<usize>,
    #[arg(long)]
    epsilon: Option<f64>,
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let threads: usize = value.trim().parse().ok().filter(|&t| t > 0).ok_or_else(|| {
        CliError::Config(tdm_cli::ConfigError {
            path: THREADS_ENV.into(),
            line: None,
            column: None,
            message: format!("must be a positive integer, got {value:?}"),
        })
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Numerical(format!("cannot start thread pool: {e}")))
}

fn execute(args: Args) -> Result<(), CliError> {
    configure_threads()?;
    let (mut config, base) = load_config(&args.config)?;
    Overrides {
        mode: args.mode.map(Into::into),
        seed: args.seed,
        trials: args.trials,
        out: args.out,
        restarts: args.restarts,
        epsilon: args.epsilon,
    }
    .apply(&mut config);
    let report = run(&config, &base)?;
    println!("{}", report.report_path.display());
    Ok(())
}

fn main() -> ExitCode {
    let args = Args::parse();
    match execute(args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("tdm: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
