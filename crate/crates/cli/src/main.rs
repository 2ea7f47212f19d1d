//! Command-line entry point.

mod commands;
mod svg;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use levy_smooth::{Error, ExperimentConfig, Result};

use commands::Verdict;

#[derive(Debug, Parser)]
#[command(
    name = "levy-smooth",
    version,
    about = "Drift-diffusion runs and smoothing-estimate checks"
)]
struct Cli {
    /// Experiment file (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override the experiment seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (default: the config's `experiment.output`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Comma-separated check names for `verify`.
    #[arg(long, global = true, value_delimiter = ',')]
    checks: Vec<String>,
    /// Also write SVG plots.
    #[arg(long, global = true)]
    svg: bool,
    /// Worker threads.
    #[arg(long, global = true, env = "LEVY_SMOOTH_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Symbol table and lower-bound fit of the configured operator.
    Symbol,
    /// Dyadic block norms of a snapshot (or of the configured initial data).
    Decompose {
        /// Snapshot `.bin` written by `solve`.
        field: Option<PathBuf>,
    },
    /// Run the solver and write its history.
    Solve,
    /// Run verification checks.
    Verify,
    /// Repeat the run along one parameter axis.
    Sweep {
        #[arg(long)]
        axis: Option<String>,
        #[arg(long, value_delimiter = ',')]
        values: Vec<f64>,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::CflViolation { .. }
        | Error::BlowUp { .. }
        | Error::NonConvergence { .. }
        | Error::DivergentIntegral(_) => 3,
        _ => 2,
    }
}

fn load(cli: &Cli) -> Result<Option<ExperimentConfig>> {
    let Some(path) = &cli.config else {
        return Ok(None);
    };
    let cfg = ExperimentConfig::load(path)?;
    Ok(Some(match cli.seed {
        Some(s) => cfg.with_seed(s),
        None => cfg,
    }))
}

fn require(cfg: Option<ExperimentConfig>) -> Result<ExperimentConfig> {
    cfg.ok_or_else(|| Error::Config("this subcommand needs --config PATH".into()))
}

fn out_dir(cli: &Cli, cfg: Option<&ExperimentConfig>) -> PathBuf {
    match (&cli.out, cfg) {
        (Some(o), _) => o.clone(),
        (None, Some(c)) => c.output_dir(),
        (None, None) => Path::new("out").to_path_buf(),
    }
}

fn run(cli: &Cli) -> Result<Verdict> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    }
    let cfg = load(cli)?;
    let out = out_dir(cli, cfg.as_ref());
    match &cli.command {
        Command::Symbol => commands::symbol(&require(cfg)?, &out, cli.svg),
        Command::Decompose { field } => {
            commands::decompose(&require(cfg)?, field.as_deref(), &out, cli.svg)
        }
        Command::Solve => commands::solve_cmd(&require(cfg)?, &out, cli.svg),
        Command::Verify => {
            let checks = commands::selected_checks(&cli.checks, cfg.as_ref());
            commands::verify(cfg.as_ref(), &checks, cli.seed, &out)
        }
        Command::Sweep { axis, values } => {
            commands::sweep(&require(cfg)?, axis.as_deref(), values, &out)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(Verdict::Pass) => ExitCode::SUCCESS,
        Ok(Verdict::Fail) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
