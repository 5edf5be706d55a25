use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use btgf::pipeline::{
    cmd_ablate, cmd_evaluate, cmd_generate, cmd_run, cmd_verify_bounds, format_metrics, with_workers, RunConfig,
    DEFAULT_ABLATION_SEEDS, DEFAULT_TRIALS,
};

/// Multi-relational graph clustering with a learned graph filter.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    /// Worker threads (defaults to $BTGF_THREADS, then all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train on the configured dataset and write all artifacts.
    Run {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Sweep filter order k and gamma, keeping the best point.
        #[arg(long)]
        sweep: bool,
    },
    /// Compare filter kinds and loss variants.
    Ablate {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Number of consecutive seeds to average over.
        #[arg(long, default_value_t = DEFAULT_ABLATION_SEEDS)]
        repeats: usize,
    },
    /// Randomized checks of the Barlow Twins lower and upper bounds.
    VerifyBounds {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_TRIALS)]
        trials: usize,
    },
    /// Write a synthetic SBM dataset (manifest, edge lists, attributes, labels).
    Generate {
        /// SBM settings as TOML; the default fixture when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score a predicted labeling against ground truth.
    Evaluate {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        truth: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn run_config(config: Option<PathBuf>, seed: Option<u64>, out: Option<PathBuf>) -> btgf::Result<RunConfig> {
    let mut cfg = match config {
        Some(path) => RunConfig::from_path(&path)?,
        None => RunConfig::sbm_fixture(),
    };
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    if let Some(out) = out {
        cfg.out = out;
    }
    Ok(cfg)
}

fn dispatch(command: Command) -> btgf::Result<bool> {
    match command {
        Command::Run { config, seed, out, sweep } => {
            let summary = cmd_run(&run_config(config, seed, out)?, sweep)?;
            println!("{summary}");
        }
        Command::Ablate { config, seed, out, repeats } => {
            println!("{}", cmd_ablate(&run_config(config, seed, out)?, repeats)?);
        }
        Command::VerifyBounds { seed, trials } => {
            let report = cmd_verify_bounds(seed, trials)?;
            println!("{report}");
            return Ok(report.all_passed());
        }
        Command::Generate { config, seed, out } => {
            let manifest = cmd_generate(config.as_deref(), seed, &out)?;
            println!("wrote {}", manifest.display());
        }
        Command::Evaluate { pred, truth, out } => {
            println!("{}", format_metrics(&cmd_evaluate(&pred, &truth, out.as_deref())?));
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match with_workers(cli.workers, || dispatch(cli.command)) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("error: bound violation detected");
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
