use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use cwarmijo::cli::{exit, parse_document, run_experiment, ExperimentKind, OutputFormat};

/// Gradient descent with Armijo-type learning rates: batch experiments.
#[derive(Parser)]
#[command(version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// One trajectory from `init.point`.
    Run(Common),
    /// Random starts from `init.box`, verdict counts only.
    Sweep(Common),
    /// Remark inequality plus the line-search property suite.
    Check(Common),
    /// Random starts with critical-point classification.
    Basin(Common),
    /// Remark inequality only.
    Remark(Common),
    /// Full-space GD-New dichotomy on g(x) + g(y).
    Claim6(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    JsonLines,
}

fn threads() -> Option<usize> {
    let raw = std::env::var("CWARMIJO_THREADS").ok()?;
    match raw.trim().parse::<usize>() {
        Ok(n) if n > 0 => Some(n),
        _ => {
            eprintln!("warning: ignoring CWARMIJO_THREADS={raw:?}");
            None
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, args) = match cli.command {
        Command::Run(a) => (ExperimentKind::Single, a),
        Command::Sweep(a) => (ExperimentKind::Sweep, a),
        Command::Check(a) => (ExperimentKind::Invariants, a),
        Command::Basin(a) => (ExperimentKind::Basin, a),
        Command::Remark(a) => (ExperimentKind::RemarkCheck, a),
        Command::Claim6(a) => (ExperimentKind::Claim6, a),
    };

    let text = match std::fs::read_to_string(&args.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {}: {e}", args.config.display());
            return ExitCode::from(exit::IO as u8);
        }
    };
    let mut cfg = match parse_document(&text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {}: {e}", args.config.display());
            return ExitCode::from(exit::CONFIG as u8);
        }
    };
    cfg.kind = kind;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(out) = args.out {
        cfg.output_dir = out;
    }
    if let Some(f) = args.format {
        cfg.format = match f {
            Format::Csv => OutputFormat::Csv,
            Format::JsonLines => OutputFormat::JsonLines,
        };
    }

    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads() {
        pool = pool.num_threads(n);
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start worker pool: {e}");
            return ExitCode::from(exit::RUN as u8);
        }
    };

    match pool.install(|| run_experiment(&cfg)) {
        Ok(outcome) => {
            println!("{}", outcome.manifest.summary_path.display());
            if outcome.violations > 0 {
                eprintln!(
                    "{} invariant violation(s), see the summary",
                    outcome.violations
                );
            }
            ExitCode::from(outcome.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
