use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use selgen_cli::{execute, parse_config, CliError, Command, EXIT_INVALID, EXIT_PASS, EXIT_TOLERANCE};

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Sub {
    SimulateFront,
    SimulateWf,
    EstimateCn,
    MergerStats,
    VerifyRates,
    VerifyMoments,
    FrontSpeed,
    ReferenceCoalescent,
}

impl From<Sub> for Command {
    fn from(s: Sub) -> Command {
        match s {
            Sub::SimulateFront => Command::SimulateFront,
            Sub::SimulateWf => Command::SimulateWf,
            Sub::EstimateCn => Command::EstimateCn,
            Sub::MergerStats => Command::MergerStats,
            Sub::VerifyRates => Command::VerifyRates,
            Sub::VerifyMoments => Command::VerifyMoments,
            Sub::FrontSpeed => Command::FrontSpeed,
            Sub::ReferenceCoalescent => Command::ReferenceCoalescent,
        }
    }
}

/// Simulate selection-driven genealogies and check them against coalescent
/// references.
#[derive(Debug, Parser)]
#[command(name = "selgen", version)]
struct Args {
    #[arg(value_enum)]
    subcommand: Sub,
    /// TOML configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Master seed; overrides `seed` in the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; overrides `out` in the configuration.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long)]
    threads: Option<usize>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let command = Command::from(args.subcommand);
    let text = match fs::read_to_string(&args.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("cannot read {}: {e}", args.config.display());
            return ExitCode::from(EXIT_INVALID);
        }
    };
    let cfg = match parse_config(&text, command, args.seed) {
        Ok(c) => c,
        Err(errs) => {
            eprintln!("{}", CliError::Config(errs));
            return ExitCode::from(EXIT_INVALID);
        }
    };
    if let Some(k) = args.threads {
        if k == 0 {
            eprintln!("--threads must be positive");
            return ExitCode::from(EXIT_INVALID);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(k).build_global() {
            eprintln!("cannot configure thread pool: {e}");
            return ExitCode::from(EXIT_INVALID);
        }
    }
    let out = args
        .out
        .or_else(|| cfg.out.clone())
        .unwrap_or_else(|| PathBuf::from("selgen-out"));
    match execute(&cfg, &out, args.threads) {
        Ok(true) => {
            println!("{command}: pass ({})", out.display());
            ExitCode::from(EXIT_PASS)
        }
        Ok(false) => {
            println!("{command}: tolerance check failed ({})", out.display());
            ExitCode::from(EXIT_TOLERANCE)
        }
        Err(e) => {
            eprintln!("{command}: {e}");
            ExitCode::from(EXIT_INVALID)
        }
    }
}
