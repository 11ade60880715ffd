//! Config-driven experiment runner for the `selgen` library.

use std::fs;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde_json::json;

pub mod config;
pub mod run;

pub use config::{parse_config, Command, ExperimentConfig};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    Config(Vec<String>),
    #[error(transparent)]
    Model(#[from] selgen::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

/// Exit status: 0 when every tolerance held, 1 when one failed, 2 when the
/// run could not be carried out (bad configuration or a failed operation).
pub const EXIT_PASS: u8 = 0;
pub const EXIT_TOLERANCE: u8 = 1;
pub const EXIT_INVALID: u8 = 2;

/// Runs `cfg` and writes `<command>.json` plus the CSV tables into
/// `out_dir`. Returns whether every tolerance held. Everything but the
/// `metadata` field of the JSON is a function of the configuration alone.
pub fn execute(cfg: &ExperimentConfig, out_dir: &Path, threads: Option<usize>) -> Result<bool, CliError> {
    let outcome = run::run(cfg)?;
    fs::create_dir_all(out_dir)?;
    let mut files = Vec::new();
    for (name, bytes) in &outcome.tables {
        fs::write(out_dir.join(name), bytes)?;
        files.push(name.clone());
    }
    let created = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let summary = json!({
        "command": cfg.command,
        "version": env!("CARGO_PKG_VERSION"),
        "config": cfg,
        "pass": outcome.pass,
        "results": outcome.results,
        "files": files,
        "metadata": {
            "created_unix_seconds": created,
            "threads": threads.unwrap_or_else(rayon::current_num_threads),
        },
    });
    let mut text = serde_json::to_string_pretty(&summary)?;
    text.push('\n');
    fs::write(out_dir.join(format!("{}.json", cfg.command)), text)?;
    Ok(outcome.pass)
}
