//! Experiment orchestration: configuration, training, evaluation, sweeps
//! and the files they produce.
//!
//! Every output except `metadata.json` is a pure function of the resolved
//! config, so reruns with the same seed are byte-identical.

mod config;
mod evaluate;
mod train;

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

pub use config::{apply_override, AgentChoice, Environment, ExperimentConfig, Scale};
pub use evaluate::{
    ci95_halfwidth, evaluate, quantile, sweep_snr, BaselineSummary, EvalRecord, EvalSummary,
    Evaluation, Percentiles, Policy, SweepRow, CDF_POINTS,
};
pub use train::{train, train_with_progress, TrainLogEntry, TrainOutcome};

use crate::agents::Agent;
use crate::error::{Error, Result};

/// Random stream ids; all streams share the config seed.
pub mod streams {
    pub const INIT: u64 = 0;
    pub const TRAIN_CHANNEL: u64 = 1;
    pub const TRAIN_EXPLORE: u64 = 2;
    pub const TRAIN_NOISE: u64 = 3;
    pub const EVAL_CHANNEL: u64 = 10;
    /// Per-state noise streams start here, offset by the state index.
    pub const EVAL_NOISE_BASE: u64 = 1 << 32;
}

pub const CHECKPOINT_DIR: &str = "checkpoint";
pub const TRAIN_LOG_FILE: &str = "train_log.csv";
pub const CONFIG_FILE: &str = "config.json";
pub const EVAL_FILE: &str = "eval.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const SWEEP_FILE: &str = "sweep.csv";
pub const METADATA_FILE: &str = "metadata.json";

pub fn write_csv<T: Serialize>(path: impl AsRef<Path>, rows: &[T]) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    for row in rows {
        w.serialize(row).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    if e.is_io_error() {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            other => Error::format(path, format!("{other:?}")),
        }
    } else {
        Error::format(path, e)
    }
}

pub fn write_json<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let path = path.as_ref();
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::format(path, e))?;
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

#[derive(Serialize)]
struct Metadata<'a> {
    command: &'a str,
    created_unix_seconds: u64,
    seed: u64,
    environment: Environment,
    snr_db: f64,
    crate_version: &'static str,
}

/// The one non-deterministic file of a run.
fn write_metadata(dir: &Path, command: &str, cfg: &ExperimentConfig) -> Result<()> {
    let created = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    write_json(
        dir.join(METADATA_FILE),
        &Metadata {
            command,
            created_unix_seconds: created,
            seed: cfg.seed,
            environment: cfg.environment,
            snr_db: cfg.link.snr_db,
            crate_version: env!("CARGO_PKG_VERSION"),
        },
    )
}

/// Trains per `cfg` and writes checkpoint, log, resolved config and metadata
/// under `cfg.output_dir`. Returns the checkpoint directory.
pub fn run_training(
    cfg: &ExperimentConfig,
    progress: impl FnMut(&TrainLogEntry),
) -> Result<(TrainOutcome, PathBuf)> {
    let outcome = train_with_progress(cfg, progress)?;
    let dir = &cfg.output_dir;
    ensure_dir(dir)?;
    let checkpoint = dir.join(CHECKPOINT_DIR);
    outcome.agent.save(&checkpoint)?;
    write_csv(dir.join(TRAIN_LOG_FILE), &outcome.log)?;
    write_json(dir.join(CONFIG_FILE), cfg)?;
    write_metadata(dir, "train", cfg)?;
    Ok((outcome, checkpoint))
}

/// Evaluates and writes `eval.csv`, `summary.json` and metadata into `out`.
pub fn run_evaluation(cfg: &ExperimentConfig, policy: &Policy, out: &Path) -> Result<Evaluation> {
    let eval = evaluate(cfg, policy)?;
    ensure_dir(out)?;
    write_csv(out.join(EVAL_FILE), &eval.records)?;
    write_json(out.join(SUMMARY_FILE), &eval.summary)?;
    write_metadata(out, "eval", cfg)?;
    Ok(eval)
}

/// Sweeps and writes `sweep.csv` and metadata into `out`.
pub fn run_sweep(
    cfg: &ExperimentConfig,
    policy: &Policy,
    snrs: &[f64],
    out: &Path,
) -> Result<Vec<SweepRow>> {
    let rows = sweep_snr(cfg, policy, snrs)?;
    ensure_dir(out)?;
    write_csv(out.join(SWEEP_FILE), &rows)?;
    write_metadata(out, "sweep", cfg)?;
    Ok(rows)
}

/// Loads a checkpoint directory as an evaluable policy.
pub fn load_policy(checkpoint: impl AsRef<Path>) -> Result<Policy> {
    Ok(Policy::Agent(Agent::load(checkpoint)?))
}
