//! `precoding` command-line driver.
//!
//! Exit status: 0 on success, 1 for usage and configuration errors, 2 for
//! I/O failures on checkpoints, codebooks and outputs.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use precoding_core::codebook;
use precoding_core::harness::{self, AgentChoice, ExperimentConfig, Policy};
use precoding_core::Error;

#[derive(Parser)]
#[command(name = "precoding", version, about = "MIMO-OFDM precoder learning lab")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a Grassmannian codebook and write it as JSON.
    GenCodebook {
        #[arg(long)]
        ntx: usize,
        #[arg(long)]
        size: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = codebook::DEFAULT_ITERATIONS)]
        iterations: usize,
    },
    /// Train the configured agent; writes into the config's output_dir.
    Train {
        #[arg(long)]
        config: PathBuf,
        /// `key=value` (dotted keys reach nested fields); repeatable.
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        /// Suppress progress lines on stderr.
        #[arg(long)]
        quiet: bool,
    },
    /// Evaluate a trained checkpoint against the baselines.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        config: PathBuf,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// BER-versus-SNR table for a checkpoint and the baselines.
    Sweep {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated SNRs in dB, e.g. `0,4,8,12`.
        #[arg(long, allow_hyphen_values = true)]
        snrs: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Evaluate an analytic or codebook baseline.
    Baseline {
        #[arg(long, value_enum)]
        which: Which,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Which {
    Codebook,
    Svd,
    Evd,
}

enum Failure {
    Config(String),
    Io(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Io { .. } | Error::Format { .. } => Failure::Io(e.to_string()),
            other => Failure::Config(other.to_string()),
        }
    }
}

/// Any failure to obtain a usable config counts as a configuration error.
fn load_config(path: &Path, overrides: &[String]) -> Result<ExperimentConfig, Failure> {
    ExperimentConfig::load(path, overrides).map_err(|e| Failure::Config(e.to_string()))
}

fn parse_snrs(text: &str) -> Result<Vec<f64>, Failure> {
    let snrs = text
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<f64>()
                .map_err(|e| Failure::Config(format!("bad SNR {s:?}: {e}")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    if snrs.is_empty() {
        return Err(Failure::Config("--snrs is empty".into()));
    }
    Ok(snrs)
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::GenCodebook {
            ntx,
            size,
            seed,
            out,
            iterations,
        } => {
            let cb = codebook::generate_grassmannian(ntx, size, seed, iterations)?;
            codebook::save(&cb, &out)?;
            eprintln!(
                "wrote {} words (min chordal distance {:.6}) to {}",
                cb.len(),
                cb.min_chordal_distance(),
                out.display()
            );
        }
        Command::Train {
            config,
            overrides,
            quiet,
        } => {
            let cfg = load_config(&config, &overrides)?;
            let (_, checkpoint) = harness::run_training(&cfg, |e| {
                if !quiet {
                    eprintln!(
                        "step {:>9}  episode {:>5}  explore {:.5}  reward {:.5}  loss {:.3e}",
                        e.step, e.episode, e.exploration, e.mean_reward, e.mean_loss
                    );
                }
            })?;
            eprintln!("checkpoint written to {}", checkpoint.display());
        }
        Command::Eval {
            checkpoint,
            config,
            out,
            overrides,
        } => {
            let cfg = load_config(&config, &overrides)?;
            let policy = harness::load_policy(&checkpoint)?;
            let eval = harness::run_evaluation(&cfg, &policy, &out)?;
            print_summary(&eval.summary);
        }
        Command::Sweep {
            checkpoint,
            config,
            snrs,
            out,
            overrides,
        } => {
            let snrs = parse_snrs(&snrs)?;
            let cfg = load_config(&config, &overrides)?;
            let policy = harness::load_policy(&checkpoint)?;
            for row in harness::run_sweep(&cfg, &policy, &snrs, &out)? {
                println!(
                    "{:>6.1} dB  {:<9} BER {:.4e} +/- {:.1e}",
                    row.snr_db, row.policy, row.mean_ber, row.ci95_halfwidth
                );
            }
        }
        Command::Baseline {
            which,
            config,
            out,
            overrides,
        } => {
            let mut cfg = load_config(&config, &overrides)?;
            let policy = match which {
                Which::Codebook => {
                    cfg.agent = AgentChoice::BaselineCodebook;
                    Policy::Codebook(cfg.resolve_codebook()?)
                }
                Which::Svd | Which::Evd => {
                    cfg.agent = AgentChoice::BaselineSvdEvd;
                    Policy::Analytic
                }
            };
            let eval = harness::run_evaluation(&cfg, &policy, &out)?;
            print_summary(&eval.summary);
        }
    }
    Ok(())
}

fn print_summary(s: &harness::EvalSummary) {
    println!(
        "{}: {} states at {} dB, mean reward {:.5}, mean BER {:.4e}, gain ratio {:.4}",
        s.policy, s.states, s.snr_db, s.mean_reward, s.mean_ber, s.mean_gain_ratio
    );
    for b in &s.baselines {
        println!(
            "  {:<9} mean reward {:.5}, mean BER {:.4e}",
            b.name, b.mean_reward, b.mean_ber
        );
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Io(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
