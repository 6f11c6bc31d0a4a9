//! Frozen-policy evaluation and SNR sweeps.
//!
//! Every policy in a campaign sees the same channel states and, per state,
//! the same bit and noise draws, so reward differences between policies
//! are not diluted by independent Monte-Carlo noise.

use serde::Serialize;

use super::config::{Environment, ExperimentConfig};
use super::streams;
use crate::agents::{codeword, Agent};
use crate::baselines::{covariance, evd_precoder, subband_codebook_subopt};
use crate::channel::{self, ChannelState};
use crate::codebook::Codebook;
use crate::error::{Error, Result};
use crate::link::{mean_data_gain, measure_ber, observe, LinkConfig, Precoder, Reward};
use crate::numerics::{hermitian_evd, SimRng};

/// Number of evenly spaced quantiles in the reward CDF summary.
pub const CDF_POINTS: usize = 101;

/// A decision rule under evaluation.
#[derive(Debug, Clone)]
pub enum Policy {
    Agent(Agent),
    /// Pilot-covariance codebook search.
    Codebook(Codebook),
    /// Principal eigenvector of the pilot covariance (SVD in a flat channel).
    Analytic,
}

impl Policy {
    pub fn name(&self, cfg: &ExperimentConfig) -> &'static str {
        match self {
            Policy::Agent(Agent::Dqn(_)) => "dqn",
            Policy::Agent(Agent::Ddpg(_)) => "ddpg",
            Policy::Codebook(_) => "codebook",
            Policy::Analytic => cfg.analytic_baseline_name(),
        }
    }

    fn choose(&self, state: &ChannelState) -> Result<Precoder> {
        match self {
            Policy::Agent(agent) => agent.greedy_policy(&observe(state)),
            Policy::Codebook(cb) => {
                let (i, _) = subband_codebook_subopt(&state.pilot_channels, cb)?;
                Ok(codeword(cb, i))
            }
            Policy::Analytic => evd_precoder(&covariance(&state.pilot_channels)?),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalRecord {
    pub state_index: usize,
    pub agent_reward: f64,
    pub agent_ber: f64,
    pub codebook_reward: f64,
    pub codebook_ber: f64,
    pub analytic_reward: f64,
    pub analytic_ber: f64,
    /// Mean `|H w|^2` over the data subcarriers for the evaluated policy.
    pub effective_gain_agent: f64,
    pub effective_gain_codebook: f64,
    /// Mean over data subcarriers of the largest eigenvalue of `H^dagger H`.
    pub effective_gain_bound: f64,
    pub gain_ratio: f64,
    pub gain_ratio_codebook: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BaselineSummary {
    pub name: String,
    pub mean_reward: f64,
    pub mean_ber: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Percentiles {
    pub p5: f64,
    pub p25: f64,
    pub p50: f64,
    pub p75: f64,
    pub p95: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalSummary {
    pub policy: String,
    pub environment: Environment,
    pub snr_db: f64,
    pub states: usize,
    pub mean_reward: f64,
    pub mean_ber: f64,
    pub ber_ci95_halfwidth: f64,
    pub reward_percentiles: Percentiles,
    /// Reward quantiles at `q = 0, 0.01, ..., 1`.
    pub reward_cdf: Vec<f64>,
    pub mean_gain_ratio: f64,
    pub mean_gain_ratio_codebook: f64,
    pub baselines: Vec<BaselineSummary>,
}

#[derive(Debug, Clone)]
pub struct Evaluation {
    pub records: Vec<EvalRecord>,
    pub summary: EvalSummary,
}

/// Evaluates `policy` greedily on `cfg.eval_states` fresh channel states.
pub fn evaluate(cfg: &ExperimentConfig, policy: &Policy) -> Result<Evaluation> {
    cfg.validate()?;
    let owned_cb;
    let cb = match policy {
        Policy::Agent(Agent::Dqn(a)) => &a.codebook,
        Policy::Codebook(cb) => cb,
        _ => {
            owned_cb = cfg.resolve_codebook()?;
            &owned_cb
        }
    };
    let codebook_policy = Policy::Codebook(cb.clone());
    let mut channel_rng = SimRng::new(cfg.seed, streams::EVAL_CHANNEL);
    let mut records = Vec::with_capacity(cfg.eval_states);
    for state_index in 0..cfg.eval_states {
        let state = channel::sample(&cfg.channel, &cfg.subband, &mut channel_rng)?;
        let noise = SimRng::new(cfg.seed, streams::EVAL_NOISE_BASE + state_index as u64);
        let run = |p: &Policy| -> Result<(Reward, f64)> {
            let w = p.choose(&state)?;
            let r = measure_ber(&state, &w, &cfg.link, &cfg.subband, &mut noise.clone())?;
            Ok((r, mean_data_gain(&state, &w)))
        };
        let (agent, gain_agent) = run(policy)?;
        let (codebook, gain_codebook) = run(&codebook_policy)?;
        let (analytic, _) = run(&Policy::Analytic)?;
        let bound = gain_bound(&state)?;
        records.push(EvalRecord {
            state_index,
            agent_reward: agent.value,
            agent_ber: agent.ber,
            codebook_reward: codebook.value,
            codebook_ber: codebook.ber,
            analytic_reward: analytic.value,
            analytic_ber: analytic.ber,
            effective_gain_agent: gain_agent,
            effective_gain_codebook: gain_codebook,
            effective_gain_bound: bound,
            gain_ratio: ratio(gain_agent, bound),
            gain_ratio_codebook: ratio(gain_agent, gain_codebook),
        });
    }
    let summary = summarize(cfg, policy.name(cfg), &records);
    Ok(Evaluation { records, summary })
}

fn ratio(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else {
        1.0
    }
}

fn gain_bound(state: &ChannelState) -> Result<f64> {
    let mut sum = 0.0;
    for h in &state.data_channels {
        sum += hermitian_evd(&h.gram())?.values[0];
    }
    Ok(sum / state.data_channels.len() as f64)
}

fn mean(xs: impl ExactSizeIterator<Item = f64>) -> f64 {
    let n = xs.len();
    xs.sum::<f64>() / n as f64
}

/// `1.96` sample standard errors.
pub fn ci95_halfwidth(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return 0.0;
    }
    let m = xs.iter().sum::<f64>() / n as f64;
    let var = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1) as f64;
    1.96 * (var / n as f64).sqrt()
}

/// Linearly interpolated quantile of sorted samples.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

fn summarize(cfg: &ExperimentConfig, policy: &str, records: &[EvalRecord]) -> EvalSummary {
    let mut rewards: Vec<f64> = records.iter().map(|r| r.agent_reward).collect();
    rewards.sort_by(f64::total_cmp);
    let bers: Vec<f64> = records.iter().map(|r| r.agent_ber).collect();
    let cdf = (0..CDF_POINTS)
        .map(|k| quantile(&rewards, k as f64 / (CDF_POINTS - 1) as f64))
        .collect();
    EvalSummary {
        policy: policy.to_string(),
        environment: cfg.environment,
        snr_db: cfg.link.snr_db,
        states: records.len(),
        mean_reward: mean(records.iter().map(|r| r.agent_reward)),
        mean_ber: mean(bers.iter().copied()),
        ber_ci95_halfwidth: ci95_halfwidth(&bers),
        reward_percentiles: Percentiles {
            p5: quantile(&rewards, 0.05),
            p25: quantile(&rewards, 0.25),
            p50: quantile(&rewards, 0.5),
            p75: quantile(&rewards, 0.75),
            p95: quantile(&rewards, 0.95),
        },
        reward_cdf: cdf,
        mean_gain_ratio: mean(records.iter().map(|r| r.gain_ratio)),
        mean_gain_ratio_codebook: mean(records.iter().map(|r| r.gain_ratio_codebook)),
        baselines: vec![
            BaselineSummary {
                name: "codebook".into(),
                mean_reward: mean(records.iter().map(|r| r.codebook_reward)),
                mean_ber: mean(records.iter().map(|r| r.codebook_ber)),
            },
            BaselineSummary {
                name: cfg.analytic_baseline_name().into(),
                mean_reward: mean(records.iter().map(|r| r.analytic_reward)),
                mean_ber: mean(records.iter().map(|r| r.analytic_ber)),
            },
        ],
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub snr_db: f64,
    pub policy: String,
    pub mean_ber: f64,
    pub ci95_halfwidth: f64,
}

type Column = fn(&EvalRecord) -> f64;

/// Mean BER of `policy` and both baselines at each SNR, on the same states.
pub fn sweep_snr(cfg: &ExperimentConfig, policy: &Policy, snrs: &[f64]) -> Result<Vec<SweepRow>> {
    if snrs.is_empty() {
        return Err(Error::Config("SNR list is empty".into()));
    }
    let name = policy.name(cfg);
    let mut rows = Vec::new();
    for &snr_db in snrs {
        let mut at = cfg.clone();
        at.link = LinkConfig {
            snr_db,
            ..cfg.link.clone()
        };
        let eval = evaluate(&at, policy)?;
        let columns: [(&str, Column); 3] = [
            (name, |r| r.agent_ber),
            ("codebook", |r| r.codebook_ber),
            (cfg.analytic_baseline_name(), |r| r.analytic_ber),
        ];
        for (i, (label, get)) in columns.into_iter().enumerate() {
            if i > 0 && label == name {
                continue;
            }
            let bers: Vec<f64> = eval.records.iter().map(get).collect();
            rows.push(SweepRow {
                snr_db,
                policy: label.to_string(),
                mean_ber: mean(bers.iter().copied()),
                ci95_halfwidth: ci95_halfwidth(&bers),
            });
        }
    }
    Ok(rows)
}
