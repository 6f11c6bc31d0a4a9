//! Online training loops.

use serde::Serialize;

use super::config::{AgentChoice, ExperimentConfig};
use super::streams;
use crate::agents::{codeword, epsilon_schedule, Agent, DdpgAgent, DqnAgent, Experience};
use crate::channel;
use crate::error::{Error, Result};
use crate::link::{measure_ber, observe};
use crate::numerics::SimRng;

/// Window averages over the `log_interval` steps ending at `step`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrainLogEntry {
    pub step: usize,
    pub episode: usize,
    /// Epsilon for DQN, sigma_p for DDPG.
    pub exploration: f64,
    pub mean_reward: f64,
    pub mean_loss: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub agent: Agent,
    pub log: Vec<TrainLogEntry>,
}

pub fn train(cfg: &ExperimentConfig) -> Result<TrainOutcome> {
    train_with_progress(cfg, |_| {})
}

/// Runs `episodes x steps_per_episode` online updates; `progress` sees each
/// log entry as it is produced.
pub fn train_with_progress(
    cfg: &ExperimentConfig,
    mut progress: impl FnMut(&TrainLogEntry),
) -> Result<TrainOutcome> {
    cfg.validate()?;
    let mut init_rng = SimRng::new(cfg.seed, streams::INIT);
    let mut agent = match cfg.agent {
        AgentChoice::Dqn => {
            let mut a = DqnAgent::init(
                cfg.state_dim(),
                &cfg.hidden_dims,
                cfg.resolve_codebook()?,
                cfg.double_dqn,
                cfg.gamma,
                cfg.eta,
                &mut init_rng,
            )?;
            a.set_epsilon(epsilon_schedule(0))?;
            Agent::Dqn(a)
        }
        AgentChoice::Ddpg => Agent::Ddpg(DdpgAgent::init(
            cfg.state_dim(),
            cfg.channel.n_tx,
            &cfg.hidden_dims,
            cfg.sigma_p_start,
            cfg.gamma,
            cfg.eta_actor,
            cfg.eta_critic,
            &mut init_rng,
        )?),
        AgentChoice::BaselineCodebook | AgentChoice::BaselineSvdEvd => {
            return Err(Error::Config(format!(
                "{:?} has nothing to train",
                cfg.agent
            )));
        }
    };

    let mut channel_rng = SimRng::new(cfg.seed, streams::TRAIN_CHANNEL);
    let mut explore_rng = SimRng::new(cfg.seed, streams::TRAIN_EXPLORE);
    let mut noise_rng = SimRng::new(cfg.seed, streams::TRAIN_NOISE);
    let total = cfg.total_steps();
    let mut log = Vec::with_capacity(total / cfg.log_interval + 1);
    let (mut reward_sum, mut loss_sum, mut window) = (0.0, 0.0, 0usize);

    let mut state = channel::sample(&cfg.channel, &cfg.subband, &mut channel_rng)?;
    let mut s = observe(&state);
    for episode in 1..=cfg.episodes {
        for t in 0..cfg.steps_per_episode {
            let step = (episode - 1) * cfg.steps_per_episode + t;
            let next_state = channel::sample(&cfg.channel, &cfg.subband, &mut channel_rng)?;
            let s_next = observe(&next_state);
            let (reward, loss, exploration) = match &mut agent {
                Agent::Dqn(a) => {
                    let (index, cache) = a.act_cached(&s, &mut explore_rng)?;
                    let w = codeword(&a.codebook, index);
                    let r = measure_ber(&state, &w, &cfg.link, &cfg.subband, &mut noise_rng)?;
                    let e = Experience {
                        s,
                        a: index,
                        r: r.value,
                        s_next: s_next.clone(),
                    };
                    let loss = a.update_cached(&e, cache)?;
                    (r.value, loss, a.epsilon())
                }
                Agent::Ddpg(a) => {
                    let sigma = sigma_at(cfg, step, total);
                    a.set_sigma_p(sigma)?;
                    let (w, actor_cache) = a.act_cached(&s, &mut explore_rng)?;
                    let r = measure_ber(&state, &w, &cfg.link, &cfg.subband, &mut noise_rng)?;
                    let e = Experience {
                        s,
                        a: w,
                        r: r.value,
                        s_next: s_next.clone(),
                    };
                    let loss = a.critic_update(&e)?;
                    a.actor_update_cached(&e.s, &actor_cache)?;
                    (r.value, loss, sigma)
                }
            };
            reward_sum += reward;
            loss_sum += loss;
            window += 1;
            if (step + 1).is_multiple_of(cfg.log_interval) || step + 1 == total {
                let entry = TrainLogEntry {
                    step: step + 1,
                    episode,
                    exploration,
                    mean_reward: reward_sum / window as f64,
                    mean_loss: loss_sum / window as f64,
                };
                progress(&entry);
                log.push(entry);
                (reward_sum, loss_sum, window) = (0.0, 0.0, 0);
            }
            state = next_state;
            s = s_next;
        }
        if let Agent::Dqn(a) = &mut agent {
            a.set_epsilon(epsilon_schedule(episode))?;
        }
    }
    Ok(TrainOutcome { agent, log })
}

/// Linear decay from `sigma_p_start` at the first step to `sigma_p_end` at
/// the last.
fn sigma_at(cfg: &ExperimentConfig, step: usize, total: usize) -> f64 {
    if total <= 1 {
        return cfg.sigma_p_start;
    }
    let frac = step as f64 / (total - 1) as f64;
    cfg.sigma_p_start + (cfg.sigma_p_end - cfg.sigma_p_start) * frac
}
