//! DQN and DDPG agents trained online, one experience per update.
//!
//! Both agents treat their targets as constants and take a single plain SGD
//! step per experience. With `gamma = 0` the targets reduce to the reward and
//! the next-state networks are never evaluated.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::codebook::{self, Codebook};
use crate::error::{Error, Result};
use crate::link::{Observation, Precoder, PrecoderOrigin};
use crate::neuralnet::{Direction, ForwardCache, OutputActivation};
use crate::numerics::SimRng;
use crate::MlpParams;

/// Default DDQN target synchronization period, in updates.
pub const DEFAULT_SYNC_INTERVAL: u64 = 1000;
/// Resampling attempts when a perturbed action collapses to zero.
pub const MAX_NOISE_ATTEMPTS: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct Experience<A> {
    pub s: Observation,
    pub a: A,
    pub r: f64,
    pub s_next: Observation,
}

/// Exploration rate after `episodes_completed` full episodes.
pub fn epsilon_schedule(episodes_completed: usize) -> f64 {
    if episodes_completed == 0 {
        1.0
    } else {
        1.0 / (5.0 * episodes_completed as f64)
    }
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

fn check_rate(name: &str, value: f64, lo: f64, hi: f64) -> Result<()> {
    if !(lo..=hi).contains(&value) {
        return Err(Error::InvalidArgument(format!(
            "{name} = {value} outside [{lo}, {hi}]"
        )));
    }
    Ok(())
}

fn check_lr(name: &str, value: f64) -> Result<()> {
    if !(value > 0.0) || !value.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "{name} must be > 0, got {value}"
        )));
    }
    Ok(())
}

fn check_input(net: &MlpParams, len: usize, what: &str) -> Result<()> {
    if net.input_dim() != len {
        return Err(Error::Dimension(format!(
            "{what} expects {} inputs, got {len}",
            net.input_dim()
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub enum DqnVariant {
    Single,
    Double { target_net: MlpParams },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DqnAgent {
    pub q_net: MlpParams,
    pub variant: DqnVariant,
    pub codebook: Codebook,
    epsilon: f64,
    gamma: f64,
    eta: f64,
    sync_interval: u64,
    updates: u64,
}

impl DqnAgent {
    pub fn new(
        q_net: MlpParams,
        codebook: Codebook,
        double: bool,
        epsilon: f64,
        gamma: f64,
        eta: f64,
    ) -> Result<Self> {
        if q_net.output_dim() != codebook.len() {
            return Err(Error::Dimension(format!(
                "Q network has {} outputs, codebook {} words",
                q_net.output_dim(),
                codebook.len()
            )));
        }
        if q_net.output_activation() != OutputActivation::Linear {
            return Err(Error::InvalidArgument(
                "Q network output must be linear".into(),
            ));
        }
        check_rate("epsilon", epsilon, 0.0, 1.0)?;
        check_rate("gamma", gamma, 0.0, 1.0)?;
        check_lr("eta", eta)?;
        let variant = if double {
            DqnVariant::Double {
                target_net: q_net.clone(),
            }
        } else {
            DqnVariant::Single
        };
        Ok(Self {
            q_net,
            variant,
            codebook,
            epsilon,
            gamma,
            eta,
            sync_interval: DEFAULT_SYNC_INTERVAL,
            updates: 0,
        })
    }

    /// Xavier-initialized agent with hidden layers `hidden`.
    pub fn init(
        state_dim: usize,
        hidden: &[usize],
        codebook: Codebook,
        double: bool,
        gamma: f64,
        eta: f64,
        rng: &mut SimRng,
    ) -> Result<Self> {
        let dims = [&[state_dim], hidden, &[codebook.len()]].concat();
        let q_net = MlpParams::init_xavier(&dims, OutputActivation::Linear, rng)?;
        Self::new(q_net, codebook, double, 1.0, gamma, eta)
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn set_epsilon(&mut self, epsilon: f64) -> Result<()> {
        check_rate("epsilon", epsilon, 0.0, 1.0)?;
        self.epsilon = epsilon;
        Ok(())
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn updates(&self) -> u64 {
        self.updates
    }

    pub fn sync_interval(&self) -> u64 {
        self.sync_interval
    }

    pub fn set_sync_interval(&mut self, interval: u64) -> Result<()> {
        if interval == 0 {
            return Err(Error::InvalidArgument("sync interval must be >= 1".into()));
        }
        self.sync_interval = interval;
        Ok(())
    }

    pub fn n_actions(&self) -> usize {
        self.codebook.len()
    }

    pub fn q_values(&self, s: &Observation) -> Result<Vec<f64>> {
        check_input(&self.q_net, s.len(), "Q network")?;
        self.q_net.predict(&s.values)
    }

    /// Epsilon-greedy action index.
    pub fn act(&self, s: &Observation, rng: &mut SimRng) -> Result<usize> {
        check_input(&self.q_net, s.len(), "Q network")?;
        let explore = rng.uniform() < self.epsilon;
        if explore {
            Ok(rng.index(self.n_actions()))
        } else {
            Ok(argmax(&self.q_values(s)?))
        }
    }

    /// Epsilon-greedy action plus, on the greedy branch, the forward cache
    /// of `s` for reuse by [`DqnAgent::update_cached`].
    pub(crate) fn act_cached(
        &self,
        s: &Observation,
        rng: &mut SimRng,
    ) -> Result<(usize, Option<ForwardCache<f64>>)> {
        check_input(&self.q_net, s.len(), "Q network")?;
        if rng.uniform() < self.epsilon {
            Ok((rng.index(self.n_actions()), None))
        } else {
            let cache = self.q_net.forward(&s.values)?;
            Ok((argmax(cache.output()), Some(cache)))
        }
    }

    pub fn greedy_index(&self, s: &Observation) -> Result<usize> {
        Ok(argmax(&self.q_values(s)?))
    }

    pub fn greedy_policy(&self, s: &Observation) -> Result<Precoder> {
        let i = self.greedy_index(s)?;
        Ok(self.codebook.word(i).clone())
    }

    pub fn target(&self, r: f64, s_next: &Observation) -> Result<f64> {
        if self.gamma == 0.0 {
            return Ok(r);
        }
        let q1 = self.q_values(s_next)?;
        let bootstrap = match &self.variant {
            DqnVariant::Single => q1[argmax(&q1)],
            DqnVariant::Double { target_net } => target_net.predict(&s_next.values)?[argmax(&q1)],
        };
        Ok(r + self.gamma * bootstrap)
    }

    /// One descent step on `1/2 (Y - Q(s, a))^2`; returns the pre-update loss.
    pub fn update(&mut self, e: &Experience<usize>) -> Result<f64> {
        self.update_cached(e, None)
    }

    pub(crate) fn update_cached(
        &mut self,
        e: &Experience<usize>,
        cache: Option<ForwardCache<f64>>,
    ) -> Result<f64> {
        if e.a >= self.n_actions() {
            return Err(Error::InvalidArgument(format!(
                "action {} out of range",
                e.a
            )));
        }
        if !e.r.is_finite() {
            return Err(Error::InvalidArgument(format!("non-finite reward {}", e.r)));
        }
        let y = self.target(e.r, &e.s_next)?;
        let cache = match cache {
            Some(c) => c,
            None => {
                check_input(&self.q_net, e.s.len(), "Q network")?;
                self.q_net.forward(&e.s.values)?
            }
        };
        let residual = cache.output()[e.a] - y;
        let mut upstream = vec![0.0; self.n_actions()];
        upstream[e.a] = residual;
        self.q_net
            .backward_step(&cache, &upstream, self.eta, Direction::Descent, false)?;
        self.updates += 1;
        if let DqnVariant::Double { target_net } = &mut self.variant {
            if self.updates.is_multiple_of(self.sync_interval) {
                *target_net = self.q_net.clone();
            }
        }
        Ok(0.5 * residual * residual)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DdpgAgent {
    pub actor: MlpParams,
    pub critic: MlpParams,
    sigma_p: f64,
    gamma: f64,
    eta_actor: f64,
    eta_critic: f64,
}

impl DdpgAgent {
    pub fn new(
        actor: MlpParams,
        critic: MlpParams,
        sigma_p: f64,
        gamma: f64,
        eta_actor: f64,
        eta_critic: f64,
    ) -> Result<Self> {
        let action_dim = actor.output_dim();
        if !action_dim.is_multiple_of(2)
            || actor.output_activation() != OutputActivation::UnitNormalize
        {
            return Err(Error::InvalidArgument(
                "actor must emit an even-length unit-normalized action".into(),
            ));
        }
        if critic.input_dim() != actor.input_dim() + action_dim
            || critic.output_dim() != 1
            || critic.output_activation() != OutputActivation::Linear
        {
            return Err(Error::Dimension(format!(
                "critic must map {} inputs to one linear output",
                actor.input_dim() + action_dim
            )));
        }
        if !(sigma_p >= 0.0) || !sigma_p.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "sigma_p must be >= 0, got {sigma_p}"
            )));
        }
        check_rate("gamma", gamma, 0.0, 1.0)?;
        check_lr("eta_actor", eta_actor)?;
        check_lr("eta_critic", eta_critic)?;
        Ok(Self {
            actor,
            critic,
            sigma_p,
            gamma,
            eta_actor,
            eta_critic,
        })
    }

    #[allow(clippy::too_many_arguments)]
    pub fn init(
        state_dim: usize,
        n_tx: usize,
        hidden: &[usize],
        sigma_p: f64,
        gamma: f64,
        eta_actor: f64,
        eta_critic: f64,
        rng: &mut SimRng,
    ) -> Result<Self> {
        let action_dim = 2 * n_tx;
        let actor_dims = [&[state_dim], hidden, &[action_dim]].concat();
        let critic_dims = [&[state_dim + action_dim], hidden, &[1]].concat();
        let actor = MlpParams::init_xavier(&actor_dims, OutputActivation::UnitNormalize, rng)?;
        let critic = MlpParams::init_xavier(&critic_dims, OutputActivation::Linear, rng)?;
        Self::new(actor, critic, sigma_p, gamma, eta_actor, eta_critic)
    }

    pub fn n_tx(&self) -> usize {
        self.actor.output_dim() / 2
    }

    pub fn sigma_p(&self) -> f64 {
        self.sigma_p
    }

    pub fn set_sigma_p(&mut self, sigma_p: f64) -> Result<()> {
        if !(sigma_p >= 0.0) || !sigma_p.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "sigma_p must be >= 0, got {sigma_p}"
            )));
        }
        self.sigma_p = sigma_p;
        Ok(())
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn eta_actor(&self) -> f64 {
        self.eta_actor
    }

    pub fn eta_critic(&self) -> f64 {
        self.eta_critic
    }

    fn actor_forward(&self, s: &Observation) -> Result<ForwardCache<f64>> {
        check_input(&self.actor, s.len(), "actor")?;
        self.actor.forward(&s.values)
    }

    /// `mu(s)` plus exploration noise when `explore` is set.
    pub fn act(&self, s: &Observation, rng: &mut SimRng, explore: bool) -> Result<Precoder> {
        let cache = self.actor_forward(s)?;
        self.perturb(cache.output(), rng, explore)
    }

    pub(crate) fn act_cached(
        &self,
        s: &Observation,
        rng: &mut SimRng,
    ) -> Result<(Precoder, ForwardCache<f64>)> {
        let cache = self.actor_forward(s)?;
        let a = self.perturb(cache.output(), rng, true)?;
        Ok((a, cache))
    }

    fn perturb(&self, raw: &[f64], rng: &mut SimRng, explore: bool) -> Result<Precoder> {
        if explore && self.sigma_p > 0.0 {
            for _ in 0..MAX_NOISE_ATTEMPTS {
                let noisy: Vec<f64> = raw
                    .iter()
                    .map(|&x| x + self.sigma_p * rng.normal::<f64>())
                    .collect();
                if let Ok(p) = Precoder::from_packed(&noisy) {
                    return Ok(p);
                }
            }
        }
        Precoder::from_packed(raw)
    }

    pub fn greedy_policy(&self, s: &Observation) -> Result<Precoder> {
        self.act(s, &mut SimRng::new(0, 0), false)
    }

    fn critic_input(s: &Observation, a: &[f64]) -> Vec<f64> {
        let mut x = Vec::with_capacity(s.len() + a.len());
        x.extend_from_slice(&s.values);
        x.extend_from_slice(a);
        x
    }

    pub fn q_value(&self, s: &Observation, a: &Precoder) -> Result<f64> {
        check_input(&self.critic, s.len() + 2 * a.n_tx(), "critic")?;
        Ok(self.critic.predict(&Self::critic_input(s, &a.packed()))?[0])
    }

    /// `dQ/da` at `(s, a)`, in packed coordinates.
    pub fn action_gradient(&self, s: &Observation, a: &[f64]) -> Result<Vec<f64>> {
        check_input(&self.critic, s.len() + a.len(), "critic")?;
        let cache = self.critic.forward(&Self::critic_input(s, a))?;
        let g = self.critic.input_gradient(&cache, &[1.0])?;
        Ok(g[s.len()..].to_vec())
    }

    pub fn critic_target(&self, r: f64, s_next: &Observation) -> Result<f64> {
        if self.gamma == 0.0 {
            return Ok(r);
        }
        let a_next = self.actor_forward(s_next)?;
        let q = self
            .critic
            .predict(&Self::critic_input(s_next, a_next.output()))?[0];
        Ok(r + self.gamma * q)
    }

    /// One descent step on `1/2 (Y - Q(s, a))^2`; returns the pre-update loss.
    pub fn critic_update(&mut self, e: &Experience<Precoder>) -> Result<f64> {
        if !e.r.is_finite() {
            return Err(Error::InvalidArgument(format!("non-finite reward {}", e.r)));
        }
        let y = self.critic_target(e.r, &e.s_next)?;
        let a = e.a.packed();
        check_input(&self.critic, e.s.len() + a.len(), "critic")?;
        let cache = self.critic.forward(&Self::critic_input(&e.s, &a))?;
        let residual = cache.output()[0] - y;
        self.critic.backward_step(
            &cache,
            &[residual],
            self.eta_critic,
            Direction::Descent,
            false,
        )?;
        Ok(0.5 * residual * residual)
    }

    /// One ascent step on `Q(s, mu(s))` through the actor.
    pub fn actor_update(&mut self, s: &Observation) -> Result<()> {
        let cache = self.actor_forward(s)?;
        self.actor_update_cached(s, &cache)
    }

    pub(crate) fn actor_update_cached(
        &mut self,
        s: &Observation,
        actor_cache: &ForwardCache<f64>,
    ) -> Result<()> {
        let grad = self.action_gradient(s, actor_cache.output())?;
        self.actor
            .backward_step(actor_cache, &grad, self.eta_actor, Direction::Ascent, false)?;
        Ok(())
    }
}

/// A trained decision maker that can be checkpointed.
#[derive(Debug, Clone, PartialEq)]
pub enum Agent {
    Dqn(DqnAgent),
    Ddpg(DdpgAgent),
}

impl Agent {
    pub fn greedy_policy(&self, s: &Observation) -> Result<Precoder> {
        match self {
            Agent::Dqn(a) => a.greedy_policy(s),
            Agent::Ddpg(a) => a.greedy_policy(s),
        }
    }

    pub fn kind(&self) -> AgentKind {
        match self {
            Agent::Dqn(_) => AgentKind::Dqn,
            Agent::Ddpg(_) => AgentKind::Ddpg,
        }
    }

    /// Writes the agent into directory `dir` (created if missing): a header
    /// `agent.json` plus one network file per parameter set.
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let header = match self {
            Agent::Dqn(a) => {
                a.q_net.save_checkpoint(dir.join(Q_NET_FILE))?;
                if let DqnVariant::Double { target_net } = &a.variant {
                    target_net.save_checkpoint(dir.join(TARGET_NET_FILE))?;
                }
                codebook::save(&a.codebook, dir.join(CODEBOOK_FILE))?;
                AgentHeader {
                    kind: AgentKind::Dqn,
                    gamma: a.gamma,
                    epsilon: Some(a.epsilon),
                    eta: Some(a.eta),
                    double: Some(matches!(a.variant, DqnVariant::Double { .. })),
                    sync_interval: Some(a.sync_interval),
                    updates: Some(a.updates),
                    codebook_path: Some(CODEBOOK_FILE.into()),
                    sigma_p: None,
                    eta_actor: None,
                    eta_critic: None,
                    n_tx: None,
                }
            }
            Agent::Ddpg(a) => {
                a.actor.save_checkpoint(dir.join(ACTOR_FILE))?;
                a.critic.save_checkpoint(dir.join(CRITIC_FILE))?;
                AgentHeader {
                    kind: AgentKind::Ddpg,
                    gamma: a.gamma,
                    sigma_p: Some(a.sigma_p),
                    eta_actor: Some(a.eta_actor),
                    eta_critic: Some(a.eta_critic),
                    n_tx: Some(a.n_tx()),
                    epsilon: None,
                    eta: None,
                    double: None,
                    sync_interval: None,
                    updates: None,
                    codebook_path: None,
                }
            }
        };
        let path = dir.join(HEADER_FILE);
        let text = serde_json::to_string_pretty(&header).map_err(|e| Error::format(&path, e))?;
        fs::write(&path, text).map_err(|e| Error::io(&path, e))
    }

    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let path = dir.join(HEADER_FILE);
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let h: AgentHeader = serde_json::from_str(&text).map_err(|e| Error::format(&path, e))?;
        let missing = |field: &str| Error::format(&path, format!("missing field {field}"));
        let invalid = |e: Error| Error::format(&path, e);
        match h.kind {
            AgentKind::Dqn => {
                let q_net = MlpParams::load_checkpoint(dir.join(Q_NET_FILE))?;
                let cb_path = dir.join(h.codebook_path.ok_or_else(|| missing("codebook_path"))?);
                let cb = codebook::load(cb_path)?;
                let double = h.double.unwrap_or(false);
                let mut agent = DqnAgent::new(
                    q_net,
                    cb,
                    false,
                    h.epsilon.ok_or_else(|| missing("epsilon"))?,
                    h.gamma,
                    h.eta.ok_or_else(|| missing("eta"))?,
                )
                .map_err(invalid)?;
                if double {
                    agent.variant = DqnVariant::Double {
                        target_net: MlpParams::load_checkpoint(dir.join(TARGET_NET_FILE))?,
                    };
                }
                agent
                    .set_sync_interval(h.sync_interval.unwrap_or(DEFAULT_SYNC_INTERVAL))
                    .map_err(invalid)?;
                agent.updates = h.updates.unwrap_or(0);
                Ok(Agent::Dqn(agent))
            }
            AgentKind::Ddpg => {
                let agent = DdpgAgent::new(
                    MlpParams::load_checkpoint(dir.join(ACTOR_FILE))?,
                    MlpParams::load_checkpoint(dir.join(CRITIC_FILE))?,
                    h.sigma_p.ok_or_else(|| missing("sigma_p"))?,
                    h.gamma,
                    h.eta_actor.ok_or_else(|| missing("eta_actor"))?,
                    h.eta_critic.ok_or_else(|| missing("eta_critic"))?,
                )
                .map_err(invalid)?;
                if let Some(n) = h.n_tx {
                    if n != agent.n_tx() {
                        return Err(Error::format(
                            &path,
                            format!("header n_tx {n} disagrees with actor"),
                        ));
                    }
                }
                Ok(Agent::Ddpg(agent))
            }
        }
    }
}

pub const HEADER_FILE: &str = "agent.json";
pub const Q_NET_FILE: &str = "q_net.json";
pub const TARGET_NET_FILE: &str = "target_net.json";
pub const ACTOR_FILE: &str = "actor.json";
pub const CRITIC_FILE: &str = "critic.json";
pub const CODEBOOK_FILE: &str = "codebook.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AgentKind {
    Dqn,
    Ddpg,
}

#[derive(Debug, Serialize, Deserialize)]
struct AgentHeader {
    kind: AgentKind,
    gamma: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    epsilon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    eta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    double: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    sync_interval: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    updates: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    codebook_path: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    sigma_p: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    eta_actor: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    eta_critic: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    n_tx: Option<usize>,
}

/// Codebook-index origin tag for DQN actions.
pub fn codeword(cb: &Codebook, index: usize) -> Precoder {
    cb.word(index)
        .clone()
        .with_origin(PrecoderOrigin::CodebookIndex(index))
}
