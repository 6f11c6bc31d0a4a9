//! Experiment configuration, presets and `key=value` overrides.
//!
//! A config file only has to name what differs from the preset for its
//! `environment` and `agent`; everything else is filled in from
//! [`ExperimentConfig::preset`] at desk scale. Unknown fields are rejected.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::channel::{ChannelModel, ChannelSpec};
use crate::codebook::{self, Codebook, DEFAULT_ITERATIONS};
use crate::error::{Error, Result};
use crate::link::{observation_len, LinkConfig, Modulation, SubbandSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Environment {
    EnvI,
    EnvII,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AgentChoice {
    Dqn,
    Ddpg,
    BaselineCodebook,
    BaselineSvdEvd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    /// Shortened training used by the acceptance suite.
    Desk,
    /// Full-length training.
    Full,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub environment: Environment,
    pub agent: AgentChoice,
    pub channel: ChannelSpec,
    pub subband: SubbandSpec,
    pub link: LinkConfig,
    /// Codebook file; when absent a Grassmannian codebook is generated from
    /// `codebook_size` and `codebook_seed`.
    pub codebook_path: Option<PathBuf>,
    pub codebook_size: usize,
    pub codebook_seed: u64,
    pub codebook_iterations: usize,
    pub hidden_dims: Vec<usize>,
    pub episodes: usize,
    pub steps_per_episode: usize,
    pub eval_states: usize,
    pub seed: u64,
    pub gamma: f64,
    pub eta: f64,
    pub eta_actor: f64,
    pub eta_critic: f64,
    pub sigma_p_start: f64,
    pub sigma_p_end: f64,
    pub double_dqn: bool,
    pub log_interval: usize,
    pub output_dir: PathBuf,
}

impl ExperimentConfig {
    pub fn preset(environment: Environment, agent: AgentChoice, scale: Scale) -> Self {
        let (channel, subband, modulation, hidden_dims) = match environment {
            Environment::EnvI => (
                ChannelSpec::flat(4, 2),
                SubbandSpec::env1(),
                Modulation::Qam16,
                vec![512, 128],
            ),
            Environment::EnvII => (
                ChannelSpec::tdl2(4, 2),
                SubbandSpec::env2(),
                Modulation::Qam4,
                vec![3840, 512, 128],
            ),
        };
        let episodes = match (environment, agent, scale) {
            (Environment::EnvI, AgentChoice::Dqn, Scale::Desk) => 100,
            (Environment::EnvI, _, _) => 300,
            (Environment::EnvII, _, Scale::Desk) => 300,
            (Environment::EnvII, _, Scale::Full) => 3000,
        };
        let eval_states = match (environment, scale) {
            (_, Scale::Full) => 10_000,
            (Environment::EnvI, Scale::Desk) => 2000,
            (Environment::EnvII, Scale::Desk) => 5000,
        };
        Self {
            environment,
            agent,
            channel,
            subband,
            link: LinkConfig::new(10.0, modulation),
            codebook_path: None,
            codebook_size: 64,
            codebook_seed: 7,
            codebook_iterations: DEFAULT_ITERATIONS,
            hidden_dims,
            episodes,
            steps_per_episode: 1000,
            eval_states,
            seed: 1,
            gamma: 0.0,
            eta: 1e-3,
            eta_actor: 1e-4,
            eta_critic: 1e-3,
            sigma_p_start: 0.1,
            sigma_p_end: 0.01,
            double_dqn: false,
            log_interval: 1000,
            output_dir: PathBuf::from("runs").join(run_name(environment, agent)),
        }
    }

    /// Parses a JSON config, filling omitted fields from the desk preset.
    pub fn from_json_str(text: &str) -> Result<Self> {
        Self::from_json_str_with_overrides(text, &[])
    }

    pub fn from_json_str_with_overrides(text: &str, overrides: &[String]) -> Result<Self> {
        let mut user: Value = serde_json::from_str(text)
            .map_err(|e| Error::Config(format!("invalid config JSON: {e}")))?;
        if !user.is_object() {
            return Err(Error::Config("config must be a JSON object".into()));
        }
        for o in overrides {
            apply_override(&mut user, o)?;
        }
        let environment: Environment = pick(&user, "environment")?.unwrap_or(Environment::EnvI);
        let agent: AgentChoice = pick(&user, "agent")?.unwrap_or(AgentChoice::Dqn);
        let mut merged = serde_json::to_value(Self::preset(environment, agent, Scale::Desk))
            .map_err(|e| Error::Config(e.to_string()))?;
        merge(&mut merged, user);
        let cfg: Self = serde_json::from_value(merged)
            .map_err(|e| Error::Config(format!("invalid config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>, overrides: &[String]) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str_with_overrides(&text, overrides)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.channel.validate()?;
        self.subband.validate()?;
        self.link.validate()?;
        let expected_model = match self.environment {
            Environment::EnvI => ChannelModel::Flat,
            Environment::EnvII => ChannelModel::Tdl2,
        };
        if self.channel.model != expected_model {
            return Err(Error::Config(format!(
                "{:?} requires the {:?} channel model",
                self.environment, expected_model
            )));
        }
        if self.environment == Environment::EnvI && self.subband.pilot_subcarrier_indices.len() != 1
        {
            return Err(Error::Config("EnvI observes exactly one pilot".into()));
        }
        let counts = [
            ("codebook_size", self.codebook_size),
            ("episodes", self.episodes),
            ("steps_per_episode", self.steps_per_episode),
            ("eval_states", self.eval_states),
            ("log_interval", self.log_interval),
        ];
        for (name, v) in counts {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be >= 1")));
            }
        }
        if self.hidden_dims.contains(&0) {
            return Err(Error::Config("hidden_dims entries must be >= 1".into()));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::Config(format!(
                "gamma {} outside [0, 1]",
                self.gamma
            )));
        }
        for (name, v) in [
            ("eta", self.eta),
            ("eta_actor", self.eta_actor),
            ("eta_critic", self.eta_critic),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Config(format!("{name} must be > 0")));
            }
        }
        for (name, v) in [
            ("sigma_p_start", self.sigma_p_start),
            ("sigma_p_end", self.sigma_p_end),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::Config(format!("{name} must be >= 0")));
            }
        }
        Ok(())
    }

    pub fn total_steps(&self) -> usize {
        self.episodes * self.steps_per_episode
    }

    pub fn state_dim(&self) -> usize {
        observation_len(
            self.channel.n_tx,
            self.channel.n_rx,
            self.subband.pilot_subcarrier_indices.len(),
        )
    }

    /// Loads `codebook_path` or generates the configured codebook.
    pub fn resolve_codebook(&self) -> Result<Codebook> {
        let cb = match &self.codebook_path {
            Some(path) => codebook::load(path)?,
            None => codebook::generate_grassmannian(
                self.channel.n_tx,
                self.codebook_size,
                self.codebook_seed,
                self.codebook_iterations,
            )?,
        };
        if cb.n_tx() != self.channel.n_tx {
            return Err(Error::Config(format!(
                "codebook has n_tx {}, channel {}",
                cb.n_tx(),
                self.channel.n_tx
            )));
        }
        Ok(cb)
    }

    /// Name of the analytic precoder baseline in this environment.
    pub fn analytic_baseline_name(&self) -> &'static str {
        match self.environment {
            Environment::EnvI => "svd",
            Environment::EnvII => "evd",
        }
    }
}

fn run_name(environment: Environment, agent: AgentChoice) -> String {
    let env = match environment {
        Environment::EnvI => "env1",
        Environment::EnvII => "env2",
    };
    let agent = match agent {
        AgentChoice::Dqn => "dqn",
        AgentChoice::Ddpg => "ddpg",
        AgentChoice::BaselineCodebook => "codebook",
        AgentChoice::BaselineSvdEvd => "svd_evd",
    };
    format!("{env}_{agent}")
}

fn pick<T: for<'de> Deserialize<'de>>(v: &Value, key: &str) -> Result<Option<T>> {
    match v.get(key) {
        None => Ok(None),
        Some(x) => serde_json::from_value(x.clone())
            .map(Some)
            .map_err(|e| Error::Config(format!("invalid {key}: {e}"))),
    }
}

/// Recursively overlays `over` onto `base`; non-object values replace.
fn merge(base: &mut Value, over: Value) {
    match (base, over) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

/// Applies `a.b.c=value`; the value is parsed as JSON and falls back to a
/// plain string.
pub fn apply_override(target: &mut Value, assignment: &str) -> Result<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override {assignment:?} is not key=value")))?;
    let key = key.trim();
    if key.is_empty() || key.split('.').any(str::is_empty) {
        return Err(Error::Config(format!(
            "override {assignment:?} has an empty key"
        )));
    }
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut slot = target;
    let parts: Vec<&str> = key.split('.').collect();
    for part in &parts[..parts.len() - 1] {
        let obj = slot
            .as_object_mut()
            .ok_or_else(|| Error::Config(format!("override {key}: {part} is not an object")))?;
        slot = obj
            .entry(part.to_string())
            .or_insert_with(|| Value::Object(Map::new()));
    }
    let obj = slot
        .as_object_mut()
        .ok_or_else(|| Error::Config(format!("override {key}: parent is not an object")))?;
    obj.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_object_is_env1_dqn_desk() {
        let cfg = ExperimentConfig::from_json_str("{}").unwrap();
        assert_eq!(
            cfg,
            ExperimentConfig::preset(Environment::EnvI, AgentChoice::Dqn, Scale::Desk)
        );
        assert_eq!(cfg.total_steps(), 100_000);
        assert_eq!(cfg.state_dim(), 16);
        assert_eq!(cfg.channel.n_tx, 4);
        assert_eq!(cfg.subband.n_subcarriers(), 960);
    }

    #[test]
    fn environment_selects_preset() {
        let cfg = ExperimentConfig::from_json_str(r#"{"environment": "EnvII", "agent": "Ddpg"}"#)
            .unwrap();
        assert_eq!(cfg.hidden_dims, vec![3840, 512, 128]);
        assert_eq!(cfg.link.modulation, Modulation::Qam4);
        assert_eq!(cfg.state_dim(), 48);
        assert_eq!(cfg.total_steps(), 300_000);
        let full = ExperimentConfig::preset(Environment::EnvII, AgentChoice::Dqn, Scale::Full);
        assert_eq!(full.total_steps(), 3_000_000);
        let full = ExperimentConfig::preset(Environment::EnvI, AgentChoice::Ddpg, Scale::Full);
        assert_eq!(full.total_steps(), 300_000);
    }

    #[test]
    fn overrides_and_nested_merge() {
        let cfg = ExperimentConfig::from_json_str_with_overrides(
            r#"{"link": {"snr_db": 4}}"#,
            &[
                "episodes=3".into(),
                "link.modulation=4-QAM".into(),
                "double_dqn=true".into(),
            ],
        )
        .unwrap();
        assert_eq!(cfg.episodes, 3);
        assert_eq!(cfg.link.snr_db, 4.0);
        assert_eq!(cfg.link.modulation, Modulation::Qam4);
        assert!(cfg.double_dqn);
        assert_eq!(cfg.channel, ChannelSpec::flat(4, 2));
    }

    #[test]
    fn rejects_bad_configs() {
        for bad in [
            "[]",
            "{",
            r#"{"bogus": 1}"#,
            r#"{"episodes": 0}"#,
            r#"{"gamma": 2.0}"#,
            r#"{"environment": "EnvIII"}"#,
            r#"{"environment": "EnvI", "channel": {"model": "Tdl2", "tap_delays": [0, 4e-7], "tap_powers_db": [0, 0]}}"#,
        ] {
            assert!(
                matches!(ExperimentConfig::from_json_str(bad), Err(Error::Config(_))),
                "{bad}"
            );
        }
        let mut v = serde_json::json!({});
        assert!(apply_override(&mut v, "novalue").is_err());
        assert!(apply_override(&mut v, "=3").is_err());
    }

    #[test]
    fn round_trips_through_json() {
        let cfg =
            ExperimentConfig::preset(Environment::EnvII, AgentChoice::BaselineSvdEvd, Scale::Full);
        assert_eq!(
            ExperimentConfig::from_json_str(&cfg.to_json_pretty()).unwrap(),
            cfg
        );
    }
}
