//! DQN / DDQN learners over the grid MDP.

mod learner;
mod policy;
mod replay;
mod targets;

pub use learner::{greedy_rollout, run_episode, run_training, training_complete, Agent, Rollout, TrainOptions, TrainOutcome};
pub use policy::{argmax, select_action};
pub use replay::ReplayBuffer;
pub use targets::{compute_targets, ddqn_target, dqn_target};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cityworld::Profile;
use crate::neural::{NeuralError, OptimizerKind};

#[derive(Debug, Error)]
pub enum AgentError {
    #[error("replay buffer holds {have} transitions, need {need}")]
    NotEnoughReplay { have: usize, need: usize },
    #[error("invalid hyperparameters: {0}")]
    InvalidHyperparams(String),
    #[error(transparent)]
    Neural(#[from] NeuralError),
    #[error(transparent)]
    World(#[from] crate::cityworld::WorldError),
}

pub type Result<T, E = AgentError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algo {
    Dqn,
    #[default]
    Ddqn,
}

impl std::str::FromStr for Algo {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "dqn" => Ok(Algo::Dqn),
            "ddqn" => Ok(Algo::Ddqn),
            other => Err(format!("unknown algorithm {other:?}")),
        }
    }
}

/// One stored step of experience. States are network observations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub state: [f64; 4],
    pub action: usize,
    pub reward: f64,
    pub next_state: [f64; 4],
    /// True only on arrival; running out of steps is a truncation, not a terminal.
    pub done: bool,
    pub outage: bool,
}

/// Learning and exploration settings. Defaults are the from-scratch values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Hyperparams {
    pub learning_rate: f64,
    pub epsilon_start: f64,
    pub epsilon_decay: f64,
    pub epsilon_min: f64,
    pub gamma: f64,
    pub batch_size: usize,
    pub replay_capacity: usize,
    pub target_sync_period: u64,
    pub min_replay: usize,
    pub success_window: usize,
    pub success_threshold: f64,
    pub max_episodes: usize,
    pub grad_clip: f64,
    pub optimizer: OptimizerKind,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Self::scratch()
    }
}

impl Hyperparams {
    pub fn scratch() -> Self {
        Self {
            learning_rate: 0.001,
            epsilon_start: 1.0,
            epsilon_decay: 0.998,
            epsilon_min: 0.01,
            gamma: 0.95,
            batch_size: 64,
            replay_capacity: 50_000,
            target_sync_period: 500,
            min_replay: 1_000,
            success_window: 100,
            success_threshold: 0.99,
            max_episodes: 3_000,
            grad_clip: 10.0,
            optimizer: OptimizerKind::Adam,
        }
    }

    /// Fine-tuning values for a transferred agent.
    pub fn transfer() -> Self {
        Self { learning_rate: 0.0002, epsilon_start: 0.5, epsilon_decay: 0.995, ..Self::scratch() }
    }

    /// Copies the profile's termination settings and target-sync period.
    pub fn with_profile(self, profile: Profile) -> Self {
        Self {
            success_window: profile.success_window(),
            success_threshold: profile.success_threshold(),
            max_episodes: profile.max_episodes(),
            target_sync_period: profile.target_sync_period(),
            ..self
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(AgentError::InvalidHyperparams(m.to_string()));
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return bad("need 0 < gamma < 1");
        }
        if !(self.epsilon_decay > 0.0 && self.epsilon_decay < 1.0) {
            return bad("need 0 < epsilon_decay < 1");
        }
        if !(self.learning_rate > 0.0) {
            return bad("learning_rate must be > 0");
        }
        if !(0.0..=1.0).contains(&self.epsilon_start) || !(0.0..=1.0).contains(&self.epsilon_min) {
            return bad("epsilon values must lie in [0, 1]");
        }
        if self.batch_size == 0 || self.replay_capacity == 0 || self.target_sync_period == 0 || self.success_window == 0 {
            return bad("batch_size, replay_capacity, target_sync_period and success_window must be > 0");
        }
        Ok(())
    }
}

/// Per-episode metrics; one row of the metrics CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub episode: usize,
    pub total_reward: f64,
    pub steps: usize,
    pub success: bool,
    pub outage_count: usize,
    /// Exploration rate after this episode's decay.
    pub epsilon: f64,
    /// Mean SINR (dB) over visited cells, floored at -50 dB; not part of the metrics CSV.
    #[serde(skip)]
    pub mean_sinr_db: f64,
}
