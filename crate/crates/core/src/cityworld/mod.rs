//! Benchmark cities and the grid MDP flown over their radio maps.

mod city;
mod config;
mod constraints;
mod env;

pub use city::{apply_emergency, generate_city, generate_city_with, CityMap, CityPreset, EnvId};
pub use config::{BuiltEnv, EnvConfig, Profile, StationSpec, EMERGENCY_BS};
pub use constraints::{check_constraints, episode_outage_count, ConstraintReport, Trajectory, Waypoint};
pub use env::{Action, Environment, MdpState, MissionSpec, Normalization, Rect, RewardConstants, StepOutcome};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum WorldError {
    #[error("base station index {index} out of range ({count} stations)")]
    InvalidStation { index: usize, count: usize },
    #[error("invalid mission: {0}")]
    InvalidMission(String),
    #[error("step {step} is past the end of the episode")]
    EpisodeOver { step: usize },
    #[error("start region contains no radio-map cell")]
    EmptyStartRegion,
    #[error("position ({0}, {1}) is not covered by the radio map")]
    OffMap(f64, f64),
    #[error("unknown reward constant {0:?}")]
    UnknownRewardKey(String),
    #[error(transparent)]
    Radio(#[from] crate::radiomap::RadioError),
}

pub type Result<T, E = WorldError> = std::result::Result<T, E>;
