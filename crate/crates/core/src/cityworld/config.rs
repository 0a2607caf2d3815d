use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{apply_emergency, generate_city_with, CityMap, CityPreset, EnvId, Environment, MissionSpec, Normalization, Rect, RewardConstants};
use crate::radiomap::{build_radio_map, BaseStation, PropagationParams, RadioMap};
use crate::{Error, Result};

/// Scale presets. `Paper` is the full 2 km / 10 m / 200-step setting; `Desk`
/// halves the map, doubles the cell and step size and halves the step budget
/// so that whole training runs fit in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    #[default]
    Paper,
    Desk,
}

impl Profile {
    pub fn extent(self) -> f64 {
        match self {
            Profile::Paper => 2000.0,
            Profile::Desk => 1000.0,
        }
    }

    pub fn cell_size(self) -> f64 {
        match self {
            Profile::Paper => 10.0,
            Profile::Desk => 20.0,
        }
    }

    pub fn max_steps(self) -> usize {
        match self {
            Profile::Paper => 200,
            Profile::Desk => 100,
        }
    }

    pub fn success_window(self) -> usize {
        match self {
            Profile::Paper => 100,
            Profile::Desk => 50,
        }
    }

    pub fn success_threshold(self) -> f64 {
        match self {
            Profile::Paper => 0.99,
            Profile::Desk => 0.95,
        }
    }

    pub fn max_episodes(self) -> usize {
        match self {
            Profile::Paper => 3000,
            Profile::Desk => 1500,
        }
    }

    /// Training steps between target-network syncs. Desk episodes are half
    /// as long and the grid coarser, so stale targets are refreshed sooner.
    pub fn target_sync_period(self) -> u64 {
        match self {
            Profile::Paper => 500,
            Profile::Desk => 100,
        }
    }

    /// Mission target for `env`, scaled to this profile's extent. The
    /// standard Env2 mission keeps the Env1 destination.
    pub fn target(self, env: EnvId) -> [f64; 2] {
        match env {
            EnvId::Env1 | EnvId::Env2 => self.scaled([1000.0, 900.0]),
            EnvId::Env3 => self.scaled([1600.0, 1600.0]),
        }
    }

    /// Relocated destination of the Env2 emergency mission.
    pub fn emergency_target(self) -> [f64; 2] {
        self.scaled([1250.0, 1300.0])
    }

    fn scaled(self, full: [f64; 2]) -> [f64; 2] {
        let s = self.extent() / 2000.0;
        [full[0] * s, full[1] * s]
    }

    /// South-west start square, 10 % of the extent on a side.
    pub fn start_region(self) -> Rect {
        let side = 0.1 * self.extent();
        Rect { min: [0.0, 0.0], max: [side, side] }
    }
}

impl std::str::FromStr for Profile {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "paper" => Ok(Profile::Paper),
            "desk" => Ok(Profile::Desk),
            other => Err(format!("unknown profile {other:?}")),
        }
    }
}

/// Station layout: `"generate"` from the preset, or an explicit list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StationSpec {
    Keyword(String),
    List(Vec<BaseStation>),
}

impl Default for StationSpec {
    fn default() -> Self {
        StationSpec::Keyword("generate".into())
    }
}

/// Everything needed to rebuild one environment, as read from a TOML file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvConfig {
    pub env_id: EnvId,
    #[serde(default)]
    pub seed: u64,
    pub extent: f64,
    pub cell_size: f64,
    /// Building bands; defaults to the preset of `env_id`.
    #[serde(default)]
    pub city: Option<CityPreset>,
    #[serde(default)]
    pub stations: StationSpec,
    /// Station switched off before the map is built.
    #[serde(default)]
    pub emergency_bs: Option<usize>,
    #[serde(default)]
    pub propagation: PropagationParams,
    pub mission: MissionSpec,
    #[serde(default)]
    pub reward: RewardConstants,
    #[serde(default)]
    pub normalization: Normalization,
}

/// A built environment together with the city and map it came from.
#[derive(Debug, Clone)]
pub struct BuiltEnv {
    pub city: CityMap,
    pub radio_map: Arc<RadioMap>,
    pub env: Environment,
}

/// Station that fails in the Env2 emergency mission; the one nearest the
/// relocated destination.
pub const EMERGENCY_BS: usize = 3;

impl EnvConfig {
    /// Env2 with [`EMERGENCY_BS`] down and the destination moved further out.
    pub fn emergency(profile: Profile) -> Self {
        let mut cfg = Self::preset(EnvId::Env2, profile);
        cfg.emergency_bs = Some(EMERGENCY_BS);
        cfg.mission.target = profile.emergency_target();
        cfg
    }

    pub fn preset(env_id: EnvId, profile: Profile) -> Self {
        Self {
            env_id,
            seed: 0,
            extent: profile.extent(),
            cell_size: profile.cell_size(),
            city: None,
            stations: StationSpec::default(),
            emergency_bs: None,
            propagation: PropagationParams::default(),
            mission: MissionSpec {
                start_region: profile.start_region(),
                target: profile.target(env_id),
                arrival_radius: 30.0,
                max_steps: profile.max_steps(),
                step_length: profile.cell_size(),
                altitude: 90.0,
                outage_budget: 20,
            },
            reward: RewardConstants::default(),
            normalization: Normalization::default(),
        }
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("config serialises")
    }

    /// SHA-256 of the canonical JSON form; identifies the environment in manifests.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serialises");
        hex::encode(Sha256::digest(json))
    }

    pub fn city(&self) -> Result<CityMap> {
        let preset = self.city.clone().unwrap_or_else(|| CityPreset::for_env(self.env_id));
        let mut city = generate_city_with(self.env_id, &preset, self.extent, self.seed);
        match &self.stations {
            StationSpec::Keyword(k) if k == "generate" => {}
            StationSpec::Keyword(k) => return Err(Error::Config(format!("stations must be \"generate\" or a list, got {k:?}"))),
            StationSpec::List(list) => {
                for bs in list {
                    bs.validate_geometry()?;
                }
                city.base_stations = list.clone();
            }
        }
        if let Some(i) = self.emergency_bs {
            city = apply_emergency(&city, i)?;
        }
        Ok(city)
    }

    pub fn build(&self) -> Result<BuiltEnv> {
        let city = self.city()?;
        let map = Arc::new(build_radio_map(&city, &self.propagation, self.mission.altitude, self.cell_size)?);
        let env = Environment::new(map.clone(), self.mission.clone(), self.reward, self.normalization)?;
        Ok(BuiltEnv { city, radio_map: map, env })
    }
}
