use std::collections::BTreeMap;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Result, WorldError};
use crate::radiomap::RadioMap;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub min: [f64; 2],
    pub max: [f64; 2],
}

impl Rect {
    pub fn contains(&self, p: [f64; 2]) -> bool {
        p[0] >= self.min[0] && p[0] <= self.max[0] && p[1] >= self.min[1] && p[1] <= self.max[1]
    }
}

/// Where the UAV starts, where it must go and how long it has.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MissionSpec {
    pub start_region: Rect,
    pub target: [f64; 2],
    pub arrival_radius: f64,
    pub max_steps: usize,
    pub step_length: f64,
    pub altitude: f64,
    /// Γ̂: episodes must finish with strictly fewer outage steps than this.
    pub outage_budget: usize,
}

impl Default for MissionSpec {
    fn default() -> Self {
        Self {
            start_region: Rect { min: [0.0, 0.0], max: [200.0, 200.0] },
            target: [1000.0, 900.0],
            arrival_radius: 30.0,
            max_steps: 200,
            step_length: 10.0,
            altitude: 90.0,
            outage_budget: 20,
        }
    }
}

impl MissionSpec {
    pub fn validate(&self, extent: [f64; 2]) -> Result<()> {
        let bad = |m: String| Err(WorldError::InvalidMission(m));
        if !(self.target[0] >= 0.0 && self.target[0] <= extent[0] && self.target[1] >= 0.0 && self.target[1] <= extent[1]) {
            return bad(format!("target {:?} outside extent {:?}", self.target, extent));
        }
        if !(self.arrival_radius > 0.0) {
            return bad("arrival_radius must be > 0".into());
        }
        if self.max_steps == 0 {
            return bad("max_steps must be > 0".into());
        }
        if !(self.step_length > 0.0) {
            return bad("step_length must be > 0".into());
        }
        let r = &self.start_region;
        if !(r.min[0] <= r.max[0] && r.min[1] <= r.max[1] && r.min[0] >= 0.0 && r.min[1] >= 0.0 && r.max[0] <= extent[0] && r.max[1] <= extent[1]) {
            return bad(format!("start region {r:?} not inside extent"));
        }
        Ok(())
    }
}

/// Reward weights: `-k1·d - k2·F - R_n + R_arrive·[arrived]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RewardConstants {
    pub k1: f64,
    pub k2: f64,
    pub step_penalty: f64,
    pub arrive_bonus: f64,
    /// Meters per distance unit in the `k1` term (1000 → kilometers).
    pub distance_unit: f64,
}

impl Default for RewardConstants {
    fn default() -> Self {
        Self { k1: 0.8, k2: 1.0, step_penalty: 1.0, arrive_bonus: 2000.0, distance_unit: 1000.0 }
    }
}

impl RewardConstants {
    /// Returns a copy with the named constants replaced. Accepted keys:
    /// `k1`, `k2`, `R_n` / `step_penalty`, `R_arrive` / `arrive_bonus`.
    pub fn with_overrides(&self, overrides: &BTreeMap<String, f64>) -> Result<Self> {
        let mut out = *self;
        for (key, &value) in overrides {
            match key.as_str() {
                "k1" => out.k1 = value,
                "k2" => out.k2 = value,
                "R_n" | "r_n" | "step_penalty" => out.step_penalty = value,
                "R_arrive" | "r_arrive" | "arrive_bonus" => out.arrive_bonus = value,
                other => return Err(WorldError::UnknownRewardKey(other.to_string())),
            }
        }
        Ok(out)
    }

    /// The reward for landing at distance `d_m` meters from the target.
    pub fn reward(&self, d_m: f64, outage: bool, arrived: bool) -> f64 {
        let f = if outage { 1.0 } else { 0.0 };
        let bonus = if arrived { self.arrive_bonus } else { 0.0 };
        -self.k1 * (d_m / self.distance_unit) - self.k2 * f - self.step_penalty + bonus
    }
}

/// Affine observation scaling for the Q-network input.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Normalization {
    pub sinr_lo_db: f64,
    pub sinr_hi_db: f64,
}

impl Default for Normalization {
    fn default() -> Self {
        Self { sinr_lo_db: -30.0, sinr_hi_db: 30.0 }
    }
}

impl Normalization {
    /// Maps `[lo, hi]` dB onto `[-1, 1]`, clamped; `-inf` maps to `-1`.
    pub fn sinr(&self, sinr_db: f64) -> f64 {
        if sinr_db.is_nan() {
            return -1.0;
        }
        let mid = 0.5 * (self.sinr_lo_db + self.sinr_hi_db);
        let half = 0.5 * (self.sinr_hi_db - self.sinr_lo_db);
        ((sinr_db - mid) / half).clamp(-1.0, 1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Action {
    /// +y
    Forward,
    /// −y
    Back,
    /// −x
    Left,
    /// +x
    Right,
}

impl Action {
    pub const ALL: [Action; 4] = [Action::Forward, Action::Back, Action::Left, Action::Right];
    pub const COUNT: usize = 4;

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn delta(self) -> [f64; 2] {
        match self {
            Action::Forward => [0.0, 1.0],
            Action::Back => [0.0, -1.0],
            Action::Left => [-1.0, 0.0],
            Action::Right => [1.0, 0.0],
        }
    }
}

/// UAV position at the mission altitude plus the SINR of its cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MdpState {
    pub position: [f64; 2],
    pub sinr_db: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub next_state: MdpState,
    pub reward: f64,
    pub done: bool,
    pub arrived: bool,
    pub outage: bool,
    pub clipped: bool,
}

/// A mission flown over a fixed radio map. Cheap to clone; the map is shared.
#[derive(Debug, Clone)]
pub struct Environment {
    pub radio_map: Arc<RadioMap>,
    pub mission: MissionSpec,
    pub reward: RewardConstants,
    pub normalization: Normalization,
    pub extent: [f64; 2],
    start_cells: Vec<[f64; 2]>,
}

impl Environment {
    pub fn new(radio_map: Arc<RadioMap>, mission: MissionSpec, reward: RewardConstants, normalization: Normalization) -> Result<Self> {
        let extent = [radio_map.origin[0] + radio_map.nx() as f64 * radio_map.cell_size, radio_map.origin[1] + radio_map.ny() as f64 * radio_map.cell_size];
        mission.validate(extent)?;
        let mut start_cells = Vec::new();
        for iy in 0..radio_map.ny() {
            for ix in 0..radio_map.nx() {
                let c = radio_map.cell_center(ix, iy);
                if mission.start_region.contains(c) {
                    start_cells.push(c);
                }
            }
        }
        if start_cells.is_empty() {
            return Err(WorldError::EmptyStartRegion);
        }
        Ok(Self { radio_map, mission, reward, normalization, extent, start_cells })
    }

    pub fn start_cells(&self) -> &[[f64; 2]] {
        &self.start_cells
    }

    /// State at an arbitrary in-map position.
    pub fn state_at(&self, position: [f64; 2]) -> Result<MdpState> {
        let sinr_db = self.radio_map.sinr_at_xy(position[0], position[1]).ok_or(WorldError::OffMap(position[0], position[1]))?;
        Ok(MdpState { position, sinr_db })
    }

    pub fn is_outage(&self, state: &MdpState) -> bool {
        crate::radiomap::outage(state.sinr_db, self.radio_map.phi_th_db)
    }

    pub fn distance_to_target(&self, position: [f64; 2]) -> f64 {
        (position[0] - self.mission.target[0]).hypot(position[1] - self.mission.target[1])
    }

    pub fn has_arrived(&self, position: [f64; 2]) -> bool {
        self.distance_to_target(position) <= self.mission.arrival_radius
    }

    /// Uniformly random cell centre inside the start region.
    pub fn reset<R: Rng + ?Sized>(&self, rng: &mut R) -> MdpState {
        let p = self.start_cells[rng.gen_range(0..self.start_cells.len())];
        self.state_at(p).expect("start cells lie on the map")
    }

    /// Network input: `[x / width, y / depth, scaled SINR, outage flag]`.
    pub fn observe(&self, state: &MdpState) -> [f64; 4] {
        [
            state.position[0] / self.extent[0],
            state.position[1] / self.extent[1],
            self.normalization.sinr(state.sinr_db),
            if self.is_outage(state) { 1.0 } else { 0.0 },
        ]
    }

    /// Deterministic transition. `step_index` counts steps already taken.
    pub fn step(&self, state: &MdpState, action: Action, step_index: usize) -> Result<StepOutcome> {
        if step_index >= self.mission.max_steps || self.has_arrived(state.position) {
            return Err(WorldError::EpisodeOver { step: step_index });
        }
        let [dx, dy] = action.delta();
        let raw = [state.position[0] + dx * self.mission.step_length, state.position[1] + dy * self.mission.step_length];
        let next = [raw[0].clamp(0.0, self.extent[0]), raw[1].clamp(0.0, self.extent[1])];
        let clipped = next != raw;
        let next_state = self.state_at(next)?;
        let outage = self.is_outage(&next_state);
        let d = self.distance_to_target(next);
        let arrived = d <= self.mission.arrival_radius;
        let reward = self.reward.reward(d, outage, arrived);
        let done = arrived || step_index + 1 >= self.mission.max_steps;
        Ok(StepOutcome { next_state, reward, done, arrived, outage, clipped })
    }
}
