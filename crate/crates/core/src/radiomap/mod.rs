//! Air-to-ground propagation and SINR radio maps.
//!
//! Received power from sector `j` of base station `m` is
//! `P_t · G_mj(θ, φ) · l(d) · f²`, where `l` is a LoS or NLoS power law, `G`
//! is the 3GPP element pattern plus an array factor, and `f²` is a unit-mean
//! Nakagami-m power coefficient. The UAV attaches to the strongest sector;
//! every sector of every *other* base station counts as interference.

mod antenna;
mod fading;
mod geometry;
mod map;
mod pathloss;
mod sinr;

pub use antenna::{antenna_gain, array_factor, array_factor_at, element_pattern, local_angles, steering_vector, uniform_weights};
pub use fading::{sample_fading, NakagamiFading};
pub use geometry::{is_los, segment_hits_box, Aabb, Point3};
pub use map::{build_radio_map, build_radio_map_with, load_radio_map, save_radio_map, RadioMap, RADIO_MAP_FORMAT_VERSION};
pub use pathloss::{log_distance_path_loss, path_loss, simple_rss};
pub use sinr::{link_powers, outage, sinr_at, Fading, LinkPower, SinrSample};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RadioError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid base station: {0}")]
    InvalidBaseStation(String),
    #[error("invalid building: {0}")]
    InvalidBuilding(String),
    #[error("invalid propagation parameters: {0}")]
    InvalidParams(String),
    #[error("sector index {0} out of range (0..3)")]
    InvalidSector(usize),
    #[error("length mismatch: amplitude {amplitude} vs weights {weights}")]
    LengthMismatch { amplitude: usize, weights: usize },
    #[error("position ({x}, {y}, {z}) outside the map")]
    OutOfBounds { x: f64, y: f64, z: f64 },
    #[error("altitude {altitude} m does not clear building of height {building} m")]
    AltitudeBelowBuilding { altitude: f64, building: f64 },
    #[error("radio map parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("unsupported radio map format version {found} (expected {expected})")]
    Version { found: u32, expected: u32 },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = RadioError> = std::result::Result<T, E>;

/// One three-sector ground base station.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaseStation {
    /// Horizontal position (x_s, y_s) in meters.
    pub position: [f64; 2],
    /// Antenna height h_s in meters.
    pub height: f64,
    /// Transmit power per sector in watts. Zero marks a failed station.
    pub tx_power: f64,
    /// Boresight azimuths in degrees, counter-clockwise from +x.
    pub sector_azimuths: [f64; 3],
    /// Mechanical downtilt in degrees, positive below the horizon.
    pub downtilt: f64,
}

impl BaseStation {
    pub const MIN_HEIGHT: f64 = 5.0;
    pub const MAX_HEIGHT: f64 = 25.0;

    /// Builds a station with sectors at `azimuth0`, `azimuth0 + 120`, `azimuth0 + 240`.
    pub fn new(position: [f64; 2], height: f64, tx_power: f64, azimuth0: f64, downtilt: f64) -> Result<Self> {
        let bs = Self { position, height, tx_power, sector_azimuths: [azimuth0, azimuth0 + 120.0, azimuth0 + 240.0].map(crate::units::wrap_degrees), downtilt };
        bs.validate()?;
        Ok(bs)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tx_power > 0.0) || !self.tx_power.is_finite() {
            return Err(RadioError::InvalidBaseStation(format!("tx_power must be > 0, got {}", self.tx_power)));
        }
        self.validate_geometry()
    }

    /// Checks everything except transmit power, so that failed stations still validate.
    pub fn validate_geometry(&self) -> Result<()> {
        if !(Self::MIN_HEIGHT..=Self::MAX_HEIGHT).contains(&self.height) {
            return Err(RadioError::InvalidBaseStation(format!("height {} outside [5, 25] m", self.height)));
        }
        for i in 0..3 {
            for j in (i + 1)..3 {
                let diff = crate::units::wrap_degrees(self.sector_azimuths[i] - self.sector_azimuths[j]);
                if diff.abs() < 1e-9 {
                    return Err(RadioError::InvalidBaseStation("sector azimuths must be distinct mod 360".into()));
                }
            }
        }
        if !self.downtilt.is_finite() || !self.position.iter().all(|v| v.is_finite()) {
            return Err(RadioError::InvalidBaseStation("non-finite geometry".into()));
        }
        Ok(())
    }

    pub fn is_active(&self) -> bool {
        self.tx_power > 0.0
    }

    pub fn antenna_position(&self) -> Point3 {
        Point3::new(self.position[0], self.position[1], self.height)
    }
}

/// Axis-aligned building block standing on the ground.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Building {
    /// `[x_min, y_min]`.
    pub min: [f64; 2],
    /// `[x_max, y_max]`.
    pub max: [f64; 2],
    pub height: f64,
}

impl Building {
    pub fn new(min: [f64; 2], max: [f64; 2], height: f64) -> Result<Self> {
        if !(min[0] < max[0] && min[1] < max[1]) {
            return Err(RadioError::InvalidBuilding(format!("empty footprint {min:?}..{max:?}")));
        }
        if !(height > 0.0) || !height.is_finite() {
            return Err(RadioError::InvalidBuilding(format!("height must be > 0, got {height}")));
        }
        Ok(Self { min, max, height })
    }

    pub fn aabb(&self) -> Aabb {
        Aabb { min: Point3::new(self.min[0], self.min[1], 0.0), max: Point3::new(self.max[0], self.max[1], self.height) }
    }

    pub fn contains_xy(&self, x: f64, y: f64) -> bool {
        x >= self.min[0] && x <= self.max[0] && y >= self.min[1] && y <= self.max[1]
    }
}

/// Which large-scale model feeds the link budget.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PropagationModel {
    /// LoS/NLoS power laws with sector antennas.
    #[default]
    PowerLaw,
    /// Isotropic log-distance RSS with a deterministic offset `sigma2_db`.
    LogDistance { l0_db: f64, alpha: f64, d0: f64, sigma2_db: f64 },
}

/// Propagation and antenna constants. Angles in degrees, gains in dB.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PropagationParams {
    pub x_los: f64,
    pub x_nlos: f64,
    pub alpha_los: f64,
    pub alpha_nlos: f64,
    pub g_max_db: f64,
    pub theta_3db: f64,
    pub phi_3db: f64,
    pub slav_db: f64,
    pub am_db: f64,
    pub n_elements: usize,
    pub nakagami_m_los: f64,
    pub nakagami_m_nlos: f64,
    /// Noise spectral density, W/Hz.
    pub n0: f64,
    /// Bandwidth, Hz.
    pub bandwidth: f64,
    /// Outage threshold in dB (inclusive).
    pub phi_th_db: f64,
    pub model: PropagationModel,
}

impl Default for PropagationParams {
    fn default() -> Self {
        Self {
            x_los: 10f64.powf(-3.4),
            x_nlos: 10f64.powf(-3.6),
            alpha_los: 2.2,
            alpha_nlos: 3.5,
            g_max_db: 8.0,
            theta_3db: 65.0,
            phi_3db: 65.0,
            slav_db: 30.0,
            am_db: 30.0,
            n_elements: 8,
            nakagami_m_los: 3.0,
            nakagami_m_nlos: 1.0,
            n0: 4e-21,
            bandwidth: 10e6,
            phi_th_db: 0.0,
            model: PropagationModel::PowerLaw,
        }
    }
}

impl PropagationParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(RadioError::InvalidParams(msg.to_string()));
        if !(self.alpha_los > 0.0) || self.alpha_nlos < self.alpha_los {
            return bad("need alpha_nlos >= alpha_los > 0");
        }
        if !(self.x_los > 0.0 && self.x_nlos > 0.0) {
            return bad("path-loss intercepts must be > 0");
        }
        if self.nakagami_m_los < 0.5 || self.nakagami_m_nlos < 0.5 {
            return bad("nakagami m must be >= 0.5");
        }
        if !(self.bandwidth > 0.0) || !(self.n0 >= 0.0) {
            return bad("bandwidth must be > 0 and n0 >= 0");
        }
        if !(self.theta_3db > 0.0 && self.phi_3db > 0.0) {
            return bad("3 dB beamwidths must be > 0");
        }
        if self.n_elements == 0 {
            return bad("n_elements must be >= 1");
        }
        let db = [self.g_max_db, self.slav_db, self.am_db, self.phi_th_db];
        if !db.iter().all(|v| v.is_finite()) {
            return bad("dB constants must be finite");
        }
        Ok(())
    }

    /// Thermal noise power `N0 · B` in watts.
    pub fn noise_power(&self) -> f64 {
        self.n0 * self.bandwidth
    }
}
