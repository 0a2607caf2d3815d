use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Result, WorldError};
use crate::radiomap::{BaseStation, Building};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnvId {
    /// Dense downtown with tall blocks.
    Env1,
    /// Sparse urban area, short buildings.
    Env2,
    /// Low suburban housing, three stations.
    Env3,
}

impl EnvId {
    pub const ALL: [EnvId; 3] = [EnvId::Env1, EnvId::Env2, EnvId::Env3];

    pub fn name(self) -> &'static str {
        match self {
            EnvId::Env1 => "env1",
            EnvId::Env2 => "env2",
            EnvId::Env3 => "env3",
        }
    }
}

impl std::fmt::Display for EnvId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            EnvId::Env1 => "env1",
            EnvId::Env2 => "env2",
            EnvId::Env3 => "env3",
        })
    }
}

impl std::str::FromStr for EnvId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "env1" | "1" => Ok(EnvId::Env1),
            "env2" | "2" => Ok(EnvId::Env2),
            "env3" | "3" => Ok(EnvId::Env3),
            other => Err(format!("unknown environment {other:?}")),
        }
    }
}

/// Buildings and base stations of one environment. Immutable once built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CityMap {
    /// `[width, depth]` in meters; the map spans `[0, width] × [0, depth]`.
    pub extent: [f64; 2],
    pub buildings: Vec<Building>,
    pub base_stations: Vec<BaseStation>,
    pub env_id: Option<EnvId>,
    pub seed: u64,
}

impl CityMap {
    /// A square city with no buildings and no stations.
    pub fn empty(side: f64) -> Self {
        Self { extent: [side, side], buildings: Vec::new(), base_stations: Vec::new(), env_id: None, seed: 0 }
    }

    pub fn contains_xy(&self, x: f64, y: f64) -> bool {
        x >= 0.0 && y >= 0.0 && x <= self.extent[0] && y <= self.extent[1]
    }

    pub fn max_building_height(&self) -> f64 {
        self.buildings.iter().map(|b| b.height).fold(0.0, f64::max)
    }

    pub fn mean_building_height(&self) -> f64 {
        if self.buildings.is_empty() {
            return 0.0;
        }
        self.buildings.iter().map(|b| b.height).sum::<f64>() / self.buildings.len() as f64
    }

    /// Plain-text listing of buildings and stations for inspection.
    pub fn export_text(&self) -> String {
        let mut out = format!("# city env={} seed={} extent={}x{}\n", self.env_id.map_or("custom", EnvId::name), self.seed, self.extent[0], self.extent[1]);
        out.push_str("[buildings] x_min y_min x_max y_max height\n");
        for b in &self.buildings {
            out.push_str(&format!("{:.3} {:.3} {:.3} {:.3} {:.3}\n", b.min[0], b.min[1], b.max[0], b.max[1], b.height));
        }
        out.push_str("[base_stations] x y height tx_power_w az0 az1 az2 downtilt\n");
        for s in &self.base_stations {
            out.push_str(&format!(
                "{:.3} {:.3} {:.3} {} {:.3} {:.3} {:.3} {:.3}\n",
                s.position[0], s.position[1], s.height, s.tx_power, s.sector_azimuths[0], s.sector_azimuths[1], s.sector_azimuths[2], s.downtilt
            ));
        }
        out
    }
}

/// Generation bands for one environment class. Lengths are fractions of the
/// map extent so the same preset scales to any map size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CityPreset {
    /// Block pitch as a fraction of the extent.
    pub block_pitch: f64,
    /// Probability that a block holds a building.
    pub occupancy: f64,
    /// Footprint side range as a fraction of the pitch.
    pub footprint: [f64; 2],
    /// Building height band in meters.
    pub height: [f64; 2],
    /// Station sites as fractions of the extent.
    pub sites: Vec<[f64; 2]>,
    pub site_jitter: f64,
    /// Buildings are kept this far (fraction of extent) from station sites.
    pub site_clearance: f64,
    pub bs_height: [f64; 2],
    pub tx_power: f64,
    pub downtilt: f64,
}

impl CityPreset {
    pub fn for_env(env: EnvId) -> Self {
        match env {
            EnvId::Env1 => Self {
                block_pitch: 1.0 / 12.0,
                occupancy: 0.85,
                footprint: [0.5, 0.7],
                height: [40.0, 85.0],
                sites: vec![[0.2, 0.25], [0.7, 0.2], [0.25, 0.75], [0.8, 0.7]],
                site_jitter: 0.03,
                site_clearance: 0.03,
                bs_height: [18.0, 25.0],
                tx_power: 40.0,
                downtilt: 10.0,
            },
            EnvId::Env2 => Self {
                block_pitch: 1.0 / 16.0,
                occupancy: 0.6,
                footprint: [0.5, 0.8],
                height: [10.0, 30.0],
                sites: vec![[0.35, 0.1], [0.1, 0.55], [0.9, 0.4], [0.55, 0.9]],
                site_jitter: 0.03,
                site_clearance: 0.01,
                bs_height: [8.0, 12.0],
                tx_power: 40.0,
                downtilt: 10.0,
            },
            EnvId::Env3 => Self {
                block_pitch: 1.0 / 25.0,
                occupancy: 0.8,
                footprint: [0.6, 0.9],
                height: [5.0, 15.0],
                sites: vec![[0.3, 0.3], [0.85, 0.35], [0.45, 0.85]],
                site_jitter: 0.03,
                site_clearance: 0.005,
                bs_height: [5.0, 8.0],
                tx_power: 40.0,
                downtilt: 10.0,
            },
        }
    }
}

/// Preset city on the default 2 km × 2 km map.
pub fn generate_city(env: EnvId, seed: u64) -> CityMap {
    generate_city_with(env, &CityPreset::for_env(env), 2000.0, seed)
}

/// Deterministic city for `(preset, extent, seed)`.
pub fn generate_city_with(env: EnvId, preset: &CityPreset, extent: f64, seed: u64) -> CityMap {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (0x9e37_79b9_7f4a_7c15u64.wrapping_mul(env as u64 + 1)));
    let jitter = preset.site_jitter * extent;
    let sites: Vec<[f64; 2]> = preset
        .sites
        .iter()
        .map(|s| {
            let jx = if jitter > 0.0 { rng.gen_range(-jitter..=jitter) } else { 0.0 };
            let jy = if jitter > 0.0 { rng.gen_range(-jitter..=jitter) } else { 0.0 };
            [(s[0] * extent + jx).clamp(0.0, extent), (s[1] * extent + jy).clamp(0.0, extent)]
        })
        .collect();
    let base_stations = sites
        .iter()
        .map(|&site| {
            let h = sample_band(&mut rng, preset.bs_height);
            let az0 = rng.gen_range(0.0..120.0);
            BaseStation::new(site, h, preset.tx_power, az0, preset.downtilt).expect("preset station is valid")
        })
        .collect();

    let pitch = preset.block_pitch * extent;
    let blocks = (extent / pitch).floor() as usize;
    let clearance = preset.site_clearance * extent;
    let mut buildings = Vec::new();
    for bx in 0..blocks {
        for by in 0..blocks {
            // draw everything up front so the stream does not depend on rejections
            let occupied = rng.gen_bool(preset.occupancy.clamp(0.0, 1.0));
            let w = sample_band(&mut rng, preset.footprint) * pitch;
            let d = sample_band(&mut rng, preset.footprint) * pitch;
            let h = sample_band(&mut rng, preset.height);
            let ox = rng.gen_range(0.0..=1.0) * (pitch - w);
            let oy = rng.gen_range(0.0..=1.0) * (pitch - d);
            if !occupied {
                continue;
            }
            let min = [bx as f64 * pitch + ox, by as f64 * pitch + oy];
            let max = [min[0] + w, min[1] + d];
            let near_site = sites.iter().any(|s| {
                let cx = s[0].clamp(min[0], max[0]);
                let cy = s[1].clamp(min[1], max[1]);
                (s[0] - cx).hypot(s[1] - cy) < clearance
            });
            if near_site {
                continue;
            }
            buildings.push(Building::new(min, max, h).expect("preset building is valid"));
        }
    }
    CityMap { extent: [extent, extent], buildings, base_stations, env_id: Some(env), seed }
}

fn sample_band(rng: &mut ChaCha8Rng, band: [f64; 2]) -> f64 {
    if band[1] > band[0] {
        rng.gen_range(band[0]..band[1])
    } else {
        band[0]
    }
}

/// Copy of `city` with station `bs_index` switched off (zero transmit power),
/// removing it from both serving and interference.
pub fn apply_emergency(city: &CityMap, bs_index: usize) -> Result<CityMap> {
    let count = city.base_stations.len();
    let mut out = city.clone();
    let bs = out.base_stations.get_mut(bs_index).ok_or(WorldError::InvalidStation { index: bs_index, count })?;
    bs.tx_power = 0.0;
    Ok(out)
}
