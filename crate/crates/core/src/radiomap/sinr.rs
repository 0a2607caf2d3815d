use rand::RngCore;
use serde::{Deserialize, Serialize};

use super::{antenna_gain, is_los, path_loss, simple_rss, NakagamiFading, Point3, PropagationModel, PropagationParams, RadioError, Result};
use crate::cityworld::CityMap;
use crate::units::{dbm_to_watts, linear_to_db};
use rand_distr::Distribution;

/// Small-scale fading treatment for a link-budget evaluation.
pub enum Fading<'a> {
    /// Unit-mean coefficient of 1 on every link.
    Deterministic,
    /// Fresh Nakagami draw per link from the caller's generator.
    Sampled(&'a mut dyn RngCore),
}

/// Received power of one base-station sector at the UAV.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkPower {
    pub bs: usize,
    pub sector: usize,
    pub los: bool,
    /// Watts.
    pub power: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SinrSample {
    pub sinr_db: f64,
    /// `None` when every station is down.
    pub serving_bs: Option<usize>,
    pub serving_sector: Option<usize>,
}

/// Outage indicator: SINR at or below the threshold. `-inf` is always in outage.
pub fn outage(sinr_db: f64, phi_th_db: f64) -> bool {
    sinr_db <= phi_th_db || sinr_db.is_nan()
}

fn check_position(uav: &Point3, city: &CityMap) -> Result<()> {
    if !city.contains_xy(uav.x, uav.y) || !(uav.z > 0.0) || !uav.z.is_finite() {
        return Err(RadioError::OutOfBounds { x: uav.x, y: uav.y, z: uav.z });
    }
    if let Some(b) = city.buildings.iter().find(|b| b.contains_xy(uav.x, uav.y) && b.height >= uav.z) {
        return Err(RadioError::AltitudeBelowBuilding { altitude: uav.z, building: b.height });
    }
    Ok(())
}

/// Per-sector received powers from every active station, in station order.
pub fn link_powers(uav: &Point3, city: &CityMap, p: &PropagationParams, fading: &mut Fading<'_>) -> Result<Vec<LinkPower>> {
    check_position(uav, city)?;
    let mut links = Vec::with_capacity(city.base_stations.len() * 3);
    for (m, bs) in city.base_stations.iter().enumerate().filter(|(_, bs)| bs.is_active()) {
        let antenna = bs.antenna_position();
        let los = is_los(uav, &antenna, city);
        let shape = if los { p.nakagami_m_los } else { p.nakagami_m_nlos };
        let draw = |fading: &mut Fading<'_>| -> Result<f64> {
            Ok(match fading {
                Fading::Deterministic => 1.0,
                Fading::Sampled(rng) => NakagamiFading::new(shape)?.sample(rng),
            })
        };
        match p.model {
            PropagationModel::PowerLaw => {
                let gain_path = path_loss(uav.distance(&antenna), los, p)?;
                for j in 0..3 {
                    let g = crate::units::db_to_linear(antenna_gain(bs, j, uav, p)?);
                    let f = draw(fading)?;
                    links.push(LinkPower { bs: m, sector: j, los, power: bs.tx_power * g * gain_path * f });
                }
            }
            PropagationModel::LogDistance { l0_db, alpha, d0, sigma2_db } => {
                let rss = dbm_to_watts(simple_rss(*uav, bs, l0_db, alpha, d0, sigma2_db)?);
                let f = draw(fading)?;
                links.push(LinkPower { bs: m, sector: 0, los, power: rss * f });
            }
        }
    }
    Ok(links)
}

/// Best-serving SINR at `uav`.
///
/// The UAV attaches to the strongest sector (ties go to the lowest station,
/// then sector index). Interference sums all sectors of all other stations;
/// the serving station's remaining sectors do not interfere.
pub fn sinr_at(uav: &Point3, city: &CityMap, p: &PropagationParams, mut fading: Fading<'_>) -> Result<SinrSample> {
    let links = link_powers(uav, city, p, &mut fading)?;
    let mut best: Option<&LinkPower> = None;
    for l in &links {
        if best.is_none_or(|b| l.power > b.power) {
            best = Some(l);
        }
    }
    let noise = p.noise_power();
    let Some(serving) = best else {
        return Ok(SinrSample { sinr_db: f64::NEG_INFINITY, serving_bs: None, serving_sector: None });
    };
    let interference: f64 = links.iter().filter(|l| l.bs != serving.bs).map(|l| l.power).sum();
    Ok(SinrSample { sinr_db: linear_to_db(serving.power / (interference + noise)), serving_bs: Some(serving.bs), serving_sector: Some(serving.sector) })
}
