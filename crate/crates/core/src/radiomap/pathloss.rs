use super::{BaseStation, Point3, PropagationParams, RadioError, Result};
use crate::units::watts_to_dbm;

/// Large-scale power gain `X · d^(-α)` (linear), LoS or NLoS law by `los`.
pub fn path_loss(d: f64, los: bool, p: &PropagationParams) -> Result<f64> {
    if !(d > 0.0) {
        return Err(RadioError::Domain(format!("path loss needs d > 0, got {d}")));
    }
    let (x, alpha) = if los { (p.x_los, p.alpha_los) } else { (p.x_nlos, p.alpha_nlos) };
    Ok(x * d.powf(-alpha))
}

/// Log-distance loss `L0 + 10·α·log10(d/d0)` in dB.
pub fn log_distance_path_loss(d: f64, l0_db: f64, alpha: f64, d0: f64) -> Result<f64> {
    if !(d0 > 0.0) || !(d >= d0) {
        return Err(RadioError::Domain(format!("log-distance loss needs d >= d0 > 0, got d={d}, d0={d0}")));
    }
    Ok(l0_db + 10.0 * alpha * (d / d0).log10())
}

/// Deterministic RSS in dBm at `point`: `P_t − L(d) + σ²`.
///
/// `d` is the 3-D distance to the antenna, clamped up to `d0` so points
/// closer than the reference distance see the reference loss.
pub fn simple_rss(point: Point3, tx: &BaseStation, l0_db: f64, alpha: f64, d0: f64, sigma2_db: f64) -> Result<f64> {
    let d = point.distance(&tx.antenna_position()).max(d0);
    let loss = log_distance_path_loss(d, l0_db, alpha, d0)?;
    Ok(watts_to_dbm(tx.tx_power) - loss + sigma2_db)
}
