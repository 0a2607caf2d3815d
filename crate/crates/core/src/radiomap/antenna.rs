use num_complex::Complex64;

use super::{BaseStation, Point3, PropagationParams, RadioError, Result};
use crate::units::wrap_degrees;

/// 3GPP element pattern in dB. `theta` is the local zenith angle (90° on the
/// horizon of the tilted sector), `phi` the azimuth off boresight.
pub fn element_pattern(theta: f64, phi: f64, p: &PropagationParams) -> f64 {
    let vertical = -(12.0 * ((theta - 90.0) / p.theta_3db).powi(2)).min(p.slav_db);
    let horizontal = -(12.0 * (phi / p.phi_3db).powi(2)).min(p.am_db);
    p.g_max_db - (-(vertical + horizontal)).min(p.am_db)
}

/// `10·log10(1 + |a · wᵀ|)` in dB.
pub fn array_factor(amplitude: &[Complex64], weights: &[Complex64]) -> Result<f64> {
    if amplitude.len() != weights.len() {
        return Err(RadioError::LengthMismatch { amplitude: amplitude.len(), weights: weights.len() });
    }
    let inner: Complex64 = amplitude.iter().zip(weights).map(|(a, w)| a * w).sum();
    Ok(10.0 * (1.0 + inner.norm()).log10())
}

/// Unit-norm response of a vertical half-wavelength uniform linear array.
/// `theta` is measured from the tilted boresight frame, so the phase
/// progression vanishes on the electrically tilted main beam.
pub fn steering_vector(theta: f64, n: usize) -> Vec<Complex64> {
    let psi = std::f64::consts::PI * theta.to_radians().cos();
    let scale = 1.0 / (n as f64).sqrt();
    (0..n).map(|k| Complex64::from_polar(scale, psi * k as f64)).collect()
}

/// Equal unit-norm weights, phase-aligned on the tilted boresight.
pub fn uniform_weights(n: usize) -> Vec<Complex64> {
    vec![Complex64::new(1.0 / (n as f64).sqrt(), 0.0); n]
}

/// Array factor of the default array at local zenith angle `theta`.
pub fn array_factor_at(theta: f64, n: usize) -> f64 {
    array_factor(&steering_vector(theta, n), &uniform_weights(n)).expect("equal lengths")
}

/// Angles `(theta, phi)` in degrees of `uav` in the frame of `sector`:
/// `phi` is the azimuth offset from boresight in (-180, 180], `theta` is the
/// zenith angle shifted by the downtilt so that 90° is the tilted boresight.
pub fn local_angles(bs: &BaseStation, sector: usize, uav: &Point3) -> Result<(f64, f64)> {
    let boresight = *bs.sector_azimuths.get(sector).ok_or(RadioError::InvalidSector(sector))?;
    let dx = uav.x - bs.position[0];
    let dy = uav.y - bs.position[1];
    let dz = uav.z - bs.height;
    let horizontal = dx.hypot(dy);
    let azimuth = if horizontal == 0.0 { boresight } else { dy.atan2(dx).to_degrees() };
    let phi = wrap_degrees(azimuth - boresight);
    let zenith = horizontal.atan2(dz).to_degrees();
    let theta = (zenith - bs.downtilt).clamp(0.0, 180.0);
    Ok((theta, phi))
}

/// Total sector gain in dB: element pattern plus array factor.
pub fn antenna_gain(bs: &BaseStation, sector: usize, uav: &Point3, p: &PropagationParams) -> Result<f64> {
    let (theta, phi) = local_angles(bs, sector, uav)?;
    Ok(element_pattern(theta, phi, p) + array_factor_at(theta, p.n_elements))
}
