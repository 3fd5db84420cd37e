use super::{DipoleParams, MagnetPose, MagneticsError, Result};
use crate::vec3::Vec3;

/// Point-dipole flux at the sensor origin for a magnet at `pose.p` magnetized
/// along `pose.h`:
///
/// ```text
/// B = n_t [3 (H·P) P - |P|² H] / |P|⁵
/// ```
pub fn dipole_flux(pose: &MagnetPose, params: &DipoleParams) -> Result<Vec3> {
    let d = params.check_distance(&pose.p)?;
    let p = pose.p;
    let h = pose.h;
    let d2 = d * d;
    let d5 = d2 * d2 * d;
    Ok((3.0 * h.dot(&p) * p - d2 * h) * (params.n_t / d5))
}

/// The foot specialization with `H = -P/|P|`, which collapses to
/// `B = -2 n_t P / |P|⁴`.
pub fn dipole_flux_radial(p: &Vec3, params: &DipoleParams) -> Result<Vec3> {
    let d = params.check_distance(p)?;
    let d2 = d * d;
    Ok(*p * (-2.0 * params.n_t / (d2 * d2)))
}

/// Closed-form inverse of [`dipole_flux_radial`].
///
/// `|B| = 2 n_t / |P|³` fixes the distance, and `P` is antiparallel to `B`.
pub fn invert_foot_flux(b: &Vec3, params: &DipoleParams) -> Result<Vec3> {
    let mag = b.norm();
    if !(mag > params.noise_floor) {
        return Err(MagneticsError::BelowNoiseFloor {
            magnitude: mag,
            floor: params.noise_floor,
        });
    }
    let dist = (2.0 * params.n_t / mag).cbrt();
    let d2 = dist * dist;
    Ok(*b * (-(d2 * d2) / (2.0 * params.n_t)))
}
