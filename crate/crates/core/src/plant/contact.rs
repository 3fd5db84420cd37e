use serde::{Deserialize, Serialize};

use crate::calibration::FootWrench;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Terrain {
    Floor,
    Water,
    /// Floor for `x < x_w`, water beyond.
    Shoreline { x_w: f64 },
}

impl Terrain {
    pub fn is_water(&self, x: f64) -> bool {
        match *self {
            Terrain::Floor => false,
            Terrain::Water => true,
            Terrain::Shoreline { x_w } => x >= x_w,
        }
    }

    /// Share of the body length over water.
    pub fn submerged_fraction(&self, beyond: impl FnOnce(f64) -> f64) -> f64 {
        match *self {
            Terrain::Floor => 0.0,
            Terrain::Water => 1.0,
            Terrain::Shoreline { x_w } => beyond(x_w),
        }
    }
}

/// Quasi-static foot contact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ContactParams {
    /// Share of body weight carried by the feet on dry ground; the belly
    /// takes the rest.
    pub support_fraction: f64,
    pub gravity: f64,
    /// Dorsoventral angle at which a foot would leave the ground (rad).
    /// Feet press harder the further the leg is swung below it.
    pub contact_angle: f64,
    /// Centre of pressure offset from the foot centre (mm).
    pub cop_offset_mm: f64,
    pub friction: f64,
    /// Radius at which friction twists the skin (mm).
    pub yaw_lever_mm: f64,
    /// Fore-aft rate at which friction is half saturated, roughly (rad/s).
    pub yaw_rate_scale: f64,
    /// Weight relief when the whole body is over water.
    pub buoyancy: f64,
    /// Per-leg multiplier on contact depth (FL, FR, HL, HR). All ones
    /// loads the feet evenly.
    pub load_asymmetry: [f64; 4],
}

impl Default for ContactParams {
    fn default() -> Self {
        Self {
            support_fraction: 0.8,
            gravity: 9.81,
            contact_angle: 62.5f64.to_radians(),
            cop_offset_mm: 8.0,
            friction: 0.2,
            yaw_lever_mm: 19.0,
            yaw_rate_scale: 0.5,
            buoyancy: 0.6,
            load_asymmetry: [1.0; 4],
        }
    }
}

impl ContactParams {
    pub fn validate(&self) -> Result<(), String> {
        if !(0.0..=1.0).contains(&self.support_fraction) || !(0.0..=1.0).contains(&self.buoyancy) {
            return Err("support fraction and buoyancy must lie in [0, 1]".into());
        }
        if self.load_asymmetry.iter().any(|k| !(*k > 0.0)) {
            return Err("load asymmetry factors must be positive".into());
        }
        if !(self.contact_angle > 0.0 && self.yaw_rate_scale > 0.0 && self.gravity > 0.0) {
            return Err("contact angle, yaw rate scale and gravity must be positive".into());
        }
        Ok(())
    }

    /// Weight the feet carry (N) for a body of `mass` kg with `submerged`
    /// of its length over water.
    pub fn supported_weight(&self, mass: f64, submerged: f64) -> f64 {
        mass * self.gravity * self.support_fraction * (1.0 - self.buoyancy * submerged.clamp(0.0, 1.0))
    }
}

/// Distributes `weight` over the grounded feet in proportion to how far
/// each dorsoventral joint sits below the contact angle.
///
/// `grounded[l]` says whether leg `l` stands on floor, `dorsoventral[l]` is its
/// dorsoventral angle and `fore_aft_rate[l]` its fore-aft angular rate.
pub fn contact_forces(
    params: &ContactParams,
    weight: f64,
    grounded: &[bool; 4],
    dorsoventral: &[f64; 4],
    fore_aft_rate: &[f64; 4],
) -> [FootWrench; 4] {
    let depth: [f64; 4] =
        std::array::from_fn(|l| if grounded[l] { params.load_asymmetry[l] * (params.contact_angle - dorsoventral[l]).max(0.0) } else { 0.0 });
    let total: f64 = depth.iter().sum();
    std::array::from_fn(|l| {
        if total <= 0.0 || depth[l] == 0.0 {
            return FootWrench::default();
        }
        let n = weight * depth[l] / total;
        FootWrench::new(
            n * params.cop_offset_mm,
            params.friction * n * params.yaw_lever_mm * (fore_aft_rate[l] / params.yaw_rate_scale).tanh(),
            n,
        )
    })
}
