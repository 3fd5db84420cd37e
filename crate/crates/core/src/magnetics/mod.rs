//! Magnetic dipole sensing models.
//!
//! Positions are in millimetres and flux densities in millitesla. The lumped
//! dipole constant `n_t` (mT·mm³) absorbs permeability and magnetic moment, so
//! every model here is `n_t` times a purely geometric term.

mod dipole;
mod flow;
mod lowpass;

pub use dipole::{dipole_flux, dipole_flux_radial, invert_foot_flux};
pub use flow::{flow_flux, flow_flux_jacobian, invert_flow_flux, FlowSolverOptions};
pub use lowpass::LowPassState;

use serde::{Deserialize, Serialize};

use crate::vec3::Vec3;

/// Vacuum permeability over 4π, expressed so that `mu_r * m_t[A·m²] * K`
/// lands in mT·mm³.
const MU0_OVER_4PI_MT_MM3_PER_AM2: f64 = 1e-7 * 1e3 * 1e9;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MagneticsError {
    #[error("magnet at {distance} mm is closer than the {min} mm guard")]
    DegeneratePose { distance: f64, min: f64 },
    #[error("flux magnitude {magnitude} mT is below the {floor} mT noise floor; no magnet detectable")]
    BelowNoiseFloor { magnitude: f64, floor: f64 },
    #[error("flow inversion did not converge (best residual {residual} mT after {iterations} Newton steps and grid fallback)")]
    NoConvergence { residual: f64, iterations: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, MagneticsError>;

/// Lumped dipole constant plus the sanity guards used by the inversions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DipoleParams {
    /// mT·mm³
    pub n_t: f64,
    /// Poses closer than this to the sensor origin are rejected (mm).
    #[serde(default = "default_min_distance")]
    pub min_distance: f64,
    /// Flux magnitudes below this are treated as "no magnet" (mT).
    #[serde(default = "default_noise_floor")]
    pub noise_floor: f64,
}

fn default_min_distance() -> f64 {
    1.0
}

fn default_noise_floor() -> f64 {
    0.001
}

impl Default for DipoleParams {
    fn default() -> Self {
        Self {
            n_t: 50.0,
            min_distance: default_min_distance(),
            noise_floor: default_noise_floor(),
        }
    }
}

impl DipoleParams {
    pub fn new(n_t: f64) -> Result<Self> {
        let p = Self {
            n_t,
            ..Self::default()
        };
        p.validate()?;
        Ok(p)
    }

    /// Builds the constant from relative permeability and magnetic moment (A·m²).
    pub fn from_constituents(mu_r: f64, m_t: f64) -> Result<Self> {
        Self::new(mu_r * m_t * MU0_OVER_4PI_MT_MM3_PER_AM2)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.n_t.is_finite() && self.n_t > 0.0) {
            return Err(MagneticsError::InvalidParameter(format!(
                "n_t must be positive, got {}",
                self.n_t
            )));
        }
        if !(self.min_distance >= 0.0 && self.noise_floor >= 0.0) {
            return Err(MagneticsError::InvalidParameter(
                "guards must be non-negative".into(),
            ));
        }
        Ok(())
    }

    pub(crate) fn check_distance(&self, p: &Vec3) -> Result<f64> {
        let d = p.norm();
        if !(d >= self.min_distance) {
            return Err(MagneticsError::DegeneratePose {
                distance: d,
                min: self.min_distance,
            });
        }
        Ok(d)
    }
}

/// Magnet position `p` (mm) and unit magnetization direction `h`, both in the
/// sensor frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MagnetPose {
    pub p: Vec3,
    pub h: Vec3,
}

impl MagnetPose {
    pub fn new(p: Vec3, h: Vec3) -> Result<Self> {
        if !p.is_finite() || !h.is_finite() {
            return Err(MagneticsError::InvalidParameter(
                "non-finite magnet pose".into(),
            ));
        }
        if (h.norm() - 1.0).abs() > 1e-9 {
            return Err(MagneticsError::InvalidParameter(format!(
                "magnetization direction must be unit length, |h| = {}",
                h.norm()
            )));
        }
        if p.norm() == 0.0 {
            return Err(MagneticsError::DegeneratePose {
                distance: 0.0,
                min: f64::MIN_POSITIVE,
            });
        }
        Ok(Self { p, h })
    }

    /// Foot convention: the magnetization points back at the sensor origin.
    pub fn radial(p: Vec3) -> Result<Self> {
        if p.norm() == 0.0 || !p.is_finite() {
            return Err(MagneticsError::DegeneratePose {
                distance: p.norm(),
                min: f64::MIN_POSITIVE,
            });
        }
        Ok(Self {
            p,
            h: -p.normalized(),
        })
    }
}

/// One 3-axis Hall reading.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FluxSample {
    /// mT
    pub b: Vec3,
    /// °C
    pub temperature: f64,
    /// s
    pub timestamp: f64,
    pub module_id: u8,
}

/// Fin-sensor magnet pose: the magnet stays in the plane `z = d_z0` and its
/// magnetization lies in the xy-plane with `h_x = sqrt(1 - h_y²) >= 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowPose {
    pub p_x: f64,
    pub p_y: f64,
    pub h_y: f64,
    pub d_z0: f64,
}

impl FlowPose {
    pub fn new(p_x: f64, p_y: f64, h_y: f64, d_z0: f64) -> Result<Self> {
        if !(p_x.is_finite() && p_y.is_finite() && h_y.is_finite() && d_z0.is_finite()) {
            return Err(MagneticsError::InvalidParameter(
                "non-finite flow pose".into(),
            ));
        }
        if h_y.abs() > 1.0 {
            return Err(MagneticsError::InvalidParameter(format!(
                "|h_y| must not exceed 1, got {h_y}"
            )));
        }
        Ok(Self { p_x, p_y, h_y, d_z0 })
    }

    /// Fin magnet on a circle of `radius` about the z-axis. At `angle = 0` it
    /// sits on the -y axis magnetized along +x (tangent to the circle); a fin
    /// rotation by `angle` rotates both.
    ///
    /// A radial magnetization would make the three flux equations
    /// rank-deficient (position and direction trade off to first order), so
    /// the tangential mounting is the one the inversion relies on.
    pub fn tangential(radius: f64, angle: f64, d_z0: f64) -> Self {
        Self {
            p_x: radius * angle.sin(),
            p_y: -radius * angle.cos(),
            h_y: angle.sin(),
            d_z0,
        }
    }

    pub fn h_x(&self) -> f64 {
        (1.0 - self.h_y * self.h_y).max(0.0).sqrt()
    }

    pub fn position(&self) -> Vec3 {
        Vec3::new(self.p_x, self.p_y, self.d_z0)
    }

    pub fn direction(&self) -> Vec3 {
        Vec3::new(self.h_x(), self.h_y, 0.0)
    }

    /// Rotates position and magnetization about the z-axis.
    pub fn rotated(&self, angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        let hx = self.h_x();
        Self {
            p_x: c * self.p_x - s * self.p_y,
            p_y: s * self.p_x + c * self.p_y,
            h_y: (s * hx + c * self.h_y).clamp(-1.0, 1.0),
            d_z0: self.d_z0,
        }
    }
}
