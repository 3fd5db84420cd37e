use serde::{Deserialize, Serialize};

use super::PlantError;
use crate::calibration::{self, FootTransducer, FootWrench};
use crate::magnetics::MagnetPose;
use crate::vec3::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FootLaw {
    /// Skin translates along x, then tilts and twists about the sensor.
    Rotational,
    /// First-order version of `Rotational`; magnet location is affine in the load.
    Linearized,
}

/// Foot skin compliance. The magnet rests at `(-rest_distance, 0, 0)` mm and
/// only moves in the three admitted directions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ElasticFootModel {
    /// mm
    pub rest_distance: f64,
    /// mm/N along x
    pub c_force: f64,
    /// rad/(N·mm)
    pub c_pitch: f64,
    /// rad/(N·mm)
    pub c_yaw: f64,
    /// N
    pub max_force: f64,
    /// N·mm
    pub max_torque: f64,
    pub law: FootLaw,
}

impl Default for ElasticFootModel {
    fn default() -> Self {
        Self {
            rest_distance: 5.0,
            c_force: 0.01,
            c_pitch: 1e-3,
            c_yaw: 1e-3,
            max_force: 40.0,
            max_torque: 250.0,
            law: FootLaw::Rotational,
        }
    }
}

impl ElasticFootModel {
    /// Default compliances scaled by per-axis factors.
    pub fn scaled(force: f64, pitch: f64, yaw: f64) -> Self {
        let d = Self::default();
        Self {
            c_force: d.c_force * force,
            c_pitch: d.c_pitch * pitch,
            c_yaw: d.c_yaw * yaw,
            ..d
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.c_force > 0.0 && self.c_pitch > 0.0 && self.c_yaw > 0.0) {
            return Err("foot compliances must be positive".into());
        }
        if !(self.rest_distance > 0.0) {
            return Err("rest distance must be positive".into());
        }
        Ok(())
    }

    pub fn rest(&self) -> Vec3 {
        Vec3::new(-self.rest_distance, 0.0, 0.0)
    }
}

/// Magnet pose under `wrench`, magnetization pointing back at the sensor.
pub fn foot_deflection(wrench: &FootWrench, model: &ElasticFootModel) -> Result<MagnetPose, PlantError> {
    if wrench.f_x.abs() > model.max_force
        || wrench.tau_pitch.abs() > model.max_torque
        || wrench.tau_yaw.abs() > model.max_torque
    {
        return Err(PlantError::OutOfElasticRange(format!(
            "({:.3} N·mm, {:.3} N·mm, {:.3} N) exceeds ±{} N / ±{} N·mm",
            wrench.tau_pitch, wrench.tau_yaw, wrench.f_x, model.max_force, model.max_torque
        )));
    }
    let x = -model.rest_distance + model.c_force * wrench.f_x;
    let pitch = model.c_pitch * wrench.tau_pitch;
    let yaw = model.c_yaw * wrench.tau_yaw;
    let p = match model.law {
        FootLaw::Rotational => {
            // R_z(yaw) · R_y(pitch) · (x, 0, 0)
            let (sp, cp) = pitch.sin_cos();
            let (sy, cy) = yaw.sin_cos();
            let v = Vec3::new(x * cp, 0.0, -x * sp);
            Vec3::new(cy * v.x - sy * v.y, sy * v.x + cy * v.y, v.z)
        }
        FootLaw::Linearized => Vec3::new(x, -model.rest_distance * yaw, model.rest_distance * pitch),
    };
    Ok(MagnetPose::radial(p)?)
}

impl FootTransducer for ElasticFootModel {
    fn magnet_position(&self, load: &FootWrench) -> calibration::Result<Vec3> {
        foot_deflection(load, self)
            .map(|pose| pose.p)
            .map_err(|e| calibration::CalibrationError::OutOfElasticRange(e.to_string()))
    }

    fn rest_position(&self) -> Vec3 {
        self.rest()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn zero_load_is_rest() {
        let m = ElasticFootModel::default();
        let pose = foot_deflection(&FootWrench::default(), &m).unwrap();
        assert_eq!(pose.p, m.rest());
        assert_eq!(pose.h, Vec3::new(1.0, 0.0, 0.0));
    }

    #[test]
    fn pure_normal_load_moves_only_x() {
        let m = ElasticFootModel::default();
        let p = foot_deflection(&FootWrench::new(0.0, 0.0, 8.0), &m).unwrap().p;
        assert_eq!((p.y, p.z), (0.0, 0.0));
        assert!((p.x - (-5.0 + 0.08)).abs() < 1e-12);
    }

    #[test]
    fn torques_tilt_the_magnet() {
        let m = ElasticFootModel::default();
        let p = foot_deflection(&FootWrench::new(10.0, 0.0, 0.0), &m).unwrap().p;
        assert!(p.z > 0.0 && p.y == 0.0);
        let q = foot_deflection(&FootWrench::new(0.0, 10.0, 0.0), &m).unwrap().p;
        assert!(q.y < 0.0 && q.z == 0.0);
        assert!((q.norm() - 5.0).abs() < 1e-12);
    }

    #[test]
    fn elastic_range_is_enforced() {
        let m = ElasticFootModel::default();
        assert!(matches!(
            foot_deflection(&FootWrench::new(0.0, 0.0, 41.0), &m),
            Err(PlantError::OutOfElasticRange(_))
        ));
    }

    proptest! {
        #[test]
        fn linear_law_doubles_displacements(tp in -50.0f64..50.0, ty in -50.0f64..50.0, f in -10.0f64..10.0) {
            let m = ElasticFootModel { law: FootLaw::Linearized, ..Default::default() };
            let w = FootWrench::new(tp, ty, f);
            let d1 = foot_deflection(&w, &m).unwrap().p - m.rest();
            let d2 = foot_deflection(&w.scaled(2.0), &m).unwrap().p - m.rest();
            prop_assert!((d2 - d1 * 2.0).norm() < 1e-12);
        }

        #[test]
        fn rotational_law_matches_linearized_to_second_order(tp in -1.0f64..1.0, ty in -1.0f64..1.0, f in -1.0f64..1.0) {
            let rot = ElasticFootModel::default();
            let lin = ElasticFootModel { law: FootLaw::Linearized, ..Default::default() };
            let w = FootWrench::new(tp, ty, f);
            let gap = (foot_deflection(&w, &rot).unwrap().p - foot_deflection(&w, &lin).unwrap().p).norm();
            // rest distance * angle² plus force shift * angle
            let a = 1e-3 * tp.abs().max(ty.abs());
            prop_assert!(gap <= 5.0 * a * a + 0.01 * f.abs() * 2.0 * a + 1e-15);
        }
    }
}
