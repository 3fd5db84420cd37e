use serde::{Deserialize, Serialize};

use crate::calibration::{self, FinTransducer};
use crate::magnetics::FlowPose;

/// Fin flow sensor: a spring-hinged fin whose magnet swings on a circle
/// above the Hall sensor. Flow loads the fin laterally.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FlowFinModel {
    /// Spine link carrying the fin (the last value addresses the tail clamp).
    pub mount_link: usize,
    /// Axial joint in front of the fin.
    pub anterior_joint: usize,
    /// Distance from the anterior joint to the fin (m).
    pub mount_distance: f64,
    /// Hinge stiffness (N·mm/rad).
    pub stiffness: f64,
    /// Centre of pressure above the hinge (mm).
    pub lever_mm: f64,
    /// Quadratic drag (N·s²/m²).
    pub drag: f64,
    /// Magnet circle radius and height above the sensor (mm).
    pub radius: f64,
    pub d_z0: f64,
    /// Mechanical stop (rad).
    pub max_angle: f64,
}

impl Default for FlowFinModel {
    fn default() -> Self {
        Self {
            mount_link: 1,
            anterior_joint: 0,
            mount_distance: 0.03,
            stiffness: 7.5,
            lever_mm: 15.0,
            drag: 2.5,
            radius: 4.0,
            d_z0: 3.0,
            max_angle: 60f64.to_radians(),
        }
    }
}

impl FlowFinModel {
    pub fn on_link(mount_link: usize, anterior_joint: usize, mount_distance: f64) -> Self {
        Self {
            mount_link,
            anterior_joint,
            mount_distance,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.stiffness > 0.0 && self.lever_mm > 0.0 && self.drag >= 0.0) {
            return Err("fin stiffness and lever must be positive, drag non-negative".into());
        }
        if !(self.radius > 0.0 && self.max_angle > 0.0 && self.mount_distance >= 0.0) {
            return Err("fin geometry must be positive".into());
        }
        if self.anterior_joint >= crate::cpg::AXIAL_JOINTS {
            return Err(format!("anterior joint {} is not axial", self.anterior_joint));
        }
        Ok(())
    }

    /// Hinge deflection under lateral load `force` (N), held by the stops.
    pub fn deflection(&self, force: f64) -> f64 {
        (force * self.lever_mm / self.stiffness).clamp(-self.max_angle, self.max_angle)
    }

    /// Lateral hydrodynamic load on the fin when the body advances at
    /// `speed` (m/s) and the anterior joint sits at `angle` turning at
    /// `rate` (rad, rad/s). Water crosses the fin at `U sin θ − θ̇ d`.
    pub fn flow_force(&self, speed: f64, angle: f64, rate: f64) -> f64 {
        let w = speed * angle.sin() - rate * self.mount_distance;
        self.drag * w * w.abs()
    }
}

impl FinTransducer for FlowFinModel {
    fn magnet_pose(&self, force: f64) -> calibration::Result<FlowPose> {
        if !force.is_finite() {
            return Err(calibration::CalibrationError::OutOfElasticRange(format!("fin load {force}")));
        }
        Ok(FlowPose::tangential(self.radius, self.deflection(force), self.d_z0))
    }

    fn rest_pose(&self) -> FlowPose {
        FlowPose::tangential(self.radius, 0.0, self.d_z0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn stops_hold() {
        let f = FlowFinModel::default();
        assert_eq!(f.deflection(100.0), f.max_angle);
        assert_eq!(f.deflection(-100.0), -f.max_angle);
        assert!((f.deflection(0.1) - 0.2).abs() < 1e-12);
    }

    #[test]
    fn still_water_gives_no_load() {
        let f = FlowFinModel::default();
        assert_eq!(f.flow_force(0.0, 0.3, 0.0), 0.0);
        assert_eq!(f.flow_force(0.4, 0.0, 0.0), 0.0);
        // 0.4 sin(30°) = 0.2 m/s crossing flow
        assert!((f.flow_force(0.4, 30f64.to_radians(), 0.0) - 2.5 * 0.04).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn load_is_odd_in_the_motion(u in 0.0f64..1.0, a in -1.0f64..1.0, r in -5.0f64..5.0) {
            let f = FlowFinModel::default();
            prop_assert!((f.flow_force(u, a, r) + f.flow_force(u, -a, -r)).abs() < 1e-12);
        }
    }
}
