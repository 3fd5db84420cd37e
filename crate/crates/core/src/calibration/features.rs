use std::fmt;

use serde::{Deserialize, Serialize};

use crate::vec3::Vec3;

pub const FOOT_FEATURES: [&str; 10] = [
    "1", "p_x", "p_y", "p_z", "p_x^2", "p_y^2", "p_z^2", "p_x*p_y", "p_x*p_z", "p_y*p_z",
];

pub const FLOW_FEATURES: [&str; 6] = ["1", "dp_x", "dp_y", "dp_x^2", "dp_y^2", "dp_x*dp_y"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SensorKind {
    /// Input is the estimated magnet location (3 values), outputs are
    /// pitch torque, yaw torque and normal force.
    Foot,
    /// Input is the change in magnet location (2 values), output is the fin
    /// force.
    Flow,
}

impl SensorKind {
    pub fn input_len(self) -> usize {
        match self {
            SensorKind::Foot => 3,
            SensorKind::Flow => 2,
        }
    }

    pub fn feature_names(self) -> &'static [&'static str] {
        match self {
            SensorKind::Foot => &FOOT_FEATURES,
            SensorKind::Flow => &FLOW_FEATURES,
        }
    }

    pub fn feature_count(self) -> usize {
        self.feature_names().len()
    }

    pub fn output_names(self) -> &'static [&'static str] {
        match self {
            SensorKind::Foot => &["tau_pitch", "tau_yaw", "f_x"],
            SensorKind::Flow => &["force"],
        }
    }

    pub fn output_units(self) -> &'static [&'static str] {
        match self {
            SensorKind::Foot => &["N*mm", "N*mm", "N"],
            SensorKind::Flow => &["N"],
        }
    }

    pub fn input_names(self) -> &'static [&'static str] {
        match self {
            SensorKind::Foot => &["p_x", "p_y", "p_z"],
            SensorKind::Flow => &["dp_x", "dp_y"],
        }
    }

    /// Feature vector for a raw input slice of length [`Self::input_len`].
    pub fn features(self, input: &[f64]) -> Vec<f64> {
        match self {
            SensorKind::Foot => quad_features(&Vec3::new(input[0], input[1], input[2])).to_vec(),
            SensorKind::Flow => flow_features(input[0], input[1]).to_vec(),
        }
    }
}

impl fmt::Display for SensorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SensorKind::Foot => "foot",
            SensorKind::Flow => "flow",
        })
    }
}

/// Full quadratic basis in the magnet location, ordered as [`FOOT_FEATURES`].
pub fn quad_features(p: &Vec3) -> [f64; 10] {
    let (x, y, z) = (p.x, p.y, p.z);
    [1.0, x, y, z, x * x, y * y, z * z, x * y, x * z, y * z]
}

/// Full quadratic basis in the in-plane magnet displacement.
pub fn flow_features(dx: f64, dy: f64) -> [f64; 6] {
    [1.0, dx, dy, dx * dx, dy * dy, dx * dy]
}
