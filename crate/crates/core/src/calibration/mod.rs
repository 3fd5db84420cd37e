//! Polynomial force calibration and the characterization jig.
//!
//! Estimated magnet locations are mapped to loads with per-output quadratic
//! least squares. The jig drives a [`FootTransducer`] or [`FinTransducer`]
//! through labelled load cycles and records what the sensor pipeline would
//! estimate.

mod dataset;
mod features;
mod fit;
mod jig;

pub use dataset::{CalibrationDataset, CalibrationSample, LoadType, Split};
pub use features::{flow_features, quad_features, SensorKind, FLOW_FEATURES, FOOT_FEATURES};
pub use fit::{evaluate_rmse, fit_poly, OutputRmse, PolyModel, RmseReport};
pub use jig::{
    fin_jig_schedule, foot_jig_schedule, simulate_fin_jig, simulate_foot_jig, tune_flux_noise,
    JigLoad, JigSchedule, JigSettings,
};

use serde::{Deserialize, Serialize};

use crate::magnetics::{FlowPose, MagneticsError};
use crate::vec3::Vec3;

#[derive(Debug, thiserror::Error)]
pub enum CalibrationError {
    #[error("need at least {needed} samples to fit a {kind} model, got {got}")]
    InsufficientSamples {
        kind: SensorKind,
        needed: usize,
        got: usize,
    },
    #[error("feature matrix has rank {rank} of {expected}; unresolved directions: {}", directions.join("; "))]
    RankDeficient {
        rank: usize,
        expected: usize,
        directions: Vec<String>,
    },
    #[error("model is for {expected} inputs but was given {got}")]
    KindMismatch { expected: SensorKind, got: SensorKind },
    #[error("evaluation set is empty")]
    EmptyEval,
    #[error("cycles {0:?} appear in both training and evaluation data")]
    OverlappingCycles(Vec<u32>),
    #[error("sample has {got} values where {expected} were expected")]
    Shape { expected: usize, got: usize },
    #[error("load outside the elastic range: {0}")]
    OutOfElasticRange(String),
    #[error("invalid jig setting: {0}")]
    InvalidSetting(String),
    #[error(transparent)]
    Magnetics(#[from] MagneticsError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("malformed dataset row {row}: {reason}")]
    BadRow { row: usize, reason: String },
}

pub type Result<T> = std::result::Result<T, CalibrationError>;

/// What one foot sensor estimates.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FootWrench {
    /// N·mm
    pub tau_pitch: f64,
    /// N·mm
    pub tau_yaw: f64,
    /// N
    pub f_x: f64,
}

impl FootWrench {
    pub fn new(tau_pitch: f64, tau_yaw: f64, f_x: f64) -> Self {
        Self {
            tau_pitch,
            tau_yaw,
            f_x,
        }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.tau_pitch, self.tau_yaw, self.f_x]
    }

    pub fn scaled(self, k: f64) -> Self {
        Self::new(self.tau_pitch * k, self.tau_yaw * k, self.f_x * k)
    }
}

/// Load to magnet location, the mechanical half of a foot sensor.
pub trait FootTransducer {
    fn magnet_position(&self, load: &FootWrench) -> Result<Vec3>;
    fn rest_position(&self) -> Vec3;
}

/// Fin force to magnet pose, the mechanical half of a flow sensor.
pub trait FinTransducer {
    fn magnet_pose(&self, force: f64) -> Result<FlowPose>;
    fn rest_pose(&self) -> FlowPose;
}

/// Torque reference from a load-cell force applied at `lever` mm.
pub fn reference_torque(force: f64, lever: f64) -> f64 {
    force * lever
}

/// Signed fin rotation about z between the rest and current magnet
/// locations.
pub fn fin_angle(pose: &FlowPose, rest: &FlowPose, min_radius: f64) -> Result<f64> {
    let (ax, ay) = (rest.p_x, rest.p_y);
    let (bx, by) = (pose.p_x, pose.p_y);
    for r in [ax.hypot(ay), bx.hypot(by)] {
        if !(r >= min_radius) {
            return Err(MagneticsError::DegeneratePose {
                distance: r,
                min: min_radius,
            }
            .into());
        }
    }
    Ok((ax * by - ay * bx).atan2(ax * bx + ay * by))
}
