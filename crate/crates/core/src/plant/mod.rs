//! Simulated robot: body kinematics, foot contact, fin flow loading, sensor
//! transduction and the closed-loop scenario runner.

mod calibrate;
mod contact;
mod fin;
mod foot;
mod kinematics;
mod runner;
mod scenario;
mod trace;

pub use calibrate::{calibrate_sensors, fin_dataset, foot_dataset, SensorCalibration, SensorFit};
pub use contact::{contact_forces, ContactParams, Terrain};
pub use fin::FlowFinModel;
pub use foot::{foot_deflection, ElasticFootModel, FootLaw};
pub use kinematics::RobotKinematics;
pub use runner::{leg_name, run_scenario, trace_columns, RunOutput, RunSummary};
pub use scenario::{default_feet, default_fins, Expectations, Scenario, Target, DEFAULT_FLUX_NOISE, FOOT_SPREAD};
pub use trace::Trace;

use crate::busring::BusError;
use crate::calibration::CalibrationError;
use crate::cpg::CpgError;
use crate::magnetics::MagneticsError;

#[derive(Debug, thiserror::Error)]
pub enum PlantError {
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("load outside the elastic range: {0}")]
    OutOfElasticRange(String),
    #[error("malformed trace: {0}")]
    BadTrace(String),
    #[error(transparent)]
    Magnetics(#[from] MagneticsError),
    #[error(transparent)]
    Calibration(#[from] CalibrationError),
    #[error(transparent)]
    Cpg(#[from] CpgError),
    #[error(transparent)]
    Bus(#[from] BusError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}
