//! Sensor-bus simulation: frame codec, CRC-8 and a discrete-event model of
//! the masterless token ring that carries the Hall-sensor readings.

mod crc;
mod frame;
mod motor;
mod sim;
pub mod trace;

pub use crc::crc8;
pub use frame::{
    decode_control, decode_frame, encode_control, encode_frame, encode_frame_saturating, ControlOp, FluxLsb,
    FrameBytes, FrameError, CONTROL_SYNC, FRAME_LEN, SYNC, TEMPERATURE_LSB,
};
pub use motor::motor_bus_budget;
pub use sim::{
    simulate_ring, synthetic_sample, Fault, FaultPlan, LineConfig, ModuleStats, NodeState, PeriodStats, Reception, RingSim, RingStats,
};

use std::ops::Add;

use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum BusError {
    #[error("bus configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Frame(#[from] FrameError),
}

/// Simulation time in integer nanoseconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Nanos(pub u64);

impl Nanos {
    pub fn from_secs(s: f64) -> Self {
        Nanos((s * 1e9).round().max(0.0) as u64)
    }

    pub fn as_secs(self) -> f64 {
        self.0 as f64 * 1e-9
    }
}

impl Add for Nanos {
    type Output = Nanos;
    fn add(self, o: Nanos) -> Nanos {
        Nanos(self.0 + o.0)
    }
}

/// A complete bus benchmark: ring size, line timing, faults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RingConfig {
    pub n_modules: usize,
    pub line: LineConfig,
    /// s
    pub duration: f64,
    pub faults: FaultPlan,
    pub flux_lsb: FluxLsb,
}

impl Default for RingConfig {
    fn default() -> Self {
        Self {
            n_modules: 10,
            line: LineConfig::default(),
            duration: 1.0,
            faults: FaultPlan::default(),
            flux_lsb: FluxLsb::default(),
        }
    }
}
