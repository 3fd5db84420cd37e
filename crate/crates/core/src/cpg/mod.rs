//! Phase-oscillator central pattern generator.
//!
//! Each of the 16 joints is driven by an antagonist pair of oscillators
//!
//! ```text
//! dφ_i/dt = ω_i + Σ_j w_ij sin(φ_j - φ_i - b_ij)
//! dr_i/dt = a_i (R_i - r_i)
//! x_i     = r_i (1 + cos φ_i)
//! ```
//!
//! with ω_i and R_i set by the descending drive through [`SaturationMap`]s.
//! Low drive gives walking (limbs active, frequency 0.47 Hz); high drive
//! pushes the limb oscillators out of their band so only the spine
//! oscillates, as a travelling wave at 0.78 Hz.

mod dynamics;
mod network;
mod trace;
mod transition;

pub use dynamics::{joint_targets, oscillator_output, step_network, NetworkState};
pub use network::{
    build_network, build_polymander_network, Coupling, CpgNetwork, JointKind, JointPair, Leg,
    OscGroup, OscillatorParams, Side, AXIAL_JOINTS, JOINTS, OSCILLATORS,
};
pub use trace::JointTraceWriter;
pub use transition::{transition_controller, GaitController, GaitMode, FOOT_FORCE_THRESHOLD};

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

/// Affine response to the drive inside `[d_low, d_high]`, zero outside.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SaturationMap {
    pub d_low: f64,
    pub d_high: f64,
    pub c1: f64,
    pub c0: f64,
}

impl SaturationMap {
    pub fn new(d_low: f64, d_high: f64, c1: f64, c0: f64) -> Result<Self, CpgError> {
        if !(d_low < d_high) {
            return Err(CpgError::InvalidConfig(format!(
                "saturation band [{d_low}, {d_high}] is empty"
            )));
        }
        Ok(Self { d_low, d_high, c1, c0 })
    }

    /// Map through two anchor points `(d, value)`.
    pub fn through(d_low: f64, d_high: f64, a: (f64, f64), b: (f64, f64)) -> Result<Self, CpgError> {
        let c1 = (b.1 - a.1) / (b.0 - a.0);
        Self::new(d_low, d_high, c1, a.1 - c1 * a.0)
    }

    pub fn contains(&self, d: f64) -> bool {
        d >= self.d_low && d <= self.d_high
    }

    pub fn value(&self, d: f64) -> f64 {
        if self.contains(d) {
            self.c1 * d + self.c0
        } else {
            0.0
        }
    }
}

/// Value of `map` at drive `d`.
pub fn drive_to_intrinsic(d: f64, map: &SaturationMap) -> f64 {
    map.value(d)
}

#[derive(Debug, thiserror::Error)]
pub enum CpgError {
    #[error("invalid CPG configuration: {0}")]
    InvalidConfig(String),
    #[error("state has {got} oscillators, network has {expected}")]
    StateSize { expected: usize, got: usize },
}

/// Network constants. Serialized as the CPG section of a scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CpgConfig {
    pub d_walk: f64,
    pub d_swim: f64,
    /// Amplitude convergence rate a_i (1/s), all oscillators.
    pub a: f64,
    /// Coupling weight (1/s), all edges.
    pub w: f64,
    /// Head-to-tail phase lag of the axial travelling wave (rad).
    pub total_lag: f64,
    pub axial_omega: SaturationMap,
    pub axial_amplitude: SaturationMap,
    pub limb_omega: SaturationMap,
    pub limb_amplitude: SaturationMap,
    /// Joint angle per unit of activity difference (rad).
    pub gain: f64,
    /// Added to left and subtracted from right axial target amplitudes.
    pub turn_offset: f64,
    /// Integration step (s).
    pub dt: f64,
}

impl Default for CpgConfig {
    fn default() -> Self {
        let (d_walk, d_swim) = (2.0, 5.0);
        let hz = |f: f64| TAU * f;
        Self {
            d_walk,
            d_swim,
            a: 20.0,
            w: 10.0,
            total_lag: TAU,
            axial_omega: SaturationMap::through(1.0, 6.0, (d_walk, hz(0.47)), (d_swim, hz(0.78)))
                .expect("valid band"),
            axial_amplitude: SaturationMap::through(1.0, 6.0, (d_walk, 20.0 / 29.0), (d_swim, 1.0))
                .expect("valid band"),
            limb_omega: SaturationMap::new(1.0, 3.0, hz(0.2), hz(0.07)).expect("valid band"),
            limb_amplitude: SaturationMap::new(1.0, 3.0, 0.0, 25.0 / 29.0).expect("valid band"),
            gain: 14.5 * PI / 180.0,
            turn_offset: 0.0,
            dt: 1e-3,
        }
    }
}

impl CpgConfig {
    pub fn validate(&self) -> Result<(), CpgError> {
        if !(self.d_walk < self.d_swim) {
            return Err(CpgError::InvalidConfig("d_walk must be below d_swim".into()));
        }
        if !(self.a > 0.0) {
            return Err(CpgError::InvalidConfig("a must be positive".into()));
        }
        if !(self.w >= 0.0 && self.w.is_finite()) {
            return Err(CpgError::InvalidConfig("w must be finite and non-negative".into()));
        }
        if !(self.dt > 0.0 && self.dt <= 0.01) {
            return Err(CpgError::InvalidConfig("dt must lie in (0, 10 ms]".into()));
        }
        for m in [&self.axial_omega, &self.axial_amplitude, &self.limb_omega, &self.limb_amplitude] {
            if !(m.d_low < m.d_high) {
                return Err(CpgError::InvalidConfig("empty saturation band".into()));
            }
        }
        Ok(())
    }
}
