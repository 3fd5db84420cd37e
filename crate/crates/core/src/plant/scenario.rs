use serde::{Deserialize, Serialize};

use super::{ContactParams, ElasticFootModel, FlowFinModel, PlantError, RobotKinematics, Terrain};
use crate::busring::{FaultPlan, FluxLsb, LineConfig};
use crate::calibration::JigSettings;
use crate::cpg::{CpgConfig, GaitMode};
use crate::magnetics::DipoleParams;

/// A value with an absolute tolerance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Target {
    pub value: f64,
    pub tolerance: f64,
}

impl Target {
    pub fn new(value: f64, tolerance: f64) -> Self {
        Self { value, tolerance }
    }

    pub fn accepts(&self, x: f64) -> bool {
        (x - self.value).abs() <= self.tolerance
    }
}

/// Checks applied to a finished run. Unset checks are skipped.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct Expectations {
    /// Start of the steady-state window (s).
    pub warmup: f64,
    pub gait_frequency_hz: Option<Target>,
    pub axial_amplitude_deg: Option<Target>,
    /// Allowed deviation of foot-force phase relations (cycles).
    pub foot_phase_tolerance: Option<f64>,
    /// Per-foot estimated vs true normal force (N).
    pub foot_force_rmse_max: Option<f64>,
    /// Bound on every estimated normal force over the whole run (N).
    pub foot_force_abs_max: Option<f64>,
    /// Fin force lag behind the anterior joint (fraction of a cycle).
    pub flow_lag_max: Option<f64>,
    pub flow_wave_monotone: bool,
    /// Whether a walk-to-swim switch must (or must not) happen.
    pub expect_switch: Option<bool>,
    /// Switch delay after the estimated foot sum first drops below threshold (s).
    pub transition_latency_max: Option<f64>,
    /// Slowest clean per-module sensor rate on the ring (Hz).
    pub bus_rate_min_hz: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Scenario {
    pub name: String,
    /// s
    pub duration: f64,
    pub seed: u64,
    pub calibration_seed: u64,
    pub terrain: Terrain,
    pub initial_mode: GaitMode,
    /// Let the contact controller switch gaits.
    pub feedback: bool,
    /// Snout position at t = 0 (m).
    pub head_start: f64,
    /// m/s
    pub walk_speed: f64,
    pub swim_speed: f64,
    /// Plant and CPG integration step (s).
    pub step: f64,
    /// Servo set-point period (s).
    pub servo_period: f64,
    /// Gait controller period (s).
    pub feedback_period: f64,
    /// Host low-pass cutoff (Hz).
    pub filter_cutoff: f64,
    /// °C
    pub temperature: f64,
    pub robot: RobotKinematics,
    pub contact: ContactParams,
    /// Front-left, front-right, hind-left, hind-right.
    pub feet: Vec<ElasticFootModel>,
    /// Head to tail.
    pub fins: Vec<FlowFinModel>,
    pub dipole: DipoleParams,
    pub cpg: CpgConfig,
    pub line: LineConfig,
    pub faults: FaultPlan,
    pub flux_lsb: FluxLsb,
    /// Calibration protocol; its noise level also applies to the running robot.
    pub jig: JigSettings,
    /// Rows kept in the trace: one every this many steps.
    pub trace_every: usize,
    pub expect: Expectations,
}

/// Per-foot compliance spread (force, pitch, yaw factors).
pub const FOOT_SPREAD: [(f64, f64, f64); 4] =
    [(1.0, 1.0, 1.0), (1.12, 0.9, 1.05), (0.88, 1.1, 0.93), (1.06, 0.95, 1.13)];

pub fn default_feet() -> Vec<ElasticFootModel> {
    FOOT_SPREAD.iter().map(|&(f, p, y)| ElasticFootModel::scaled(f, p, y)).collect()
}

/// Fins on links 1, 2, 4, 6 and 8, a third of the way down each link, plus
/// one at the tail clamp.
pub fn default_fins(robot: &RobotKinematics) -> Vec<FlowFinModel> {
    let mut fins: Vec<FlowFinModel> = [1usize, 2, 4, 6, 8]
        .iter()
        .map(|&l| FlowFinModel::on_link(l, l - 1, 0.3 * robot.links[l]))
        .collect();
    let last = robot.links.len() - 1;
    fins.push(FlowFinModel::on_link(last + 1, last - 1, robot.links[last]));
    fins
}

/// Per-axis flux noise (mT) that puts the jig torque RMSE mid-band.
pub const DEFAULT_FLUX_NOISE: f64 = 0.00146;

impl Default for Scenario {
    fn default() -> Self {
        let robot = RobotKinematics::default();
        let fins = default_fins(&robot);
        Self {
            name: "scenario".into(),
            duration: 10.0,
            seed: 1,
            calibration_seed: 100,
            terrain: Terrain::Floor,
            initial_mode: GaitMode::Walking,
            feedback: false,
            head_start: 0.0,
            walk_speed: 0.16,
            swim_speed: 0.4,
            step: 1e-3,
            servo_period: 0.01,
            feedback_period: 0.02,
            filter_cutoff: 3.6,
            temperature: 25.0,
            robot,
            contact: ContactParams::default(),
            feet: default_feet(),
            fins,
            dipole: DipoleParams::default(),
            cpg: CpgConfig::default(),
            line: LineConfig::default(),
            faults: FaultPlan::default(),
            flux_lsb: FluxLsb::default(),
            jig: JigSettings {
                noise_sigma: DEFAULT_FLUX_NOISE,
                ..JigSettings::default()
            },
            trace_every: 1,
            expect: Expectations::default(),
        }
    }
}

impl Scenario {
    pub fn walk_floor() -> Self {
        Self {
            name: "walk_floor".into(),
            duration: 20.0,
            feedback: true,
            expect: Expectations {
                warmup: 5.0,
                bus_rate_min_hz: Some(589.8),
                gait_frequency_hz: Some(Target::new(0.47, 0.47 * 0.02)),
                foot_phase_tolerance: Some(0.15),
                foot_force_rmse_max: Some(0.3),
                expect_switch: Some(false),
                ..Default::default()
            },
            ..Self::default()
        }
    }

    pub fn swim_pool() -> Self {
        Self {
            name: "swim_pool".into(),
            duration: 15.0,
            terrain: Terrain::Water,
            initial_mode: GaitMode::Swimming,
            expect: Expectations {
                warmup: 5.0,
                bus_rate_min_hz: Some(589.8),
                gait_frequency_hz: Some(Target::new(0.78, 0.78 * 0.02)),
                axial_amplitude_deg: Some(Target::new(29.0, 1.0)),
                foot_force_abs_max: Some(1.0),
                flow_lag_max: Some(0.1),
                flow_wave_monotone: true,
                expect_switch: Some(false),
                ..Default::default()
            },
            ..Self::default()
        }
    }

    pub fn shoreline() -> Self {
        Self {
            name: "shoreline".into(),
            duration: 20.0,
            terrain: Terrain::Shoreline { x_w: 0.0 },
            feedback: true,
            head_start: -1.5,
            expect: Expectations {
                warmup: 5.0,
                bus_rate_min_hz: Some(589.8),
                expect_switch: Some(true),
                transition_latency_max: Some(0.02),
                ..Default::default()
            },
            ..Self::default()
        }
    }

    pub fn from_json(s: &str) -> Result<Self, PlantError> {
        let scn: Scenario = serde_json::from_str(s)?;
        scn.validate()?;
        Ok(scn)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn validate(&self) -> Result<(), PlantError> {
        let bad = |m: String| Err(PlantError::InvalidScenario(m));
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return bad(format!("duration must be positive, got {}", self.duration));
        }
        if !(self.step > 0.0 && self.step <= 0.01) {
            return bad(format!("step must lie in (0, 10 ms], got {}", self.step));
        }
        for (name, p) in [("servo_period", self.servo_period), ("feedback_period", self.feedback_period)] {
            let k = p / self.step;
            if !(k >= 1.0 && (k - k.round()).abs() < 1e-9) {
                return bad(format!("{name} must be a whole number of steps"));
            }
        }
        if self.feet.len() != 4 {
            return bad(format!("need 4 feet, got {}", self.feet.len()));
        }
        if self.feet.len() + self.fins.len() > 256 {
            return bad("too many sensor modules for one ring".into());
        }
        if !(self.filter_cutoff > 0.0 && self.jig.noise_sigma >= 0.0 && self.trace_every >= 1) {
            return bad("filter cutoff, noise and trace decimation out of range".into());
        }
        self.robot.validate().map_err(PlantError::InvalidScenario)?;
        self.contact.validate().map_err(PlantError::InvalidScenario)?;
        for f in &self.feet {
            f.validate().map_err(PlantError::InvalidScenario)?;
        }
        for f in &self.fins {
            f.validate().map_err(PlantError::InvalidScenario)?;
            if f.mount_link > self.robot.links.len() {
                return bad(format!("fin mounted on missing link {}", f.mount_link));
            }
        }
        self.dipole.validate()?;
        self.cpg.validate()?;
        self.line.validate()?;
        Ok(())
    }
}
