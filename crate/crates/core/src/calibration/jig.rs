use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{
    reference_torque, CalibrationDataset, CalibrationError, CalibrationSample, FinTransducer,
    FootTransducer, FootWrench, LoadType, Result, SensorKind, Split,
};
use crate::magnetics::{
    dipole_flux_radial, flow_flux, invert_flow_flux, invert_foot_flux, DipoleParams, FlowSolverOptions,
};
use crate::vec3::Vec3;

/// Load-cycle protocol of the characterization jig.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct JigSettings {
    pub train_cycles: u32,
    pub eval_cycles: u32,
    pub samples_per_cycle: usize,
    /// Relative peak-load jitter between cycles.
    pub amplitude_jitter: f64,
    /// Load-cell offset from the foot centre for torque references (mm).
    pub lever_mm: f64,
    /// Peak normal force (N).
    pub normal_max: f64,
    /// Peak force applied at `lever_mm` for pitch loads (N).
    pub pitch_max: f64,
    /// Peak tangential force applied at `lever_mm` for yaw loads (N).
    pub yaw_max: f64,
    /// Peak lateral fin force (N).
    pub fin_max: f64,
    /// Gaussian flux noise per axis (mT).
    pub noise_sigma: f64,
}

impl Default for JigSettings {
    fn default() -> Self {
        Self {
            train_cycles: 10,
            eval_cycles: 2,
            samples_per_cycle: 40,
            amplitude_jitter: 0.1,
            lever_mm: 19.0,
            normal_max: 15.0,
            pitch_max: 6.0,
            yaw_max: 3.0,
            fin_max: 0.3,
            noise_sigma: 0.0,
        }
    }
}

impl JigSettings {
    fn validate(&self) -> Result<()> {
        if self.train_cycles == 0 {
            return Err(CalibrationError::InvalidSetting("no training cycles".into()));
        }
        if self.eval_cycles == 0 {
            return Err(CalibrationError::InvalidSetting(
                "no evaluation cycles; held-out cycles are required".into(),
            ));
        }
        if self.samples_per_cycle < 3 {
            return Err(CalibrationError::InvalidSetting("samples_per_cycle must be >= 3".into()));
        }
        if !(self.noise_sigma >= 0.0) || !(self.lever_mm > 0.0) {
            return Err(CalibrationError::InvalidSetting(
                "noise must be non-negative and lever positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JigLoad<T> {
    pub cycle_id: u32,
    pub load_type: LoadType,
    pub split: Split,
    pub load: T,
}

pub type JigSchedule<T> = Vec<JigLoad<T>>;

fn cycles<R: Rng>(
    settings: &JigSettings,
    types: &[LoadType],
    rng: &mut R,
    mut per_sample: impl FnMut(LoadType, f64, f64, f64) -> JigLoadValue,
) -> Vec<(u32, LoadType, Split, JigLoadValue)> {
    let per_type = settings.train_cycles + settings.eval_cycles;
    let n = settings.samples_per_cycle;
    let mut out = Vec::new();
    for (ti, &lt) in types.iter().enumerate() {
        for c in 0..per_type {
            let cycle_id = ti as u32 * per_type + c;
            let split = if c < settings.train_cycles { Split::Train } else { Split::Eval };
            let j1 = 1.0 + settings.amplitude_jitter * rng.random_range(-1.0..=1.0);
            let j2 = 1.0 + settings.amplitude_jitter * rng.random_range(-1.0..=1.0);
            for i in 0..n {
                let u = i as f64 / (n - 1) as f64;
                out.push((cycle_id, lt, split, per_sample(lt, u, j1, j2)));
            }
        }
    }
    out
}

type JigLoadValue = (FootWrench, f64);

/// Load cycles for one foot: normal, pitch, yaw and combined press-and-twist
/// cycles, each cycle with its own jittered peak. The combined cycles are
/// what make the pitch-yaw cross term identifiable.
pub fn foot_jig_schedule(settings: &JigSettings, seed: u64) -> Result<JigSchedule<FootWrench>> {
    settings.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lever = settings.lever_mm;
    let types = [LoadType::Normal, LoadType::Pitch, LoadType::Yaw, LoadType::Combined];
    let loads = cycles(settings, &types, &mut rng, |lt, u, j1, j2| {
        let tri = 1.0 - (2.0 * u - 1.0).abs();
        let s = (TAU * u).sin();
        let w = match lt {
            LoadType::Normal => FootWrench::new(0.0, 0.0, settings.normal_max * j1 * tri),
            LoadType::Pitch => {
                let f = settings.pitch_max * j1 * s;
                FootWrench::new(reference_torque(f, lever), 0.0, f.abs())
            }
            LoadType::Yaw => {
                FootWrench::new(0.0, reference_torque(settings.yaw_max * j1 * s, lever), 0.0)
            }
            _ => {
                let f = settings.pitch_max * j1 * s;
                let twist = settings.yaw_max * j2 * (2.0 * TAU * u + 0.25 * TAU).sin() * tri;
                FootWrench::new(reference_torque(f, lever), reference_torque(twist, lever), f.abs())
            }
        };
        (w, 0.0)
    });
    Ok(loads
        .into_iter()
        .map(|(cycle_id, load_type, split, (w, _))| JigLoad {
            cycle_id,
            load_type,
            split,
            load: w,
        })
        .collect())
}

/// Symmetric push-pull force cycles on one fin.
pub fn fin_jig_schedule(settings: &JigSettings, seed: u64) -> Result<JigSchedule<f64>> {
    settings.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let loads = cycles(settings, &[LoadType::Fin], &mut rng, |_, u, j1, _| {
        (FootWrench::default(), settings.fin_max * j1 * (TAU * u).sin())
    });
    Ok(loads
        .into_iter()
        .map(|(cycle_id, load_type, split, (_, f))| JigLoad {
            cycle_id,
            load_type,
            split,
            load: f,
        })
        .collect())
}

fn noisy<R: Rng>(b: Vec3, sigma: f64, rng: &mut R) -> Vec3 {
    let mut draw = || -> f64 { StandardNormal.sample(rng) };
    let n = Vec3::new(draw(), draw(), draw());
    b + n * sigma
}

/// Runs a foot through the schedule: load, magnet location, flux with noise,
/// closed-form inversion. Each sample pairs the estimated location with the
/// reference wrench.
pub fn simulate_foot_jig<T: FootTransducer, R: Rng>(
    foot: &T,
    params: &DipoleParams,
    schedule: &JigSchedule<FootWrench>,
    noise_sigma: f64,
    rng: &mut R,
) -> Result<CalibrationDataset> {
    let samples = schedule
        .iter()
        .map(|l| {
            let p = foot.magnet_position(&l.load)?;
            let b = noisy(dipole_flux_radial(&p, params)?, noise_sigma, rng);
            let est = invert_foot_flux(&b, params)?;
            Ok(CalibrationSample {
                cycle_id: l.cycle_id,
                load_type: l.load_type,
                split: l.split,
                input: est.to_array().to_vec(),
                target: l.load.to_array().to_vec(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    CalibrationDataset::new(SensorKind::Foot, samples)
}

/// Flow-sensor counterpart of [`simulate_foot_jig`]: the input is the change
/// of the inverted magnet location from rest.
pub fn simulate_fin_jig<T: FinTransducer, R: Rng>(
    fin: &T,
    params: &DipoleParams,
    schedule: &JigSchedule<f64>,
    noise_sigma: f64,
    rng: &mut R,
) -> Result<CalibrationDataset> {
    let rest = fin.rest_pose();
    let opts = FlowSolverOptions::default();
    let mut guess = rest;
    let samples = schedule
        .iter()
        .map(|l| {
            let pose = fin.magnet_pose(l.load)?;
            let b = noisy(flow_flux(&pose, params)?, noise_sigma, rng);
            let est = invert_flow_flux(&b, rest.d_z0, params, &guess, &opts)?;
            guess = est;
            Ok(CalibrationSample {
                cycle_id: l.cycle_id,
                load_type: l.load_type,
                split: l.split,
                input: vec![est.p_x - rest.p_x, est.p_y - rest.p_y],
                target: vec![l.load],
            })
        })
        .collect::<Result<Vec<_>>>()?;
    CalibrationDataset::new(SensorKind::Flow, samples)
}

/// Bisection for the flux noise that puts `metric(sigma)` at `target`.
///
/// `metric` must be increasing in sigma over `[lo, hi]`; with a fixed seed
/// the jig's RMSE is, since the noise draws scale linearly.
pub fn tune_flux_noise(
    mut metric: impl FnMut(f64) -> Result<f64>,
    target: f64,
    lo: f64,
    hi: f64,
    rel_tol: f64,
) -> Result<f64> {
    let (mut lo, mut hi) = (lo, hi);
    if !(lo >= 0.0 && hi > lo) {
        return Err(CalibrationError::InvalidSetting(format!("bad bracket [{lo}, {hi}]")));
    }
    let (f_lo, f_hi) = (metric(lo)?, metric(hi)?);
    if !(f_lo <= target && target <= f_hi) {
        return Err(CalibrationError::InvalidSetting(format!(
            "target {target} not bracketed: metric({lo}) = {f_lo}, metric({hi}) = {f_hi}"
        )));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let f = metric(mid)?;
        if (f - target).abs() <= rel_tol * target {
            return Ok(mid);
        }
        if f < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
