use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{ElasticFootModel, FlowFinModel};
use crate::calibration::{
    evaluate_rmse, fin_jig_schedule, fit_poly, foot_jig_schedule, simulate_fin_jig, simulate_foot_jig,
    CalibrationDataset, JigSettings, PolyModel, Result, RmseReport,
};
use crate::magnetics::DipoleParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorFit {
    pub model: PolyModel,
    pub eval: RmseReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorCalibration {
    pub feet: Vec<SensorFit>,
    pub fins: Vec<SensorFit>,
}

impl SensorCalibration {
    /// Mean held-out RMSE of `output` over the feet.
    pub fn mean_foot_rmse(&self, output: &str) -> f64 {
        mean(self.feet.iter().filter_map(|f| f.eval.get(output)))
    }

    pub fn mean_fin_rmse(&self) -> f64 {
        mean(self.fins.iter().filter_map(|f| f.eval.get("force")))
    }

    /// Mean over feet of the two torque RMSEs.
    pub fn mean_torque_rmse(&self) -> f64 {
        0.5 * (self.mean_foot_rmse("tau_pitch") + self.mean_foot_rmse("tau_yaw"))
    }
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = xs.collect();
    if v.is_empty() { f64::NAN } else { v.iter().sum::<f64>() / v.len() as f64 }
}

pub fn foot_dataset(foot: &ElasticFootModel, dipole: &DipoleParams, jig: &JigSettings, sigma: f64, seed: u64) -> Result<CalibrationDataset> {
    let schedule = foot_jig_schedule(jig, seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    simulate_foot_jig(foot, dipole, &schedule, sigma, &mut rng)
}

pub fn fin_dataset(fin: &FlowFinModel, dipole: &DipoleParams, jig: &JigSettings, sigma: f64, seed: u64) -> Result<CalibrationDataset> {
    let schedule = fin_jig_schedule(jig, seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    simulate_fin_jig(fin, dipole, &schedule, sigma, &mut rng)
}

fn fit(data: &CalibrationDataset) -> Result<SensorFit> {
    let model = fit_poly(data)?;
    let eval = evaluate_rmse(&model, data)?;
    Ok(SensorFit { model, eval })
}

/// Puts every sensor through the jig and fits its polynomial. Sensor `i`
/// uses seed `seed + i`, feet first.
pub fn calibrate_sensors(
    feet: &[ElasticFootModel],
    fins: &[FlowFinModel],
    dipole: &DipoleParams,
    jig: &JigSettings,
    sigma: f64,
    seed: u64,
) -> Result<SensorCalibration> {
    let feet_fit = feet
        .iter()
        .enumerate()
        .map(|(i, f)| fit(&foot_dataset(f, dipole, jig, sigma, seed + i as u64)?))
        .collect::<Result<Vec<_>>>()?;
    let fins_fit = fins
        .iter()
        .enumerate()
        .map(|(i, f)| fit(&fin_dataset(f, dipole, jig, sigma, seed + (feet.len() + i) as u64)?))
        .collect::<Result<Vec<_>>>()?;
    Ok(SensorCalibration { feet: feet_fit, fins: fins_fit })
}
