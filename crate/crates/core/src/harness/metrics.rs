use serde::{Deserialize, Serialize};

use super::analysis::{
    cross_correlation_lag, first_downward_crossing, rmse, whole_cycles, wrap_cycles, zero_crossing_frequency,
};
use super::HarnessError;
use crate::cpg::{GaitMode, Leg, AXIAL_JOINTS, FOOT_FORCE_THRESHOLD};
use crate::plant::{leg_name, Expectations, Trace};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metric {
    pub name: String,
    pub value: f64,
    pub tolerance: String,
    pub verdict: Verdict,
}

impl Metric {
    pub fn check(name: impl Into<String>, value: f64, tolerance: impl Into<String>, pass: bool) -> Self {
        Self {
            name: name.into(),
            value,
            tolerance: tolerance.into(),
            verdict: if pass && !value.is_nan() { Verdict::Pass } else { Verdict::Fail },
        }
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    pub fn line(&self) -> String {
        let tag = if self.passed() { "PASS" } else { "FAIL" };
        format!("{tag} {} = {:.6} ({})", self.name, self.value, self.tolerance)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MetricsReport {
    pub name: String,
    pub metrics: Vec<Metric>,
}

impl MetricsReport {
    pub fn passed(&self) -> bool {
        self.metrics.iter().all(Metric::passed)
    }

    pub fn get(&self, name: &str) -> Option<&Metric> {
        self.metrics.iter().find(|m| m.name == name)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn lines(&self) -> Vec<String> {
        self.metrics.iter().map(Metric::line).collect()
    }
}

/// Anterior joints of the standard fin layout.
pub const DEFAULT_FIN_JOINTS: [usize; 6] = [0, 1, 3, 5, 7, 7];

fn steady_start(trace: &Trace, warmup: f64) -> Result<usize, HarnessError> {
    let i = trace.t.iter().position(|&t| t >= warmup).unwrap_or(trace.len());
    if trace.len() - i < 10 {
        return Err(HarnessError::TooShort(format!("trace ends before the {warmup} s warm-up is over")));
    }
    Ok(i)
}

/// Evaluates every set expectation on `trace`. `fin_joints[k]` is the
/// anterior joint of fin `k`.
pub fn evaluate(trace: &Trace, expect: &Expectations, fin_joints: &[usize]) -> Result<MetricsReport, HarnessError> {
    let mut out = Vec::new();
    let start = steady_start(trace, expect.warmup)?;
    let t = &trace.t[start..];
    let dt = trace.sample_period().ok_or_else(|| HarnessError::TooShort("fewer than 2 samples".into()))?;
    let steady = |name: &str| -> Result<&[f64], HarnessError> { Ok(&trace.require(name)?[start..]) };

    let freq = zero_crossing_frequency(t, steady("gt_j0")?)?;
    if let Some(target) = expect.gait_frequency_hz {
        out.push(Metric::check(
            "gait_frequency_hz",
            freq,
            format!("{} ± {:.4}", target.value, target.tolerance),
            target.accepts(freq),
        ));
    }
    let period = 1.0 / (freq * dt);
    let win = whole_cycles(start, trace.len(), period)?;
    let windowed = |name: &str| -> Result<&[f64], HarnessError> { Ok(&trace.require(name)?[win.clone()]) };
    let lag_cycles = |a: &[f64], b: &[f64]| -> Result<f64, HarnessError> {
        Ok(cross_correlation_lag(a, b, period.ceil() as usize)? / period)
    };

    if let Some(target) = expect.axial_amplitude_deg {
        let mut worst = target.value;
        for j in 0..AXIAL_JOINTS {
            let x = windowed(&format!("gt_j{j}"))?;
            let hi = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let lo = x.iter().cloned().fold(f64::INFINITY, f64::min);
            let amp = (0.5 * (hi - lo)).to_degrees();
            if (amp - target.value).abs() > (worst - target.value).abs() {
                worst = amp;
            }
        }
        out.push(Metric::check(
            "axial_amplitude_deg",
            worst,
            format!("{} ± {:.4} on every axial joint", target.value, target.tolerance),
            target.accepts(worst),
        ));
    }

    if let Some(tol) = expect.foot_phase_tolerance {
        let f = |l: Leg| format!("gt_foot_{}_f_x", leg_name(l));
        let pairs = [
            ("diagonal_fl_hr", Leg::FL, Leg::HR, 0.0),
            ("diagonal_fr_hl", Leg::FR, Leg::HL, 0.0),
            ("ipsilateral_fl_hl", Leg::FL, Leg::HL, 0.5),
            ("ipsilateral_fr_hr", Leg::FR, Leg::HR, 0.5),
        ];
        for (name, a, b, want) in pairs {
            let lag = lag_cycles(windowed(&f(a))?, windowed(&f(b))?)?;
            let dev = wrap_cycles(lag - want).abs();
            out.push(Metric::check(
                format!("foot_phase_{name}_cycles"),
                wrap_cycles(lag),
                format!("{want} ± {tol} cycles"),
                dev <= tol,
            ));
        }
    }

    for l in Leg::ALL {
        let name = leg_name(l);
        let est = trace.require(&format!("est_foot_{name}_f_x"))?;
        if let Some(max) = expect.foot_force_rmse_max {
            let e = rmse(&est[start..], steady(&format!("gt_foot_{name}_f_x"))?);
            out.push(Metric::check(format!("foot_{name}_f_x_rmse_n"), e, format!("<= {max}"), e <= max));
        }
        if let Some(max) = expect.foot_force_abs_max {
            let worst = est.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            out.push(Metric::check(format!("foot_{name}_f_x_abs_max_n"), worst, format!("< {max}"), worst < max));
        }
    }

    if expect.flow_lag_max.is_some() || expect.flow_wave_monotone {
        let mut lags = Vec::new();
        for (k, &j) in fin_joints.iter().enumerate() {
            let lag = wrap_cycles(lag_cycles(windowed(&format!("gt_j{j}"))?, windowed(&format!("gt_fin{k}_force"))?)?);
            if let Some(max) = expect.flow_lag_max {
                out.push(Metric::check(format!("fin{k}_flow_lag_cycles"), lag, format!("|lag| < {max}"), lag.abs() < max));
            }
            lags.push(lag);
        }
        if expect.flow_wave_monotone {
            let mut steps = Vec::new();
            for k in 1..fin_joints.len() {
                let a = windowed(&format!("gt_fin{}_force", k - 1))?;
                let b = windowed(&format!("gt_fin{k}_force"))?;
                steps.push(wrap_cycles(lag_cycles(a, b)?));
            }
            let min = steps.iter().cloned().fold(f64::INFINITY, f64::min);
            out.push(Metric::check("flow_wave_min_step_cycles", min, "> 0 head to tail", min > 0.0));
        }
    }

    let switch = trace.mode.iter().position(|m| *m == GaitMode::Swimming).filter(|_| trace.mode[0] == GaitMode::Walking);
    if let Some(want) = expect.expect_switch {
        let got = switch.is_some();
        out.push(Metric::check("gait_switch", f64::from(u8::from(got)), format!("expected {want}"), got == want));
    }
    if let Some(max) = expect.transition_latency_max {
        let sum = trace.require("est_foot_sum")?;
        let latency = match (first_downward_crossing(sum, FOOT_FORCE_THRESHOLD), switch) {
            (Some(c), Some(s)) => trace.t[s] - trace.t[c],
            _ => f64::NAN,
        };
        out.push(Metric::check(
            "transition_latency_s",
            latency,
            format!("0 <= latency <= {max}"),
            (-1e-9..=max + 1e-9).contains(&latency),
        ));
    }

    Ok(MetricsReport {
        name: String::new(),
        metrics: out,
    })
}
