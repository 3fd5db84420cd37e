use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::plot::{render_bars, render_figure, PlotSpec};
use super::{evaluate, HarnessError, Metric, MetricsReport, DEFAULT_FIN_JOINTS};
use crate::busring::{synthetic_sample, trace as frame_log, Nanos, RingConfig, RingSim};
use crate::calibration::JigSettings;
use crate::cpg::{GaitMode, Leg};
use crate::magnetics::DipoleParams;
use crate::plant::{
    calibrate_sensors, default_feet, default_fins, fin_dataset, foot_dataset, leg_name, run_scenario,
    ElasticFootModel, Expectations, FlowFinModel, RobotKinematics, Scenario, Trace, DEFAULT_FLUX_NOISE,
};

#[derive(Debug, Clone, Default)]
pub struct CommandOptions {
    pub out: PathBuf,
    /// Overrides the seed in the input file.
    pub seed: Option<u64>,
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub report: MetricsReport,
    pub files: Vec<PathBuf>,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        if self.report.passed() { 0 } else { 1 }
    }
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, HarnessError> {
    let text = fs::read_to_string(path).map_err(|e| HarnessError::Io { path: path.to_path_buf(), source: e })?;
    serde_json::from_str(&text).map_err(|e| HarnessError::Config { path: path.to_path_buf(), source: e })
}

struct Writer {
    dir: PathBuf,
    files: Vec<PathBuf>,
}

impl Writer {
    fn new(dir: &Path) -> Result<Self, HarnessError> {
        fs::create_dir_all(dir).map_err(|e| HarnessError::Io { path: dir.to_path_buf(), source: e })?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    fn put(&mut self, name: &str, bytes: impl AsRef<[u8]>) -> Result<(), HarnessError> {
        let p = self.dir.join(name);
        if let Some(parent) = p.parent() {
            fs::create_dir_all(parent).map_err(|e| HarnessError::Io { path: parent.to_path_buf(), source: e })?;
        }
        fs::write(&p, bytes).map_err(|e| HarnessError::Io { path: p.clone(), source: e })?;
        self.files.push(p);
        Ok(())
    }
}

fn fin_joints(fins: &[FlowFinModel]) -> Vec<usize> {
    fins.iter().map(|f| f.anterior_joint).collect()
}

/// Runs a scenario file, writes `<name>_trace.csv`, `<name>_metrics.json`
/// and `<name>_summary.json`.
pub fn cmd_run(path: &Path, opts: &CommandOptions) -> Result<Outcome, HarnessError> {
    let mut scn: Scenario = read_json(path)?;
    if let Some(seed) = opts.seed {
        scn.seed = seed;
    }
    scn.validate()?;
    let out = run_scenario(&scn)?;
    let mut report = evaluate(&out.trace, &scn.expect, &fin_joints(&scn.fins))?;
    report.name = scn.name.clone();
    report.metrics.push(Metric::check(
        "inversion_failures",
        out.summary.inversion_failures as f64,
        "== 0",
        out.summary.inversion_failures == 0,
    ));
    if let Some(min) = scn.expect.bus_rate_min_hz {
        let r = out.summary.bus.min_rate();
        report.metrics.push(Metric::check("bus_min_rate_hz", r, format!(">= {min}"), r >= min));
    }

    let mut w = Writer::new(&opts.out)?;
    let mut csv = Vec::new();
    out.trace.write_csv(&mut csv)?;
    w.put(&format!("{}_trace.csv", scn.name), csv)?;
    w.put(&format!("{}_metrics.json", scn.name), report.to_json())?;
    w.put(
        &format!("{}_summary.json", scn.name),
        serde_json::to_string_pretty(&out.summary).expect("summary serializes"),
    )?;
    Ok(Outcome { report, files: w.files })
}

/// Characterization jig input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct JigConfig {
    pub seed: u64,
    pub dipole: DipoleParams,
    pub jig: JigSettings,
    pub feet: Vec<ElasticFootModel>,
    pub fins: Vec<FlowFinModel>,
    /// Accepted band for the mean torque RMSE over feet (N·mm).
    pub torque_rmse_band: Option<(f64, f64)>,
    /// Accepted band for the mean normal-force RMSE over feet (N).
    pub force_rmse_band: Option<(f64, f64)>,
    /// Upper bound on every held-out RMSE, native units.
    pub max_rmse: Option<f64>,
}

impl Default for JigConfig {
    fn default() -> Self {
        Self {
            seed: 100,
            dipole: DipoleParams::default(),
            jig: JigSettings {
                noise_sigma: DEFAULT_FLUX_NOISE,
                ..JigSettings::default()
            },
            feet: default_feet(),
            fins: default_fins(&RobotKinematics::default()),
            torque_rmse_band: None,
            force_rmse_band: None,
            max_rmse: None,
        }
    }
}

fn sensor_names(n_feet: usize, n_fins: usize) -> (Vec<String>, Vec<String>) {
    let feet = (0..n_feet)
        .map(|i| Leg::ALL.get(i).map_or(format!("foot{i}"), |l| format!("foot_{}", leg_name(*l))))
        .collect();
    let fins = (0..n_fins).map(|k| format!("fin{k}")).collect();
    (feet, fins)
}

/// Calibrates every foot and fin in a jig file. Writes one model and one
/// dataset per sensor, a report and an RMSE bar chart.
pub fn cmd_calibrate(path: &Path, opts: &CommandOptions) -> Result<Outcome, HarnessError> {
    let mut cfg: JigConfig = read_json(path)?;
    if let Some(seed) = opts.seed {
        cfg.seed = seed;
    }
    let sigma = cfg.jig.noise_sigma;
    let cal = calibrate_sensors(&cfg.feet, &cfg.fins, &cfg.dipole, &cfg.jig, sigma, cfg.seed)?;
    let (foot_names, fin_names) = sensor_names(cfg.feet.len(), cfg.fins.len());

    let mut w = Writer::new(&opts.out)?;
    let mut metrics = Vec::new();
    for (i, (fit, name)) in cal.feet.iter().zip(&foot_names).enumerate() {
        w.put(&format!("models/{name}.json"), fit.model.to_json())?;
        let mut csv = Vec::new();
        foot_dataset(&cfg.feet[i], &cfg.dipole, &cfg.jig, sigma, cfg.seed + i as u64)?.write_csv(&mut csv)?;
        w.put(&format!("data/{name}.csv"), csv)?;
    }
    for (k, (fit, name)) in cal.fins.iter().zip(&fin_names).enumerate() {
        w.put(&format!("models/{name}.json"), fit.model.to_json())?;
        let mut csv = Vec::new();
        fin_dataset(&cfg.fins[k], &cfg.dipole, &cfg.jig, sigma, cfg.seed + (cfg.feet.len() + k) as u64)?
            .write_csv(&mut csv)?;
        w.put(&format!("data/{name}.csv"), csv)?;
    }
    for (fit, name) in cal.feet.iter().zip(&foot_names).chain(cal.fins.iter().zip(&fin_names)) {
        for o in &fit.eval.outputs {
            let (tol, pass) = match cfg.max_rmse {
                Some(m) => (format!("<= {m}"), o.rmse <= m),
                None => ("reported".to_string(), true),
            };
            metrics.push(Metric::check(format!("{name}_{}_rmse_{}", o.name, o.unit.replace('·', "")), o.rmse, tol, pass));
        }
    }
    if !cal.feet.is_empty() {
        if let Some((lo, hi)) = cfg.torque_rmse_band {
            let v = cal.mean_torque_rmse();
            metrics.push(Metric::check("mean_torque_rmse_nmm", v, format!("[{lo}, {hi}]"), (lo..=hi).contains(&v)));
        }
        if let Some((lo, hi)) = cfg.force_rmse_band {
            let v = cal.mean_foot_rmse("f_x");
            metrics.push(Metric::check("mean_force_rmse_n", v, format!("[{lo}, {hi}]"), (lo..=hi).contains(&v)));
        }
        let short: Vec<String> = foot_names.iter().map(|n| n.trim_start_matches("foot_").to_uppercase()).collect();
        let series: Vec<(String, Vec<f64>)> = ["tau_pitch", "tau_yaw", "f_x"]
            .iter()
            .map(|o| (o.to_string(), cal.feet.iter().map(|f| f.eval.get(o).unwrap_or(0.0)).collect()))
            .collect();
        let torque = render_bars("Held-out RMSE per foot", "N·mm (torques) / N (force)", &short, &series);
        w.put("calibration_rmse.svg", torque)?;
    }
    let report = MetricsReport {
        name: "calibration".into(),
        metrics,
    };
    w.put("calibration_metrics.json", report.to_json())?;
    w.put("calibration_report.json", serde_json::to_string_pretty(&cal).expect("calibration serializes"))?;
    Ok(Outcome { report, files: w.files })
}

/// Bus benchmark input: a ring configuration plus acceptance bounds.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct BusBenchConfig {
    #[serde(flatten)]
    pub ring: RingConfig,
    #[serde(default)]
    pub min_rate_hz: Option<f64>,
    /// Also write every frame to `bus_frames.bin` and `bus_frames.csv`.
    #[serde(default)]
    pub frame_log: bool,
}

pub fn cmd_bus_bench(path: &Path, opts: &CommandOptions) -> Result<Outcome, HarnessError> {
    let mut cfg: BusBenchConfig = read_json(path)?;
    if let Some(seed) = opts.seed {
        cfg.ring.faults.seed = seed;
    }
    let r = &cfg.ring;
    let mut sim = RingSim::new(r.n_modules, r.line, r.flux_lsb, &r.faults)?;
    if cfg.frame_log {
        sim = sim.with_trace();
    }
    sim.run_until(Nanos::from_secs(r.duration), &mut synthetic_sample, &mut |_| {});
    let stats = sim.stats();

    let mut metrics = Vec::new();
    for m in &stats.modules {
        let (tol, pass) = match cfg.min_rate_hz {
            Some(min) => (format!(">= {min}"), m.rate_hz >= min),
            None => ("reported".into(), true),
        };
        metrics.push(Metric::check(format!("bus_rate_m{}_hz", m.id), m.rate_hz, tol, pass));
    }
    metrics.push(Metric::check(
        "corrupted_frames_undetected",
        stats.frames_corrupted.saturating_sub(stats.corrupted_detected) as f64,
        "== 0",
        stats.corrupted_detected == stats.frames_corrupted,
    ));
    metrics.push(Metric::check("timeout_recoveries", stats.timeout_recoveries as f64, "reported", true));

    let mut w = Writer::new(&opts.out)?;
    w.put("bus_stats.json", stats.to_json())?;
    if cfg.frame_log {
        let mut bin = Vec::new();
        frame_log::write_binary(sim.trace(), &mut bin).map_err(|e| HarnessError::Io { path: opts.out.join("bus_frames.bin"), source: e })?;
        w.put("bus_frames.bin", bin)?;
        let mut csv = Vec::new();
        frame_log::write_csv(sim.trace(), &mut csv).map_err(crate::plant::PlantError::from)?;
        w.put("bus_frames.csv", csv)?;
    }
    let report = MetricsReport {
        name: "bus".into(),
        metrics,
    };
    w.put("bus_metrics.json", report.to_json())?;
    Ok(Outcome { report, files: w.files })
}

/// Expectations for a trace of unknown origin, picked from its modes.
pub fn inferred_expectations(trace: &Trace) -> Expectations {
    let walking = trace.mode.iter().all(|m| *m == GaitMode::Walking);
    let swimming = trace.mode.iter().all(|m| *m == GaitMode::Swimming);
    let mut e = if walking {
        Scenario::walk_floor().expect
    } else if swimming {
        Scenario::swim_pool().expect
    } else {
        Scenario::shoreline().expect
    };
    e.bus_rate_min_hz = None;
    e
}

/// Analyzes a trace CSV against the expectations of `scenario`, or ones
/// inferred from the trace when no scenario is given.
pub fn cmd_analyze(trace_path: &Path, scenario: Option<&Path>, opts: &CommandOptions) -> Result<Outcome, HarnessError> {
    let file = fs::File::open(trace_path).map_err(|e| HarnessError::Io { path: trace_path.to_path_buf(), source: e })?;
    let trace = Trace::read_csv(std::io::BufReader::new(file))?;
    if trace.is_empty() {
        return Err(HarnessError::EmptyTrace);
    }
    let (expect, joints) = match scenario {
        Some(p) => {
            let scn: Scenario = read_json(p)?;
            (scn.expect.clone(), fin_joints(&scn.fins))
        }
        None => (inferred_expectations(&trace), DEFAULT_FIN_JOINTS.to_vec()),
    };
    let mut report = evaluate(&trace, &expect, &joints)?;
    let stem = trace_path.file_stem().and_then(|s| s.to_str()).unwrap_or("trace").to_string();
    report.name = stem.clone();
    let mut w = Writer::new(&opts.out)?;
    w.put(&format!("{stem}_analysis.json"), report.to_json())?;
    Ok(Outcome { report, files: w.files })
}

/// Renders every figure of a plot spec to `<figure>.svg`.
pub fn cmd_plot(trace_path: &Path, spec_path: &Path, opts: &CommandOptions) -> Result<Outcome, HarnessError> {
    let spec: PlotSpec = read_json(spec_path)?;
    let file = fs::File::open(trace_path).map_err(|e| HarnessError::Io { path: trace_path.to_path_buf(), source: e })?;
    let trace = Trace::read_csv(std::io::BufReader::new(file))?;
    let mut w = Writer::new(&opts.out)?;
    for fig in &spec.figures {
        w.put(&format!("{}.svg", fig.name), render_figure(&trace, &spec, fig)?)?;
    }
    Ok(Outcome {
        report: MetricsReport {
            name: "plot".into(),
            metrics: Vec::new(),
        },
        files: w.files,
    })
}
