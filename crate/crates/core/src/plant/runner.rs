use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{calibrate_sensors, contact_forces, foot_deflection, PlantError, Scenario, SensorCalibration, Trace};
use crate::busring::{Nanos, Reception, RingSim, RingStats};
use crate::calibration::{fin_angle, FinTransducer, FootWrench};
use crate::cpg::{build_network, joint_targets, oscillator_output, GaitController, GaitMode, Leg, NetworkState, AXIAL_JOINTS, JOINTS};
use crate::magnetics::{
    dipole_flux, flow_flux, invert_flow_flux, invert_foot_flux, FlowPose, FlowSolverOptions, FluxSample, LowPassState,
};
use crate::vec3::Vec3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub name: String,
    pub duration: f64,
    pub steps: usize,
    pub switch_time: Option<f64>,
    pub inversion_failures: usize,
    pub bus: RingStats,
    pub calibration: SensorCalibration,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub trace: Trace,
    pub summary: RunSummary,
}

/// Trace column names for `n_fins` fins and `n_modules` sensor modules.
pub fn trace_columns(n_fins: usize, n_modules: usize) -> Vec<String> {
    let mut c: Vec<String> = vec!["drive".into()];
    c.extend((0..JOINTS).map(|j| format!("gt_j{j}")));
    for src in ["gt", "est"] {
        for l in Leg::ALL {
            for o in ["tau_pitch", "tau_yaw", "f_x"] {
                c.push(format!("{src}_foot_{}_{o}", leg_name(l)));
            }
        }
    }
    c.push("gt_foot_sum".into());
    c.push("est_foot_sum".into());
    for src in ["gt", "est"] {
        c.extend((0..n_fins).map(|k| format!("{src}_fin{k}_force")));
        c.extend((0..n_fins).map(|k| format!("{src}_fin{k}_angle")));
    }
    for l in Leg::ALL {
        c.extend(["p_x", "p_y", "p_z"].map(|a| format!("gt_foot_{}_{a}", leg_name(l))));
    }
    for k in 0..n_fins {
        c.extend(["p_x", "p_y", "h_y"].map(|a| format!("gt_fin{k}_{a}")));
    }
    for m in 0..n_modules {
        c.extend(["bx", "by", "bz"].map(|a| format!("gt_m{m}_{a}")));
    }
    for kind in ["raw", "filt"] {
        for m in 0..n_modules {
            for a in ["bx", "by", "bz"] {
                c.push(format!("est_{kind}_m{m}_{a}"));
            }
        }
    }
    c
}

pub fn leg_name(l: Leg) -> &'static str {
    match l {
        Leg::FL => "fl",
        Leg::FR => "fr",
        Leg::HL => "hl",
        Leg::HR => "hr",
    }
}

struct Estimator {
    filters: Vec<LowPassState>,
    last_rx: Vec<Option<f64>>,
    raw: Vec<Vec3>,
    fresh: Vec<bool>,
}

/// Runs a scenario end to end: CPG, servos, contact and flow loads, sensor
/// transduction with noise, the sensor ring, host filtering, inversion and
/// calibrated force estimates, and the contact-triggered gait controller.
pub fn run_scenario(scn: &Scenario) -> Result<RunOutput, PlantError> {
    scn.validate()?;
    let calibration = calibrate_sensors(&scn.feet, &scn.fins, &scn.dipole, &scn.jig, scn.jig.noise_sigma, scn.calibration_seed)?;
    let net = build_network(&scn.cpg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(scn.seed);

    let mut controller = GaitController::walking(scn.cpg.d_walk, scn.cpg.d_swim);
    if scn.initial_mode == GaitMode::Swimming {
        controller.mode = GaitMode::Swimming;
        controller.drive = scn.cpg.d_swim;
    }
    let phases = (0..net.len()).map(|_| rng.random_range(0.0..std::f64::consts::TAU)).collect();
    let mut state = NetworkState::with_phases(phases, vec![0.0; net.len()], controller.drive)?;

    let n_feet = scn.feet.len();
    let n_fins = scn.fins.len();
    let n_mod = n_feet + n_fins;
    let mut ring = RingSim::new(n_mod, scn.line, scn.flux_lsb, &scn.faults)?;

    let dt = scn.step;
    let dt_ns = Nanos::from_secs(dt).0;
    let steps = (scn.duration / dt).round() as usize;
    let servo_every = (scn.servo_period / dt).round() as usize;
    let feedback_every = (scn.feedback_period / dt).round() as usize;
    let gain = scn.cpg.gain;

    let mut q_prev = joint_targets(&oscillator_output(&state), &net.joints, gain);
    let mut q_next = q_prev;
    let mut servo_start = 0usize;
    let mut head_x = scn.head_start;

    let rest: Vec<FlowPose> = scn.fins.iter().map(|f| f.rest_pose()).collect();
    let mut guess = rest.clone();
    let opts = FlowSolverOptions::default();
    let mut est = Estimator {
        filters: vec![LowPassState::new(scn.filter_cutoff); n_mod],
        last_rx: vec![None; n_mod],
        raw: vec![Vec3::ZERO; n_mod],
        fresh: vec![false; n_mod],
    };
    let mut foot_est = vec![FootWrench::default(); n_feet];
    let mut fin_est = vec![0.0; n_fins];
    let mut fin_est_angle = vec![0.0; n_fins];
    let mut failures = 0usize;
    let mut switch_time = None;

    let mut trace = Trace::new(trace_columns(n_fins, n_mod));
    let mut row = Vec::with_capacity(trace.names().len());
    let mut clean = vec![Vec3::ZERO; n_mod];
    let mut foot_pose = vec![Vec3::ZERO; n_feet];
    let mut fin_pose = rest.clone();
    let mut receptions: Vec<Reception> = Vec::new();

    for n in 1..=steps {
        let t = n as f64 * dt;
        state.drive = controller.drive;
        net.step(&mut state, dt);
        if n % servo_every == 0 {
            q_prev = q_next;
            q_next = joint_targets(&oscillator_output(&state), &net.joints, gain);
            servo_start = n;
        }
        let frac = (n - servo_start) as f64 / servo_every as f64;
        let q: [f64; JOINTS] = std::array::from_fn(|k| q_prev[k] + (q_next[k] - q_prev[k]) * frac);
        let qd: [f64; JOINTS] = std::array::from_fn(|k| (q_next[k] - q_prev[k]) / scn.servo_period);

        let speed = match controller.mode {
            GaitMode::Walking => scn.walk_speed,
            GaitMode::Swimming => scn.swim_speed,
        };
        head_x += speed * dt;
        let pts = scn.robot.chain(head_x, &q[..AXIAL_JOINTS]);
        let submerged = scn.terrain.submerged_fraction(|x_w| scn.robot.fraction_beyond(&pts, x_w));
        let weight = scn.contact.supported_weight(scn.robot.mass, submerged);
        let grounded: [bool; 4] = std::array::from_fn(|l| {
            let girdle = if Leg::ALL[l].is_front() { scn.robot.front_girdle } else { scn.robot.hind_girdle };
            !scn.terrain.is_water(pts[girdle + 1].0)
        });
        let dv: [f64; 4] = std::array::from_fn(|l| q[Leg::ALL[l].dorsoventral_joint()]);
        let fa_rate: [f64; 4] = std::array::from_fn(|l| qd[Leg::ALL[l].fore_aft_joint()]);
        let gt_feet = contact_forces(&scn.contact, weight, &grounded, &dv, &fa_rate);
        let gt_fin: Vec<f64> = scn
            .fins
            .iter()
            .map(|f| {
                let x = pts[f.mount_link.min(pts.len() - 1)].0;
                if scn.terrain.is_water(x) {
                    f.flow_force(speed, q[f.anterior_joint], qd[f.anterior_joint])
                } else {
                    0.0
                }
            })
            .collect();

        for (i, (foot, w)) in scn.feet.iter().zip(&gt_feet).enumerate() {
            let pose = foot_deflection(w, foot)?;
            foot_pose[i] = pose.p;
            clean[i] = dipole_flux(&pose, &scn.dipole)?;
        }
        for (k, (fin, f)) in scn.fins.iter().zip(&gt_fin).enumerate() {
            fin_pose[k] = fin.magnet_pose(*f)?;
            clean[n_feet + k] = flow_flux(&fin_pose[k], &scn.dipole)?;
        }

        let sigma = scn.jig.noise_sigma;
        let temperature = scn.temperature;
        let mut source = |id: u8, ts: f64| {
            let mut g = || -> f64 { rng.sample(StandardNormal) };
            let noise = Vec3::new(g(), g(), g()) * sigma;
            FluxSample {
                b: clean[id as usize] + noise,
                temperature,
                timestamp: ts,
                module_id: id,
            }
        };
        ring.run_until(Nanos(n as u64 * dt_ns), &mut source, &mut |r| receptions.push(r));
        for r in receptions.drain(..) {
            let Ok(sample) = r.result else { continue };
            let id = sample.module_id as usize;
            if id >= n_mod {
                continue;
            }
            let ts = r.t.as_secs();
            let gap = est.last_rx[id].map_or(0.0, |p| ts - p);
            est.last_rx[id] = Some(ts);
            est.raw[id] = sample.b;
            est.filters[id].step(sample.b, gap);
            est.fresh[id] = true;
        }

        for id in 0..n_mod {
            if !std::mem::take(&mut est.fresh[id]) {
                continue;
            }
            let b = est.filters[id].y;
            if id < n_feet {
                match invert_foot_flux(&b, &scn.dipole)
                    .map_err(PlantError::from)
                    .and_then(|p| Ok(calibration.feet[id].model.apply_foot(&p)?))
                {
                    Ok(w) => foot_est[id] = w,
                    Err(_) => failures += 1,
                }
            } else {
                let k = id - n_feet;
                match invert_flow_flux(&b, scn.fins[k].d_z0, &scn.dipole, &guess[k], &opts) {
                    Ok(pose) => {
                        guess[k] = pose;
                        match calibration.fins[k].model.apply_flow(pose.p_x - rest[k].p_x, pose.p_y - rest[k].p_y) {
                            Ok(f) => fin_est[k] = f,
                            Err(_) => failures += 1,
                        }
                        if let Ok(a) = fin_angle(&pose, &rest[k], scn.dipole.min_distance) {
                            fin_est_angle[k] = a;
                        }
                    }
                    Err(_) => failures += 1,
                }
            }
        }

        let gt_sum: f64 = gt_feet.iter().map(|w| w.f_x).sum();
        let est_sum: f64 = foot_est.iter().map(|w| w.f_x).sum();
        if scn.feedback && n % feedback_every == 0 && controller.update(est_sum) {
            switch_time = Some(t);
        }

        if n % scn.trace_every != 0 {
            continue;
        }
        row.clear();
        row.push(controller.drive);
        row.extend_from_slice(&q);
        for w in gt_feet.iter().chain(&foot_est) {
            row.extend_from_slice(&w.to_array());
        }
        row.push(gt_sum);
        row.push(est_sum);
        row.extend_from_slice(&gt_fin);
        row.extend(scn.fins.iter().zip(&gt_fin).map(|(f, &x)| f.deflection(x)));
        row.extend_from_slice(&fin_est);
        row.extend_from_slice(&fin_est_angle);
        for p in &foot_pose {
            row.extend_from_slice(&p.to_array());
        }
        for p in &fin_pose {
            row.extend_from_slice(&[p.p_x, p.p_y, p.h_y]);
        }
        for b in clean.iter().chain(&est.raw).chain(est.filters.iter().map(|f| &f.y)) {
            row.extend_from_slice(&b.to_array());
        }
        trace.push(t, controller.mode, &row);
    }

    Ok(RunOutput {
        trace,
        summary: RunSummary {
            name: scn.name.clone(),
            duration: steps as f64 * dt,
            steps,
            switch_time,
            inversion_failures: failures,
            bus: ring.stats(),
            calibration,
        },
    })
}
