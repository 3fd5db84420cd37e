//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any fails.

use std::f64::consts::{PI, TAU};
use std::panic::{self, AssertUnwindSafe};
use std::path::PathBuf;
use std::time::Instant;

use amphisense::busring::{
    decode_frame, encode_frame, motor_bus_budget, simulate_ring, FaultPlan, Fault, FluxLsb, FrameError, LineConfig,
    Nanos, RingSim,
};
use amphisense::calibration::JigSettings;
use amphisense::cpg::{build_polymander_network, CpgNetwork, NetworkState, OSCILLATORS};
use amphisense::harness::{evaluate, JigConfig, MetricsReport};
use amphisense::magnetics::{
    dipole_flux, flow_flux, invert_flow_flux, invert_foot_flux, DipoleParams, FlowPose, FlowSolverOptions, FluxSample,
    MagnetPose,
};
use amphisense::plant::{
    calibrate_sensors, default_feet, run_scenario, ElasticFootModel, Expectations, FootLaw, RunOutput, Scenario, Target,
};
use amphisense::Vec3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn scenario(name: &str) -> Scenario {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(format!("{name}.json"));
    Scenario::from_json(&std::fs::read_to_string(&p).unwrap()).unwrap()
}

fn fin_joints(s: &Scenario) -> Vec<usize> {
    s.fins.iter().map(|f| f.anterior_joint).collect()
}

fn metric(r: &MetricsReport, name: &str) -> f64 {
    r.get(name).unwrap_or_else(|| panic!("no metric {name}")).value
}

fn csv(out: &RunOutput) -> Vec<u8> {
    let mut buf = Vec::new();
    out.trace.write_csv(&mut buf).unwrap();
    buf
}

struct Runs {
    walk: (Scenario, RunOutput),
    swim: (Scenario, RunOutput),
    shore: (Scenario, RunOutput),
}

impl Runs {
    fn load() -> Self {
        let go = |n: &str| {
            let s = scenario(n);
            let o = run_scenario(&s).unwrap();
            (s, o)
        };
        Runs { walk: go("walk_floor"), swim: go("swim_pool"), shore: go("shoreline") }
    }
}

fn dipole_round_trip() -> String {
    let params = DipoleParams::default();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let t0 = Instant::now();
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let r = rng.random_range(2.0..10.0);
        let z: f64 = rng.random_range(-1.0..1.0);
        let az = rng.random_range(0.0..TAU);
        let s = (1.0 - z * z).sqrt();
        let p = Vec3::new(r * s * az.cos(), r * s * az.sin(), r * z);
        let pose = MagnetPose::radial(p).unwrap();
        let got = invert_foot_flux(&dipole_flux(&pose, &params).unwrap(), &params).unwrap();
        worst = worst.max((got - p).norm() / r);
    }
    let secs = t0.elapsed().as_secs_f64();
    assert!(worst < 1e-9, "max relative error {worst:e}");
    assert!(secs < 1.0, "took {secs} s");
    format!("max relative error {worst:.2e} in {:.1} ms", secs * 1e3)
}

fn flow_sweep() -> String {
    let params = DipoleParams::default();
    let opts = FlowSolverOptions::default();
    let rest = FlowPose::tangential(4.0, 0.0, 3.0);
    let (mut err_max, mut res_max) = (0.0f64, 0.0f64);
    for deg in -40..=40 {
        let theta = f64::from(deg).to_radians();
        let b = flow_flux(&FlowPose::tangential(4.0, theta, 3.0), &params).unwrap();
        let got = invert_flow_flux(&b, 3.0, &params, &rest, &opts).unwrap();
        err_max = err_max.max((got.p_x.atan2(-got.p_y) - theta).abs());
        res_max = res_max.max((flow_flux(&got, &params).unwrap() - b).norm());
    }
    assert!(err_max < 1e-6, "angle error {err_max:e}");
    assert!(res_max < 1e-10, "residual {res_max:e}");
    format!("angle error {err_max:.2e} rad, residual {res_max:.2e} mT")
}

fn calibration() -> String {
    let exact: Vec<ElasticFootModel> =
        default_feet().into_iter().map(|f| ElasticFootModel { law: FootLaw::Linearized, ..f }).collect();
    let params = DipoleParams::default();
    let cal = calibrate_sensors(&exact, &[], &params, &JigSettings::default(), 0.0, 7).unwrap();
    let worst = cal.feet.iter().flat_map(|f| f.eval.outputs.iter().map(|o| o.rmse)).fold(0.0f64, f64::max);
    assert!(worst < 1e-6, "noiseless held-out rmse {worst:e}");

    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/jig.json");
    let jig: JigConfig = serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap();
    let cal = calibrate_sensors(&jig.feet, &jig.fins, &jig.dipole, &jig.jig, jig.jig.noise_sigma, jig.seed).unwrap();
    let torque = cal.mean_torque_rmse();
    let force = cal.mean_foot_rmse("f_x");
    assert!((1.26..=2.5).contains(&torque), "torque rmse {torque}");
    assert!((0.24..=0.34).contains(&force), "force rmse {force}");
    format!("noiseless {worst:.2e}; torque {torque:.3} N·mm, force {force:.3} N")
}

fn frequencies(runs: &Runs) -> String {
    let check = |(s, o): &(Scenario, RunOutput), hz: f64, amp: Option<Target>| {
        let expect = Expectations {
            warmup: s.expect.warmup,
            gait_frequency_hz: Some(Target::new(hz, 0.02 * hz)),
            axial_amplitude_deg: amp,
            ..Default::default()
        };
        let r = evaluate(&o.trace, &expect, &fin_joints(s)).unwrap();
        assert!(r.passed(), "{}: {:?}", s.name, r.lines());
        r
    };
    let w = check(&runs.walk, 0.47, None);
    let s = check(&runs.swim, 0.78, Some(Target::new(29.0, 1.0)));
    format!(
        "walk {:.4} Hz, swim {:.4} Hz, swim amplitude {:.2} deg",
        metric(&w, "gait_frequency_hz"),
        metric(&s, "gait_frequency_hz"),
        metric(&s, "axial_amplitude_deg")
    )
}

fn wrap(a: f64) -> f64 {
    (a + PI).rem_euclid(TAU) - PI
}

fn random_state(seed: u64, drive: f64) -> NetworkState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let phi = (0..OSCILLATORS).map(|_| rng.random_range(0.0..TAU)).collect();
    let r = (0..OSCILLATORS).map(|_| rng.random_range(0.0..0.2)).collect();
    NetworkState::with_phases(phi, r, drive).unwrap()
}

fn integrate(net: &CpgNetwork, s: &mut NetworkState, seconds: f64) {
    for _ in 0..(seconds / 1e-3).round() as usize {
        net.step(s, 1e-3);
    }
}

fn wave_structure() -> String {
    let net = build_polymander_network();
    let mut s = random_state(3, 5.0);
    integrate(&net, &mut s, 20.0);
    let left: Vec<usize> = (0..8).map(|k| 2 * k).collect();
    let steps: Vec<f64> = left.windows(2).map(|w| wrap(s.phi[w[0]] - s.phi[w[1]])).collect();
    assert!(steps.iter().all(|&d| d > 0.0), "not monotone: {steps:?}");
    let total: f64 = steps.iter().sum();
    let rel = (total - net.config.total_lag).abs() / net.config.total_lag;
    assert!(rel < 0.05, "total lag {total}");

    let mut s = random_state(5, 2.0);
    integrate(&net, &mut s, 10.0);
    s.drive = 5.0;
    integrate(&net, &mut s, 3.0 / 0.78);
    let limb = s.r[16..32].iter().cloned().fold(0.0f64, f64::max);
    assert!(limb < 1e-3, "limb amplitude {limb:e}");
    format!("total lag off by {:.2}%, limb amplitude {limb:.1e} after 3 cycles", rel * 100.0)
}

fn walking_phases(runs: &Runs) -> String {
    let (s, o) = &runs.walk;
    let expect = Expectations { warmup: s.expect.warmup, foot_phase_tolerance: Some(0.15), ..Default::default() };
    let r = evaluate(&o.trace, &expect, &fin_joints(s)).unwrap();
    assert!(r.passed(), "{:?}", r.lines());
    format!(
        "diagonal {:.3}, ipsilateral {:.3} cycles",
        metric(&r, "foot_phase_diagonal_fl_hr_cycles"),
        metric(&r, "foot_phase_ipsilateral_fl_hl_cycles")
    )
}

fn transition(runs: &Runs) -> String {
    let (s, o) = &runs.shore;
    let expect = Expectations {
        warmup: s.expect.warmup,
        expect_switch: Some(true),
        transition_latency_max: Some(0.02),
        ..Default::default()
    };
    let r = evaluate(&o.trace, &expect, &fin_joints(s)).unwrap();
    assert!(r.passed(), "{:?}", r.lines());
    let (ws, wo) = &runs.walk;
    assert!(ws.feedback, "floor scenario must run the contact controller");
    let expect = Expectations { warmup: ws.expect.warmup, expect_switch: Some(false), ..Default::default() };
    let w = evaluate(&wo.trace, &expect, &fin_joints(ws)).unwrap();
    assert!(w.passed(), "{:?}", w.lines());
    format!("switch latency {:.3} s, floor run never switches", metric(&r, "transition_latency_s"))
}

fn flow_synchrony(runs: &Runs) -> String {
    let (s, o) = &runs.swim;
    let expect = Expectations { warmup: s.expect.warmup, flow_lag_max: Some(0.1), ..Default::default() };
    let r = evaluate(&o.trace, &expect, &fin_joints(s)).unwrap();
    assert!(r.passed(), "{:?}", r.lines());
    let worst = r.metrics.iter().map(|m| m.value.abs()).fold(0.0f64, f64::max);
    format!("{} fins, worst lag {worst:.3} cycles", r.metrics.len())
}

fn bus() -> String {
    let line = LineConfig::default();
    let stats = simulate_ring(10, &line, 2.0, &FaultPlan::default()).unwrap();
    let rate = stats.min_rate();
    assert!(rate >= 589.8, "rate {rate}");

    let lsb = FluxLsb::default();
    let sample = FluxSample { b: Vec3::new(0.31, -0.2, 0.05), temperature: 24.5, timestamp: 0.0, module_id: 6 };
    let frame = encode_frame(&sample, lsb).unwrap();
    let mut flips = 0;
    for byte in 0..frame.len() {
        for bit in 0..8 {
            let mut f = frame;
            f[byte] ^= 1 << bit;
            let got = decode_frame(&f, lsb, 0.0);
            if byte == 0 {
                assert!(matches!(got, Err(FrameError::BadSync(_))), "sync bit {bit} missed");
            } else {
                assert!(matches!(got, Err(FrameError::BadCrc { .. })), "byte {byte} bit {bit} missed");
            }
            flips += 1;
        }
    }

    let plan = FaultPlan { events: vec![Fault::Kill { module: 3, at: 0.01 }], ..Default::default() };
    let mut sim = RingSim::new(10, line, lsb, &plan).unwrap();
    let mut rx = Vec::new();
    let mut src = |id: u8, t: f64| FluxSample { b: Vec3::new(0.1, 0.2, 0.3), temperature: 20.0, timestamp: t, module_id: id };
    sim.run_until(Nanos::from_secs(0.5), &mut src, &mut |r| rx.push(r));
    let rounds = rx.iter().filter(|r| r.sender == 0 && r.t.as_secs() > 0.0102).count() as i64;
    let timeouts = sim.stats().timeout_recoveries as i64;
    assert!(rounds > 100 && (timeouts - rounds).abs() <= 1, "{timeouts} timeouts over {rounds} rounds");
    assert!(rx.iter().all(|r| r.result.is_ok()), "dead module corrupted the ring");

    let motors = motor_bus_budget(16, 2e-6, 0.3e-3).unwrap();
    assert!(motors >= 100.0, "motor budget {motors}");
    format!(
        "{rate:.1} Hz per module, {flips}/{flips} flips caught, {timeouts} timeouts in {rounds} rounds, motors {motors:.1} Hz"
    )
}

fn fidelity(runs: &Runs) -> String {
    let mut open = runs.walk.0.clone();
    open.feedback = false;
    let o = run_scenario(&open).unwrap();
    let expect = Expectations { warmup: open.expect.warmup, foot_force_rmse_max: Some(0.3), ..Default::default() };
    let w = evaluate(&o.trace, &expect, &fin_joints(&open)).unwrap();
    assert!(w.passed(), "{:?}", w.lines());
    let (s, so) = &runs.swim;
    let expect = Expectations { warmup: s.expect.warmup, foot_force_abs_max: Some(1.0), ..Default::default() };
    let r = evaluate(&so.trace, &expect, &fin_joints(s)).unwrap();
    assert!(r.passed(), "{:?}", r.lines());
    let max = |r: &MetricsReport| r.metrics.iter().map(|m| m.value).fold(0.0f64, f64::max);
    format!("walk f_x rmse <= {:.3} N, swim |f_x| <= {:.3} N", max(&w), max(&r))
}

fn determinism(runs: &Runs) -> String {
    let mut bytes = 0;
    for (s, o) in [&runs.walk, &runs.swim, &runs.shore] {
        let first = csv(o);
        let again = csv(&run_scenario(s).unwrap());
        assert!(first == again, "{} differs between runs", s.name);
        bytes += first.len();
    }
    format!("3 scenarios, {bytes} bytes identical")
}

type Check<'a> = Box<dyn Fn() -> String + 'a>;

fn main() {
    panic::set_hook(Box::new(|_| {}));
    let t0 = Instant::now();
    let runs = Runs::load();
    let criteria: Vec<(&str, Check)> = vec![
        ("dipole round trip", Box::new(dipole_round_trip)),
        ("flow inversion sweep", Box::new(flow_sweep)),
        ("calibration exactness and noise band", Box::new(calibration)),
        ("gait frequencies", Box::new(|| frequencies(&runs))),
        ("wave structure", Box::new(wave_structure)),
        ("walking phase relations", Box::new(|| walking_phases(&runs))),
        ("walk to swim transition", Box::new(|| transition(&runs))),
        ("flow synchrony", Box::new(|| flow_synchrony(&runs))),
        ("sensor bus", Box::new(bus)),
        ("end-to-end fidelity", Box::new(|| fidelity(&runs))),
        ("determinism", Box::new(|| determinism(&runs))),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match panic::catch_unwind(AssertUnwindSafe(check)) {
            Ok(detail) => println!("PASS criterion {}: {name}: {detail}", i + 1),
            Err(e) => {
                failed += 1;
                let msg = e
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                println!("FAIL criterion {}: {name}: {msg}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed in {:.1} s", criteria.len() - failed, criteria.len(), t0.elapsed().as_secs_f64());
    if failed > 0 {
        std::process::exit(1);
    }
}
