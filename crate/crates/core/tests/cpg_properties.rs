use std::f64::consts::{PI, TAU};

use amphisense::cpg::{build_network, build_polymander_network, CpgConfig, CpgNetwork, Leg, NetworkState, OSCILLATORS};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn wrap(a: f64) -> f64 {
    (a + PI).rem_euclid(TAU) - PI
}

fn random_state(seed: u64, drive: f64) -> NetworkState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let phi = (0..OSCILLATORS).map(|_| rng.random_range(0.0..TAU)).collect();
    let r = (0..OSCILLATORS).map(|_| rng.random_range(0.0..0.2)).collect();
    NetworkState::with_phases(phi, r, drive).unwrap()
}

fn run(net: &CpgNetwork, s: &mut NetworkState, seconds: f64, dt: f64) {
    let n = (seconds / dt).round() as usize;
    for _ in 0..n {
        net.step(s, dt);
    }
}

fn relative(s: &NetworkState, idx: &[usize]) -> Vec<f64> {
    idx.iter().map(|&i| wrap(s.phi[i] - s.phi[idx[0]])).collect()
}

#[test]
fn swim_network_phase_locks_from_any_start() {
    let net = build_polymander_network();
    let active = net.active(5.0);
    let mut reference: Option<Vec<f64>> = None;
    for seed in 0..20 {
        let mut s = random_state(seed, 5.0);
        run(&net, &mut s, 30.0, 1e-3);
        let rel = relative(&s, &active);
        match &reference {
            None => reference = Some(rel),
            Some(r) => {
                for (a, b) in rel.iter().zip(r) {
                    assert!(wrap(a - b).abs() < 1e-3, "seed {seed}: {a} vs {b}");
                }
            }
        }
    }
}

#[test]
fn swim_drive_gives_a_travelling_wave() {
    let net = build_polymander_network();
    let mut s = random_state(3, 5.0);
    run(&net, &mut s, 20.0, 1e-3);
    let left: Vec<usize> = (0..8).map(|k| 2 * k).collect();
    let steps: Vec<f64> = left.windows(2).map(|w| wrap(s.phi[w[0]] - s.phi[w[1]])).collect();
    assert!(steps.iter().all(|&d| d > 0.0), "not monotone: {steps:?}");
    let total: f64 = steps.iter().sum();
    let configured = net.config.total_lag;
    assert!((total - configured).abs() / configured < 0.05, "total lag {total}");
}

#[test]
fn limbs_saturate_after_switch() {
    let net = build_polymander_network();
    let mut s = random_state(5, 2.0);
    run(&net, &mut s, 10.0, 1e-3);
    assert!(s.r[2 * Leg::FL.fore_aft_joint()] > 0.5);
    s.drive = 5.0;
    // three swim cycles
    run(&net, &mut s, 3.0 / 0.78, 1e-3);
    for i in 16..32 {
        assert!(s.r[i] < 1e-3, "oscillator {i} amplitude {}", s.r[i]);
    }
}

#[test]
fn walking_limb_phase_relations() {
    let net = build_polymander_network();
    let mut s = random_state(9, 2.0);
    run(&net, &mut s, 20.0, 1e-3);
    let fa = |leg: Leg| s.phi[2 * leg.fore_aft_joint()];
    let cyc = |a: f64| wrap(a) / TAU;
    for (a, b) in [(Leg::FL, Leg::HR), (Leg::FR, Leg::HL)] {
        assert!(cyc(fa(a) - fa(b)).abs() < 0.15);
    }
    for (a, b) in [(Leg::FL, Leg::HL), (Leg::FR, Leg::HR)] {
        assert!((cyc(fa(a) - fa(b)).abs() - 0.5).abs() < 0.15);
    }
}

#[test]
fn network_runs_at_intrinsic_frequency() {
    for (drive, hz) in [(2.0, 0.47), (5.0, 0.78)] {
        let net = build_polymander_network();
        let mut s = random_state(1, drive);
        run(&net, &mut s, 10.0, 1e-3);
        let p0 = s.phi[0];
        run(&net, &mut s, 10.0, 1e-3);
        let f = (s.phi[0] - p0) / TAU / 10.0;
        assert!((f - hz).abs() / hz < 1e-3, "drive {drive}: {f} Hz");
    }
}

#[test]
fn halving_the_step_barely_moves_the_fixed_point() {
    let cfg = CpgConfig::default();
    let net = build_network(&cfg).unwrap();
    let idx: Vec<usize> = (0..OSCILLATORS).collect();
    let mut a = random_state(4, 2.0);
    let mut b = a.clone();
    run(&net, &mut a, 20.0, 1e-3);
    run(&net, &mut b, 20.0, 5e-4);
    for (x, y) in relative(&a, &idx).iter().zip(relative(&b, &idx)) {
        assert!(wrap(x - y).abs() < 1e-4);
    }
}
