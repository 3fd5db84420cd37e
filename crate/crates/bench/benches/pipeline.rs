use std::hint::black_box;

use amphisense::busring::{simulate_ring, FaultPlan, LineConfig};
use amphisense::calibration::fit_poly;
use amphisense::magnetics::{dipole_flux_radial, invert_flow_flux, invert_foot_flux, DipoleParams, FlowPose, FlowSolverOptions};
use amphisense::Vec3;
use amphisense_bench::{flow_sweep, foot_training_set, settled_network};
use criterion::{criterion_group, criterion_main, Criterion};

fn cpg(c: &mut Criterion) {
    let (net, state) = settled_network();
    c.bench_function("cpg_step_1ms", |b| {
        let mut s = state.clone();
        b.iter(|| net.step(black_box(&mut s), 1e-3))
    });
}

fn inversion(c: &mut Criterion) {
    let params = DipoleParams::default();
    let b_foot = dipole_flux_radial(&Vec3::new(4.2, 0.3, -0.5), &params).unwrap();
    c.bench_function("invert_foot_flux", |b| b.iter(|| invert_foot_flux(black_box(&b_foot), &params)));

    let sweep = flow_sweep(&params);
    let rest = FlowPose::tangential(4.0, 0.0, 3.0);
    let opts = FlowSolverOptions::default();
    c.bench_function("invert_flow_flux_sweep_81", |b| {
        b.iter(|| {
            for flux in &sweep {
                black_box(invert_flow_flux(flux, 3.0, &params, &rest, &opts).unwrap());
            }
        })
    });
}

fn calibration(c: &mut Criterion) {
    let data = foot_training_set();
    c.bench_function("fit_foot_polynomial", |b| b.iter(|| fit_poly(black_box(&data)).unwrap()));
}

fn bus(c: &mut Criterion) {
    let line = LineConfig::default();
    let plan = FaultPlan::default();
    c.bench_function("ring_10_modules_100ms", |b| b.iter(|| simulate_ring(10, &line, 0.1, &plan).unwrap()));
}

criterion_group!(benches, cpg, inversion, calibration, bus);
criterion_main!(benches);
