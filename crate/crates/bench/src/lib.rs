//! Fixtures shared by the benchmarks.

use amphisense::calibration::{CalibrationDataset, JigSettings};
use amphisense::cpg::{build_polymander_network, CpgNetwork, NetworkState, OSCILLATORS};
use amphisense::magnetics::{flow_flux, DipoleParams, FlowPose};
use amphisense::plant::{default_feet, foot_dataset, DEFAULT_FLUX_NOISE};
use amphisense::Vec3;

/// Swimming network after its transient has died out.
pub fn settled_network() -> (CpgNetwork, NetworkState) {
    let net = build_polymander_network();
    let mut s = NetworkState::new(OSCILLATORS, 5.0);
    for _ in 0..5000 {
        net.step(&mut s, 1e-3);
    }
    (net, s)
}

/// Fin fluxes over a -40..40 degree sweep.
pub fn flow_sweep(params: &DipoleParams) -> Vec<Vec3> {
    (-40..=40)
        .map(|d| flow_flux(&FlowPose::tangential(4.0, f64::from(d).to_radians(), 3.0), params).unwrap())
        .collect()
}

pub fn foot_training_set() -> CalibrationDataset {
    let foot = default_feet()[0].clone();
    foot_dataset(&foot, &DipoleParams::default(), &JigSettings::default(), DEFAULT_FLUX_NOISE, 1)
        .unwrap()
        .train()
}
