use serde::{Deserialize, Serialize};

use super::{CpgError, CpgNetwork, JointPair, JOINTS};

/// Phases (rad, unwrapped) and amplitudes of every oscillator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkState {
    pub phi: Vec<f64>,
    pub r: Vec<f64>,
    pub drive: f64,
    /// s
    pub t: f64,
}

impl NetworkState {
    /// All phases and amplitudes zero.
    pub fn new(n: usize, drive: f64) -> Self {
        Self {
            phi: vec![0.0; n],
            r: vec![0.0; n],
            drive,
            t: 0.0,
        }
    }

    pub fn with_phases(phi: Vec<f64>, r: Vec<f64>, drive: f64) -> Result<Self, CpgError> {
        if phi.len() != r.len() {
            return Err(CpgError::StateSize {
                expected: phi.len(),
                got: r.len(),
            });
        }
        Ok(Self { phi, r, drive, t: 0.0 })
    }
}

    #[allow(clippy::too_many_arguments)]
impl CpgNetwork {
    fn derivatives(&self, omega: &[f64], target: &[f64], phi: &[f64], r: &[f64], drive: f64, dphi: &mut [f64], dr: &mut [f64]) {
        for i in 0..phi.len() {
            dphi[i] = omega[i];
            dr[i] = self.oscillators[i].a * (target[i] - r[i]);
        }
        for c in &self.couplings {
            if c.active(drive) {
                dphi[c.i] += c.w * (phi[c.j] - phi[c.i] - c.b).sin();
            }
        }
    }

    /// One RK4 step of length `dt`. The drive is held for the step.
    pub fn step(&self, state: &mut NetworkState, dt: f64) {
        let n = self.len();
        assert!(dt > 0.0 && dt <= 0.01, "step must lie in (0, 10 ms], got {dt}");
        assert_eq!(state.phi.len(), n, "state does not match network");
        let d = state.drive;
        let omega: Vec<f64> = (0..n).map(|i| self.intrinsic_frequency(i, d)).collect();
        let target: Vec<f64> = (0..n).map(|i| self.target_amplitude(i, d)).collect();

        let mut k = [[vec![0.0; n], vec![0.0; n]], [vec![0.0; n], vec![0.0; n]], [vec![0.0; n], vec![0.0; n]], [vec![0.0; n], vec![0.0; n]]];
        let mut tp = vec![0.0; n];
        let mut tr = vec![0.0; n];
        let weights = [0.0, 0.5, 0.5, 1.0];
        for s in 0..4 {
            if s == 0 {
                tp.copy_from_slice(&state.phi);
                tr.copy_from_slice(&state.r);
            } else {
                for i in 0..n {
                    tp[i] = state.phi[i] + weights[s] * dt * k[s - 1][0][i];
                    tr[i] = state.r[i] + weights[s] * dt * k[s - 1][1][i];
                }
            }
            let [kp, kr] = &mut k[s];
            self.derivatives(&omega, &target, &tp, &tr, d, kp, kr);
        }
        for i in 0..n {
            state.phi[i] += dt / 6.0 * (k[0][0][i] + 2.0 * k[1][0][i] + 2.0 * k[2][0][i] + k[3][0][i]);
            state.r[i] = (state.r[i] + dt / 6.0 * (k[0][1][i] + 2.0 * k[1][1][i] + 2.0 * k[2][1][i] + k[3][1][i])).max(0.0);
        }
        state.t += dt;
    }
}

/// Free-function form of [`CpgNetwork::step`].
pub fn step_network(state: &mut NetworkState, net: &CpgNetwork, dt: f64) {
    net.step(state, dt);
}

/// `x_i = r_i (1 + cos φ_i)`.
pub fn oscillator_output(state: &NetworkState) -> Vec<f64> {
    state
        .phi
        .iter()
        .zip(&state.r)
        .map(|(p, r)| r * (1.0 + p.cos()))
        .collect()
}

/// Joint angle = gain · (flexor activity − extensor activity), rad.
pub fn joint_targets(x: &[f64], joints: &[JointPair], gain: f64) -> [f64; JOINTS] {
    let mut out = [0.0; JOINTS];
    for (k, j) in joints.iter().enumerate().take(JOINTS) {
        out[k] = gain * (x[j.flexor] - x[j.extensor]);
    }
    out
}
