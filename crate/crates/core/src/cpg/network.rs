use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{CpgConfig, CpgError, SaturationMap};

pub const JOINTS: usize = 16;
pub const AXIAL_JOINTS: usize = 8;
pub const OSCILLATORS: usize = 2 * JOINTS;

/// Axial joints at the front and hind girdles.
const FRONT_GIRDLE: usize = 1;
const HIND_GIRDLE: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OscGroup {
    Axial,
    Limb,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Left,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Leg {
    FL,
    FR,
    HL,
    HR,
}

impl Leg {
    pub const ALL: [Leg; 4] = [Leg::FL, Leg::FR, Leg::HL, Leg::HR];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn side(self) -> Side {
        match self {
            Leg::FL | Leg::HL => Side::Left,
            Leg::FR | Leg::HR => Side::Right,
        }
    }

    pub fn is_front(self) -> bool {
        matches!(self, Leg::FL | Leg::FR)
    }

    pub fn fore_aft_joint(self) -> usize {
        AXIAL_JOINTS + 2 * self.index()
    }

    pub fn dorsoventral_joint(self) -> usize {
        self.fore_aft_joint() + 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum JointKind {
    Axial(usize),
    ForeAft(Leg),
    Dorsoventral(Leg),
}

/// The antagonist pair behind one joint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct JointPair {
    pub kind: JointKind,
    pub flexor: usize,
    pub extensor: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OscillatorParams {
    pub a: f64,
    pub omega: SaturationMap,
    pub amplitude: SaturationMap,
    pub group: OscGroup,
    pub side: Side,
}

/// Directed edge: oscillator `i` is pulled towards `φ_j - b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coupling {
    pub i: usize,
    pub j: usize,
    pub w: f64,
    pub b: f64,
    /// When set, the edge only acts while the drive lies in this band.
    pub gate: Option<(f64, f64)>,
}

impl Coupling {
    pub fn active(&self, drive: f64) -> bool {
        self.gate.is_none_or(|(lo, hi)| drive >= lo && drive <= hi)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CpgNetwork {
    pub oscillators: Vec<OscillatorParams>,
    pub couplings: Vec<Coupling>,
    pub joints: Vec<JointPair>,
    pub config: CpgConfig,
}

impl CpgNetwork {
    pub fn len(&self) -> usize {
        self.oscillators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.oscillators.is_empty()
    }

    /// Oscillators whose intrinsic amplitude is nonzero at `drive`.
    pub fn active(&self, drive: f64) -> Vec<usize> {
        (0..self.len())
            .filter(|&i| self.oscillators[i].amplitude.contains(drive))
            .collect()
    }

    /// True if every oscillator is reachable from oscillator 0 ignoring edge direction.
    pub fn is_connected(&self) -> bool {
        let n = self.len();
        if n == 0 {
            return true;
        }
        let mut seen = vec![false; n];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(u) = stack.pop() {
            for e in &self.couplings {
                for (a, b) in [(e.i, e.j), (e.j, e.i)] {
                    if a == u && !seen[b] {
                        seen[b] = true;
                        stack.push(b);
                    }
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    pub fn intrinsic_frequency(&self, i: usize, drive: f64) -> f64 {
        self.oscillators[i].omega.value(drive)
    }

    pub fn target_amplitude(&self, i: usize, drive: f64) -> f64 {
        let o = &self.oscillators[i];
        let base = o.amplitude.value(drive);
        if o.group == OscGroup::Axial && base > 0.0 {
            let off = match o.side {
                Side::Left => self.config.turn_offset,
                Side::Right => -self.config.turn_offset,
            };
            (base + off).max(0.0)
        } else {
            base
        }
    }
}

/// Default network: the salamander-robot layout with [`CpgConfig::default`].
pub fn build_polymander_network() -> CpgNetwork {
    build_network(&CpgConfig::default()).expect("default config is valid")
}

/// Oscillators `2k` (left / flexor) and `2k + 1` (right / extensor) drive
/// joint `k`. Joints 0..8 run head to tail along the spine; joints 8..16 are
/// fore-aft then dorsoventral for FL, FR, HL, HR.
pub fn build_network(cfg: &CpgConfig) -> Result<CpgNetwork, CpgError> {
    cfg.validate()?;
    let mut oscillators = Vec::with_capacity(OSCILLATORS);
    let mut joints = Vec::with_capacity(JOINTS);
    for k in 0..JOINTS {
        let (group, omega, amplitude) = if k < AXIAL_JOINTS {
            (OscGroup::Axial, cfg.axial_omega, cfg.axial_amplitude)
        } else {
            (OscGroup::Limb, cfg.limb_omega, cfg.limb_amplitude)
        };
        for side in [Side::Left, Side::Right] {
            oscillators.push(OscillatorParams {
                a: cfg.a,
                omega,
                amplitude,
                group,
                side,
            });
        }
        let kind = if k < AXIAL_JOINTS {
            JointKind::Axial(k)
        } else {
            let leg = Leg::ALL[(k - AXIAL_JOINTS) / 2];
            if (k - AXIAL_JOINTS).is_multiple_of(2) {
                JointKind::ForeAft(leg)
            } else {
                JointKind::Dorsoventral(leg)
            }
        };
        joints.push(JointPair {
            kind,
            flexor: 2 * k,
            extensor: 2 * k + 1,
        });
    }

    let w = cfg.w;
    let mut couplings = Vec::new();
    // (i <- j) carries the gate and bias b, (j <- i) gets -b and no gate
    let pair = |couplings: &mut Vec<Coupling>, i: usize, j: usize, b: f64, gate_ij: Option<(f64, f64)>| {
        couplings.push(Coupling { i, j, w, b, gate: gate_ij });
        couplings.push(Coupling { i: j, j: i, w, b: -b, gate: None });
    };

    for k in 0..JOINTS {
        let (l, r) = (2 * k, 2 * k + 1);
        couplings.push(Coupling { i: l, j: r, w, b: PI, gate: None });
        couplings.push(Coupling { i: r, j: l, w, b: PI, gate: None });
    }

    // each side of the spine lags by an equal step per segment, head to tail
    let lag = cfg.total_lag / (AXIAL_JOINTS - 1) as f64;
    for k in 0..AXIAL_JOINTS - 1 {
        for s in 0..2 {
            pair(&mut couplings, 2 * (k + 1) + s, 2 * k + s, lag, None);
        }
    }

    let limb_band = Some((cfg.limb_amplitude.d_low, cfg.limb_amplitude.d_high));
    let fore_aft = |leg: Leg| 2 * leg.fore_aft_joint();
    for leg in Leg::ALL {
        let girdle = if leg.is_front() { FRONT_GIRDLE } else { HIND_GIRDLE };
        let axial = 2 * girdle + if leg.side() == Side::Left { 0 } else { 1 };
        // limb -> spine only while the limbs are inside their band
        pair(&mut couplings, axial, fore_aft(leg), 0.0, limb_band);
        pair(&mut couplings, 2 * leg.dorsoventral_joint(), fore_aft(leg), PI / 2.0, None);
    }
    let limb_pairs = [
        (Leg::FR, Leg::FL, PI),
        (Leg::HR, Leg::HL, PI),
        (Leg::HL, Leg::FL, PI),
        (Leg::HR, Leg::FR, PI),
        (Leg::HR, Leg::FL, 0.0),
        (Leg::HL, Leg::FR, 0.0),
    ];
    for (a, b, bias) in limb_pairs {
        pair(&mut couplings, fore_aft(a), fore_aft(b), bias, None);
    }
    Ok(CpgNetwork {
        oscillators,
        couplings,
        joints,
        config: cfg.clone(),
    })
}
