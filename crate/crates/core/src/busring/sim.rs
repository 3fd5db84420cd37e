use std::cmp::Reverse;
use std::collections::BinaryHeap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::frame::{
    decode_frame, encode_control, encode_frame_saturating, ControlOp, FluxLsb, FrameBytes, FrameError,
    CONTROL_LEN, FRAME_LEN,
};
use super::trace::TraceRecord;
use super::{BusError, Nanos};
use crate::magnetics::FluxSample;
use crate::vec3::Vec3;

/// Serial line timing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LineConfig {
    pub baud: u32,
    /// 10 for 8N1.
    pub bits_per_byte: u32,
    /// Idle time between the end of one frame and the next (s).
    pub inter_frame_gap: f64,
    /// Silence after which the successor of a missing module takes over (s).
    /// Defaults to twice one frame-plus-gap slot.
    pub timeout: Option<f64>,
}

impl Default for LineConfig {
    fn default() -> Self {
        Self {
            baud: 1_000_000,
            bits_per_byte: 10,
            inter_frame_gap: 20e-6,
            timeout: None,
        }
    }
}

impl LineConfig {
    pub fn byte_time(&self) -> Nanos {
        Nanos((self.bits_per_byte as f64 * 1e9 / self.baud as f64).round() as u64)
    }

    pub fn frame_time(&self) -> Nanos {
        Nanos(self.byte_time().0 * FRAME_LEN as u64)
    }

    pub fn gap(&self) -> Nanos {
        Nanos::from_secs(self.inter_frame_gap)
    }

    pub fn timeout(&self) -> Nanos {
        match self.timeout {
            Some(t) => Nanos::from_secs(t),
            None => Nanos(2 * (self.frame_time().0 + self.gap().0)),
        }
    }

    /// Round period of a fault-free ring of `n` modules (s).
    pub fn round_period(&self, n: usize) -> f64 {
        n as f64 * (self.frame_time().0 + self.gap().0) as f64 * 1e-9
    }

    pub fn validate(&self) -> Result<(), BusError> {
        if self.baud == 0 || self.bits_per_byte == 0 {
            return Err(BusError::Config("baud and bits_per_byte must be positive".into()));
        }
        if !(self.inter_frame_gap >= 0.0) {
            return Err(BusError::Config("inter_frame_gap must be non-negative".into()));
        }
        if self.timeout() <= self.frame_time() {
            return Err(BusError::Config(format!(
                "timeout {} s must exceed the frame duration {} s",
                self.timeout().as_secs(),
                self.frame_time().as_secs()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Fault {
    /// Module stops transmitting from `at` (s).
    Kill { module: u8, at: f64 },
    /// Module resumes at `at` (s).
    Revive { module: u8, at: f64 },
    /// The module's first transmission at or after `at` starts `extra` s late.
    Delay { module: u8, at: f64, extra: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FaultPlan {
    pub events: Vec<Fault>,
    /// Chance per frame that one uniformly chosen bit is flipped on the wire.
    pub bit_flip_probability: f64,
    pub seed: u64,
}

impl Default for FaultPlan {
    fn default() -> Self {
        Self {
            events: Vec::new(),
            bit_flip_probability: 0.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeState {
    Idle,
    Armed,
    Transmitting,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ModuleStats {
    pub id: u8,
    pub frames_sent: u64,
    /// Frames the host decoded cleanly.
    pub frames_received: u64,
    pub rate_hz: f64,
    #[serde(skip)]
    first_rx: Option<Nanos>,
    #[serde(skip)]
    last_rx: Option<Nanos>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PeriodStats {
    pub count: u64,
    pub mean_s: f64,
    pub min_s: f64,
    pub max_s: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RingStats {
    pub n_modules: usize,
    pub duration_s: f64,
    pub modules: Vec<ModuleStats>,
    pub frames_sent: u64,
    /// Frames damaged on the wire: injected bit flips plus collisions.
    pub frames_corrupted: u64,
    pub bit_flips_injected: u64,
    pub collisions: u64,
    /// Damaged frames the host rejected on sync or CRC.
    pub corrupted_detected: u64,
    pub timeout_recoveries: u64,
    /// Interval between consecutive clean frames of the same module.
    pub round_period: PeriodStats,
    /// Bytes sent by the host after the start broadcast.
    pub host_bytes_after_start: u64,
}

impl RingStats {
    pub fn min_rate(&self) -> f64 {
        self.modules.iter().map(|m| m.rate_hz).fold(f64::INFINITY, f64::min)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("stats serialize")
    }
}

/// One frame as seen by the host.
#[derive(Debug, Clone, PartialEq)]
pub struct Reception {
    /// End of the frame on the wire.
    pub t: Nanos,
    pub sender: u8,
    pub result: Result<FluxSample, FrameError>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Event {
    StartDone,
    TxStart { module: u8 },
    TxEnd { module: u8, tx: u64 },
    Timeout { watcher: u8, generation: u64 },
}

#[derive(Debug, Clone)]
struct Transmission {
    id: u64,
    bytes: FrameBytes,
    end: Nanos,
    flipped: bool,
    collided: bool,
}

#[derive(Debug, Clone)]
struct Node {
    state: NodeState,
    alive: bool,
    pending_delay: Option<(Nanos, Nanos)>,
}

/// Masterless token ring: after the host's start broadcast, module `i`
/// transmits one frame a gap after it sees a clean frame from module
/// `i - 1`. If its predecessor stays silent for the timeout, measured from
/// the end of the last slot, the module behaves as if that slot had
/// passed, and the token moves on.
pub struct RingSim {
    n: usize,
    line: LineConfig,
    lsb: FluxLsb,
    now: Nanos,
    queue: BinaryHeap<Reverse<(Nanos, u64, Event)>>,
    seq: u64,
    generation: u64,
    nodes: Vec<Node>,
    faults: Vec<(Nanos, Fault)>,
    next_fault: usize,
    rng: ChaCha8Rng,
    flip_p: f64,
    in_flight: Vec<Transmission>,
    next_tx: u64,
    stats: RingStats,
    periods: Vec<f64>,
    record: bool,
    trace: Vec<TraceRecord>,
}

impl RingSim {
    pub fn new(n_modules: usize, line: LineConfig, lsb: FluxLsb, faults: &FaultPlan) -> Result<Self, BusError> {
        if n_modules == 0 || n_modules > 256 {
            return Err(BusError::Config(format!("n_modules must be in 1..=256, got {n_modules}")));
        }
        line.validate()?;
        if !(0.0..=1.0).contains(&faults.bit_flip_probability) {
            return Err(BusError::Config("bit_flip_probability must be in [0, 1]".into()));
        }
        let mut timed: Vec<(Nanos, Fault)> = Vec::new();
        for f in &faults.events {
            let (module, at) = match *f {
                Fault::Kill { module, at } | Fault::Revive { module, at } | Fault::Delay { module, at, .. } => (module, at),
            };
            if module as usize >= n_modules || !(at >= 0.0) {
                return Err(BusError::Config(format!("fault {f:?} is out of range")));
            }
            timed.push((Nanos::from_secs(at), *f));
        }
        timed.sort_by_key(|(t, _)| *t);
        let mut sim = Self {
            n: n_modules,
            line,
            lsb,
            now: Nanos(0),
            queue: BinaryHeap::new(),
            seq: 0,
            generation: 0,
            nodes: vec![
                Node {
                    state: NodeState::Idle,
                    alive: true,
                    pending_delay: None,
                };
                n_modules
            ],
            faults: timed,
            next_fault: 0,
            rng: ChaCha8Rng::seed_from_u64(faults.seed),
            flip_p: faults.bit_flip_probability,
            in_flight: Vec::new(),
            next_tx: 0,
            stats: RingStats {
                n_modules,
                modules: (0..n_modules)
                    .map(|i| ModuleStats {
                        id: i as u8,
                        ..Default::default()
                    })
                    .collect(),
                ..Default::default()
            },
            periods: Vec::new(),
            record: false,
            trace: Vec::new(),
        };
        // host start broadcast
        let start = encode_control(ControlOp::Start);
        debug_assert_eq!(start.len(), CONTROL_LEN);
        let done = Nanos(sim.line.byte_time().0 * CONTROL_LEN as u64);
        sim.push(done, Event::StartDone);
        Ok(sim)
    }

    /// Keep every frame for [`RingSim::trace`].
    pub fn with_trace(mut self) -> Self {
        self.record = true;
        self
    }

    pub fn now(&self) -> Nanos {
        self.now
    }

    pub fn node_state(&self, module: u8) -> NodeState {
        self.nodes[module as usize].state
    }

    pub fn trace(&self) -> &[TraceRecord] {
        &self.trace
    }

    fn push(&mut self, t: Nanos, e: Event) {
        self.seq += 1;
        self.queue.push(Reverse((t, self.seq, e)));
    }

    fn apply_faults(&mut self, t: Nanos) {
        while self.next_fault < self.faults.len() && self.faults[self.next_fault].0 <= t {
            let (at, f) = self.faults[self.next_fault];
            match f {
                Fault::Kill { module, .. } => self.nodes[module as usize].alive = false,
                Fault::Revive { module, .. } => self.nodes[module as usize].alive = true,
                Fault::Delay { module, extra, .. } => {
                    self.nodes[module as usize].pending_delay = Some((at, Nanos::from_secs(extra)))
                }
            }
            self.next_fault += 1;
        }
    }

    fn bus_busy_until(&self) -> Option<Nanos> {
        self.in_flight.iter().map(|t| t.end).max()
    }

    /// A slot ended at `t` with module `p` (really or virtually) done.
    fn slot_end(&mut self, t: Nanos, p: usize) {
        self.generation += 1;
        let next = (p + 1) % self.n;
        let watcher = (p + 2) % self.n;
        let node = &mut self.nodes[next];
        if node.state == NodeState::Idle {
            node.state = NodeState::Armed;
            let mut start = t + self.line.gap();
            if let Some((from, extra)) = node.pending_delay {
                if start >= from {
                    start = start + extra;
                    node.pending_delay = None;
                }
            }
            self.push(start, Event::TxStart { module: next as u8 });
        }
        let deadline = t + self.line.timeout();
        self.push(
            deadline,
            Event::Timeout {
                watcher: watcher as u8,
                generation: self.generation,
            },
        );
    }

    fn handle<S, H>(&mut self, t: Nanos, e: Event, source: &mut S, host: &mut H)
    where
        S: FnMut(u8, f64) -> FluxSample,
        H: FnMut(Reception),
    {
        match e {
            Event::StartDone => self.slot_end(t, self.n - 1),
            Event::TxStart { module } => {
                let m = module as usize;
                if !self.nodes[m].alive {
                    self.nodes[m].state = NodeState::Idle;
                    return;
                }
                let mut sample = source(module, t.as_secs());
                sample.module_id = module;
                let mut bytes = encode_frame_saturating(&sample, self.lsb);
                let mut flipped = false;
                if self.flip_p > 0.0 && self.rng.random::<f64>() < self.flip_p {
                    let bit = self.rng.random_range(0..FRAME_LEN * 8);
                    bytes[bit / 8] ^= 1 << (bit % 8);
                    flipped = true;
                    self.stats.bit_flips_injected += 1;
                }
                let end = t + self.line.frame_time();
                let collided = self.bus_busy_until().is_some_and(|b| b > t);
                if collided {
                    self.stats.collisions += 1;
                    for tx in &mut self.in_flight {
                        tx.collided = true;
                    }
                }
                self.next_tx += 1;
                self.in_flight.push(Transmission {
                    id: self.next_tx,
                    bytes,
                    end,
                    flipped,
                    collided,
                });
                self.nodes[m].state = NodeState::Transmitting;
                self.stats.frames_sent += 1;
                self.stats.modules[m].frames_sent += 1;
                self.push(end, Event::TxEnd { module, tx: self.next_tx });
            }
            Event::TxEnd { module, tx } => {
                let m = module as usize;
                let pos = self.in_flight.iter().position(|x| x.id == tx).expect("frame in flight");
                let frame = self.in_flight.remove(pos);
                self.nodes[m].state = NodeState::Idle;
                let mut bytes = frame.bytes;
                let damaged = frame.flipped || frame.collided;
                if damaged {
                    self.stats.frames_corrupted += 1;
                }
                if frame.collided {
                    // overlapping drivers on a half-duplex line: the host sees garbage
                    for b in &mut bytes {
                        *b ^= 0xFF;
                    }
                }
                let result = decode_frame(&bytes, self.lsb, t.as_secs());
                if self.record {
                    self.trace.push(TraceRecord {
                        t,
                        bytes,
                        valid: result.is_ok(),
                    });
                }
                match &result {
                    Ok(s) => {
                        let id = s.module_id as usize;
                        if id < self.n {
                            let st = &mut self.stats.modules[id];
                            if let Some(last) = st.last_rx {
                                self.periods.push((t.0 - last.0) as f64 * 1e-9);
                            }
                            st.first_rx.get_or_insert(t);
                            st.last_rx = Some(t);
                            st.frames_received += 1;
                            self.slot_end(t, id);
                        }
                    }
                    Err(_) => {
                        if damaged {
                            self.stats.corrupted_detected += 1;
                        }
                    }
                }
                host(Reception {
                    t,
                    sender: module,
                    result,
                });
            }
            Event::Timeout { watcher, generation } => {
                if generation != self.generation {
                    return;
                }
                if let Some(busy) = self.bus_busy_until().filter(|&b| b > t) {
                    self.push(busy, Event::Timeout { watcher, generation });
                    return;
                }
                self.stats.timeout_recoveries += 1;
                let missing = (watcher as usize + self.n - 1) % self.n;
                self.slot_end(t, missing);
            }
        }
    }

    /// Processes every event up to and including `t_end`. `source` is asked
    /// for a reading whenever a module starts a frame; `host` sees every
    /// frame that reaches the host.
    pub fn run_until<S, H>(&mut self, t_end: Nanos, source: &mut S, host: &mut H)
    where
        S: FnMut(u8, f64) -> FluxSample,
        H: FnMut(Reception),
    {
        while let Some(Reverse((t, _, _))) = self.queue.peek() {
            if *t > t_end {
                break;
            }
            let Reverse((t, _, e)) = self.queue.pop().expect("peeked");
            self.apply_faults(t);
            self.now = t;
            self.handle(t, e, source, host);
        }
        self.apply_faults(t_end);
        self.now = self.now.max(t_end);
    }

    pub fn stats(&self) -> RingStats {
        let mut s = self.stats.clone();
        s.duration_s = self.now.as_secs();
        for m in &mut s.modules {
            m.rate_hz = match (m.first_rx, m.last_rx) {
                (Some(a), Some(b)) if m.frames_received > 1 && b > a => {
                    (m.frames_received - 1) as f64 / (b.0 - a.0) as f64 * 1e9
                }
                _ => 0.0,
            };
        }
        if !self.periods.is_empty() {
            let n = self.periods.len() as f64;
            s.round_period = PeriodStats {
                count: self.periods.len() as u64,
                mean_s: self.periods.iter().sum::<f64>() / n,
                min_s: self.periods.iter().cloned().fold(f64::INFINITY, f64::min),
                max_s: self.periods.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
            };
        }
        s
    }
}

/// Runs a ring with synthetic readings for `duration` seconds.
/// Stand-in sensor reading for bus-only runs.
pub fn synthetic_sample(id: u8, t: f64) -> FluxSample {
    FluxSample {
        b: Vec3::new(0.5 * (t * 3.0).sin(), 0.1 * id as f64, -0.3),
        temperature: 25.0,
        timestamp: t,
        module_id: id,
    }
}

pub fn simulate_ring(
    n_modules: usize,
    line: &LineConfig,
    duration: f64,
    faults: &FaultPlan,
) -> Result<RingStats, BusError> {
    let mut sim = RingSim::new(n_modules, *line, FluxLsb::default(), faults)?;
    sim.run_until(Nanos::from_secs(duration), &mut synthetic_sample, &mut |_| {});
    Ok(sim.stats())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(n: usize, faults: FaultPlan, seconds: f64) -> (RingSim, Vec<Reception>) {
        let mut sim = RingSim::new(n, LineConfig::default(), FluxLsb::default(), &faults).unwrap().with_trace();
        let mut rx = Vec::new();
        let mut src = |id: u8, t: f64| FluxSample { b: Vec3::new(0.1, 0.2, 0.3), temperature: 20.0, timestamp: t, module_id: id };
        sim.run_until(Nanos::from_secs(seconds), &mut src, &mut |r| rx.push(r));
        (sim, rx)
    }

    #[test]
    fn timing_constants() {
        let l = LineConfig::default();
        assert_eq!(l.frame_time(), Nanos(110_000));
        assert_eq!(l.gap(), Nanos(20_000));
        assert_eq!(l.timeout(), Nanos(260_000));
        assert!((l.round_period(10) - 1.3e-3).abs() < 1e-15);
    }

    #[test]
    fn fault_free_ring_runs_in_id_order() {
        let (sim, rx) = run(10, FaultPlan::default(), 0.1);
        let ids: Vec<u8> = rx.iter().map(|r| r.sender).collect();
        for (k, id) in ids.iter().enumerate() {
            assert_eq!(*id as usize, k % 10);
        }
        let s = sim.stats();
        let expect = 1.0 / LineConfig::default().round_period(10);
        for m in &s.modules {
            assert!((m.rate_hz - expect).abs() / expect < 1e-3, "{}", m.rate_hz);
        }
        assert_eq!(s.timeout_recoveries, 0);
        assert_eq!(s.host_bytes_after_start, 0);
        // first frame: start broadcast (30 us) + gap
        assert_eq!(rx[0].t, Nanos(30_000 + 20_000 + 110_000));
    }

    #[test]
    fn single_module_free_runs() {
        let (sim, _) = run(1, FaultPlan::default(), 0.05);
        let s = sim.stats();
        assert!((s.modules[0].rate_hz - 1.0 / 130e-6).abs() < 1e-6);
    }

    #[test]
    fn dead_module_costs_one_timeout_per_round() {
        let plan = FaultPlan { events: vec![Fault::Kill { module: 3, at: 0.01 }], ..Default::default() };
        let (sim, rx) = run(10, plan, 0.05);
        let l = LineConfig::default();
        let extra = (l.timeout().0 - l.frame_time().0 - l.gap().0) as f64 * 1e-9;
        let zeros: Vec<f64> = rx.iter().filter(|r| r.sender == 0).map(|r| r.t.as_secs()).collect();
        let late: Vec<f64> = zeros.windows(2).filter(|w| w[0] > 0.012).map(|w| w[1] - w[0]).collect();
        assert!(!late.is_empty());
        for p in &late {
            assert!((p - (l.round_period(10) + extra)).abs() < 1e-12, "period {p}");
        }
        assert!(rx.iter().all(|r| r.t.as_secs() < 0.0102 || r.sender != 3));
        // one recovery per round after the kill
        let s = sim.stats();
        let rounds_after = zeros.iter().filter(|&&t| t > 0.0102).count() as u64;
        assert!((s.timeout_recoveries as i64 - rounds_after as i64).abs() <= 1);
    }

    #[test]
    fn ring_survives_all_but_one_dead() {
        let events = (1..10).map(|m| Fault::Kill { module: m, at: 0.005 }).collect();
        let (sim, rx) = run(10, FaultPlan { events, ..Default::default() }, 0.05);
        assert!(rx.iter().filter(|r| r.t.as_secs() > 0.01).all(|r| r.sender == 0));
        assert!(rx.iter().filter(|r| r.t.as_secs() > 0.04).count() > 3);
        assert!(sim.stats().timeout_recoveries > 0);
    }

    #[test]
    fn revived_module_rejoins() {
        let plan = FaultPlan {
            events: vec![Fault::Kill { module: 5, at: 0.01 }, Fault::Revive { module: 5, at: 0.02 }],
            ..Default::default()
        };
        let (_, rx) = run(10, plan, 0.03);
        assert!(rx.iter().any(|r| r.sender == 5 && r.t.as_secs() > 0.021));
    }

    #[test]
    fn bit_flips_are_all_detected() {
        let plan = FaultPlan { bit_flip_probability: 0.01, seed: 42, ..Default::default() };
        let (sim, rx) = run(10, plan, 1.0);
        let s = sim.stats();
        assert!(s.bit_flips_injected > 50);
        assert_eq!(s.frames_corrupted, s.bit_flips_injected);
        assert_eq!(s.corrupted_detected, s.frames_corrupted);
        assert_eq!(rx.iter().filter(|r| r.result.is_err()).count() as u64, s.corrupted_detected);
        assert!(s.corrupted_detected <= s.frames_corrupted);
    }

    #[test]
    fn late_frame_collides_with_the_takeover() {
        // module 2 starts 0.3 ms late: module 3 takes over after the timeout
        // and the two frames overlap on the wire
        let plan = FaultPlan { events: vec![Fault::Delay { module: 2, at: 0.01, extra: 0.25e-3 }], ..Default::default() };
        let (sim, rx) = run(10, plan, 0.03);
        let s = sim.stats();
        assert_eq!(s.collisions, 1);
        assert_eq!(s.frames_corrupted, 2);
        assert_eq!(s.corrupted_detected, 2);
        assert!(rx.iter().filter(|r| r.t.as_secs() > 0.015).all(|r| r.result.is_ok()));
    }

    #[test]
    fn small_delay_just_stretches_the_round() {
        let plan = FaultPlan { events: vec![Fault::Delay { module: 2, at: 0.01, extra: 50e-6 }], ..Default::default() };
        let (sim, _) = run(10, plan, 0.03);
        let s = sim.stats();
        assert_eq!(s.collisions, 0);
        assert_eq!(s.timeout_recoveries, 0);
        assert!((s.round_period.max_s - (1.3e-3 + 50e-6)).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_config() {
        assert!(RingSim::new(0, LineConfig::default(), FluxLsb::default(), &FaultPlan::default()).is_err());
        let l = LineConfig { timeout: Some(50e-6), ..Default::default() };
        assert!(RingSim::new(3, l, FluxLsb::default(), &FaultPlan::default()).is_err());
        let f = FaultPlan { events: vec![Fault::Kill { module: 7, at: 0.0 }], ..Default::default() };
        assert!(RingSim::new(3, LineConfig::default(), FluxLsb::default(), &f).is_err());
    }

    #[test]
    fn deterministic_with_seed() {
        let plan = FaultPlan { bit_flip_probability: 0.05, seed: 7, ..Default::default() };
        let a = simulate_ring(10, &LineConfig::default(), 0.2, &plan).unwrap();
        let b = simulate_ring(10, &LineConfig::default(), 0.2, &plan).unwrap();
        assert_eq!(a, b);
    }
}
