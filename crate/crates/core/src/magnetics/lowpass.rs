use serde::{Deserialize, Serialize};

use crate::vec3::Vec3;

/// First-order IIR low-pass, one per sensor stream.
///
/// The smoothing factor is derived from the actual sample interval on every
/// step, so irregular bus timing is handled without resampling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LowPassState {
    pub y: Vec3,
    pub cutoff_hz: f64,
    pub initialized: bool,
}

impl Default for LowPassState {
    fn default() -> Self {
        Self::new(3.6)
    }
}

impl LowPassState {
    pub fn new(cutoff_hz: f64) -> Self {
        assert!(cutoff_hz > 0.0, "cutoff must be positive");
        Self {
            y: Vec3::ZERO,
            cutoff_hz,
            initialized: false,
        }
    }

    pub fn time_constant(&self) -> f64 {
        1.0 / (std::f64::consts::TAU * self.cutoff_hz)
    }

    /// Feeds one sample taken `dt` seconds after the previous one. The first
    /// sample initializes the output.
    pub fn step(&mut self, x: Vec3, dt: f64) -> Vec3 {
        if !self.initialized {
            self.y = x;
            self.initialized = true;
            return self.y;
        }
        if dt > 0.0 {
            let alpha = dt / (self.time_constant() + dt);
            self.y += (x - self.y) * alpha;
        }
        self.y
    }

    pub fn reset(&mut self) {
        self.initialized = false;
        self.y = Vec3::ZERO;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_distr::{Distribution, Normal};

    const FS: f64 = 590.0;

    #[test]
    fn constant_input_passes_through_exactly() {
        let mut f = LowPassState::default();
        let c = Vec3::new(0.8, -0.1, 0.33);
        for _ in 0..1000 {
            assert_eq!(f.step(c, 1.0 / FS), c);
        }
    }

    #[test]
    fn step_response_matches_first_order_system() {
        let mut f = LowPassState::default();
        let dt = 1.0 / FS;
        f.step(Vec3::ZERO, dt);
        let tau = f.time_constant();
        assert!((tau - 0.0442).abs() < 1e-4);
        let n = (tau / dt).round() as usize;
        let mut y = Vec3::ZERO;
        for _ in 0..n {
            y = f.step(Vec3::new(1.0, 1.0, 1.0), dt);
        }
        // analytic response of the continuous system at t = n dt
        let analytic = 1.0 - (-(n as f64) * dt / tau).exp();
        assert!((y.x - analytic).abs() / analytic < 0.02, "{} vs {}", y.x, analytic);
        assert!((y.x - (1.0 - (-1f64).exp())).abs() < 0.02);
    }

    #[test]
    fn white_noise_is_attenuated() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let normal = Normal::new(0.0, 1.0).unwrap();
        let mut f = LowPassState::default();
        let n = 100_000;
        let out: Vec<f64> = (0..n)
            .map(|_| f.step(Vec3::new(normal.sample(&mut rng), 0.0, 0.0), 1.0 / FS).x)
            .collect();
        let tail = &out[1000..];
        let mean = tail.iter().sum::<f64>() / tail.len() as f64;
        let std = (tail.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / tail.len() as f64).sqrt();
        assert!(1.0 / std >= 3.0, "attenuation only {}", 1.0 / std);
    }

    proptest! {
        #[test]
        fn output_stays_within_input_bounds(xs in proptest::collection::vec(-5.0f64..5.0, 1..200), dt in 1e-4f64..0.1) {
            let mut f = LowPassState::default();
            let lo = xs.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            for &x in &xs {
                let y = f.step(Vec3::new(x, x, x), dt).x;
                prop_assert!(y >= lo - 1e-12 && y <= hi + 1e-12);
            }
        }
    }
}
