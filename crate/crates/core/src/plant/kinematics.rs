use serde::{Deserialize, Serialize};

use crate::cpg::AXIAL_JOINTS;

/// Planar body: a head-to-tail chain of spine links joined by the axial
/// joints, followed by a passive tail. Lengths in metres.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RobotKinematics {
    /// Link 0 is the head; joint `k` sits between links `k` and `k + 1`.
    pub links: Vec<f64>,
    pub tail: f64,
    /// Axial joints at which the front and hind legs attach.
    pub front_girdle: usize,
    pub hind_girdle: usize,
    /// kg
    pub mass: f64,
}

impl Default for RobotKinematics {
    fn default() -> Self {
        Self {
            links: vec![0.15, 0.10, 0.10, 0.10, 0.10, 0.08, 0.07, 0.07, 0.05],
            tail: 0.28,
            front_girdle: 1,
            hind_girdle: 4,
            mass: 2.71,
        }
    }
}

impl RobotKinematics {
    pub fn validate(&self) -> Result<(), String> {
        if self.links.len() != AXIAL_JOINTS + 1 {
            return Err(format!("need {} links, got {}", AXIAL_JOINTS + 1, self.links.len()));
        }
        if self.links.iter().chain([&self.tail]).any(|l| !(*l > 0.0)) {
            return Err("link lengths must be positive".into());
        }
        if self.front_girdle >= self.hind_girdle || self.hind_girdle >= AXIAL_JOINTS {
            return Err("girdles must satisfy front < hind < 8".into());
        }
        if !(self.mass > 0.0) {
            return Err("mass must be positive".into());
        }
        Ok(())
    }

    pub fn length(&self) -> f64 {
        self.links.iter().sum::<f64>() + self.tail
    }

    /// Chain points in the world plane with the snout at `(head_x, 0)` and
    /// the head pointing along +x. Point `k + 1` is axial joint `k`; the
    /// last two points are the tail clamp and the tail tip.
    pub fn chain(&self, head_x: f64, axial: &[f64]) -> Vec<(f64, f64)> {
        let mut pts = Vec::with_capacity(self.links.len() + 2);
        let (mut x, mut y) = (head_x, 0.0);
        let mut heading = std::f64::consts::PI;
        pts.push((x, y));
        for (s, l) in self.links.iter().enumerate() {
            x += l * heading.cos();
            y += l * heading.sin();
            pts.push((x, y));
            if s < axial.len() {
                heading += axial[s];
            }
        }
        x += self.tail * heading.cos();
        y += self.tail * heading.sin();
        pts.push((x, y));
        pts
    }

    /// Fraction of the body length lying at `x > x_w`.
    pub fn fraction_beyond(&self, pts: &[(f64, f64)], x_w: f64) -> f64 {
        let mut beyond = 0.0;
        let mut total = 0.0;
        for w in pts.windows(2) {
            let ((x0, y0), (x1, y1)) = (w[0], w[1]);
            let len = (x1 - x0).hypot(y1 - y0);
            total += len;
            let frac = if x0 > x_w && x1 > x_w {
                1.0
            } else if x0 <= x_w && x1 <= x_w {
                0.0
            } else {
                let cut = (x_w - x0) / (x1 - x0);
                if x1 > x_w { 1.0 - cut } else { cut }
            };
            beyond += frac * len;
        }
        if total > 0.0 { beyond / total } else { 0.0 }
    }
}
