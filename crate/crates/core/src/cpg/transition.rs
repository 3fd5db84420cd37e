use serde::{Deserialize, Serialize};

/// Walking switches to swimming once the summed foot normal force drops
/// below this (N).
pub const FOOT_FORCE_THRESHOLD: f64 = 7.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GaitMode {
    Walking,
    Swimming,
}

impl GaitMode {
    pub fn as_str(self) -> &'static str {
        match self {
            GaitMode::Walking => "walking",
            GaitMode::Swimming => "swimming",
        }
    }
}

/// Contact-triggered walk-to-swim switch. One way: once swimming, the
/// controller stays there.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaitController {
    pub mode: GaitMode,
    pub drive: f64,
    pub d_walk: f64,
    pub d_swim: f64,
    pub threshold: f64,
}

impl GaitController {
    pub fn walking(d_walk: f64, d_swim: f64) -> Self {
        Self {
            mode: GaitMode::Walking,
            drive: d_walk,
            d_walk,
            d_swim,
            threshold: FOOT_FORCE_THRESHOLD,
        }
    }

    /// Feeds the current foot-force sum; returns true on the tick that switches.
    pub fn update(&mut self, foot_sum: f64) -> bool {
        if self.mode == GaitMode::Walking && foot_sum < self.threshold {
            self.mode = GaitMode::Swimming;
            self.drive = self.d_swim;
            return true;
        }
        false
    }
}

/// Pure form of [`GaitController::update`].
pub fn transition_controller(foot_sum: f64, state: GaitController) -> GaitController {
    let mut next = state;
    next.update(foot_sum);
    next
}
