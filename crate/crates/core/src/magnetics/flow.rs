use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use super::{DipoleParams, FlowPose, MagneticsError, Result};
use crate::vec3::Vec3;

/// Flux of the fin magnet, written out per axis for the planar-magnet case
/// (`p_z = d_z0`, `h_z = 0`, `h_x = sqrt(1 - h_y²)`).
pub fn flow_flux(pose: &FlowPose, params: &DipoleParams) -> Result<Vec3> {
    let r = params.check_distance(&pose.position())?;
    let (px, py, hy, dz) = (pose.p_x, pose.p_y, pose.h_y, pose.d_z0);
    let hx = pose.h_x();
    let r2 = r * r;
    let r5 = r2 * r2 * r;
    let k = params.n_t / r5;
    let bx = k * (3.0 * (px * px * hx + px * py * hy) - r2 * hx);
    let by = k * (3.0 * (px * py * hx + py * py * hy) - r2 * hy);
    let bz = k * (3.0 * dz * (px * hx + py * hy));
    Ok(Vec3::new(bx, by, bz))
}

/// Jacobian of [`flow_flux`] with respect to `(p_x, p_y, h_y)`; rows are
/// `B_x, B_y, B_z`.
pub fn flow_flux_jacobian(pose: &FlowPose, params: &DipoleParams) -> Result<[[f64; 3]; 3]> {
    let r = params.check_distance(&pose.position())?;
    let (px, py, hy, dz) = (pose.p_x, pose.p_y, pose.h_y, pose.d_z0);
    let hx = pose.h_x();
    if hx <= 0.0 {
        return Err(MagneticsError::InvalidParameter(
            "flow Jacobian undefined at |h_y| = 1".into(),
        ));
    }
    let dhx = -hy / hx;
    let n = params.n_t;
    let r2 = r * r;
    let inv_r5 = 1.0 / (r2 * r2 * r);
    let inv_r7 = inv_r5 / r2;
    let s = px * hx + py * hy;
    let ds_dhy = px * dhx + py;

    let num = [
        3.0 * s * px - r2 * hx,
        3.0 * s * py - r2 * hy,
        3.0 * dz * s,
    ];
    let dnum = [
        [
            3.0 * (hx * px + s) - 2.0 * px * hx,
            3.0 * hy * px - 2.0 * py * hx,
            3.0 * px * ds_dhy - r2 * dhx,
        ],
        [
            3.0 * hx * py - 2.0 * px * hy,
            3.0 * (hy * py + s) - 2.0 * py * hy,
            3.0 * py * ds_dhy - r2,
        ],
        [3.0 * dz * hx, 3.0 * dz * hy, 3.0 * dz * ds_dhy],
    ];
    let dinv = [-5.0 * px * inv_r7, -5.0 * py * inv_r7, 0.0];

    let mut jac = [[0.0; 3]; 3];
    for row in 0..3 {
        for col in 0..3 {
            jac[row][col] = n * (dnum[row][col] * inv_r5 + num[row] * dinv[col]);
        }
    }
    Ok(jac)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowSolverOptions {
    /// Residual norm at which the solve is accepted (mT).
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Fallback grid spacing over fin rotation (rad).
    pub grid_step: f64,
    /// Fallback grid covers `[-grid_half_range, grid_half_range]` (rad).
    pub grid_half_range: f64,
    /// Candidates farther than this from the sensor are rejected (mm).
    pub max_distance: f64,
}

impl Default for FlowSolverOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-10,
            max_iterations: 50,
            grid_step: 2f64.to_radians(),
            grid_half_range: std::f64::consts::PI,
            max_distance: 50.0,
        }
    }
}

struct Outcome {
    pose: FlowPose,
    residual: f64,
    iterations: usize,
}

fn residual(pose: &FlowPose, b: &Vec3, params: &DipoleParams, opts: &FlowSolverOptions) -> Option<f64> {
    if pose.position().norm() > opts.max_distance {
        return None;
    }
    flow_flux(pose, params).ok().map(|f| (f - *b).norm())
}

fn newton(
    b: &Vec3,
    start: FlowPose,
    params: &DipoleParams,
    opts: &FlowSolverOptions,
) -> Outcome {
    const H_LIMIT: f64 = 1.0 - 1e-9;
    let mut pose = start;
    let mut res = residual(&pose, b, params, opts).unwrap_or(f64::INFINITY);
    let mut iterations = 0;
    while iterations < opts.max_iterations && res >= opts.tolerance && res.is_finite() {
        iterations += 1;
        let Ok(flux) = flow_flux(&pose, params) else { break };
        let Ok(jac) = flow_flux_jacobian(&pose, params) else { break };
        let j = Matrix3::from_fn(|r, c| jac[r][c]);
        let rhs = Vector3::new(b.x - flux.x, b.y - flux.y, b.z - flux.z);
        let Some(step) = j.lu().solve(&rhs) else { break };

        let mut lambda = 1.0;
        let mut accepted = false;
        while lambda > 1e-8 {
            let trial = FlowPose {
                p_x: pose.p_x + lambda * step[0],
                p_y: pose.p_y + lambda * step[1],
                h_y: (pose.h_y + lambda * step[2]).clamp(-H_LIMIT, H_LIMIT),
                d_z0: pose.d_z0,
            };
            if let Some(r) = residual(&trial, b, params, opts) {
                if r < res {
                    pose = trial;
                    res = r;
                    accepted = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    Outcome {
        pose,
        residual: res,
        iterations,
    }
}

/// Recovers `(p_x, p_y, h_y)` from a measured fin flux.
///
/// Damped Newton from `initial_guess`; if that stalls, the guess is rotated
/// about the z-axis over a coarse grid and Newton restarts from the best
/// grid point.
pub fn invert_flow_flux(
    b: &Vec3,
    d_z0: f64,
    params: &DipoleParams,
    initial_guess: &FlowPose,
    opts: &FlowSolverOptions,
) -> Result<FlowPose> {
    if !(b.norm() > params.noise_floor) {
        return Err(MagneticsError::NoConvergence {
            residual: b.norm(),
            iterations: 0,
        });
    }
    let start = FlowPose {
        d_z0,
        ..*initial_guess
    };
    let first = newton(b, start, params, opts);
    if first.residual < opts.tolerance {
        return Ok(first.pose);
    }

    let steps = (opts.grid_half_range / opts.grid_step).floor() as i64;
    let mut candidates: Vec<(f64, FlowPose)> = (-steps..=steps)
        .filter_map(|k| {
            let angle = k as f64 * opts.grid_step;
            let (s, c) = angle.sin_cos();
            // rotations that would flip h_x negative leave the planar model
            if c * start.h_x() - s * start.h_y < 0.0 {
                return None;
            }
            let cand = start.rotated(angle);
            residual(&cand, b, params, opts).map(|r| (r, cand))
        })
        .collect();
    candidates.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut best = first;
    for (_, cand) in candidates.into_iter().take(3) {
        let out = newton(b, cand, params, opts);
        if out.residual < best.residual {
            best = Outcome {
                iterations: best.iterations + out.iterations,
                ..out
            };
        }
        if best.residual < opts.tolerance {
            return Ok(best.pose);
        }
    }
    Err(MagneticsError::NoConvergence {
        residual: best.residual,
        iterations: best.iterations,
    })
}
