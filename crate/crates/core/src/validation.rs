//! Self-check oracles, independent of the code paths they check.
//!
//! Jacobians are checked against central finite differences of the forward
//! kinematics. Worst-case bounds are checked by evaluating the linearized
//! error map on boundary samples of the joint error ball: many uniform
//! directions plus a handful of ascent-refined candidates (power iteration
//! for quadratic objectives, a normalized gradient step for directional
//! ones). The refinement uses only matrix-vector products with the
//! Jacobian, never the eigendecomposition or the closed-form bound, so the
//! two routes stay independent.
//!
//! These run in the test suites and behind the `validate` CLI subcommand.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::kinematics::{fk_pose, h_matrix};
use crate::numerics::{quat_add, quat_norm, quat_scale, Mat, UnitQuaternion};
use crate::robot_model::{JointVector, KinematicChain};
use crate::uncertainty::JointErrorModel;

/// Relative slack for "sample exceeds bound" decisions: the refined
/// candidates sit exactly on the analytic maximum, so exact-arithmetic
/// equality has to survive rounding.
const EXCEED_SLACK: f64 = 1e-12;

/// Central finite differences of the tool position, column per joint.
pub fn fd_position_jacobian(chain: &KinematicChain, theta: &JointVector, h: f64) -> Mat {
    let n = chain.dof();
    Mat::from_fn(3, n, |r, c| {
        let mut plus = theta.clone();
        plus.0[c] += h;
        let mut minus = theta.clone();
        minus.0[c] -= h;
        let fp = fk_pose(chain, &plus).unwrap().position;
        let fm = fk_pose(chain, &minus).unwrap().position;
        (fp[r] - fm[r]) / (2.0 * h)
    })
}

/// Central finite differences of the tool quaternion, sign-aligned to the
/// unperturbed orientation so the double cover cannot flip a column.
pub fn fd_quat_jacobian(chain: &KinematicChain, theta: &JointVector, h: f64) -> Mat {
    let n = chain.dof();
    let q0 = fk_pose(chain, theta).unwrap().orientation.as_array();
    let aligned = |q: UnitQuaternion| -> [f64; 4] {
        let a = q.as_array();
        let dot: f64 = a.iter().zip(&q0).map(|(x, y)| x * y).sum();
        if dot < 0.0 {
            [-a[0], -a[1], -a[2], -a[3]]
        } else {
            a
        }
    };
    Mat::from_fn(4, n, |r, c| {
        let mut plus = theta.clone();
        plus.0[c] += h;
        let mut minus = theta.clone();
        minus.0[c] -= h;
        let qp = aligned(fk_pose(chain, &plus).unwrap().orientation);
        let qm = aligned(fk_pose(chain, &minus).unwrap().orientation);
        (qp[r] - qm[r]) / (2.0 * h)
    })
}

pub fn max_abs_diff(a: &Mat, b: &Mat) -> f64 {
    assert_eq!((a.rows(), a.cols()), (b.rows(), b.cols()));
    let mut worst: f64 = 0.0;
    for r in 0..a.rows() {
        for c in 0..a.cols() {
            worst = worst.max((a[(r, c)] - b[(r, c)]).abs());
        }
    }
    worst
}

/// Uniform direction on the unit sphere in `R^n`.
pub fn unit_sphere_sample(n: usize, rng: &mut impl Rng) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

fn normalize_in_place(v: &mut [f64]) -> f64 {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    norm
}

/// Directions on the joint-error sphere that (approximately) maximize
/// `‖J u‖`, found by power iteration on `u ← Jᵀ(J u)` from random starts.
fn power_refined_directions(j: &Mat, rng: &mut impl Rng, starts: usize, iters: usize) -> Vec<Vec<f64>> {
    let n = j.cols();
    let jt = j.transpose();
    (0..starts)
        .map(|_| {
            let mut u = unit_sphere_sample(n, rng);
            for _ in 0..iters {
                let ju = j.matvec(&u);
                let mut next = jt.matvec(&ju);
                if normalize_in_place(&mut next) == 0.0 {
                    break; // u is in the null space; keep the previous iterate
                }
                u = next;
            }
            u
        })
        .collect()
}

/// Outcome of one sampled bound check.
#[derive(Debug, Clone)]
pub struct BoundCheck {
    pub bound: f64,
    /// Best sampled value divided by the bound (1.0 when both are zero).
    pub best_ratio: f64,
    /// Samples whose value exceeds the bound beyond floating-point slack.
    pub exceedances: usize,
    pub samples: usize,
}

impl BoundCheck {
    pub fn sound(&self) -> bool {
        self.exceedances == 0
    }

    pub fn tight(&self, min_ratio: f64) -> bool {
        self.best_ratio >= min_ratio
    }
}

fn run_check(bound: f64, slack_abs: f64, values: impl Iterator<Item = f64>) -> BoundCheck {
    let mut best: f64 = 0.0;
    let mut exceedances = 0;
    let mut samples = 0;
    let limit = bound * (1.0 + EXCEED_SLACK) + slack_abs;
    for v in values {
        samples += 1;
        best = best.max(v);
        if v > limit {
            exceedances += 1;
        }
    }
    let best_ratio = if bound > 0.0 { best / bound } else if best == 0.0 { 1.0 } else { f64::INFINITY };
    BoundCheck { bound, best_ratio, exceedances, samples }
}

/// Checks `position_bound_r3` against `‖J_p δΘ‖` over boundary samples of
/// the joint error ball.
pub fn check_position_bound_r3(
    jp: &Mat,
    model: &JointErrorModel,
    bound: f64,
    samples: usize,
    seed: u64,
) -> BoundCheck {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = jp.cols();
    let r = model.ball_radius();
    let refined = power_refined_directions(jp, &mut rng, 32, 60);
    let uniform = samples.saturating_sub(refined.len());
    let values = refined
        .into_iter()
        .chain((0..uniform).map(|_| unit_sphere_sample(n, &mut rng)))
        .map(|u| {
            let du: Vec<f64> = u.iter().map(|x| x * r).collect();
            let dx = jp.matvec(&du);
            (dx[0] * dx[0] + dx[1] * dx[1] + dx[2] * dx[2]).sqrt()
        });
    run_check(bound, 1e-15, values)
}

/// Checks a directional bound against `|vᵀ J_p δΘ|` over boundary samples.
pub fn check_position_bound_direction(
    jp: &Mat,
    model: &JointErrorModel,
    direction: [f64; 3],
    bound: f64,
    samples: usize,
    seed: u64,
) -> BoundCheck {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = jp.cols();
    let r = model.ball_radius();
    // Gradient of the linear objective u ↦ vᵀJu is constant: one normalized
    // step lands on the maximizer. Keep a couple of uniform candidates in
    // case the gradient is zero.
    let mut candidates: Vec<Vec<f64>> = Vec::new();
    let mut grad = jp.transpose().matvec(&direction);
    if normalize_in_place(&mut grad) > 0.0 {
        candidates.push(grad.clone());
        candidates.push(grad.iter().map(|x| -x).collect());
    }
    let uniform = samples.saturating_sub(candidates.len());
    let values = candidates
        .into_iter()
        .chain((0..uniform).map(|_| unit_sphere_sample(n, &mut rng)))
        .map(|u| {
            let du: Vec<f64> = u.iter().map(|x| x * r).collect();
            let dx = jp.matvec(&du);
            (direction[0] * dx[0] + direction[1] * dx[1] + direction[2] * dx[2]).abs()
        });
    run_check(bound, 1e-15, values)
}

/// Checks the rotation bound against the included angle of the linearized
/// quaternion `q_d + ½ H_dᵀ J_r δΘ` (renormalized) over boundary samples.
pub fn check_rotation_bound(
    jr: &Mat,
    qd: &UnitQuaternion,
    model: &JointErrorModel,
    bound: f64,
    samples: usize,
    seed: u64,
) -> BoundCheck {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = jr.cols();
    let r = model.ball_radius();
    let hd_t = h_matrix(qd).transpose();
    let qd_arr = qd.as_array();
    let refined = power_refined_directions(jr, &mut rng, 32, 60);
    let uniform = samples.saturating_sub(refined.len());
    let values = refined
        .into_iter()
        .chain((0..uniform).map(|_| unit_sphere_sample(n, &mut rng)))
        .map(|u| {
            let du: Vec<f64> = u.iter().map(|x| x * r).collect();
            let v = jr.matvec(&du);
            let dq = hd_t.matvec(&[0.5 * v[0], 0.5 * v[1], 0.5 * v[2]]);
            let qt = quat_add(qd_arr, [dq[0], dq[1], dq[2], dq[3]]);
            let qn = quat_scale(qt, 1.0 / quat_norm(qt));
            let dot: f64 = qn.iter().zip(&qd_arr).map(|(a, b)| a * b).sum();
            dot.abs().clamp(-1.0, 1.0).acos()
        });
    // arccos near dot = 1 amplifies ulp-level dot noise by 1/sin(angle), so
    // the absolute slack has to grow accordingly for small bounds.
    let slack_abs = 4e-16 / bound.sin().max(1e-12);
    run_check(bound, slack_abs, values)
}
