//! Inverse kinematics by damped least squares from random restarts.
//!
//! One target pose generally admits many joint solutions (infinitely many
//! for redundant arms). This module samples that solution set: restarts are
//! drawn uniformly within the joint limits, each runs a damped Newton
//! iteration on the stacked 6-dimensional pose error, converged candidates
//! are sorted by final error and deduplicated in joint space. Restarts are
//! embarrassingly parallel; assembly sorts by (error, start index) so the
//! result is bit-for-bit reproducible regardless of scheduling.
//!
//! Setting `rot_tol = f64::INFINITY` turns the request into a position-only
//! task: rotation residuals inside tolerance are zeroed out of the descent,
//! so orientation never fights position. The planar reaching tasks use this.

use rayon::prelude::*;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::kinematics::{
    fk_pose, h_matrix, position_jacobian, quat_error_jacobian, Pose,
};
use crate::numerics::{cholesky_lower, cholesky_solve, norm3, sub3, Mat};
use crate::robot_model::{JointVector, KinematicChain};

/// Restarts per requested solution.
const OVERSAMPLE: usize = 10;
const MAX_ITERS: usize = 200;
const BASE_DAMPING: f64 = 1e-3;
/// Solutions closer than this in joint space are duplicates.
const DEDUPE_RADIUS: f64 = 0.05;

/// One IK query: which chain, where to go, how many distinct solutions.
#[derive(Debug, Clone)]
pub struct IkRequest<'a> {
    pub chain: &'a KinematicChain,
    pub target: Pose,
    /// Desired number of distinct solutions.
    pub count: usize,
    pub seed: u64,
    /// Position tolerance, meters.
    pub pos_tol: f64,
    /// Orientation tolerance on the included quaternion angle, radians.
    /// `INFINITY` means the task does not constrain orientation.
    pub rot_tol: f64,
}

impl<'a> IkRequest<'a> {
    pub fn new(chain: &'a KinematicChain, target: Pose) -> Self {
        IkRequest { chain, target, count: 30, seed: 0, pos_tol: 1e-6, rot_tol: 1e-6 }
    }

    /// Position-only variant: orientation is left free.
    pub fn position_only(chain: &'a KinematicChain, target: Pose) -> Self {
        IkRequest { rot_tol: f64::INFINITY, ..IkRequest::new(chain, target) }
    }
}

/// Distinct IK solutions for one target, ordered by convergence error.
#[derive(Debug, Clone, PartialEq)]
pub struct IkSolutionSet {
    pub solutions: Vec<JointVector>,
    /// Pose actually reached by each solution, index-aligned.
    pub achieved_poses: Vec<Pose>,
    /// Restarts attempted.
    pub attempts: usize,
    /// Restarts that converged (before deduplication).
    pub converged: usize,
}

impl IkSolutionSet {
    pub fn is_empty(&self) -> bool {
        self.solutions.is_empty()
    }

    pub fn len(&self) -> usize {
        self.solutions.len()
    }
}

struct Candidate {
    theta: JointVector,
    pose: Pose,
    err: f64,
    start_index: usize,
}

/// Samples distinct IK solutions for the request's target pose.
///
/// Every returned solution satisfies both tolerances (verified against the
/// forward kinematics) and lies within the joint limits. An unreachable
/// target yields an empty set. Deterministic for a fixed seed.
pub fn solve_ik(req: &IkRequest) -> IkSolutionSet {
    assert!(req.count >= 1, "request at least one solution");
    assert!(req.pos_tol > 0.0 && req.rot_tol > 0.0, "tolerances must be positive");

    // Provably unreachable: no configuration can put the tool farther out
    // than the sum of link offsets.
    if norm3(req.target.position) > req.chain.reach_upper_bound() + req.pos_tol {
        return IkSolutionSet { solutions: vec![], achieved_poses: vec![], attempts: 0, converged: 0 };
    }

    let attempts = req.count * OVERSAMPLE;
    let mut rng = ChaCha8Rng::seed_from_u64(req.seed);
    let starts: Vec<JointVector> = (0..attempts)
        .map(|_| {
            JointVector(
                req.chain
                    .joints()
                    .iter()
                    .map(|j| rng.random_range(j.limits.0..j.limits.1))
                    .collect(),
            )
        })
        .collect();

    let mut candidates: Vec<Candidate> = starts
        .into_par_iter()
        .enumerate()
        .filter_map(|(start_index, start)| dls_solve(req, start, start_index))
        .collect();
    let converged = candidates.len();

    // Keep-first dedupe ordered by convergence error; ties break on the
    // start index so assembly is scheduling-independent.
    candidates.sort_by(|a, b| a.err.total_cmp(&b.err).then(a.start_index.cmp(&b.start_index)));
    let mut solutions: Vec<JointVector> = Vec::new();
    let mut achieved_poses: Vec<Pose> = Vec::new();
    for cand in candidates {
        if solutions.len() == req.count {
            break;
        }
        if solutions.iter().all(|kept| kept.distance(&cand.theta) >= DEDUPE_RADIUS) {
            solutions.push(cand.theta);
            achieved_poses.push(cand.pose);
        }
    }

    IkSolutionSet { solutions, achieved_poses, attempts, converged }
}

struct Residual {
    /// Stacked 6-vector: position error then rotation error (zeroed inside
    /// tolerance).
    r: [f64; 6],
    pos_err: f64,
    rot_err: f64,
    pose: Pose,
}

fn residual(req: &IkRequest, theta: &JointVector) -> Residual {
    let pose = fk_pose(req.chain, theta).expect("start length matches chain");
    let pos_diff = sub3(pose.position, req.target.position);
    let pos_err = norm3(pos_diff);
    let rot_err = pose.orientation.included_angle(&req.target.orientation);
    let mut r = [0.0; 6];
    if pos_err > req.pos_tol {
        r[..3].copy_from_slice(&pos_diff);
    }
    if rot_err > req.rot_tol {
        // Quaternion vector error 2·H_d·q, the tangent-space rotation error
        // at the target orientation.
        let hd = h_matrix(&req.target.orientation);
        let e = hd.matvec(&pose.orientation.as_array());
        r[3] = 2.0 * e[0];
        r[4] = 2.0 * e[1];
        r[5] = 2.0 * e[2];
    }
    Residual { r, pos_err, rot_err, pose }
}

fn scalar_error(req: &IkRequest, res: &Residual) -> f64 {
    // For orientation-free tasks the rotation angle carries no information,
    // so it is excluded from candidate ranking.
    res.pos_err + if req.rot_tol.is_finite() { res.rot_err } else { 0.0 }
}

fn converged(req: &IkRequest, res: &Residual) -> bool {
    res.pos_err <= req.pos_tol && res.rot_err <= req.rot_tol
}

fn dls_solve(req: &IkRequest, start: JointVector, start_index: usize) -> Option<Candidate> {
    let n = req.chain.dof();
    let mut theta = start;
    let mut res = residual(req, &theta);
    let mut damping = BASE_DAMPING;

    for _ in 0..MAX_ITERS {
        if converged(req, &res) {
            return Some(Candidate {
                err: scalar_error(req, &res),
                pose: res.pose,
                theta,
                start_index,
            });
        }

        // Stacked Jacobian of the residual.
        let jp = position_jacobian(req.chain, &theta).expect("length checked");
        let dq = quat_error_jacobian(req.chain, &theta).expect("length checked");
        let hd = h_matrix(&req.target.orientation);
        let jrot = hd.mul(&dq).scale(2.0);
        let j = Mat::from_fn(6, n, |r, c| if r < 3 { jp[(r, c)] } else { jrot[(r - 3, c)] });

        // (J Jᵀ + μ² I) y = r, step = −Jᵀ y.
        let mut a = j.gram();
        for i in 0..6 {
            a[(i, i)] += damping * damping;
        }
        let l = match cholesky_lower(&a) {
            Ok(l) => l,
            Err(_) => {
                damping *= 10.0;
                continue;
            }
        };
        let y = cholesky_solve(&l, &res.r);
        let jt = j.transpose();
        let step = jt.matvec(&y);

        let mut next = theta.clone();
        for (t, s) in next.0.iter_mut().zip(&step) {
            *t -= s;
        }
        req.chain.clamp_to_limits(&mut next.0);

        let next_res = residual(req, &next);
        if scalar_error(req, &next_res) < scalar_error(req, &res) {
            theta = next;
            res = next_res;
            damping = (damping * 0.5).max(BASE_DAMPING);
        } else {
            damping *= 10.0;
            if damping > 1e8 {
                break; // wedged against limits or a singularity
            }
        }
    }

    if converged(req, &res) {
        Some(Candidate { err: scalar_error(req, &res), pose: res.pose, theta, start_index })
    } else {
        None
    }
}
