//! Scores IK solutions by their worst-case task error and picks the robust
//! one.
//!
//! The task metric is `M = P + λ·O`: a position bound `P` (full ℝ³,
//! directional, or planar, chosen per task), the rotation bound `O`, and a
//! task-dependent weight λ in meters per radian. A solution is feasible
//! when `M ≤ ε`. The selected solution minimizes `M` over the sampled IK
//! set; when nothing passes the filter there is no robust solution and the
//! caller learns the task is unreliable before moving at all — the report
//! still carries every scored candidate.

use thiserror::Error;

use crate::ik_engine::{solve_ik, IkRequest, IkSolutionSet};
use crate::kinematics::{position_jacobian, rotation_jacobian, KinematicsError};
use crate::numerics::{dot3, fmt_g17, Mat, NumericsError, UnitQuaternion};
use crate::robot_model::{JointVector, KinematicChain};
use crate::uncertainty::{
    position_bound_direction, position_bound_plane, position_bound_r3, rotation_bound,
    JointErrorModel, PositionErrorSet, RotationErrorSet, UncertaintyError,
};

const UNIT_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum SelectError {
    #[error("metric direction must be unit: {0}")]
    InvalidMetric(UncertaintyError),
    #[error("epsilon must be positive (got {0})")]
    BadEpsilon(f64),
    #[error("lambda must be non-negative and finite (got {0})")]
    BadLambda(f64),
    #[error("IK returned no solutions (target unreachable or solver exhausted)")]
    EmptyIkSet,
}

#[derive(Debug, Error)]
pub enum ScoreError {
    #[error(transparent)]
    Kinematics(#[from] KinematicsError),
    #[error(transparent)]
    Uncertainty(#[from] UncertaintyError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// Which position error the task cares about.
#[derive(Debug, Clone)]
pub enum PositionMode {
    /// Distance anywhere in ℝ³.
    FullR3,
    /// Error along one unit direction.
    Direction([f64; 3]),
    /// Shadow area on a plane with orthonormal 3×2 basis.
    Plane(Mat),
}

/// Task error measure `M = P + λ·O` with feasibility cutoff ε.
#[derive(Debug, Clone)]
pub struct TaskMetric {
    position_mode: PositionMode,
    lambda: f64,
    epsilon: f64,
}

impl TaskMetric {
    pub fn full_r3(lambda: f64, epsilon: f64) -> Result<Self, SelectError> {
        Self::build(PositionMode::FullR3, lambda, epsilon)
    }

    pub fn direction(v: [f64; 3], lambda: f64, epsilon: f64) -> Result<Self, SelectError> {
        let deviation = (dot3(v, v).sqrt() - 1.0).abs();
        if deviation > UNIT_TOL {
            return Err(SelectError::InvalidMetric(UncertaintyError::NonUnitDirection {
                deviation,
            }));
        }
        Self::build(PositionMode::Direction(v), lambda, epsilon)
    }

    pub fn plane(basis: Mat, lambda: f64, epsilon: f64) -> Result<Self, SelectError> {
        assert_eq!((basis.rows(), basis.cols()), (3, 2), "plane basis must be 3x2");
        let gram = basis.transpose().mul(&basis);
        let mut deviation: f64 = 0.0;
        for r in 0..2 {
            for c in 0..2 {
                let expect = if r == c { 1.0 } else { 0.0 };
                deviation = deviation.max((gram[(r, c)] - expect).abs());
            }
        }
        if deviation > UNIT_TOL {
            return Err(SelectError::InvalidMetric(UncertaintyError::NonOrthonormalBasis {
                deviation,
            }));
        }
        Self::build(PositionMode::Plane(basis), lambda, epsilon)
    }

    fn build(position_mode: PositionMode, lambda: f64, epsilon: f64) -> Result<Self, SelectError> {
        if !lambda.is_finite() || lambda < 0.0 {
            return Err(SelectError::BadLambda(lambda));
        }
        // Epsilon may be +inf (no filter) but not NaN or <= 0.
        if epsilon.is_nan() || epsilon <= 0.0 {
            return Err(SelectError::BadEpsilon(epsilon));
        }
        Ok(TaskMetric { position_mode, lambda, epsilon })
    }

    pub fn position_mode(&self) -> &PositionMode {
        &self.position_mode
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }
}

/// Bounds for one scored solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Score {
    /// Position bound `P` (meters, or m² in plane mode).
    pub position: f64,
    /// Rotation bound `O`, radians.
    pub rotation: f64,
    /// Combined `M = P + λ·O`.
    pub combined: f64,
}

/// Worst-case bounds for one solution under the metric.
pub fn score_solution(
    chain: &KinematicChain,
    theta: &JointVector,
    qd: &UnitQuaternion,
    model: &JointErrorModel,
    metric: &TaskMetric,
) -> Result<Score, ScoreError> {
    let jp = position_jacobian(chain, theta)?;
    let jr = rotation_jacobian(chain, theta)?;
    let pos_set = PositionErrorSet::new(&jp, model);
    let position = match &metric.position_mode {
        PositionMode::FullR3 => position_bound_r3(&pos_set),
        PositionMode::Direction(v) => position_bound_direction(&pos_set, *v)?,
        PositionMode::Plane(basis) => position_bound_plane(&pos_set, basis)?,
    };
    let rot_set = RotationErrorSet::new(&jr, qd, model);
    let rotation = rotation_bound(&rot_set);
    Ok(Score { position, rotation, combined: position + metric.lambda * rotation })
}

/// One row of the report.
#[derive(Debug, Clone)]
pub struct ReportEntry {
    pub theta: JointVector,
    pub position_bound: f64,
    pub rotation_bound: f64,
    pub combined: f64,
    pub feasible: bool,
}

/// Every scored solution plus the argmin/argmax indices.
#[derive(Debug, Clone)]
pub struct BoundReport {
    pub entries: Vec<ReportEntry>,
    /// Index minimizing `M` (lowest index on ties).
    pub best_index: usize,
    /// Index maximizing `M` (lowest index on ties).
    pub worst_index: usize,
    pub epsilon: f64,
}

impl BoundReport {
    fn from_entries(entries: Vec<ReportEntry>, epsilon: f64) -> Self {
        assert!(!entries.is_empty(), "report needs at least one entry");
        let mut best_index = 0;
        let mut worst_index = 0;
        for (i, e) in entries.iter().enumerate() {
            if e.combined.total_cmp(&entries[best_index].combined).is_lt() {
                best_index = i;
            }
            if e.combined.total_cmp(&entries[worst_index].combined).is_gt() {
                worst_index = i;
            }
        }
        BoundReport { entries, best_index, worst_index, epsilon }
    }

    pub fn best(&self) -> &ReportEntry {
        &self.entries[self.best_index]
    }

    pub fn worst(&self) -> &ReportEntry {
        &self.entries[self.worst_index]
    }

    /// CSV with header `index,theta_0..theta_{n-1},P,O,M,feasible`; floats
    /// carry 17 significant digits.
    pub fn to_csv(&self) -> String {
        let n = self.entries.first().map(|e| e.theta.len()).unwrap_or(0);
        let mut out = String::from("index");
        for i in 0..n {
            out.push_str(&format!(",theta_{i}"));
        }
        out.push_str(",P,O,M,feasible\n");
        for (i, e) in self.entries.iter().enumerate() {
            out.push_str(&i.to_string());
            for v in e.theta.as_slice() {
                out.push(',');
                out.push_str(&fmt_g17(*v));
            }
            out.push_str(&format!(
                ",{},{},{},{}\n",
                fmt_g17(e.position_bound),
                fmt_g17(e.rotation_bound),
                fmt_g17(e.combined),
                e.feasible
            ));
        }
        out
    }
}

fn entry_for(theta: &JointVector, score: Result<Score, ScoreError>, epsilon: f64) -> ReportEntry {
    match score {
        Ok(s) => ReportEntry {
            theta: theta.clone(),
            position_bound: s.position,
            rotation_bound: s.rotation,
            combined: s.combined,
            // A non-finite score never passes the filter, even for ε = ∞.
            feasible: s.combined.is_finite() && s.combined <= epsilon,
        },
        // Solutions whose scoring fails (e.g. at a kinematic singularity)
        // stay in the report as infinitely bad rather than vanishing.
        Err(_) => ReportEntry {
            theta: theta.clone(),
            position_bound: f64::INFINITY,
            rotation_bound: f64::INFINITY,
            combined: f64::INFINITY,
            feasible: false,
        },
    }
}

/// Outcome of the robust-IK pipeline for one target.
#[derive(Debug, Clone)]
pub struct RobustIkOutcome {
    /// The minimizing solution, present only when its `M` passes ε.
    pub best: Option<JointVector>,
    pub report: BoundReport,
    /// The IK set the report rows refer to, index-aligned.
    pub solutions: IkSolutionSet,
}

/// Samples IK solutions for the request's target, scores each against the
/// metric, and returns the feasible minimizer (if any) plus the full report.
///
/// Report rows keep the IK set's order. Deterministic for a fixed seed.
pub fn robust_ik(
    req: &IkRequest,
    model: &JointErrorModel,
    metric: &TaskMetric,
) -> Result<RobustIkOutcome, SelectError> {
    let set = solve_ik(req);
    if set.is_empty() {
        return Err(SelectError::EmptyIkSet);
    }
    let qd = req.target.orientation;
    let entries: Vec<ReportEntry> = set
        .solutions
        .iter()
        .map(|theta| {
            entry_for(theta, score_solution(req.chain, theta, &qd, model, metric), metric.epsilon)
        })
        .collect();
    let report = BoundReport::from_entries(entries, metric.epsilon);
    let best = report
        .best()
        .feasible
        .then(|| report.best().theta.clone());
    Ok(RobustIkOutcome { best, report, solutions: set })
}
