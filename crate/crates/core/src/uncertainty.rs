//! Task-space error sets induced by the joint error ball, and their
//! worst-case bounds.
//!
//! Joint actuation error is modeled as an isotropic Gaussian with standard
//! deviation σ per joint; the confidence set considered is the ball
//! `‖δΘ‖² ≤ c` with `c = (kσ)²`. Pushed through the linearized kinematics,
//! the ball becomes an ellipsoid of position errors with shape matrix
//! `c·J_p·J_pᵀ` and an ellipsoid of quaternion-tangent errors governed by
//! `J_r·J_rᵀ`. Worst-case bounds over those sets reduce to eigenvalue and
//! support-function evaluations:
//!
//! * farthest point of the position ellipsoid: `sqrt(λ_max(c·J_pJ_pᵀ))`;
//! * half-width of its shadow along a unit direction v (the support
//!   function): `sqrt(vᵀ(c·J_pJ_pᵀ)v)`;
//! * area of its shadow on a plane with orthonormal basis T:
//!   `π·sqrt(det(Tᵀ(c·J_pJ_pᵀ)T))`;
//! * worst included angle of the orientation: lift the extreme tangent
//!   vector `v* = ½·sqrt(c·λ_max(J_rJ_rᵀ))·V_max` back to the quaternion
//!   sphere through `H(q_d)ᵀ` and renormalize.
//!
//! Rank-deficient Jacobians are legal everywhere: degenerate ellipsoids
//! simply have zero extent along their null directions.

use thiserror::Error;

use crate::numerics::{
    dot3, quat_add, quat_norm, quat_scale, sym_eig_max, Mat, UnitQuaternion,
};
use crate::robot_model::JointVector;

const UNIT_DIRECTION_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum UncertaintyError {
    #[error("direction is not unit (|norm - 1| = {deviation:.3e})")]
    NonUnitDirection { deviation: f64 },
    #[error("plane basis columns are not orthonormal (max deviation {deviation:.3e})")]
    NonOrthonormalBasis { deviation: f64 },
    #[error("error model requires sigma >= 0 and k > 0 (got sigma {sigma}, k {k})")]
    BadModel { sigma: f64, k: f64 },
}

/// Isotropic per-joint Gaussian error model with a k-sigma confidence ball.
///
/// σ = 0 is allowed and describes an error-free robot (the ball collapses
/// to a point); it is useful for harness baselines.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointErrorModel {
    sigma: f64,
    k: f64,
}

impl JointErrorModel {
    pub fn new(sigma: f64, k: f64) -> Result<Self, UncertaintyError> {
        if !sigma.is_finite() || !k.is_finite() || sigma < 0.0 || k <= 0.0 {
            return Err(UncertaintyError::BadModel { sigma, k });
        }
        Ok(JointErrorModel { sigma, k })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    /// Ball radius `kσ`.
    pub fn ball_radius(&self) -> f64 {
        self.k * self.sigma
    }

    /// The constant `c = (kσ)²` bounding `δΘᵀδΘ`.
    pub fn ball_radius_sq(&self) -> f64 {
        let r = self.ball_radius();
        r * r
    }
}

/// Ellipsoid of task-space position errors, shape matrix `c·J_p·J_pᵀ`.
#[derive(Debug, Clone)]
pub struct PositionErrorSet {
    shape: Mat,
}

impl PositionErrorSet {
    pub fn new(jp: &Mat, model: &JointErrorModel) -> Self {
        assert_eq!(jp.rows(), 3, "position Jacobian must have three rows");
        PositionErrorSet { shape: jp.gram().scale(model.ball_radius_sq()) }
    }

    /// Symmetric PSD 3×3 shape matrix.
    pub fn shape(&self) -> &Mat {
        &self.shape
    }
}

/// Ellipsoidal set of orientation errors in the quaternion tangent space at
/// the desired orientation.
#[derive(Debug, Clone)]
pub struct RotationErrorSet {
    shape: Mat,
    hd: Mat,
    qd: UnitQuaternion,
    ball_radius_sq: f64,
}

impl RotationErrorSet {
    pub fn new(jr: &Mat, qd: &UnitQuaternion, model: &JointErrorModel) -> Self {
        assert_eq!(jr.rows(), 3, "rotation Jacobian must have three rows");
        RotationErrorSet {
            shape: jr.gram(),
            hd: crate::kinematics::h_matrix(qd),
            qd: *qd,
            ball_radius_sq: model.ball_radius_sq(),
        }
    }

    /// Symmetric PSD 3×3 matrix `J_r·J_rᵀ`.
    pub fn shape(&self) -> &Mat {
        &self.shape
    }

    pub fn desired_orientation(&self) -> &UnitQuaternion {
        &self.qd
    }
}

/// Distance from the desired position to the farthest point of the error
/// ellipsoid, in meters.
pub fn position_bound_r3(set: &PositionErrorSet) -> f64 {
    let (lambda, _) = sym_eig_max(set.shape()).expect("shape matrix is symmetric by construction");
    lambda.max(0.0).sqrt()
}

/// Half-width of the error ellipsoid's shadow along a unit direction: the
/// largest `|vᵀδX|` over the set, in meters.
pub fn position_bound_direction(
    set: &PositionErrorSet,
    direction: [f64; 3],
) -> Result<f64, UncertaintyError> {
    let deviation = (dot3(direction, direction).sqrt() - 1.0).abs();
    if deviation > UNIT_DIRECTION_TOL {
        return Err(UncertaintyError::NonUnitDirection { deviation });
    }
    let sv = set.shape().matvec(&direction);
    let quad = direction[0] * sv[0] + direction[1] * sv[1] + direction[2] * sv[2];
    Ok(quad.max(0.0).sqrt())
}

/// Area of the error ellipsoid's shadow on the plane spanned by the two
/// orthonormal columns of `basis` (3×2), in square meters.
pub fn position_bound_plane(set: &PositionErrorSet, basis: &Mat) -> Result<f64, UncertaintyError> {
    assert_eq!((basis.rows(), basis.cols()), (3, 2), "plane basis must be 3x2");
    let gram = basis.transpose().mul(basis);
    let mut deviation: f64 = 0.0;
    for r in 0..2 {
        for c in 0..2 {
            let expect = if r == c { 1.0 } else { 0.0 };
            deviation = deviation.max((gram[(r, c)] - expect).abs());
        }
    }
    if deviation > UNIT_DIRECTION_TOL {
        return Err(UncertaintyError::NonOrthonormalBasis { deviation });
    }
    let projected = basis.transpose().mul(set.shape()).mul(basis);
    let det = projected[(0, 0)] * projected[(1, 1)] - projected[(0, 1)] * projected[(1, 0)];
    Ok(std::f64::consts::PI * det.max(0.0).sqrt())
}

/// Worst-case included angle between the desired orientation and any
/// orientation in the error set, in radians.
///
/// The extreme tangent vector is `v* = ½·sqrt(c·λ_max)·V_max` for the
/// dominant eigenpair of `J_rJ_rᵀ`; lifting it through `H_dᵀ` and
/// renormalizing gives the bounding quaternion, whose included angle with
/// `q_d` is the bound.
pub fn rotation_bound(set: &RotationErrorSet) -> f64 {
    let (lambda, v_max) =
        sym_eig_max(set.shape()).expect("shape matrix is symmetric by construction");
    if lambda <= 0.0 {
        return 0.0;
    }
    let scale = 0.5 * (set.ball_radius_sq * lambda).sqrt();
    let v_star = [scale * v_max[0], scale * v_max[1], scale * v_max[2]];
    let lifted = set.hd.transpose().matvec(&v_star);
    let qt = quat_add(set.qd.as_array(), [lifted[0], lifted[1], lifted[2], lifted[3]]);
    let q_star = quat_scale(qt, 1.0 / quat_norm(qt));
    let dot: f64 = q_star.iter().zip(&set.qd.as_array()).map(|(a, b)| a * b).sum();
    dot.abs().clamp(-1.0, 1.0).acos()
}

/// True iff the joint perturbation lies in the confidence ball
/// (`‖δΘ‖² ≤ c`, boundary inclusive).
pub fn joint_ball_contains(delta: &JointVector, model: &JointErrorModel) -> bool {
    let sq: f64 = delta.as_slice().iter().map(|x| x * x).sum();
    sq <= model.ball_radius_sq()
}
