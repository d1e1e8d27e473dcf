//! Forward kinematics and the Jacobians that drive all error propagation.
//!
//! Composition order is parent-then-child throughout: walking base to tip,
//! each joint first translates by its mounting offset (expressed in the
//! parent frame) and then rotates about its axis. Worked two-joint example,
//! also pinned by a unit test: joint 1 about z at the base, joint 2 about x
//! mounted one meter out along the parent's x. At `theta = [pi/3, 0]` the
//! tool orientation is the single rotation `Rz(pi/3)`, joint 2 sits at
//! world position `(cos pi/3, sin pi/3, 0)`, and joint 2's world axis is
//! its parent-frame x-axis rotated by the preceding frames:
//! `Rz(pi/3)·x = (1/2, sqrt(3)/2, 0)`. Swapping the order (rotate before
//! translate) would put joint 2 at `(1, 0, 0)` instead — if a test ever
//! disagrees with this module, check that convention first.
//!
//! All functions are pure; everything is safe to call concurrently.

use thiserror::Error;

use crate::numerics::{
    add3, cross3, normalized3, pure_times, sub3, Mat, UnitQuaternion,
};
use crate::robot_model::{JointVector, KinematicChain};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KinematicsError {
    #[error("joint vector has length {got}, chain has {expected} joints")]
    LengthMismatch { expected: usize, got: usize },
}

/// Tool position and orientation in the base frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub position: [f64; 3],
    pub orientation: UnitQuaternion,
}

/// Per-joint world-frame quantities at one configuration, shared by the
/// forward kinematics and both Jacobians.
struct ChainFrames {
    /// World position of each joint's rotation point.
    pivots: Vec<[f64; 3]>,
    /// World direction of each joint's rotation axis.
    axes: Vec<[f64; 3]>,
    tool: Pose,
}

fn check_len(chain: &KinematicChain, theta: &JointVector) -> Result<(), KinematicsError> {
    if theta.len() != chain.dof() {
        return Err(KinematicsError::LengthMismatch { expected: chain.dof(), got: theta.len() });
    }
    Ok(())
}

fn chain_frames(chain: &KinematicChain, theta: &JointVector) -> Result<ChainFrames, KinematicsError> {
    check_len(chain, theta)?;
    let n = chain.dof();
    let mut pivots = Vec::with_capacity(n);
    let mut axes = Vec::with_capacity(n);
    let mut p = [0.0; 3];
    let mut q = UnitQuaternion::IDENTITY;
    for (joint, &angle) in chain.joints().iter().zip(theta.as_slice()) {
        p = add3(p, q.rotate(joint.origin));
        pivots.push(p);
        axes.push(q.rotate(normalized3(joint.axis)));
        q = q.multiply(&UnitQuaternion::from_axis_angle(joint.axis, angle));
    }
    let tool = chain.tool_offset();
    p = add3(p, q.rotate(tool.origin));
    q = q.multiply(&tool.orientation);
    Ok(ChainFrames { pivots, axes, tool: Pose { position: p, orientation: q } })
}

/// Tool pose at a joint configuration. The orientation is unit with
/// canonical sign.
pub fn fk_pose(chain: &KinematicChain, theta: &JointVector) -> Result<Pose, KinematicsError> {
    Ok(chain_frames(chain, theta)?.tool)
}

/// 3×n position Jacobian: column i is `axis_i × (p_tool − p_joint_i)`.
pub fn position_jacobian(chain: &KinematicChain, theta: &JointVector) -> Result<Mat, KinematicsError> {
    let frames = chain_frames(chain, theta)?;
    let n = chain.dof();
    let mut jp = Mat::zeros(3, n);
    for i in 0..n {
        let col = cross3(frames.axes[i], sub3(frames.tool.position, frames.pivots[i]));
        for r in 0..3 {
            jp[(r, i)] = col[r];
        }
    }
    Ok(jp)
}

/// 3×n rotation Jacobian: column i is joint axis i expressed in the base
/// frame at this configuration.
pub fn rotation_jacobian(chain: &KinematicChain, theta: &JointVector) -> Result<Mat, KinematicsError> {
    let frames = chain_frames(chain, theta)?;
    let n = chain.dof();
    let mut jr = Mat::zeros(3, n);
    for i in 0..n {
        for r in 0..3 {
            jr[(r, i)] = frames.axes[i][r];
        }
    }
    Ok(jr)
}

/// 3×4 matrix `H(q) = [−ε | ηI − ε^×]` mapping quaternion perturbations to
/// the 3-vector tangent at `q`. Satisfies `H·Hᵀ = I` and `H·q = 0`.
pub fn h_matrix(q: &UnitQuaternion) -> Mat {
    let eta = q.eta();
    let [ex, ey, ez] = q.eps();
    Mat::from_rows(&[
        &[-ex, eta, ez, -ey],
        &[-ey, -ez, eta, ex],
        &[-ez, ey, -ex, eta],
    ])
}

/// 4×n derivative of the tool quaternion with respect to the joint angles.
///
/// Column i is `½ (0, axis_i) ⊗ q(theta)` — the chain-rule derivative of
/// the parent-then-child quaternion composition, with the joint axes taken
/// in the base frame. Matches central finite differences of [`fk_pose`].
pub fn quat_error_jacobian(chain: &KinematicChain, theta: &JointVector) -> Result<Mat, KinematicsError> {
    let frames = chain_frames(chain, theta)?;
    let n = chain.dof();
    let mut d = Mat::zeros(4, n);
    for i in 0..n {
        let col = pure_times(frames.axes[i], &frames.tool.orientation);
        for r in 0..4 {
            d[(r, i)] = 0.5 * col[r];
        }
    }
    Ok(d)
}

/// The Jacobian bundle for error propagation at one configuration, with the
/// quaternion tangent basis taken at the desired orientation `qd`.
#[derive(Debug, Clone)]
pub struct Jacobians {
    /// Position Jacobian, 3×n.
    pub jp: Mat,
    /// Rotation Jacobian, 3×n.
    pub jr: Mat,
    /// `H(qd)`, 3×4.
    pub hd: Mat,
}

impl Jacobians {
    pub fn at(
        chain: &KinematicChain,
        theta: &JointVector,
        qd: &UnitQuaternion,
    ) -> Result<Self, KinematicsError> {
        Ok(Jacobians {
            jp: position_jacobian(chain, theta)?,
            jr: rotation_jacobian(chain, theta)?,
            hd: h_matrix(qd),
        })
    }
}
