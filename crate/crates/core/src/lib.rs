//! Task-specific robust inverse kinematics for redundant serial manipulators.
//!
//! A joint-space actuation error ball is propagated through the linearized
//! forward kinematics into task-space error sets (a position ellipsoid and a
//! quaternion-tangent ellipsoid). Each candidate IK solution is scored by the
//! worst-case task error it admits, and the solution with the smallest bound
//! is selected. A Monte Carlo harness validates the predicted bounds and the
//! success rates they imply.
//!
//! Modules, bottom up:
//!
//! * [`numerics`] — dense small-matrix kernel (Jacobi eigendecomposition,
//!   Cholesky, right pseudo-inverse) and unit quaternions.
//! * [`robot_model`] — serial-chain description and its on-disk format.
//! * [`kinematics`] — forward kinematics, position/rotation Jacobians, the
//!   quaternion tangent map.
//! * [`uncertainty`] — task-space error sets and their worst-case bounds.
//! * [`ik_engine`] — damped-least-squares IK with random restarts, yielding
//!   a diverse set of solutions for one target pose.
//! * [`robust_select`] — scoring and min-max selection over an IK set.
//! * [`montecarlo`] — seeded trial harness, clearance sweeps, CSV emission.
//! * [`validation`] — self-check oracles (finite differences, boundary
//!   sampling) used by tests and by the `validate` CLI subcommand.

pub mod cli;
pub mod ik_engine;
pub mod kinematics;
pub mod montecarlo;
pub mod numerics;
pub mod robot_model;
pub mod robust_select;
pub mod uncertainty;
pub mod validation;

pub use ik_engine::{IkRequest, IkSolutionSet};
pub use kinematics::Pose;
pub use numerics::{Mat, UnitQuaternion};
pub use robot_model::{JointVector, KinematicChain};
pub use robust_select::{BoundReport, TaskMetric};
pub use uncertainty::JointErrorModel;

/// Reference robots shipped with the crate, used throughout the tests and
/// usable directly from the CLI via their file paths.
pub mod robots {
    use crate::robot_model::{load_chain, KinematicChain};

    /// Planar 3R arm with unit links, all joints about +z.
    pub const PLANAR3R_TOML: &str = include_str!("../robots/planar3r.toml");

    /// Generic desk-scale 7-DoF arm (roll/pitch alternating), ~1 m reach.
    pub const DESK7_TOML: &str = include_str!("../robots/desk7.toml");

    pub fn planar3r() -> KinematicChain {
        load_chain(PLANAR3R_TOML).expect("embedded planar3r spec is valid")
    }

    pub fn desk7() -> KinematicChain {
        load_chain(DESK7_TOML).expect("embedded desk7 spec is valid")
    }
}
