//! Serial kinematic chain description and its on-disk format.
//!
//! A robot spec is a TOML document with explicit units in the header:
//!
//! ```toml
//! name = "planar3r"
//! units = { length = "meters", angle = "radians" }
//!
//! [[joints]]
//! axis = [0.0, 0.0, 1.0]      # unit rotation axis in the parent frame
//! origin = [0.0, 0.0, 0.0]    # offset from the parent joint, meters
//! limits = [-3.14, 3.14]      # joint range, radians
//!
//! [tool_offset]
//! origin = [1.0, 0.0, 0.0]
//! quaternion = [1.0, 0.0, 0.0, 0.0]   # scalar-first (eta, ex, ey, ez)
//! ```
//!
//! `units.length` must be `"meters"` and `units.angle` must be `"radians"`;
//! anything else is rejected so unit mistakes fail loudly instead of
//! producing silently wrong bounds. Unknown keys anywhere in the document
//! are errors. Joints are revolute, ordered base to tip; each frame is the
//! parent frame translated by `origin` and then rotated about `axis`.
//!
//! Chains are immutable after load and freely shareable across threads.

use serde::Deserialize;
use thiserror::Error;

use crate::numerics::{norm3, NumericsError, UnitQuaternion};

/// Tolerated deviation of a joint axis or tool quaternion from unit norm.
const UNIT_INGEST_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("robot has no joints")]
    EmptyJoints,
    #[error("unsupported units: length {length:?}, angle {angle:?} (expected \"meters\" and \"radians\")")]
    UnsupportedUnits { length: String, angle: String },
    #[error("joint {index}: axis is not unit (|norm - 1| = {deviation:.3e})")]
    NonUnitAxis { index: usize, deviation: f64 },
    #[error("joint {index}: limits must satisfy lo < hi (got [{lo}, {hi}])")]
    BadLimits { index: usize, lo: f64, hi: f64 },
    #[error("joint {index}: non-finite value in field {field}")]
    NonFinite { index: usize, field: &'static str },
    #[error("tool offset: {0}")]
    BadToolOffset(NumericsError),
}

/// One revolute joint: rotation axis and mounting offset in the parent
/// frame, plus travel limits.
#[derive(Debug, Clone, PartialEq)]
pub struct JointSpec {
    pub axis: [f64; 3],
    pub origin: [f64; 3],
    pub limits: (f64, f64),
}

/// Fixed transform from the last joint frame to the tool frame.
#[derive(Debug, Clone, PartialEq)]
pub struct ToolOffset {
    pub origin: [f64; 3],
    pub orientation: UnitQuaternion,
}

/// Serial chain, base to tip.
#[derive(Debug, Clone, PartialEq)]
pub struct KinematicChain {
    name: String,
    joints: Vec<JointSpec>,
    tool_offset: ToolOffset,
}

impl KinematicChain {
    pub fn new(
        name: impl Into<String>,
        joints: Vec<JointSpec>,
        tool_offset: ToolOffset,
    ) -> Result<Self, ModelError> {
        let chain = KinematicChain { name: name.into(), joints, tool_offset };
        chain.validate()?;
        Ok(chain)
    }

    fn validate(&self) -> Result<(), ModelError> {
        if self.joints.is_empty() {
            return Err(ModelError::EmptyJoints);
        }
        for (index, j) in self.joints.iter().enumerate() {
            if !j.axis.iter().all(|x| x.is_finite()) {
                return Err(ModelError::NonFinite { index, field: "axis" });
            }
            if !j.origin.iter().all(|x| x.is_finite()) {
                return Err(ModelError::NonFinite { index, field: "origin" });
            }
            if !(j.limits.0.is_finite() && j.limits.1.is_finite()) {
                return Err(ModelError::NonFinite { index, field: "limits" });
            }
            let deviation = (norm3(j.axis) - 1.0).abs();
            if deviation > UNIT_INGEST_TOL {
                return Err(ModelError::NonUnitAxis { index, deviation });
            }
            if j.limits.0 >= j.limits.1 {
                return Err(ModelError::BadLimits { index, lo: j.limits.0, hi: j.limits.1 });
            }
        }
        if !self.tool_offset.origin.iter().all(|x| x.is_finite()) {
            return Err(ModelError::NonFinite { index: self.joints.len(), field: "tool origin" });
        }
        Ok(())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dof(&self) -> usize {
        self.joints.len()
    }

    pub fn joints(&self) -> &[JointSpec] {
        &self.joints
    }

    pub fn tool_offset(&self) -> &ToolOffset {
        &self.tool_offset
    }

    /// True when every angle lies within its joint's limits.
    pub fn within_limits(&self, theta: &JointVector) -> bool {
        theta.len() == self.dof()
            && self
                .joints
                .iter()
                .zip(theta.as_slice())
                .all(|(j, &a)| a >= j.limits.0 && a <= j.limits.1)
    }

    /// Clamps each angle into its joint's limits.
    pub fn clamp_to_limits(&self, theta: &mut [f64]) {
        for (j, a) in self.joints.iter().zip(theta.iter_mut()) {
            *a = a.clamp(j.limits.0, j.limits.1);
        }
    }

    /// Upper bound on tool distance from the base over all configurations
    /// (triangle inequality over the link offsets).
    pub fn reach_upper_bound(&self) -> f64 {
        self.joints.iter().map(|j| norm3(j.origin)).sum::<f64>() + norm3(self.tool_offset.origin)
    }
}

/// Joint angles in radians, base to tip.
#[derive(Debug, Clone, PartialEq)]
pub struct JointVector(pub Vec<f64>);

impl JointVector {
    pub fn zeros(n: usize) -> Self {
        JointVector(vec![0.0; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn distance(&self, other: &JointVector) -> f64 {
        debug_assert_eq!(self.len(), other.len());
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

impl From<Vec<f64>> for JointVector {
    fn from(v: Vec<f64>) -> Self {
        JointVector(v)
    }
}

// On-disk document shape. Unknown keys are rejected everywhere.

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RobotDoc {
    name: String,
    units: UnitsDoc,
    joints: Vec<JointDoc>,
    tool_offset: ToolDoc,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct UnitsDoc {
    length: String,
    angle: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct JointDoc {
    axis: [f64; 3],
    origin: [f64; 3],
    limits: [f64; 2],
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ToolDoc {
    origin: [f64; 3],
    quaternion: [f64; 4],
}

/// Parses and validates a robot spec document.
pub fn load_chain(text: &str) -> Result<KinematicChain, ModelError> {
    let doc: RobotDoc = toml::from_str(text)?;
    if doc.units.length != "meters" || doc.units.angle != "radians" {
        return Err(ModelError::UnsupportedUnits { length: doc.units.length, angle: doc.units.angle });
    }
    let joints = doc
        .joints
        .into_iter()
        .map(|j| JointSpec { axis: j.axis, origin: j.origin, limits: (j.limits[0], j.limits[1]) })
        .collect();
    let [w, x, y, z] = doc.tool_offset.quaternion;
    let orientation = UnitQuaternion::try_unit(w, [x, y, z], UNIT_INGEST_TOL)
        .map_err(ModelError::BadToolOffset)?;
    KinematicChain::new(doc.name, joints, ToolOffset { origin: doc.tool_offset.origin, orientation })
}

/// Formats a float so TOML reads it back as a float, using the shortest
/// representation that round-trips exactly.
fn toml_float(x: f64) -> String {
    let s = format!("{x}");
    if s.contains('.') || s.contains('e') || s.contains('E') {
        s
    } else {
        format!("{s}.0")
    }
}

fn toml_triple(v: [f64; 3]) -> String {
    format!("[{}, {}, {}]", toml_float(v[0]), toml_float(v[1]), toml_float(v[2]))
}

/// Renders a chain back to the document format: stable field order,
/// lossless floats, byte-identical across repeated saves.
pub fn save_chain(chain: &KinematicChain) -> String {
    let mut out = String::new();
    out.push_str(&format!("name = {:?}\n", chain.name()));
    out.push_str("units = { length = \"meters\", angle = \"radians\" }\n");
    for j in chain.joints() {
        out.push_str("\n[[joints]]\n");
        out.push_str(&format!("axis = {}\n", toml_triple(j.axis)));
        out.push_str(&format!("origin = {}\n", toml_triple(j.origin)));
        out.push_str(&format!(
            "limits = [{}, {}]\n",
            toml_float(j.limits.0),
            toml_float(j.limits.1)
        ));
    }
    let tool = chain.tool_offset();
    let [qw, qx, qy, qz] = tool.orientation.as_array();
    out.push_str("\n[tool_offset]\n");
    out.push_str(&format!("origin = {}\n", toml_triple(tool.origin)));
    out.push_str(&format!(
        "quaternion = [{}, {}, {}, {}]\n",
        toml_float(qw),
        toml_float(qx),
        toml_float(qy),
        toml_float(qz)
    ));
    out
}
