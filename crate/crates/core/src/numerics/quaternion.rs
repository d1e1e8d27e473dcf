//! Unit quaternions in scalar-first form `(η, ε)` with Hamilton products.
//!
//! Every public operation renormalizes and canonicalizes its result to the
//! η ≥ 0 representative of the double cover, so dot-product error measures
//! stay single-valued. At η = 0 the tie is broken by the sign of the first
//! nonzero vector component.

use super::vec3::{add3, cross3, dot3, scale3};
use super::NumericsError;

/// Norm drift tolerated before a quaternion stops being "unit".
const UNIT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitQuaternion {
    eta: f64,
    eps: [f64; 3],
}

impl UnitQuaternion {
    pub const IDENTITY: UnitQuaternion = UnitQuaternion { eta: 1.0, eps: [0.0; 3] };

    /// Normalizes an arbitrary nonzero 4-vector into a canonical unit
    /// quaternion.
    pub fn new_normalize(eta: f64, eps: [f64; 3]) -> Result<Self, NumericsError> {
        let norm = (eta * eta + dot3(eps, eps)).sqrt();
        if !norm.is_finite() || norm <= 1e-300 {
            return Err(NumericsError::ZeroQuaternion { norm });
        }
        Ok(UnitQuaternion { eta: eta / norm, eps: scale3(eps, 1.0 / norm) }.canonicalized())
    }

    /// Accepts components only if they are unit within `tol`, then snaps
    /// them to unit norm. Components already unit to working precision are
    /// kept bit-for-bit so ingest round-trips exactly. Used when ingesting
    /// external data.
    pub fn try_unit(eta: f64, eps: [f64; 3], tol: f64) -> Result<Self, NumericsError> {
        let norm = (eta * eta + dot3(eps, eps)).sqrt();
        if !norm.is_finite() {
            return Err(NumericsError::NotFinite);
        }
        let deviation = (norm - 1.0).abs();
        if deviation > tol {
            return Err(NumericsError::NotUnitQuaternion { deviation });
        }
        if deviation <= UNIT_TOL {
            return Ok(UnitQuaternion { eta, eps }.canonicalized());
        }
        Self::new_normalize(eta, eps)
    }

    /// Rotation about `axis` by `angle` radians. The axis is normalized;
    /// it must be nonzero.
    pub fn from_axis_angle(axis: [f64; 3], angle: f64) -> Self {
        let n = dot3(axis, axis).sqrt();
        assert!(n > 0.0, "rotation axis must be nonzero");
        let half = 0.5 * angle;
        UnitQuaternion {
            eta: half.cos(),
            eps: scale3(axis, half.sin() / n),
        }
        .canonicalized()
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn eps(&self) -> [f64; 3] {
        self.eps
    }

    /// `[η, εx, εy, εz]`.
    pub fn as_array(&self) -> [f64; 4] {
        [self.eta, self.eps[0], self.eps[1], self.eps[2]]
    }

    pub fn conjugate(&self) -> Self {
        UnitQuaternion { eta: self.eta, eps: scale3(self.eps, -1.0) }.canonicalized()
    }

    /// Hamilton product `self ⊗ rhs`, renormalized and canonicalized.
    pub fn multiply(&self, rhs: &UnitQuaternion) -> Self {
        let eta = self.eta * rhs.eta - dot3(self.eps, rhs.eps);
        let eps = add3(
            add3(scale3(rhs.eps, self.eta), scale3(self.eps, rhs.eta)),
            cross3(self.eps, rhs.eps),
        );
        // Inputs are unit, so the norm is 1 + O(ulp); renormalizing every
        // product keeps drift from accumulating over long compositions.
        let norm = (eta * eta + dot3(eps, eps)).sqrt();
        UnitQuaternion { eta: eta / norm, eps: scale3(eps, 1.0 / norm) }.canonicalized()
    }

    /// Four-dimensional dot product of the vector representations.
    pub fn dot(&self, rhs: &UnitQuaternion) -> f64 {
        self.eta * rhs.eta + dot3(self.eps, rhs.eps)
    }

    /// Included angle `arccos(|q₁ᵀq₂|)` in radians; zero iff the two
    /// quaternions represent the same rotation. The absolute value respects
    /// the double cover.
    pub fn included_angle(&self, rhs: &UnitQuaternion) -> f64 {
        self.dot(rhs).abs().clamp(-1.0, 1.0).acos()
    }

    /// Rotates a vector: `q ⊗ (0, v) ⊗ q⁻¹`.
    pub fn rotate(&self, v: [f64; 3]) -> [f64; 3] {
        // v + 2η(ε×v) + 2ε×(ε×v)
        let c1 = cross3(self.eps, v);
        let c2 = cross3(self.eps, c1);
        add3(v, add3(scale3(c1, 2.0 * self.eta), scale3(c2, 2.0)))
    }

    fn canonicalized(self) -> Self {
        let flip = if self.eta != 0.0 {
            self.eta < 0.0
        } else {
            // η == 0: pick the representative whose first nonzero vector
            // component is positive.
            match self.eps.iter().find(|x| **x != 0.0) {
                Some(x) => *x < 0.0,
                None => false,
            }
        };
        if flip {
            UnitQuaternion { eta: -self.eta, eps: scale3(self.eps, -1.0) }
        } else {
            self
        }
    }
}

/// Tangent-space product `(0, v) ⊗ q` as a raw 4-vector `[w, x, y, z]`.
///
/// This is the chain-rule factor for differentiating a quaternion-valued
/// curve from the left; the result is not unit (its norm is `‖v‖`).
pub(crate) fn pure_times(v: [f64; 3], q: &UnitQuaternion) -> [f64; 4] {
    let w = -dot3(v, q.eps());
    let vec = add3(scale3(v, q.eta()), cross3(v, q.eps()));
    [w, vec[0], vec[1], vec[2]]
}

pub(crate) fn quat_add(a: [f64; 4], b: [f64; 4]) -> [f64; 4] {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2], a[3] + b[3]]
}

pub(crate) fn quat_scale(a: [f64; 4], s: f64) -> [f64; 4] {
    [a[0] * s, a[1] * s, a[2] * s, a[3] * s]
}

pub(crate) fn quat_norm(a: [f64; 4]) -> f64 {
    (a[0] * a[0] + a[1] * a[1] + a[2] * a[2] + a[3] * a[3]).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn random_unit(rng: &mut impl Rng) -> UnitQuaternion {
        loop {
            let w = rng.random_range(-1.0..1.0);
            let v = [
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            ];
            if let Ok(q) = UnitQuaternion::new_normalize(w, v) {
                return q;
            }
        }
    }

    /// Independent route: quaternion -> rotation matrix.
    fn to_matrix(q: &UnitQuaternion) -> [[f64; 3]; 3] {
        let [w, x, y, z] = q.as_array();
        [
            [1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y)],
            [2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x)],
            [2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y)],
        ]
    }

    fn mat_mul(a: [[f64; 3]; 3], b: [[f64; 3]; 3]) -> [[f64; 3]; 3] {
        let mut out = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    out[i][j] += a[i][k] * b[k][j];
                }
            }
        }
        out
    }

    /// Shepperd's method, rotation matrix -> quaternion (canonical sign).
    fn from_matrix(m: [[f64; 3]; 3]) -> UnitQuaternion {
        let tr = m[0][0] + m[1][1] + m[2][2];
        let (w, x, y, z) = if tr > 0.0 {
            let s = (tr + 1.0).sqrt() * 2.0;
            (0.25 * s, (m[2][1] - m[1][2]) / s, (m[0][2] - m[2][0]) / s, (m[1][0] - m[0][1]) / s)
        } else if m[0][0] > m[1][1] && m[0][0] > m[2][2] {
            let s = (1.0 + m[0][0] - m[1][1] - m[2][2]).sqrt() * 2.0;
            ((m[2][1] - m[1][2]) / s, 0.25 * s, (m[0][1] + m[1][0]) / s, (m[0][2] + m[2][0]) / s)
        } else if m[1][1] > m[2][2] {
            let s = (1.0 + m[1][1] - m[0][0] - m[2][2]).sqrt() * 2.0;
            ((m[0][2] - m[2][0]) / s, (m[0][1] + m[1][0]) / s, 0.25 * s, (m[1][2] + m[2][1]) / s)
        } else {
            let s = (1.0 + m[2][2] - m[0][0] - m[1][1]).sqrt() * 2.0;
            ((m[1][0] - m[0][1]) / s, (m[0][2] + m[2][0]) / s, (m[1][2] + m[2][1]) / s, 0.25 * s)
        };
        UnitQuaternion::new_normalize(w, [x, y, z]).unwrap()
    }

    #[test]
    fn inverse_gives_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..100 {
            let q = random_unit(&mut rng);
            let p = q.multiply(&q.conjugate());
            assert!((p.eta() - 1.0).abs() < 1e-12);
            assert!(p.eps().iter().all(|x| x.abs() < 1e-12));
        }
    }

    #[test]
    fn double_z_quarter_turn_is_half_turn() {
        let z90 = UnitQuaternion::from_axis_angle([0.0, 0.0, 1.0], std::f64::consts::FRAC_PI_2);
        let z180 = UnitQuaternion::from_axis_angle([0.0, 0.0, 1.0], std::f64::consts::PI);
        let composed = z90.multiply(&z90);
        assert!(composed.included_angle(&z180) < 1e-12);
    }

    #[test]
    fn product_matches_rotation_matrix_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        for _ in 0..200 {
            let a = random_unit(&mut rng);
            let b = random_unit(&mut rng);
            let direct = a.multiply(&b);
            let via_matrices = from_matrix(mat_mul(to_matrix(&a), to_matrix(&b)));
            // Both are canonical, so they agree without a sign fixup.
            let [dw, dx, dy, dz] = direct.as_array();
            let [ow, ox, oy, oz] = via_matrices.as_array();
            assert!((dw - ow).abs() < 1e-10);
            assert!((dx - ox).abs() < 1e-10);
            assert!((dy - oy).abs() < 1e-10);
            assert!((dz - oz).abs() < 1e-10);
        }
    }

    #[test]
    fn norm_does_not_drift_over_a_million_products() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let step = random_unit(&mut rng);
        let mut acc = UnitQuaternion::IDENTITY;
        for _ in 0..1_000_000 {
            acc = acc.multiply(&step);
        }
        let n = (acc.eta() * acc.eta() + dot3(acc.eps(), acc.eps())).sqrt();
        assert!((n - 1.0).abs() < 1e-12);
        assert!(acc.eta() >= 0.0);
    }

    #[test]
    fn ingest_rejects_norm_violations() {
        // eps of 2e-3 pushes the norm to ~1 + 2e-6, beyond a 1e-6 tolerance.
        assert!(UnitQuaternion::try_unit(1.0, [2e-3, 0.0, 0.0], 1e-6).is_err());
        assert!(UnitQuaternion::try_unit(1.0, [1e-10, 0.0, 0.0], 1e-9).is_ok());
    }

    #[test]
    fn rotate_matches_matrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(24);
        for _ in 0..100 {
            let q = random_unit(&mut rng);
            let v = [
                rng.random_range(-2.0..2.0),
                rng.random_range(-2.0..2.0),
                rng.random_range(-2.0..2.0),
            ];
            let m = to_matrix(&q);
            let expect = [
                m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
                m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
                m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
            ];
            let got = q.rotate(v);
            for i in 0..3 {
                assert!((got[i] - expect[i]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn unit_tolerance_is_tight() {
        // UNIT_TOL documents the invariant; products stay well inside it.
        let q = UnitQuaternion::from_axis_angle([1.0, 1.0, 0.0], 0.3);
        let n = (q.eta() * q.eta() + dot3(q.eps(), q.eps())).sqrt();
        assert!((n - 1.0).abs() < UNIT_TOL);
    }
}
