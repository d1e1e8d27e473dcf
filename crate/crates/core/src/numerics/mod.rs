//! Dense small-matrix kernel used by every other module.
//!
//! Everything here targets matrices of dimension at most 7 (joint counts of
//! serial arms), so the decompositions favor robustness over asymptotics:
//! symmetric eigenvalues come from cyclic Jacobi rotations, linear solves
//! from Cholesky factorization. All operations are pure functions of their
//! inputs and safe to call concurrently.

mod quaternion;
mod vec3;

pub use quaternion::UnitQuaternion;
pub(crate) use quaternion::{pure_times, quat_add, quat_norm, quat_scale};
pub use vec3::{add3, cross3, dot3, norm3, normalized3, scale3, sub3};

use std::ops::{Index, IndexMut};

use thiserror::Error;

/// Asymmetry beyond this is rejected rather than silently symmetrized.
const SYMMETRY_TOL: f64 = 1e-10;

/// Jacobi sweeps stop once the off-diagonal Frobenius norm drops below this.
const JACOBI_OFF_TOL: f64 = 1e-12;

/// Condition-number ceiling for the Gram matrix in the right pseudo-inverse.
const PINV_MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumericsError {
    #[error("matrix is not symmetric (max asymmetry {max_asymmetry:.3e})")]
    NonSymmetric { max_asymmetry: f64 },
    #[error("matrix is not positive definite (pivot {pivot:.3e} at index {index})")]
    NotPositiveDefinite { pivot: f64, index: usize },
    #[error("matrix is rank deficient (gram condition {condition:.3e})")]
    RankDeficient { condition: f64 },
    #[error("matrix contains non-finite entries")]
    NotFinite,
    #[error("cannot normalize a near-zero quaternion (norm {norm:.3e})")]
    ZeroQuaternion { norm: f64 },
    #[error("quaternion is not unit (|norm - 1| = {deviation:.3e})")]
    NotUnitQuaternion { deviation: f64 },
}

/// Dense row-major matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows >= 1 && cols >= 1, "matrix dimensions must be >= 1");
        Mat { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Mat::zeros(rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                m[(r, c)] = f(r, c);
            }
        }
        m
    }

    /// Builds a matrix from row slices; all rows must have equal length.
    pub fn from_rows(rows: &[&[f64]]) -> Self {
        assert!(!rows.is_empty(), "need at least one row");
        let cols = rows[0].len();
        assert!(rows.iter().all(|r| r.len() == cols), "ragged rows");
        Mat::from_fn(rows.len(), cols, |r, c| rows[r][c])
    }

    pub fn diag(entries: &[f64]) -> Self {
        let mut m = Mat::zeros(entries.len(), entries.len());
        for (i, &e) in entries.iter().enumerate() {
            m[(i, i)] = e;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self[(r, c)]).collect()
    }

    pub fn transpose(&self) -> Mat {
        Mat::from_fn(self.cols, self.rows, |r, c| self[(c, r)])
    }

    pub fn mul(&self, rhs: &Mat) -> Mat {
        assert_eq!(self.cols, rhs.rows, "inner dimensions must match");
        let mut out = Mat::zeros(self.rows, rhs.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(r, k)];
                if a == 0.0 {
                    continue;
                }
                for c in 0..rhs.cols {
                    out[(r, c)] += a * rhs[(k, c)];
                }
            }
        }
        out
    }

    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, v.len(), "vector length must match columns");
        self.data
            .chunks_exact(self.cols)
            .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn scale(&self, s: f64) -> Mat {
        Mat { rows: self.rows, cols: self.cols, data: self.data.iter().map(|x| x * s).collect() }
    }

    /// `self · selfᵀ`, symmetrized exactly so downstream symmetry checks
    /// never trip on rounding.
    pub fn gram(&self) -> Mat {
        let mut g = Mat::zeros(self.rows, self.rows);
        for i in 0..self.rows {
            for j in i..self.rows {
                let s: f64 = self.row(i).iter().zip(self.row(j)).map(|(a, b)| a * b).sum();
                g[(i, j)] = s;
                g[(j, i)] = s;
            }
        }
        g
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn max_asymmetry(&self) -> f64 {
        assert_eq!(self.rows, self.cols);
        let mut worst: f64 = 0.0;
        for r in 0..self.rows {
            for c in r + 1..self.cols {
                worst = worst.max((self[(r, c)] - self[(c, r)]).abs());
            }
        }
        worst
    }
}

impl Index<(usize, usize)> for Mat {
    type Output = f64;

    fn index(&self, (r, c): (usize, usize)) -> &f64 {
        debug_assert!(r < self.rows && c < self.cols);
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for Mat {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut f64 {
        debug_assert!(r < self.rows && c < self.cols);
        &mut self.data[r * self.cols + c]
    }
}

/// Formats a float with 17 significant digits (exponent notation), enough
/// to reproduce any f64 exactly. Used by every CSV emitter.
pub(crate) fn fmt_g17(x: f64) -> String {
    format!("{x:.16e}")
}

fn check_symmetric(m: &Mat) -> Result<(), NumericsError> {
    assert_eq!(m.rows(), m.cols(), "expected a square matrix");
    if !m.is_finite() {
        return Err(NumericsError::NotFinite);
    }
    let asym = m.max_asymmetry();
    if asym > SYMMETRY_TOL {
        return Err(NumericsError::NonSymmetric { max_asymmetry: asym });
    }
    Ok(())
}

fn off_diagonal_frobenius(a: &Mat) -> f64 {
    let n = a.rows();
    let mut s = 0.0;
    for p in 0..n {
        for q in 0..n {
            if p != q {
                s += a[(p, q)] * a[(p, q)];
            }
        }
    }
    s.sqrt()
}

/// Full symmetric eigendecomposition via cyclic Jacobi rotations.
///
/// Returns eigenvalues and a matrix whose columns are the matching unit
/// eigenvectors. Sweeps run until the off-diagonal Frobenius norm falls
/// below `1e-12` (with a relative guard and a sweep cap for badly scaled
/// inputs; convergence is quadratic so the cap is never hit in practice).
pub(crate) fn sym_eig_all(m: &Mat) -> Result<(Vec<f64>, Mat), NumericsError> {
    check_symmetric(m)?;
    let n = m.rows();
    let mut a = m.clone();
    // Use the upper triangle as the single source of truth.
    for p in 0..n {
        for q in 0..p {
            a[(p, q)] = a[(q, p)];
        }
    }
    let mut v = Mat::identity(n);
    let stop = JACOBI_OFF_TOL.max(1e-15 * a.frobenius());

    // One extra sweep after reaching the threshold: convergence is
    // quadratic, so the polish pushes the off-diagonal mass to ~1e-24 and
    // the eigenvalues to full working precision.
    let mut polish = true;
    for _sweep in 0..64 {
        if off_diagonal_frobenius(&a) < stop {
            if !polish {
                break;
            }
            polish = false;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let tau = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;

                let app = a[(p, p)];
                let aqq = a[(q, q)];
                a[(p, p)] = app - t * apq;
                a[(q, q)] = aqq + t * apq;
                a[(p, q)] = 0.0;
                a[(q, p)] = 0.0;
                for k in 0..n {
                    if k != p && k != q {
                        let akp = a[(k, p)];
                        let akq = a[(k, q)];
                        a[(k, p)] = c * akp - s * akq;
                        a[(p, k)] = a[(k, p)];
                        a[(k, q)] = s * akp + c * akq;
                        a[(q, k)] = a[(k, q)];
                    }
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }

    let values = (0..n).map(|i| a[(i, i)]).collect();
    Ok((values, v))
}

/// Largest eigenvalue of a symmetric matrix and an associated unit
/// eigenvector.
pub fn sym_eig_max(m: &Mat) -> Result<(f64, Vec<f64>), NumericsError> {
    let (values, vectors) = sym_eig_all(m)?;
    let best = values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .expect("matrix has at least one eigenvalue");
    let mut v = vectors.column(best);
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    for x in &mut v {
        *x /= norm;
    }
    Ok((values[best], v))
}

/// Cholesky factor `L` (lower triangular) of a symmetric positive-definite
/// matrix, with `L·Lᵀ = m`.
pub fn cholesky_lower(m: &Mat) -> Result<Mat, NumericsError> {
    check_symmetric(m)?;
    let n = m.rows();
    let mut l = Mat::zeros(n, n);
    for j in 0..n {
        let mut d = m[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if d <= 0.0 {
            return Err(NumericsError::NotPositiveDefinite { pivot: d, index: j });
        }
        l[(j, j)] = d.sqrt();
        for i in j + 1..n {
            let mut s = m[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / l[(j, j)];
        }
    }
    Ok(l)
}

/// Solves `L·Lᵀ·x = b` by forward then backward substitution.
pub(crate) fn cholesky_solve(l: &Mat, b: &[f64]) -> Vec<f64> {
    let n = l.rows();
    assert_eq!(b.len(), n);
    let mut y = vec![0.0; n];
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[(i, k)] * y[k];
        }
        y[i] = s / l[(i, i)];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in i + 1..n {
            s -= l[(k, i)] * x[k];
        }
        x[i] = s / l[(i, i)];
    }
    x
}

/// Right pseudo-inverse `mᵀ(m·mᵀ)⁻¹` of a wide full-row-rank matrix.
///
/// The Gram matrix is factored by Cholesky; a singular or badly conditioned
/// Gram (condition number above `1e12`) signals a kinematic singularity and
/// is reported as `RankDeficient`.
pub fn right_pseudo_inverse(m: &Mat) -> Result<Mat, NumericsError> {
    assert!(m.rows() <= m.cols(), "expected a wide matrix");
    if !m.is_finite() {
        return Err(NumericsError::NotFinite);
    }
    let g = m.gram();
    let (values, _) = sym_eig_all(&g)?;
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    if min <= 0.0 || max / min > PINV_MAX_CONDITION {
        let condition = if min > 0.0 { max / min } else { f64::INFINITY };
        return Err(NumericsError::RankDeficient { condition });
    }
    let l = cholesky_lower(&g)?;
    // Columns of the result solve G·x = column of mᵀ... equivalently build
    // G⁻¹ once (tiny system) and multiply.
    let r = m.rows();
    let mut ginv = Mat::zeros(r, r);
    for c in 0..r {
        let mut e = vec![0.0; r];
        e[c] = 1.0;
        let x = cholesky_solve(&l, &e);
        for (i, xi) in x.iter().enumerate() {
            ginv[(i, c)] = *xi;
        }
    }
    Ok(m.transpose().mul(&ginv))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn random_symmetric(n: usize, rng: &mut impl Rng) -> Mat {
        let b = Mat::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        // BᵀB is symmetric PSD.
        b.transpose().mul(&b).gram_symmetrized()
    }

    impl Mat {
        fn gram_symmetrized(&self) -> Mat {
            Mat::from_fn(self.rows(), self.cols(), |r, c| 0.5 * (self[(r, c)] + self[(c, r)]))
        }
    }

    /// Largest root of det(A - λI) for a symmetric 3x3, found by bisection
    /// on the characteristic polynomial. Independent of the Jacobi path.
    fn char_poly_max_root(a: &Mat) -> f64 {
        assert_eq!(a.rows(), 3);
        let det3 = |m: &Mat| -> f64 {
            m[(0, 0)] * (m[(1, 1)] * m[(2, 2)] - m[(1, 2)] * m[(2, 1)])
                - m[(0, 1)] * (m[(1, 0)] * m[(2, 2)] - m[(1, 2)] * m[(2, 0)])
                + m[(0, 2)] * (m[(1, 0)] * m[(2, 1)] - m[(1, 1)] * m[(2, 0)])
        };
        let p = |lambda: f64| -> f64 {
            let mut shifted = a.clone();
            for i in 0..3 {
                shifted[(i, i)] -= lambda;
            }
            det3(&shifted)
        };
        // Gershgorin upper bound; the polynomial is -λ³ + ... so p(+big) < 0.
        let hi = (0..3)
            .map(|r| a.row(r).iter().map(|x| x.abs()).sum::<f64>())
            .fold(0.0_f64, f64::max)
            + 1.0;
        // Walk down until the sign flips, then bisect.
        let mut lo = hi;
        while p(lo) < 0.0 {
            lo -= hi / 256.0;
        }
        let mut hi_b = lo + hi / 256.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi_b);
            if p(mid) < 0.0 {
                hi_b = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi_b)
    }

    #[test]
    fn eig_identity() {
        let (val, vec) = sym_eig_max(&Mat::identity(3)).unwrap();
        assert!((val - 1.0).abs() < 1e-12);
        let n: f64 = vec.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!((n - 1.0).abs() < 1e-12);
    }

    #[test]
    fn eig_diagonal() {
        let (val, vec) = sym_eig_max(&Mat::diag(&[4.0, 1.0, 0.25])).unwrap();
        assert!((val - 4.0).abs() < 1e-12);
        assert!((vec[0].abs() - 1.0).abs() < 1e-10);
        assert!(vec[1].abs() < 1e-10 && vec[2].abs() < 1e-10);
    }

    #[test]
    fn eig_matches_characteristic_polynomial_root() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let a = random_symmetric(3, &mut rng);
            let (val, _) = sym_eig_max(&a).unwrap();
            let oracle = char_poly_max_root(&a);
            assert!(
                (val - oracle).abs() <= 1e-9 * (1.0 + oracle.abs()),
                "jacobi {val} vs bisection {oracle}"
            );
        }
    }

    #[test]
    fn eig_residual_small_up_to_dim7() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for n in 2..=7 {
            let a = random_symmetric(n, &mut rng);
            let (val, vec) = sym_eig_max(&a).unwrap();
            let av = a.matvec(&vec);
            let mut res = 0.0_f64;
            for i in 0..n {
                res += (av[i] - val * vec[i]).powi(2);
            }
            assert!(res.sqrt() <= 1e-9 * (1.0 + val), "residual {} at n={n}", res.sqrt());
        }
    }

    #[test]
    fn eig_max_dominates_rayleigh_quotients() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let a = random_symmetric(5, &mut rng);
        let (val, _) = sym_eig_max(&a).unwrap();
        for _ in 0..1000 {
            let mut v: Vec<f64> = (0..5).map(|_| rng.random_range(-1.0..1.0)).collect();
            let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.iter_mut().for_each(|x| *x /= n);
            let av = a.matvec(&v);
            let quad: f64 = av.iter().zip(&v).map(|(x, y)| x * y).sum();
            assert!(val >= quad - 1e-9);
        }
    }

    #[test]
    fn eig_rejects_asymmetry_and_nan() {
        let mut m = Mat::identity(3);
        m[(0, 1)] = 1e-6;
        assert!(matches!(sym_eig_max(&m), Err(NumericsError::NonSymmetric { .. })));
        let mut m = Mat::identity(3);
        m[(1, 1)] = f64::NAN;
        assert!(matches!(sym_eig_max(&m), Err(NumericsError::NotFinite)));
    }

    #[test]
    fn cholesky_identity_and_diagonal() {
        let l = cholesky_lower(&Mat::identity(4)).unwrap();
        assert_eq!(l, Mat::identity(4));
        let l = cholesky_lower(&Mat::diag(&[4.0, 9.0])).unwrap();
        assert_eq!(l, Mat::diag(&[2.0, 3.0]));
    }

    #[test]
    fn cholesky_reconstructs_random_spd() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for _ in 0..50 {
            let b = Mat::from_fn(3, 3, |_, _| rng.random_range(-1.0..1.0));
            let spd = {
                // BᵀB + I keeps pivots well clear of zero.
                let mut g = b.transpose().mul(&b);
                for i in 0..3 {
                    g[(i, i)] += 1.0;
                }
                g.gram_symmetrized()
            };
            let l = cholesky_lower(&spd).unwrap();
            let rec = l.mul(&l.transpose());
            for r in 0..3 {
                for c in 0..3 {
                    assert!((rec[(r, c)] - spd[(r, c)]).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let m = Mat::diag(&[1.0, -1.0]);
        assert!(matches!(
            cholesky_lower(&m),
            Err(NumericsError::NotPositiveDefinite { index: 1, .. })
        ));
    }

    #[test]
    fn pinv_orthonormal_rows() {
        // [I | 0] (3x7) pseudo-inverts to [I ; 0].
        let m = Mat::from_fn(3, 7, |r, c| if r == c { 1.0 } else { 0.0 });
        let p = right_pseudo_inverse(&m).unwrap();
        for r in 0..7 {
            for c in 0..3 {
                let expect = if r == c { 1.0 } else { 0.0 };
                assert!((p[(r, c)] - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn pinv_orthogonal_rows_scale_inversely() {
        // Rows a·e1, b·e2, c·e3 embedded in 3x5: the pseudo-inverse carries
        // 1/a, 1/b, 1/c (rows of m scaled by 1/a² etc).
        let (a, b, c) = (2.0, 0.5, 4.0);
        let mut m = Mat::zeros(3, 5);
        m[(0, 0)] = a;
        m[(1, 1)] = b;
        m[(2, 2)] = c;
        let p = right_pseudo_inverse(&m).unwrap();
        assert!((p[(0, 0)] - 1.0 / a).abs() < 1e-12);
        assert!((p[(1, 1)] - 1.0 / b).abs() < 1e-12);
        assert!((p[(2, 2)] - 1.0 / c).abs() < 1e-12);
    }

    #[test]
    fn pinv_product_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let m = Mat::from_fn(3, 7, |_, _| rng.random_range(-1.0..1.0));
            let p = right_pseudo_inverse(&m).unwrap();
            let prod = m.mul(&p);
            for r in 0..3 {
                for c in 0..3 {
                    let expect = if r == c { 1.0 } else { 0.0 };
                    assert!((prod[(r, c)] - expect).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn pinv_flags_rank_deficiency() {
        let mut m = Mat::zeros(3, 7);
        m[(0, 0)] = 1.0;
        m[(1, 0)] = 1.0; // second row parallel to first, third row zero
        assert!(matches!(right_pseudo_inverse(&m), Err(NumericsError::RankDeficient { .. })));
    }
}
