//! Dense symmetric matrix primitives shared by the optimizer and the GP engine.
//!
//! Everything here works on `nalgebra` dense storage. Solves go through a
//! Cholesky factor; no explicit inverses are formed.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use thiserror::Error;

/// Number of ×10 jitter escalations attempted before giving up.
pub const JITTER_ESCALATIONS: usize = 6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("matrix is not positive definite (last jitter tried: {jitter:e})")]
    NotPositiveDefinite { jitter: f64 },
    #[error("matrix is not positive semi-definite (min eigenvalue {min_eigenvalue:e})")]
    NotPositiveSemiDefinite { min_eigenvalue: f64 },
    #[error("observed block of the joint covariance is singular")]
    SingularObservedBlock,
    #[error("matrix is not symmetric (entry ({row}, {col}) differs by {diff:e})")]
    NotSymmetric { row: usize, col: usize, diff: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid index set: {0}")]
    InvalidIndexSet(String),
}

pub type Result<T> = std::result::Result<T, LinalgError>;

/// A dense symmetric matrix of dimension at least one.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix(DMatrix<f64>);

impl SymMatrix {
    /// Wraps `m` after checking `|m_ij - m_ji| <= 1e-12 * max(1, |m_ij|)`.
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(LinalgError::DimensionMismatch {
                expected: m.nrows(),
                got: m.ncols(),
            });
        }
        if m.nrows() == 0 {
            return Err(LinalgError::DimensionMismatch {
                expected: 1,
                got: 0,
            });
        }
        let n = m.nrows();
        for i in 0..n {
            for j in (i + 1)..n {
                let diff = (m[(i, j)] - m[(j, i)]).abs();
                if diff > 1e-12 * m[(i, j)].abs().max(1.0) || diff.is_nan() {
                    return Err(LinalgError::NotSymmetric {
                        row: i,
                        col: j,
                        diff,
                    });
                }
            }
        }
        Ok(SymMatrix(m))
    }

    /// Builds a symmetric matrix from `(m + mᵀ) / 2`.
    pub fn symmetrized(m: DMatrix<f64>) -> Self {
        assert!(m.is_square() && m.nrows() > 0, "symmetrized needs a non-empty square matrix");
        let t = m.transpose();
        SymMatrix((m + t) * 0.5)
    }

    pub fn identity(n: usize) -> Self {
        SymMatrix(DMatrix::identity(n, n))
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        SymMatrix(DMatrix::from_diagonal(&DVector::from_column_slice(d)))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }

    pub fn trace(&self) -> f64 {
        self.0.trace()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        SymMatrix(&self.0 * factor)
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = SymmetricEigen::new(self.0.clone())
            .eigenvalues
            .iter()
            .copied()
            .collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }
}

impl std::ops::Index<(usize, usize)> for SymMatrix {
    type Output = f64;
    fn index(&self, idx: (usize, usize)) -> &f64 {
        &self.0[idx]
    }
}

/// Mean and covariance of a multivariate Gaussian.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianParams {
    pub mean: DVector<f64>,
    pub cov: SymMatrix,
}

impl GaussianParams {
    pub fn new(mean: DVector<f64>, cov: SymMatrix) -> Result<Self> {
        if mean.len() != cov.dim() {
            return Err(LinalgError::DimensionMismatch {
                expected: cov.dim(),
                got: mean.len(),
            });
        }
        Ok(GaussianParams { mean, cov })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

/// Lower-triangular Cholesky factor together with the diagonal jitter that
/// was actually added to obtain it.
#[derive(Debug, Clone, PartialEq)]
pub struct Cholesky {
    l: DMatrix<f64>,
    jitter: f64,
}

/// Jitter used as the starting point of escalation: `1e-10 * trace / dim`.
pub fn default_jitter(a: &SymMatrix) -> f64 {
    let t = a.trace() / a.dim() as f64;
    if t.is_finite() && t > 0.0 {
        1e-10 * t
    } else {
        1e-10
    }
}

/// Plain Cholesky–Banachiewicz factorization of `a + jitter * I`. Returns
/// `None` on a non-positive pivot.
fn factor_once(a: &DMatrix<f64>, jitter: f64) -> Option<DMatrix<f64>> {
    let n = a.nrows();
    // Row-major scratch so the inner products run over contiguous slices.
    let mut l = vec![0.0f64; n * n];
    for i in 0..n {
        for j in 0..=i {
            let (ri, rj) = (i * n, j * n);
            let mut s = a[(i, j)];
            if i == j {
                s += jitter;
            }
            s -= l[ri..ri + j]
                .iter()
                .zip(&l[rj..rj + j])
                .map(|(x, y)| x * y)
                .sum::<f64>();
            if i == j {
                if !(s > 0.0) || !s.is_finite() {
                    return None;
                }
                l[ri + i] = s.sqrt();
            } else {
                l[ri + j] = s / l[rj + j];
            }
        }
    }
    Some(DMatrix::from_row_slice(n, n, &l))
}

impl Cholesky {
    /// Factors `a + jitter * I`. On failure the jitter is escalated ×10 up to
    /// [`JITTER_ESCALATIONS`] times, starting from `max(jitter, default_jitter(a))`.
    pub fn factor(a: &SymMatrix, jitter: f64) -> Result<Self> {
        assert!(jitter >= 0.0, "jitter must be non-negative");
        if let Some(l) = factor_once(a.as_matrix(), jitter) {
            return Ok(Cholesky { l, jitter });
        }
        let mut j = jitter.max(default_jitter(a));
        for _ in 0..JITTER_ESCALATIONS {
            j *= 10.0;
            if let Some(l) = factor_once(a.as_matrix(), j) {
                log::debug!("cholesky needed jitter {j:e}");
                return Ok(Cholesky { l, jitter: j });
            }
        }
        Err(LinalgError::NotPositiveDefinite { jitter: j })
    }

    /// Factors `a` with no added jitter and no escalation.
    pub fn factor_exact(a: &SymMatrix) -> Result<Self> {
        factor_once(a.as_matrix(), 0.0)
            .map(|l| Cholesky { l, jitter: 0.0 })
            .ok_or(LinalgError::NotPositiveDefinite { jitter: 0.0 })
    }

    pub fn l(&self) -> &DMatrix<f64> {
        &self.l
    }

    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn dim(&self) -> usize {
        self.l.nrows()
    }

    /// Solves `L x = b` in place.
    pub fn solve_lower_mut(&self, b: &mut DMatrix<f64>) {
        let n = self.dim();
        for c in 0..b.ncols() {
            for i in 0..n {
                let mut s = b[(i, c)];
                for k in 0..i {
                    s -= self.l[(i, k)] * b[(k, c)];
                }
                b[(i, c)] = s / self.l[(i, i)];
            }
        }
    }

    /// Solves `Lᵀ x = b` in place.
    pub fn solve_upper_mut(&self, b: &mut DMatrix<f64>) {
        let n = self.dim();
        for c in 0..b.ncols() {
            for i in (0..n).rev() {
                let mut s = b[(i, c)];
                for k in (i + 1)..n {
                    s -= self.l[(k, i)] * b[(k, c)];
                }
                b[(i, c)] = s / self.l[(i, i)];
            }
        }
    }

    /// `(A + jitter I)⁻¹ b` via two triangular solves.
    pub fn solve(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        assert_eq!(b.nrows(), self.dim(), "rhs row count mismatch");
        let mut x = b.clone();
        self.solve_lower_mut(&mut x);
        self.solve_upper_mut(&mut x);
        x
    }

    pub fn solve_vec(&self, b: &DVector<f64>) -> DVector<f64> {
        let m = DMatrix::from_column_slice(b.len(), 1, b.as_slice());
        DVector::from_column_slice(self.solve(&m).as_slice())
    }

    /// Solves `a x = b` for the matrix `a` this factor came from, using the
    /// (possibly jittered) factor as a preconditioner for up to `steps`
    /// rounds of refinement. Residuals are accumulated with [`dot2`] and the
    /// solution is kept as an unevaluated sum `hi + lo`. Stops as soon as the
    /// residual no longer shrinks. For singular but consistent systems the
    /// jitter bias decays geometrically.
    pub fn solve_refined(&self, a: &SymMatrix, b: &DVector<f64>, steps: usize) -> (DVector<f64>, DVector<f64>) {
        let n = self.dim();
        let m = a.as_matrix();
        let residual = |hi: &DVector<f64>, lo: &DVector<f64>| {
            DVector::from_fn(n, |i, _| {
                // A is symmetric, so column i doubles as row i
                let row = m.column(i);
                b[i] - dot2(row.as_slice(), hi.as_slice()) - row.dot(lo)
            })
        };
        let mut hi = self.solve_vec(b);
        let mut lo = DVector::zeros(n);
        let mut r = residual(&hi, &lo);
        let mut norm = r.amax();
        for _ in 0..steps {
            if norm == 0.0 {
                break;
            }
            let d = self.solve_vec(&r);
            let (mut h2, mut l2) = (hi.clone(), lo.clone());
            for i in 0..n {
                let (s, e) = two_sum(hi[i], lo[i] + d[i]);
                h2[i] = s;
                l2[i] = e;
            }
            let r2 = residual(&h2, &l2);
            let n2 = r2.amax();
            if !(n2 < norm) {
                break;
            }
            (hi, lo, r, norm) = (h2, l2, r2, n2);
        }
        (hi, lo)
    }

    pub fn whiten_vec(&self, b: &DVector<f64>) -> DVector<f64> {
        let mut m = DMatrix::from_column_slice(b.len(), 1, b.as_slice());
        self.solve_lower_mut(&mut m);
        DVector::from_column_slice(m.as_slice())
    }

    /// `L⁻¹ b`.
    pub fn whiten(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        let mut x = b.clone();
        self.solve_lower_mut(&mut x);
        x
    }

    /// `log det(A + jitter I) = 2 Σ log L_ii`.
    pub fn log_det(&self) -> f64 {
        2.0 * self.l.diagonal().iter().map(|d| d.ln()).sum::<f64>()
    }
}

/// `a + b` as `(s, e)` with `s = fl(a + b)` and `s + e = a + b` exactly.
pub fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

/// `a * b` as `(p, e)` with `p = fl(a * b)` and `p + e = a * b` exactly.
pub fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

/// Compensated dot product, as accurate as evaluating in twice the working
/// precision and rounding once.
pub fn dot2(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len(), "dot2 length mismatch");
    let (mut s, mut c) = (0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (p, ep) = two_prod(*a, *b);
        let (t, es) = two_sum(s, p);
        s = t;
        c += ep + es;
    }
    s + c
}

/// Cholesky factor of `a + jitter * I`, escalating the jitter on failure.
pub fn cholesky(a: &SymMatrix, jitter: f64) -> Result<DMatrix<f64>> {
    Cholesky::factor(a, jitter).map(|c| c.l)
}

/// Symmetric PSD square root `R` with `R R = C`.
pub fn sym_sqrt(c: &SymMatrix) -> Result<SymMatrix> {
    let eig = SymmetricEigen::new(c.as_matrix().clone());
    let trace = c.trace().abs();
    let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    if min < -1e-8 * trace || !min.is_finite() {
        return Err(LinalgError::NotPositiveSemiDefinite {
            min_eigenvalue: min,
        });
    }
    let sqrt_vals = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
    let v = &eig.eigenvectors;
    let r = v * DMatrix::from_diagonal(&sqrt_vals) * v.transpose();
    Ok(SymMatrix::symmetrized(r))
}

/// Kronecker product: block `(i, j)` of the result is `a[(i, j)] * b`.
pub fn kronecker(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let (p, q) = a.shape();
    let (r, s) = b.shape();
    let mut out = DMatrix::zeros(p * r, q * s);
    for i in 0..p {
        for j in 0..q {
            let aij = a[(i, j)];
            if aij == 0.0 {
                continue;
            }
            let mut block = out.view_mut((i * r, j * s), (r, s));
            block.zip_apply(b, |o, bv| *o = aij * bv);
        }
    }
    out
}

/// Distribution of the unobserved coordinates given the observed ones.
///
/// The result is indexed by the unobserved coordinates in increasing order.
pub fn gaussian_condition(
    joint: &GaussianParams,
    observed_idx: &[usize],
    observed_vals: &DVector<f64>,
) -> Result<GaussianParams> {
    let n = joint.dim();
    if observed_idx.len() != observed_vals.len() {
        return Err(LinalgError::DimensionMismatch {
            expected: observed_idx.len(),
            got: observed_vals.len(),
        });
    }
    let mut is_observed = vec![false; n];
    for &i in observed_idx {
        if i >= n {
            return Err(LinalgError::InvalidIndexSet(format!("index {i} out of range")));
        }
        if is_observed[i] {
            return Err(LinalgError::InvalidIndexSet(format!("index {i} repeated")));
        }
        is_observed[i] = true;
    }
    let free: Vec<usize> = (0..n).filter(|&i| !is_observed[i]).collect();
    if free.is_empty() {
        return Err(LinalgError::InvalidIndexSet(
            "observed set must be a strict subset".into(),
        ));
    }
    let cov = joint.cov.as_matrix();
    if observed_idx.is_empty() {
        return Ok(joint.clone());
    }

    let s_aa = DMatrix::from_fn(observed_idx.len(), observed_idx.len(), |r, c| {
        cov[(observed_idx[r], observed_idx[c])]
    });
    let s_ab = DMatrix::from_fn(observed_idx.len(), free.len(), |r, c| {
        cov[(observed_idx[r], free[c])]
    });
    let s_bb = DMatrix::from_fn(free.len(), free.len(), |r, c| cov[(free[r], free[c])]);
    let resid = DMatrix::from_fn(observed_idx.len(), 1, |r, _| {
        observed_vals[r] - joint.mean[observed_idx[r]]
    });

    let chol = Cholesky::factor_exact(&SymMatrix::symmetrized(s_aa))
        .map_err(|_| LinalgError::SingularObservedBlock)?;
    let w = chol.solve(&resid);
    let mean_b = DVector::from_fn(free.len(), |r, _| joint.mean[free[r]])
        + DVector::from_column_slice((s_ab.transpose() * w).as_slice());
    let v = chol.whiten(&s_ab);
    let cov_b = SymMatrix::symmetrized(s_bb - v.transpose() * v);
    GaussianParams::new(mean_b, cov_b)
}

/// Largest eigenvalue via a full symmetric eigendecomposition.
pub fn max_eigenvalue(a: &SymMatrix) -> f64 {
    SymmetricEigen::new(a.as_matrix().clone())
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_psd(n: usize, seed: u64) -> SymMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        SymMatrix::symmetrized(m.transpose() * &m)
    }

    fn rel_frob(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
        (a - b).norm() / b.norm().max(f64::MIN_POSITIVE)
    }

    #[test]
    fn cholesky_identity() {
        let l = cholesky(&SymMatrix::identity(3), 0.0).unwrap();
        assert_eq!(l, DMatrix::identity(3, 3));
    }

    #[test]
    fn cholesky_two_by_two_by_hand() {
        let a = SymMatrix::new(dmatrix![4.0, 2.0; 2.0, 3.0]).unwrap();
        let l = cholesky(&a, 0.0).unwrap();
        let expected = dmatrix![2.0, 0.0; 1.0, 2f64.sqrt()];
        assert!((l - expected).norm() < 1e-15);
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let a = SymMatrix::new(dmatrix![1.0, 2.0; 2.0, 1.0]).unwrap();
        assert!(matches!(
            cholesky(&a, 0.0),
            Err(LinalgError::NotPositiveDefinite { .. })
        ));
    }

    #[test]
    fn cholesky_escalates_on_singular() {
        let a = SymMatrix::new(dmatrix![1.0, 1.0; 1.0, 1.0]).unwrap();
        let c = Cholesky::factor(&a, 0.0).unwrap();
        assert!(c.jitter() > 0.0);
        let rec = c.l() * c.l().transpose();
        let target = a.as_matrix() + DMatrix::identity(2, 2) * c.jitter();
        assert!(rel_frob(&rec, &target) < 1e-8);
    }

    #[test]
    fn cholesky_reconstructs_with_jitter() {
        let a = random_psd(8, 3);
        let c = Cholesky::factor(&a, 0.5).unwrap();
        assert_eq!(c.jitter(), 0.5);
        let target = a.as_matrix() + DMatrix::identity(8, 8) * 0.5;
        assert!(rel_frob(&(c.l() * c.l().transpose()), &target) < 1e-12);
    }

    #[test]
    fn solve_and_logdet() {
        let a = random_psd(6, 9);
        let a = SymMatrix::symmetrized(a.as_matrix() + DMatrix::identity(6, 6));
        let c = Cholesky::factor(&a, 0.0).unwrap();
        let b = DMatrix::from_fn(6, 2, |i, j| (i + 2 * j) as f64);
        let x = c.solve(&b);
        assert!((a.as_matrix() * &x - &b).norm() < 1e-10);
        let det = a.as_matrix().clone().lu().determinant();
        assert!((c.log_det() - det.ln()).abs() < 1e-10);
    }

    #[test]
    fn sym_sqrt_cases() {
        assert!((sym_sqrt(&SymMatrix::identity(4)).unwrap().into_inner()
            - DMatrix::identity(4, 4))
        .norm()
            < 1e-14);
        let r = sym_sqrt(&SymMatrix::from_diagonal(&[4.0, 9.0])).unwrap();
        assert!((r.into_inner() - dmatrix![2.0, 0.0; 0.0, 3.0]).norm() < 1e-14);
        let a = random_psd(5, 1);
        let r = sym_sqrt(&a).unwrap();
        let rr = r.as_matrix() * r.as_matrix();
        assert!(rel_frob(&rr, a.as_matrix()) < 1e-8);
        assert!(r.min_eigenvalue() >= -1e-12);
    }

    #[test]
    fn sym_sqrt_rejects_indefinite() {
        let a = SymMatrix::new(dmatrix![1.0, 2.0; 2.0, 1.0]).unwrap();
        assert!(matches!(
            sym_sqrt(&a),
            Err(LinalgError::NotPositiveSemiDefinite { .. })
        ));
    }

    #[test]
    fn kronecker_cases() {
        let b = dmatrix![1.0, 2.0; 3.0, 4.0];
        let k = kronecker(&DMatrix::identity(2, 2), &b);
        let expected = dmatrix![
            1.0, 2.0, 0.0, 0.0;
            3.0, 4.0, 0.0, 0.0;
            0.0, 0.0, 1.0, 2.0;
            0.0, 0.0, 3.0, 4.0
        ];
        assert_eq!(k, expected);

        let a = dmatrix![1.0, 2.0; 3.0, 4.0];
        let swap = dmatrix![0.0, 1.0; 1.0, 0.0];
        let expected = dmatrix![
            0.0, 1.0, 0.0, 2.0;
            1.0, 0.0, 2.0, 0.0;
            0.0, 3.0, 0.0, 4.0;
            3.0, 0.0, 4.0, 0.0
        ];
        assert_eq!(kronecker(&a, &swap), expected);

        let s = DMatrix::from_element(1, 1, 2.5);
        assert_eq!(kronecker(&a, &s), &a * 2.5);
        let r = dmatrix![1.0, 2.0, 3.0];
        assert_eq!(kronecker(&r, &DMatrix::identity(2, 2)).shape(), (2, 6));
    }

    #[test]
    fn condition_independent() {
        let joint = GaussianParams::new(DVector::zeros(3), SymMatrix::identity(3)).unwrap();
        let out = gaussian_condition(&joint, &[1], &DVector::from_element(1, 0.7)).unwrap();
        assert_eq!(out.mean, DVector::zeros(2));
        assert!((out.cov.into_inner() - DMatrix::identity(2, 2)).norm() < 1e-15);
    }

    #[test]
    fn condition_bivariate() {
        let rho = 0.5;
        let joint = GaussianParams::new(
            DVector::zeros(2),
            SymMatrix::new(dmatrix![1.0, rho; rho, 1.0]).unwrap(),
        )
        .unwrap();
        let out = gaussian_condition(&joint, &[0], &DVector::from_element(1, 1.0)).unwrap();
        assert!((out.mean[0] - 0.5).abs() < 1e-15);
        assert!((out.cov[(0, 0)] - 0.75).abs() < 1e-15);
    }

    #[test]
    fn condition_errors() {
        let joint = GaussianParams::new(
            DVector::zeros(3),
            SymMatrix::new(dmatrix![1.0, 1.0, 0.0; 1.0, 1.0, 0.0; 0.0, 0.0, 1.0]).unwrap(),
        )
        .unwrap();
        let obs = DVector::from_vec(vec![0.0, 0.0]);
        assert_eq!(
            gaussian_condition(&joint, &[0, 1], &obs),
            Err(LinalgError::SingularObservedBlock)
        );
        let all = DVector::zeros(3);
        assert!(matches!(
            gaussian_condition(&joint, &[0, 1, 2], &all),
            Err(LinalgError::InvalidIndexSet(_))
        ));
    }

    #[test]
    fn max_eigenvalue_cases() {
        assert_eq!(max_eigenvalue(&SymMatrix::from_diagonal(&[1.0, 5.0, 3.0])), 5.0);
        assert!((max_eigenvalue(&SymMatrix::identity(4).scaled(2.5)) - 2.5).abs() < 1e-15);
    }

    #[test]
    fn sym_matrix_rejects_asymmetric() {
        assert!(matches!(
            SymMatrix::new(dmatrix![1.0, 2.0; 2.1, 1.0]),
            Err(LinalgError::NotSymmetric { .. })
        ));
    }

    #[test]
    fn dot2_survives_cancellation() {
        let x = [1e16, 1.0, -1e16];
        let y = [1.0, 1.0, 1.0];
        assert_eq!(x.iter().zip(&y).map(|(a, b)| a * b).sum::<f64>(), 0.0);
        assert_eq!(dot2(&x, &y), 1.0);
        let (s, e) = two_sum(1.0, 1e-17);
        assert_eq!((s, e), (1.0, 1e-17));
        let (p, e) = two_prod(1.0 + f64::EPSILON, 1.0 - f64::EPSILON);
        assert_eq!(p, 1.0);
        assert_eq!(e, -f64::EPSILON * f64::EPSILON);
    }

    #[test]
    fn refined_solve_recovers_a_unit_vector_on_hilbert() {
        let n = 10;
        let h = SymMatrix::new(DMatrix::from_fn(n, n, |i, j| 1.0 / (i + j + 1) as f64)).unwrap();
        // the stored first column is exactly H e₁, so e₁ is the exact solution
        let b = h.as_matrix().column(0).into_owned();
        let chol = Cholesky::factor(&h, 0.0).unwrap();
        let plain = chol.solve_vec(&b);
        let (hi, lo) = chol.solve_refined(&h, &b, 6);
        let err = |x: &DVector<f64>| (x - DVector::from_fn(n, |i, _| if i == 0 { 1.0 } else { 0.0 })).amax();
        assert!(err(&(&hi + &lo)) < 1e-9, "refined error {:e}", err(&(&hi + &lo)));
        let resid = |x: &DVector<f64>, y: &DVector<f64>| {
            (0..n)
                .map(|i| (b[i] - dot2(h.as_matrix().column(i).as_slice(), x.as_slice()) - h.as_matrix().column(i).dot(y)).abs())
                .fold(0.0, f64::max)
        };
        assert!(resid(&hi, &lo) <= resid(&plain, &DVector::zeros(n)));
    }
}
