//! Dense Hermitian linear algebra over `Complex64`.
//!
//! Everything here is a pure function on small dense matrices (dimension in
//! the tens). The eigensolver is a cyclic complex Jacobi method: it is slow
//! for large matrices but deterministic and keeps small eigenvalues of
//! ill-conditioned Hankel matrices accurate, which the rank decisions of the
//! rest of the crate depend on.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Dense complex matrix, column-major storage.
pub type CMat = DMatrix<Complex64>;

/// Default slack for positive-semidefiniteness tests, relative to `max(1, ‖A‖)`.
pub const PSD_TOL: f64 = 1e-10;
/// Default rank cutoff, relative to the largest eigenvalue.
pub const RANK_TOL: f64 = 1e-10;
/// Hermiticity tolerance relative to the largest absolute entry.
pub const HERMITIAN_TOL: f64 = 1e-12;

const MAX_JACOBI_SWEEPS: usize = 100;

/// A square Hermitian matrix.
///
/// The constructor checks Hermiticity within [`HERMITIAN_TOL`] and then
/// replaces the matrix by its exact Hermitian part, so downstream code can
/// rely on `A == A*` bit for bit.
#[derive(Debug, Clone, PartialEq)]
pub struct HermMatrix(CMat);

impl HermMatrix {
    pub fn new(m: CMat) -> Result<Self> {
        Self::with_tolerance(m, HERMITIAN_TOL)
    }

    /// Like [`HermMatrix::new`] with a custom Hermiticity tolerance
    /// (relative to the largest absolute entry).
    pub fn with_tolerance(m: CMat, tol: f64) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::Validation(format!(
                "matrix is {}x{}, expected square",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Validation("matrix has non-finite entries".into()));
        }
        let scale = max_abs(&m);
        let n = m.nrows();
        for j in 0..n {
            for i in 0..=j {
                let dev = (m[(i, j)] - m[(j, i)].conj()).norm();
                if dev > tol * scale {
                    return Err(Error::Validation(format!(
                        "matrix is not Hermitian: |a[{i}][{j}] - conj(a[{j}][{i}])| = {dev:e}"
                    )));
                }
            }
        }
        Ok(Self::hermitize(m))
    }

    /// Wraps the Hermitian part `(m + m*)/2` without checking how far `m` was
    /// from Hermitian. For results of operations that are Hermitian in exact
    /// arithmetic.
    pub(crate) fn hermitize(m: CMat) -> Self {
        let h = (&m + m.adjoint()).scale(0.5);
        Self(h)
    }

    /// Builds from row-major rows of `(re, im)` pairs.
    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::Validation("ragged or non-square matrix rows".into()));
        }
        Self::new(CMat::from_fn(n, n, |i, j| rows[i][j]))
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::Validation("ragged or non-square matrix rows".into()));
        }
        Self::new(CMat::from_fn(n, n, |i, j| Complex64::new(rows[i][j], 0.0)))
    }

    pub fn from_real_diag(diag: &[f64]) -> Self {
        let n = diag.len();
        Self(CMat::from_fn(n, n, |i, j| {
            if i == j {
                Complex64::new(diag[i], 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        }))
    }

    pub fn identity(n: usize) -> Self {
        Self(CMat::identity(n, n))
    }

    pub fn zeros(n: usize) -> Self {
        Self(CMat::zeros(n, n))
    }

    pub fn scalar(x: f64) -> Self {
        Self::from_real_diag(&[x])
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &CMat {
        &self.0
    }

    pub fn into_matrix(self) -> CMat {
        self.0
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.0[(i, j)]
    }

    pub fn add(&self, other: &HermMatrix) -> Result<HermMatrix> {
        check_same_dim(self, other)?;
        Ok(Self(&self.0 + &other.0))
    }

    pub fn sub(&self, other: &HermMatrix) -> Result<HermMatrix> {
        check_same_dim(self, other)?;
        Ok(Self(&self.0 - &other.0))
    }

    pub fn scale(&self, s: f64) -> HermMatrix {
        Self(self.0.map(|z| z * s))
    }

    /// `T* A T` for an arbitrary (possibly rectangular) `T`.
    pub fn congruence(&self, t: &CMat) -> HermMatrix {
        Self::hermitize(t.adjoint() * &self.0 * t)
    }

    /// Spectral norm (largest absolute eigenvalue).
    pub fn norm(&self) -> f64 {
        if self.dim() == 0 {
            return 0.0;
        }
        hermitian_eig(self)
            .eigenvalues
            .iter()
            .fold(0.0_f64, |m, &v| m.max(v.abs()))
    }

    pub fn max_abs(&self) -> f64 {
        max_abs(&self.0)
    }
}

fn check_same_dim(a: &HermMatrix, b: &HermMatrix) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    Ok(())
}

pub(crate) fn max_abs(m: &CMat) -> f64 {
    m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

/// Spectral norm of an arbitrary complex matrix.
pub fn op_norm(m: &CMat) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    let gram = HermMatrix::hermitize(m.adjoint() * m);
    let top = hermitian_eig(&gram).eigenvalues.last().copied().unwrap_or(0.0);
    top.max(0.0).sqrt()
}

/// Eigenpairs of a Hermitian matrix, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct EigDecomposition {
    pub eigenvalues: Vec<f64>,
    /// Orthonormal eigenvectors as columns, in the order of `eigenvalues`.
    pub eigenvectors: CMat,
}

impl EigDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn max_abs_eigenvalue(&self) -> f64 {
        self.eigenvalues.iter().fold(0.0_f64, |m, &v| m.max(v.abs()))
    }

    pub fn min_eigenvalue(&self) -> Option<f64> {
        self.eigenvalues.first().copied()
    }

    /// `V f(Λ) V*`.
    pub fn apply_fn(&self, f: impl Fn(f64) -> f64) -> HermMatrix {
        let n = self.dim();
        let mut scaled = self.eigenvectors.clone();
        for (j, &lam) in self.eigenvalues.iter().enumerate() {
            let fl = f(lam);
            for i in 0..n {
                scaled[(i, j)] *= fl;
            }
        }
        HermMatrix::hermitize(scaled * self.eigenvectors.adjoint())
    }

    /// Columns whose eigenvalue satisfies `keep`, as a `dim x k` matrix.
    pub fn select_columns(&self, keep: impl Fn(f64) -> bool) -> (Vec<f64>, CMat) {
        let idx: Vec<usize> = (0..self.dim())
            .filter(|&j| keep(self.eigenvalues[j]))
            .collect();
        let vals = idx.iter().map(|&j| self.eigenvalues[j]).collect();
        let cols = CMat::from_fn(self.dim(), idx.len(), |i, k| self.eigenvectors[(i, idx[k])]);
        (vals, cols)
    }
}

/// Eigendecomposition by cyclic complex Jacobi rotations.
///
/// The input is already Hermitian by construction of [`HermMatrix`].
pub fn hermitian_eig(a: &HermMatrix) -> EigDecomposition {
    let n = a.dim();
    let mut m = a.as_matrix().clone();
    let mut v = CMat::identity(n, n);
    let frob = m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let stop = (f64::EPSILON * 1e-2 * frob).powi(2);

    for _ in 0..MAX_JACOBI_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|j| (0..j).map(move |i| (i, j)))
            .map(|(i, j)| 2.0 * m[(i, j)].norm_sqr())
            .sum();
        if off <= stop || off == 0.0 {
            break;
        }
        for q in 1..n {
            for p in 0..q {
                rotate(&mut m, &mut v, p, q);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<f64> = (0..n).map(|i| m[(i, i)].re).collect();
    order.sort_by(|&i, &j| diag[i].total_cmp(&diag[j]).then(i.cmp(&j)));
    let eigenvalues = order.iter().map(|&i| diag[i]).collect();
    let eigenvectors = CMat::from_fn(n, n, |i, k| v[(i, order[k])]);
    EigDecomposition {
        eigenvalues,
        eigenvectors,
    }
}

/// One Jacobi rotation zeroing `m[p][q]`, with `m <- J* m J`, `v <- v J`.
fn rotate(m: &mut CMat, v: &mut CMat, p: usize, q: usize) {
    let apq = m[(p, q)];
    let g = apq.norm();
    if g == 0.0 {
        return;
    }
    let app = m[(p, p)].re;
    let aqq = m[(q, q)].re;
    // already negligible relative to both diagonal entries
    if g <= f64::EPSILON * 1e-3 * (app.abs().min(aqq.abs())) {
        m[(p, q)] = Complex64::new(0.0, 0.0);
        m[(q, p)] = Complex64::new(0.0, 0.0);
        return;
    }
    let phase = apq / g;
    let tau = (aqq - app) / (2.0 * g);
    let t = if tau >= 0.0 {
        1.0 / (tau + (1.0 + tau * tau).sqrt())
    } else {
        -1.0 / (-tau + (1.0 + tau * tau).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;
    // J = [[phase*c, phase*s], [-s, c]] on coordinates (p, q)
    let j_pp = phase * c;
    let j_pq = phase * s;
    let j_qp = Complex64::new(-s, 0.0);
    let j_qq = Complex64::new(c, 0.0);
    let n = m.nrows();

    for i in 0..n {
        let mp = m[(i, p)];
        let mq = m[(i, q)];
        m[(i, p)] = mp * j_pp + mq * j_qp;
        m[(i, q)] = mp * j_pq + mq * j_qq;
        let vp = v[(i, p)];
        let vq = v[(i, q)];
        v[(i, p)] = vp * j_pp + vq * j_qp;
        v[(i, q)] = vp * j_pq + vq * j_qq;
    }
    for k in 0..n {
        let mp = m[(p, k)];
        let mq = m[(q, k)];
        m[(p, k)] = j_pp.conj() * mp + j_qp.conj() * mq;
        m[(q, k)] = j_pq.conj() * mp + j_qq.conj() * mq;
    }
    m[(p, q)] = Complex64::new(0.0, 0.0);
    m[(q, p)] = Complex64::new(0.0, 0.0);
    m[(p, p)] = Complex64::new(m[(p, p)].re, 0.0);
    m[(q, q)] = Complex64::new(m[(q, q)].re, 0.0);
}

/// True iff the smallest eigenvalue is at least `-tol * max(1, ‖A‖)`.
pub fn check_psd(a: &HermMatrix, tol: f64) -> bool {
    if a.dim() == 0 {
        return true;
    }
    let eig = hermitian_eig(a);
    psd_from_eig(&eig, tol)
}

pub(crate) fn psd_from_eig(eig: &EigDecomposition, tol: f64) -> bool {
    match eig.min_eigenvalue() {
        None => true,
        Some(min) => min >= -tol * eig.max_abs_eigenvalue().max(1.0),
    }
}

fn require_psd(eig: &EigDecomposition, what: &str) -> Result<()> {
    if psd_from_eig(eig, PSD_TOL) {
        Ok(())
    } else {
        Err(Error::NotPsd {
            what: what.to_string(),
            min_eigenvalue: eig.min_eigenvalue().unwrap_or(0.0),
        })
    }
}

/// Moore–Penrose pseudo-inverse of a PSD matrix, dropping eigenvalues at or
/// below `rank_tol * λ_max`.
pub fn pinv_psd(a: &HermMatrix, rank_tol: f64) -> Result<HermMatrix> {
    if a.dim() == 0 {
        return Ok(a.clone());
    }
    let eig = hermitian_eig(a);
    require_psd(&eig, "pinv_psd input")?;
    let cutoff = rank_cutoff(&eig, rank_tol);
    Ok(eig.apply_fn(|lam| if lam > cutoff { 1.0 / lam } else { 0.0 }))
}

/// Absolute eigenvalue cutoff `rank_tol * λ_max`; zero spectra get a cutoff
/// of zero so that nothing survives.
pub(crate) fn rank_cutoff(eig: &EigDecomposition, rank_tol: f64) -> f64 {
    let top = eig.eigenvalues.last().copied().unwrap_or(0.0).max(0.0);
    rank_tol * top
}

/// Principal square root of a PSD matrix.
pub fn sqrt_psd(a: &HermMatrix) -> Result<HermMatrix> {
    if a.dim() == 0 {
        return Ok(a.clone());
    }
    let eig = hermitian_eig(a);
    require_psd(&eig, "sqrt_psd input")?;
    Ok(eig.apply_fn(|lam| lam.max(0.0).sqrt()))
}

/// `A ⪯ B` in the Loewner order, i.e. `B - A` PSD within `tol`.
pub fn loewner_leq(a: &HermMatrix, b: &HermMatrix, tol: f64) -> Result<bool> {
    let diff = b.sub(a)?;
    Ok(check_psd(&diff, tol))
}

/// Orthonormal basis of the orthogonal complement of the span of the
/// orthonormal columns `basis` inside `C^dim`.
pub(crate) fn complement_basis(basis: &CMat) -> CMat {
    let n = basis.nrows();
    let proj = HermMatrix::hermitize(CMat::identity(n, n) - basis * basis.adjoint());
    let eig = hermitian_eig(&proj);
    let (_, cols) = eig.select_columns(|lam| lam > 0.5);
    cols
}

/// Inverse of a general square matrix via LU, with a condition check based
/// on the singular values.
pub(crate) fn inverse_checked(m: &CMat, max_condition: f64) -> Option<CMat> {
    let n = m.nrows();
    if n == 0 {
        return Some(CMat::zeros(0, 0));
    }
    let gram = hermitian_eig(&HermMatrix::hermitize(m.adjoint() * m));
    let smin = gram.eigenvalues[0].max(0.0).sqrt();
    let smax = gram.eigenvalues[n - 1].max(0.0).sqrt();
    if smin == 0.0 || smax / smin > max_condition {
        return None;
    }
    m.clone().lu().try_inverse()
}
