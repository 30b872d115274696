//! Self-adjoint contraction extensions of the Hermitian contraction `B`.
//!
//! All operators here are `r x r` matrices in the block basis `[D R]` of a
//! [`ContractionModel`]. The extensions of `[P; Q]` that stay contractions
//! are exactly `[[P, Q*], [Q, X]]` with `X_μ ⪯ X ⪯ X_M`, where
//!
//! ```text
//! X_μ = Q (I + P)^† Q* - I,      X_M = I - Q (I - P)^† Q*.
//! ```
//!
//! Writing `C = B^M - B^μ`, the whole segment is `B^μ + C^{1/2} K C^{1/2}`
//! for `0 ⪯ K ⪯ I` on the range of `C`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{
    hermitian_eig, inverse_checked, loewner_leq, op_norm, pinv_psd, CMat, EigDecomposition,
    HermMatrix, PSD_TOL, RANK_TOL,
};
use crate::operator::ContractionModel;

/// `‖C‖` at or below this is the determinate case.
pub const DETERMINATE_TOL: f64 = 1e-10;
/// Extremal extensions with norm above `1 + NORM_SLACK` signal upstream failure.
pub const NORM_SLACK: f64 = 1e-8;
/// Minimal distance between `z` and the spectrum of `B^μ`.
pub const RESOLVENT_MARGIN: f64 = 1e-8;
/// Largest condition number accepted for the middle factor of the resolvent formula.
pub const MAX_MIDDLE_CONDITION: f64 = 1e12;

/// A constant parameter `0 ⪯ K ⪯ I`: either `t·I` of whatever dimension is
/// required, or an explicit matrix.
///
/// Also used for the matrix parameter `T` selecting `S_{2d+2}` in the even case.
#[derive(Debug, Clone, PartialEq)]
pub enum CanonicalParameter {
    Scaled(f64),
    Matrix(HermMatrix),
}

impl CanonicalParameter {
    pub fn zero() -> Self {
        Self::Scaled(0.0)
    }

    pub fn identity() -> Self {
        Self::Scaled(1.0)
    }

    pub fn half() -> Self {
        Self::Scaled(0.5)
    }

    /// The parameter as a `dim x dim` matrix, checked to lie in `[0, I]`.
    pub fn resolve(&self, dim: usize) -> Result<HermMatrix> {
        match self {
            Self::Scaled(t) => {
                if !(0.0..=1.0).contains(t) {
                    return Err(Error::InvalidParameter(format!(
                        "scalar parameter {t} outside [0, 1]"
                    )));
                }
                Ok(HermMatrix::identity(dim).scale(*t))
            }
            Self::Matrix(k) => {
                if k.dim() != dim {
                    return Err(Error::InvalidParameter(format!(
                        "parameter is {}x{}, expected {dim}x{dim}",
                        k.dim(),
                        k.dim()
                    )));
                }
                let low = loewner_leq(&HermMatrix::zeros(dim), k, PSD_TOL)?;
                let high = loewner_leq(k, &HermMatrix::identity(dim), PSD_TOL)?;
                if !(low && high) {
                    return Err(Error::InvalidParameter(
                        "parameter matrix is not between 0 and I".into(),
                    ));
                }
                Ok(k.clone())
            }
        }
    }
}

/// The operator segment `[B^μ, B^M]` of canonical contractive extensions.
#[derive(Debug, Clone)]
pub struct ExtensionInterval {
    model: ContractionModel,
    b_mu: HermMatrix,
    b_max: HermMatrix,
    c: HermMatrix,
    c_sqrt: HermMatrix,
    /// Orthonormal basis (block coordinates) of the range of `C`.
    support: CMat,
    determinate: bool,
    r0_dim: usize,
    b_mu_eig: EigDecomposition,
}

impl ExtensionInterval {
    pub fn model(&self) -> &ContractionModel {
        &self.model
    }

    pub fn b_mu(&self) -> &HermMatrix {
        &self.b_mu
    }

    pub fn b_max(&self) -> &HermMatrix {
        &self.b_max
    }

    pub fn defect_operator(&self) -> &HermMatrix {
        &self.c
    }

    pub fn defect_sqrt(&self) -> &HermMatrix {
        &self.c_sqrt
    }

    pub fn determinate(&self) -> bool {
        self.determinate
    }

    /// `dim R_0`, the part of `R` where `B^μ` and `B^M` agree.
    pub fn r0_dim(&self) -> usize {
        self.r0_dim
    }

    /// Dimension of the space the parameter `K` acts on.
    pub fn support_dim(&self) -> usize {
        self.support.ncols()
    }

    pub fn support_basis(&self) -> &CMat {
        &self.support
    }

    /// Lower-right blocks `X_μ` and `X_M`.
    pub fn defect_blocks(&self) -> (HermMatrix, HermMatrix) {
        let p = self.model.domain_dim();
        let q = self.model.defect_dim();
        let lo = self.b_mu.as_matrix().view((p, p), (q, q)).into_owned();
        let hi = self.b_max.as_matrix().view((p, p), (q, q)).into_owned();
        (HermMatrix::hermitize(lo), HermMatrix::hermitize(hi))
    }

    /// `C^{1/2}` restricted to the support, `r x m`.
    fn sqrt_on_support(&self) -> CMat {
        self.c_sqrt.as_matrix() * &self.support
    }

    fn check_z(&self, z: Complex64) -> Result<()> {
        if !z.re.is_finite() || !z.im.is_finite() {
            return Err(Error::SingularResolvent(format!("z = {z} is not finite")));
        }
        if z.im == 0.0 && z.re.abs() <= 1.0 {
            return Err(Error::SingularResolvent(format!("z = {z} lies in [-1, 1]")));
        }
        let dist = self
            .b_mu_eig
            .eigenvalues
            .iter()
            .map(|&lam| (z - lam).norm())
            .fold(f64::INFINITY, f64::min);
        if dist < RESOLVENT_MARGIN {
            return Err(Error::SingularResolvent(format!(
                "z = {z} within {dist:e} of the spectrum of B^mu"
            )));
        }
        Ok(())
    }

    /// `(B^μ - z)^{-1}` from the cached eigendecomposition.
    fn resolvent_mu(&self, z: Complex64) -> CMat {
        let eig = &self.b_mu_eig;
        let v = &eig.eigenvectors;
        let mut scaled = v.clone();
        for (j, &lam) in eig.eigenvalues.iter().enumerate() {
            let f = Complex64::new(1.0, 0.0) / (Complex64::from(lam) - z);
            for i in 0..v.nrows() {
                scaled[(i, j)] *= f;
            }
        }
        scaled * v.adjoint()
    }
}

/// The smallest and largest `X` for which `[[P, Q*], [Q, X]]` is a
/// contraction, given a contractive column `[P; Q]`:
/// `X_μ = Q (I + P)^† Q* - I`, `X_M = I - Q (I - P)^† Q*`.
pub fn extremal_completions(p: &HermMatrix, q: &CMat) -> Result<(HermMatrix, HermMatrix)> {
    if q.ncols() != p.dim() {
        return Err(Error::DimensionMismatch {
            expected: p.dim(),
            found: q.ncols(),
        });
    }
    let id_p = HermMatrix::identity(p.dim());
    let plus = pinv_psd(&id_p.add(p)?, RANK_TOL).map_err(internal("I + P"))?;
    let minus = pinv_psd(&id_p.sub(p)?, RANK_TOL).map_err(internal("I - P"))?;
    let id_q = CMat::identity(q.nrows(), q.nrows());
    let x_mu = q * plus.as_matrix() * q.adjoint() - &id_q;
    let x_max = &id_q - q * minus.as_matrix() * q.adjoint();
    Ok((HermMatrix::hermitize(x_mu), HermMatrix::hermitize(x_max)))
}

/// Extremal extensions by the Schur-complement completion formulas.
pub fn extremal_extensions(model: &ContractionModel) -> Result<ExtensionInterval> {
    let p_dim = model.domain_dim();
    let q_dim = model.defect_dim();
    let r = p_dim + q_dim;
    let p = model.p();
    let q = model.q();

    let column_norm = model.column_norm();
    if column_norm > 1.0 + NORM_SLACK {
        return Err(Error::Internal(format!(
            "B is not a contraction: ‖[P; Q]‖ = {column_norm}"
        )));
    }

    let (x_mu, x_max) = extremal_completions(p, q)?;
    let (x_mu, x_max) = (x_mu.into_matrix(), x_max.into_matrix());

    let assemble = |x: &CMat| {
        let mut m = CMat::zeros(r, r);
        m.view_mut((0, 0), (p_dim, p_dim)).copy_from(p.as_matrix());
        m.view_mut((p_dim, 0), (q_dim, p_dim)).copy_from(q);
        m.view_mut((0, p_dim), (p_dim, q_dim)).copy_from(&q.adjoint());
        m.view_mut((p_dim, p_dim), (q_dim, q_dim)).copy_from(x);
        HermMatrix::hermitize(m)
    };
    let b_mu = assemble(&x_mu);
    let b_max = assemble(&x_max);
    for (name, m) in [("B^mu", &b_mu), ("B^M", &b_max)] {
        let nrm = m.norm();
        if nrm > 1.0 + NORM_SLACK {
            return Err(Error::Internal(format!("{name} has norm {nrm}, not a contraction")));
        }
    }

    let c = HermMatrix::hermitize(b_max.as_matrix() - b_mu.as_matrix());
    let delta = HermMatrix::hermitize(x_max - x_mu);
    let delta_eig = hermitian_eig(&delta);
    let top = delta_eig.max_abs_eigenvalue();
    // both blocks are contractions, so NORM_SLACK bounds their rounding error
    if delta_eig.min_eigenvalue().unwrap_or(0.0) < -NORM_SLACK {
        return Err(Error::Internal("X_M - X_mu is not PSD".into()));
    }
    let determinate = top <= DETERMINATE_TOL;
    let cutoff = (RANK_TOL * top).max(DETERMINATE_TOL);
    let (sigma, support_r) = if determinate {
        (Vec::new(), CMat::zeros(q_dim, 0))
    } else {
        delta_eig.select_columns(|lam| lam > cutoff)
    };
    // lift the support basis from R-coordinates to block coordinates
    let mut support = CMat::zeros(r, support_r.ncols());
    support.rows_mut(p_dim, q_dim).copy_from(&support_r);
    let mut c_sqrt = CMat::zeros(r, r);
    for (k, &s) in sigma.iter().enumerate() {
        let col = support.column(k);
        c_sqrt += col * col.adjoint() * Complex64::from(s.sqrt());
    }

    let b_mu_eig = hermitian_eig(&b_mu);
    Ok(ExtensionInterval {
        model: model.clone(),
        r0_dim: q_dim - support.ncols(),
        b_mu,
        b_max,
        c,
        c_sqrt: HermMatrix::hermitize(c_sqrt),
        support,
        determinate,
        b_mu_eig,
    })
}

fn internal(what: &'static str) -> impl Fn(Error) -> Error {
    move |e| Error::Internal(format!("{what}: {e}"))
}

/// `B_K = B^μ + C^{1/2} K C^{1/2}` with `K` acting on the range of `C`.
pub fn canonical_extension(
    interval: &ExtensionInterval,
    k: &CanonicalParameter,
) -> Result<HermMatrix> {
    let k = k.resolve(interval.support_dim())?;
    let f = interval.sqrt_on_support();
    let b = interval.b_mu.as_matrix() + &f * k.as_matrix() * f.adjoint();
    Ok(HermMatrix::hermitize(b))
}

/// `Q_μ(z) = I + C^{1/2} (B^μ - z)^{-1} C^{1/2}` compressed to the range of `C`.
pub fn qmu(interval: &ExtensionInterval, z: Complex64) -> Result<CMat> {
    interval.check_z(z)?;
    Ok(qmu_unchecked(interval, &interval.resolvent_mu(z)))
}

fn qmu_unchecked(interval: &ExtensionInterval, r_mu: &CMat) -> CMat {
    let f = interval.sqrt_on_support();
    let m = f.ncols();
    CMat::identity(m, m) + f.adjoint() * r_mu * &f
}

/// Evaluates the canonical resolvent for a fixed `K` at many points.
#[derive(Debug, Clone)]
pub struct ResolventEvaluator<'a> {
    interval: &'a ExtensionInterval,
    k: HermMatrix,
}

impl<'a> ResolventEvaluator<'a> {
    pub fn new(interval: &'a ExtensionInterval, k: &CanonicalParameter) -> Result<Self> {
        Ok(Self {
            interval,
            k: k.resolve(interval.support_dim())?,
        })
    }

    /// `R̃_z = R^μ_z - R^μ_z C^{1/2} K (I + (Q_μ(z) - I) K)^{-1} C^{1/2} R^μ_z`.
    pub fn evaluate(&self, z: Complex64) -> Result<CMat> {
        self.interval.check_z(z)?;
        let r_mu = self.interval.resolvent_mu(z);
        let m = self.k.dim();
        if m == 0 {
            return Ok(r_mu);
        }
        let qm = qmu_unchecked(self.interval, &r_mu);
        let id = CMat::identity(m, m);
        let middle = &id + (qm - &id) * self.k.as_matrix();
        let inv = inverse_checked(&middle, MAX_MIDDLE_CONDITION).ok_or_else(|| {
            Error::Internal(format!("middle factor of the resolvent formula is singular at z = {z}"))
        })?;
        let f = self.interval.sqrt_on_support();
        let left = &r_mu * &f;
        let right = f.adjoint() * &r_mu;
        Ok(&r_mu - left * self.k.as_matrix() * inv * right)
    }
}

/// One evaluation of the canonical resolvent formula.
pub fn generalized_resolvent(
    interval: &ExtensionInterval,
    k: &CanonicalParameter,
    z: Complex64,
) -> Result<CMat> {
    ResolventEvaluator::new(interval, k)?.evaluate(z)
}

/// `z I + R̃_z^{-1}`: the operator whose resolvent `R̃_z` is.
pub fn extension_from_resolvent(resolvent: &CMat, z: Complex64) -> Result<CMat> {
    let n = resolvent.nrows();
    let inv = inverse_checked(resolvent, MAX_MIDDLE_CONDITION)
        .ok_or_else(|| Error::SingularResolvent("resolvent is not invertible".into()))?;
    Ok(inv + CMat::identity(n, n) * z)
}

/// Largest absolute deviation of the first block column of `ext` from `[P; Q]`.
pub fn extension_column_error(model: &ContractionModel, ext: &CMat) -> f64 {
    let p = model.domain_dim();
    let col = ext.columns(0, p).into_owned();
    op_norm(&(col - model.column()))
}
