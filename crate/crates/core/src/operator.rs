//! Gram-space realization of `Γ_d` and the shift / contraction operators on it.
//!
//! Vectors live in `C^r` with `⟨u, v⟩ = Σ u_i conj(v_i)`, `r = rank Γ_d`.
//! Column `n` of [`GramSpace::vectors`] is `x_n`, so that `⟨x_n, x_m⟩ = γ_{n,m}`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{
    complement_basis, hermitian_eig, op_norm, psd_from_eig, rank_cutoff, CMat, HermMatrix,
    PSD_TOL, RANK_TOL,
};
use crate::moments::{build_gamma, MomentSequence};

/// Allowed `‖G_s (I - G_a^† G_a)‖ / max(1, ‖G_s‖)`.
///
/// Kernel vectors `z` of `Γ_{d-1}` only satisfy `‖G_s z‖² = z* Γ̂ z`, so the
/// square root of the kernel tolerance of the solvability test is the
/// matching bound here.
pub const WELL_DEFINED_TOL: f64 = 1e-4;

#[derive(Debug, Clone)]
pub struct GramSpace {
    d: usize,
    block: usize,
    a: f64,
    b: f64,
    /// `r x (d+1)N`, column `n` is `x_n`.
    vectors: CMat,
}

impl GramSpace {
    pub fn rank(&self) -> usize {
        self.vectors.nrows()
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn block_size(&self) -> usize {
        self.block
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.a, self.b)
    }

    pub fn vectors(&self) -> &CMat {
        &self.vectors
    }

    pub fn vector(&self, n: usize) -> CMat {
        self.vectors.columns(n, 1).into_owned()
    }

    /// `(⟨x_n, x_m⟩)_{n,m}`.
    pub fn gram_matrix(&self) -> HermMatrix {
        HermMatrix::hermitize(self.vectors.transpose() * self.vectors.map(|z| z.conj()))
    }

    fn columns(&self, start: usize, count: usize) -> CMat {
        self.vectors.columns(start, count).into_owned()
    }
}

/// Factor `Γ_d` (for `l = 2d`, `d ≥ 1`) as a Gram matrix of `(d+1)N` vectors
/// spanning `C^r`.
pub fn build_gram_space(seq: &MomentSequence) -> Result<GramSpace> {
    let l = seq.l();
    if l == 0 || !l.is_multiple_of(2) {
        return Err(Error::WrongParity(format!(
            "Gram space needs l = 2d with d >= 1, got l = {l}"
        )));
    }
    let d = l / 2;
    let gamma = build_gamma(seq, d)?.matrix;
    gram_factor(&gamma).map(|vectors| GramSpace {
        d,
        block: seq.block_size(),
        a: seq.a(),
        b: seq.b(),
        vectors,
    })
}

/// `X = Λ_+^{1/2} V_+^T` from `Γ = V Λ V*`, so that `X^T conj(X) = Γ` up to
/// the dropped eigenvalues.
pub(crate) fn gram_factor(gamma: &HermMatrix) -> Result<CMat> {
    let eig = hermitian_eig(gamma);
    if !psd_from_eig(&eig, PSD_TOL) {
        return Err(Error::NotPsd {
            what: "Gamma_d".into(),
            min_eigenvalue: eig.min_eigenvalue().unwrap_or(0.0),
        });
    }
    let cutoff = rank_cutoff(&eig, RANK_TOL);
    let (vals, cols) = eig.select_columns(|lam| lam > cutoff && lam > 0.0);
    let dim = gamma.dim();
    Ok(CMat::from_fn(vals.len(), dim, |k, n| {
        cols[(n, k)] * vals[k].sqrt()
    }))
}

/// The Hermitian contraction `B = (2/(b-a)) A - ((a+b)/(b-a)) I` on
/// `D = span{x_0..x_{dN-1}}`, written in orthonormal bases of `D` and of
/// `R = H ⊖ D`.
///
/// In the block basis `[D R]` every self-adjoint extension has the form
/// `[[P, Q*], [Q, X]]`.
#[derive(Debug, Clone)]
pub struct ContractionModel {
    gram: GramSpace,
    domain: CMat,
    defect: CMat,
    p: HermMatrix,
    q: CMat,
    /// `A` on `D`, as the image `A D` (`r x p`).
    shift_on_domain: CMat,
    residual: f64,
}

impl ContractionModel {
    pub fn gram(&self) -> &GramSpace {
        &self.gram
    }

    /// Orthonormal basis of `D`, `r x p`.
    pub fn domain_basis(&self) -> &CMat {
        &self.domain
    }

    /// Orthonormal basis of `R`, `r x q`.
    pub fn defect_basis(&self) -> &CMat {
        &self.defect
    }

    pub fn p(&self) -> &HermMatrix {
        &self.p
    }

    pub fn q(&self) -> &CMat {
        &self.q
    }

    pub fn domain_dim(&self) -> usize {
        self.domain.ncols()
    }

    pub fn defect_dim(&self) -> usize {
        self.defect.ncols()
    }

    /// `R = {0}`: `B` is already self-adjoint on all of `H`.
    pub fn no_defect(&self) -> bool {
        self.defect.ncols() == 0
    }

    /// Relative well-definedness residual of `A`.
    pub fn well_definedness_residual(&self) -> f64 {
        self.residual
    }

    /// `[D R]`, unitary `r x r`.
    pub fn block_basis(&self) -> CMat {
        let r = self.gram.rank();
        let mut u = CMat::zeros(r, r);
        u.columns_mut(0, self.domain_dim()).copy_from(&self.domain);
        u.columns_mut(self.domain_dim(), self.defect_dim())
            .copy_from(&self.defect);
        u
    }

    /// The block column `[P; Q]`.
    pub fn column(&self) -> CMat {
        let (p, q) = (self.domain_dim(), self.defect_dim());
        let mut col = CMat::zeros(p + q, p);
        col.rows_mut(0, p).copy_from(self.p.as_matrix());
        col.rows_mut(p, q).copy_from(&self.q);
        col
    }

    /// `‖[P; Q]‖`.
    pub fn column_norm(&self) -> f64 {
        op_norm(&self.column())
    }

    /// `x_0..x_{N-1}` in the block basis, `r x N`.
    pub fn probe_vectors(&self) -> CMat {
        let n = self.gram.block;
        self.block_basis().adjoint() * self.gram.columns(0, n)
    }

    /// `A` as an `r x r` matrix on `H`, zero on `R`.
    pub fn shift_operator(&self) -> CMat {
        &self.shift_on_domain * self.domain.adjoint()
    }

    /// `B` on `D` followed by the orthogonal projection onto `D`, as an
    /// `r x r` matrix on `H`, zero on `R`.
    pub fn contraction_on_domain(&self) -> CMat {
        let (a, b) = self.gram.interval();
        let bd = &self.shift_on_domain * Complex64::from(2.0 / (b - a))
            - &self.domain * Complex64::from((a + b) / (b - a));
        bd * self.domain.adjoint()
    }
}

/// Builds `A` and `B` from the Gram vectors.
pub fn build_operators(gram: &GramSpace) -> Result<ContractionModel> {
    let n = gram.block;
    let d = gram.d;
    let r = gram.rank();
    let g_a = gram.columns(0, d * n);
    let g_s = gram.columns(n, d * n);

    let inner = HermMatrix::hermitize(g_a.adjoint() * &g_a);
    let eig = hermitian_eig(&inner);
    let cutoff = rank_cutoff(&eig, RANK_TOL);
    let (vals, v_plus) = eig.select_columns(|lam| lam > cutoff && lam > 0.0);
    let (_, v_zero) = eig.select_columns(|lam| !(lam > cutoff && lam > 0.0));

    let residual = if v_zero.ncols() == 0 {
        0.0
    } else {
        op_norm(&(&g_s * &v_zero)) / op_norm(&g_s).max(1.0)
    };
    if residual > WELL_DEFINED_TOL {
        return Err(Error::IllDefinedOperator {
            residual,
            tol: WELL_DEFINED_TOL,
        });
    }

    // D = G_a V_+ Λ^{-1/2}, re-orthonormalized by (D* D)^{-1/2}
    let mut scale = v_plus.clone();
    for (k, &lam) in vals.iter().enumerate() {
        let s = 1.0 / lam.sqrt();
        for i in 0..scale.nrows() {
            scale[(i, k)] *= s;
        }
    }
    let raw = &g_a * &scale;
    let fix = inverse_sqrt(&HermMatrix::hermitize(raw.adjoint() * &raw));
    let scale = scale * fix.as_matrix();
    let domain = &g_a * &scale;
    let shift_on_domain = &g_s * &scale;
    let defect = if domain.ncols() == r {
        CMat::zeros(r, 0)
    } else {
        complement_basis(&domain)
    };
    if domain.ncols() + defect.ncols() != r {
        return Err(Error::Internal(format!(
            "domain ({}) and complement ({}) do not span the Gram space ({r})",
            domain.ncols(),
            defect.ncols()
        )));
    }

    let (a, b) = (gram.a, gram.b);
    let bd = &shift_on_domain * Complex64::from(2.0 / (b - a))
        - &domain * Complex64::from((a + b) / (b - a));
    let p = HermMatrix::hermitize(domain.adjoint() * &bd);
    let q = defect.adjoint() * &bd;

    Ok(ContractionModel {
        gram: gram.clone(),
        domain,
        defect,
        p,
        q,
        shift_on_domain,
        residual,
    })
}

fn inverse_sqrt(m: &HermMatrix) -> HermMatrix {
    hermitian_eig(m).apply_fn(|lam| if lam > 0.0 { 1.0 / lam.sqrt() } else { 0.0 })
}
