//! Solvability criteria for the truncated matricial moment problem.
//!
//! Three regimes are distinguished by the index `l` of the last moment:
//! `l = 0`, `l = 2d` (odd number of moments) and `l = 2d + 1` (even number).
//! Every report also carries the verdict of the plain block-Hankel
//! positivity test ([`check_cdfk`]) so disagreements can be flagged.

use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{
    hermitian_eig, op_norm, psd_from_eig, rank_cutoff, CMat, HermMatrix,
    PSD_TOL, RANK_TOL,
};
use crate::moments::{
    build_gamma, build_gamma_hat, build_gamma_tilde, build_h_pair, MomentSequence,
};

/// `‖Γ̂_{d-1} Z‖ ≤ KERNEL_TOL · max(1, ‖Γ̂_{d-1}‖)` for the kernel basis `Z` of `Γ_{d-1}`.
pub const KERNEL_TOL: f64 = 1e-8;
/// Relative residual allowed when deciding that `Γ X = rhs` is consistent.
pub const CONSISTENCY_TOL: f64 = 1e-8;

/// Minimal `S_min ⪯ S_max` tolerance relative to `max(1, ‖S_min‖, ‖S_max‖)`.
/// Both endpoints go through pseudo-inverses of Hankel matrices, so the
/// band actually used is widened to `ε · (cond Γ + cond Γ̃)` when larger.
pub const INTERVAL_TOL: f64 = 1e-8;

pub const COND_GAMMA: &str = "Gamma PSD";
pub const COND_GAMMA_TILDE: &str = "GammaTilde PSD";
pub const COND_KERNEL: &str = "Kernel inclusion";
pub const COND_X_SYSTEM: &str = "X-system consistent";
pub const COND_Y_SYSTEM: &str = "Y-system consistent";
pub const COND_INTERVAL: &str = "S-interval nonempty";
pub const COND_S0: &str = "S0 PSD";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProblemCase {
    /// Only `S_0` given.
    L0,
    /// `l = 2d`, `d ≥ 1`.
    Odd,
    /// `l = 2d + 1`, `d ≥ 0`.
    Even,
}

impl ProblemCase {
    pub fn of(seq: &MomentSequence) -> Self {
        match seq.l() {
            0 => ProblemCase::L0,
            l if l % 2 == 0 => ProblemCase::Odd,
            _ => ProblemCase::Even,
        }
    }
}

impl fmt::Display for ProblemCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ProblemCase::L0 => "l0",
            ProblemCase::Odd => "odd",
            ProblemCase::Even => "even",
        })
    }
}

/// Outcome of one named condition, with the number it was decided on.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionCheck {
    pub name: &'static str,
    pub passed: bool,
    /// Human-readable label of `value`, e.g. `"Γ̃_1 min-eig"`.
    pub label: String,
    pub value: f64,
}

/// Data of the `l = 2d + 1` criterion: minimal-norm solutions of the two
/// linear systems and the admissible interval `[S_min, S_max]` for `S_{2d+2}`.
#[derive(Debug, Clone, PartialEq)]
pub struct EvenCaseData {
    pub x: CMat,
    pub y: CMat,
    pub s_min: HermMatrix,
    pub s_max: HermMatrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolvabilityReport {
    pub solvable: bool,
    pub case: ProblemCase,
    pub conditions: Vec<ConditionCheck>,
    pub failed_conditions: Vec<String>,
    pub even_case_data: Option<EvenCaseData>,
    /// Verdict of the block-Hankel positivity criterion; `None` for `l = 0`.
    pub cdfk_solvable: Option<bool>,
    pub criteria_agreement: bool,
}

impl SolvabilityReport {
    fn from_conditions(
        case: ProblemCase,
        conditions: Vec<ConditionCheck>,
        even_case_data: Option<EvenCaseData>,
        cdfk_solvable: Option<bool>,
    ) -> Self {
        let failed_conditions: Vec<String> = conditions
            .iter()
            .filter(|c| !c.passed)
            .map(|c| c.name.to_string())
            .collect();
        let solvable = failed_conditions.is_empty();
        Self {
            solvable,
            case,
            criteria_agreement: cdfk_solvable.is_none_or(|v| v == solvable),
            conditions,
            failed_conditions,
            even_case_data: if solvable { even_case_data } else { None },
            cdfk_solvable,
        }
    }

    pub fn condition(&self, name: &str) -> Option<&ConditionCheck> {
        self.conditions.iter().find(|c| c.name == name)
    }
}

fn psd_condition(name: &'static str, label: String, m: &HermMatrix) -> ConditionCheck {
    let eig = hermitian_eig(m);
    ConditionCheck {
        name,
        passed: psd_from_eig(&eig, PSD_TOL),
        label,
        value: eig.min_eigenvalue().unwrap_or(0.0),
    }
}

/// Dispatches on `l`.
pub fn check(seq: &MomentSequence) -> Result<SolvabilityReport> {
    match ProblemCase::of(seq) {
        ProblemCase::L0 => Ok(check_l0(seq.moment(0))),
        ProblemCase::Odd => check_odd(seq),
        ProblemCase::Even => check_even(seq),
    }
}

/// Criterion for `l = 2d`: `Γ_d ⪰ 0`, `Γ̃_d ⪰ 0` and `Ker Γ_{d-1} ⊆ Ker Γ̂_{d-1}`.
pub fn check_odd(seq: &MomentSequence) -> Result<SolvabilityReport> {
    let l = seq.l();
    if l == 0 || !l.is_multiple_of(2) {
        return Err(Error::WrongParity(format!(
            "check_odd needs l = 2d with d >= 1, got l = {l}"
        )));
    }
    let d = l / 2;
    let gamma = build_gamma(seq, d)?;
    let gamma_tilde = build_gamma_tilde(seq, d)?;
    let mut conditions = vec![
        psd_condition(COND_GAMMA, format!("Γ_{d} min-eig"), &gamma.matrix),
        psd_condition(COND_GAMMA_TILDE, format!("Γ̃_{d} min-eig"), &gamma_tilde.matrix),
    ];
    let residual = kernel_inclusion_residual(seq, d)?;
    conditions.push(ConditionCheck {
        name: COND_KERNEL,
        passed: residual <= KERNEL_TOL,
        label: format!("‖Γ̂_{} Z‖ rel", d - 1),
        value: residual,
    });
    let cdfk = conditions[0].passed && conditions[1].passed;
    Ok(SolvabilityReport::from_conditions(
        ProblemCase::Odd,
        conditions,
        None,
        Some(cdfk),
    ))
}

/// `‖Γ̂_{d-1} Z‖ / max(1, ‖Γ̂_{d-1}‖)` with `Z` the eigenvectors of `Γ_{d-1}`
/// whose eigenvalue is below the shared rank cutoff.
pub(crate) fn kernel_inclusion_residual(seq: &MomentSequence, d: usize) -> Result<f64> {
    let prev = build_gamma(seq, d - 1)?;
    let hat = build_gamma_hat(seq, d)?;
    let eig = hermitian_eig(&prev.matrix);
    let cutoff = rank_cutoff(&eig, RANK_TOL);
    let (_, kernel) = eig.select_columns(|lam| lam.abs() <= cutoff);
    if kernel.ncols() == 0 {
        return Ok(0.0);
    }
    let image = hat.matrix.as_matrix() * kernel;
    Ok(op_norm(&image) / hat.matrix.norm().max(1.0))
}

/// Criterion for `l = 2d + 1`.
///
/// On success `even_case_data` holds `X = Γ_d^† rhs_X`, `Y = Γ̃_d^† rhs_Y`
/// and the interval `[X* Γ_d X, -ab S_{2d} + (a+b) S_{2d+1} - Y* Γ̃_d Y]`.
pub fn check_even(seq: &MomentSequence) -> Result<SolvabilityReport> {
    let l = seq.l();
    if l % 2 != 1 {
        return Err(Error::WrongParity(format!(
            "check_even needs l = 2d + 1, got l = {l}"
        )));
    }
    let d = (l - 1) / 2;
    let n = seq.block_size();
    let gamma = build_gamma(seq, d)?.matrix;
    let gamma_tilde = build_gamma_tilde(seq, d)?.matrix;
    let cdfk = check_cdfk(seq)?;

    let mut conditions = vec![
        psd_condition(COND_GAMMA, format!("Γ_{d} min-eig"), &gamma),
        psd_condition(COND_GAMMA_TILDE, format!("Γ̃_{d} min-eig"), &gamma_tilde),
    ];
    if !(conditions[0].passed && conditions[1].passed) {
        return Ok(SolvabilityReport::from_conditions(
            ProblemCase::Even,
            conditions,
            None,
            Some(cdfk),
        ));
    }

    let rhs_x = stack_blocks((d + 1..=2 * d + 1).map(|k| seq.moment(k).as_matrix().clone()), n);
    let rhs_y = stack_blocks((0..d).map(|i| seq.localized(d + i)), n);
    let (x, res_x, cond_x) = least_squares_psd(&gamma, &rhs_x)?;
    let (y, res_y, cond_y) = least_squares_psd(&gamma_tilde, &rhs_y)?;
    conditions.push(ConditionCheck {
        name: COND_X_SYSTEM,
        passed: res_x <= CONSISTENCY_TOL,
        label: "rhs outside range(Γ) rel".into(),
        value: res_x,
    });
    conditions.push(ConditionCheck {
        name: COND_Y_SYSTEM,
        passed: res_y <= CONSISTENCY_TOL,
        label: "rhs outside range(Γ̃) rel".into(),
        value: res_y,
    });

    let s_min = gamma.congruence(&x);
    let (a, b) = (seq.a(), seq.b());
    let top = seq.moment(2 * d).as_matrix() * Complex64::from(-a * b)
        + seq.moment(2 * d + 1).as_matrix() * Complex64::from(a + b);
    let s_max = HermMatrix::hermitize(top - gamma_tilde.congruence(&y).into_matrix());
    // The gap is zero in the determinate case, so its own norm is no scale
    // for rounding noise; the endpoints are.
    let gap = hermitian_eig(&s_max.sub(&s_min)?);
    let scale = s_min.norm().max(s_max.norm()).max(1.0);
    conditions.push(ConditionCheck {
        name: COND_INTERVAL,
        passed: gap.min_eigenvalue().unwrap_or(0.0) >= -interval_band(cond_x, cond_y) * scale,
        label: "S_max - S_min min-eig".into(),
        value: gap.min_eigenvalue().unwrap_or(0.0),
    });

    Ok(SolvabilityReport::from_conditions(
        ProblemCase::Even,
        conditions,
        Some(EvenCaseData { x, y, s_min, s_max }),
        Some(cdfk),
    ))
}

fn stack_blocks(blocks: impl Iterator<Item = CMat>, n: usize) -> CMat {
    let blocks: Vec<CMat> = blocks.collect();
    let mut out = CMat::zeros(blocks.len() * n, n);
    for (i, blk) in blocks.iter().enumerate() {
        out.view_mut((i * n, 0), (n, n)).copy_from(blk);
    }
    out
}

/// Minimal-norm solution `G^† rhs` and its relative residual `‖G X - rhs‖ / ‖rhs‖`.
/// Relative tolerance of the `S_min ⪯ S_max` test given the conditioning
/// (on their numerical ranges) of the two Hankel matrices.
pub fn interval_band(cond_gamma: f64, cond_gamma_tilde: f64) -> f64 {
    INTERVAL_TOL.max(f64::EPSILON * (cond_gamma + cond_gamma_tilde))
}

/// Minimal-norm solution of `g x = rhs`, the relative size of the part of
/// `rhs` outside the range of `g`, and the condition number of `g` on its
/// numerical range.
fn least_squares_psd(g: &HermMatrix, rhs: &CMat) -> Result<(CMat, f64, f64)> {
    if g.dim() == 0 {
        return Ok((CMat::zeros(0, rhs.ncols()), 0.0, 1.0));
    }
    let eig = hermitian_eig(g);
    if !psd_from_eig(&eig, PSD_TOL) {
        return Err(Error::NotPsd {
            what: "least-squares matrix".into(),
            min_eigenvalue: eig.min_eigenvalue().unwrap_or(0.0),
        });
    }
    let cutoff = rank_cutoff(&eig, RANK_TOL);
    let x = eig.apply_fn(|lam| if lam > cutoff { 1.0 / lam } else { 0.0 }).as_matrix() * rhs;
    // Consistency is judged by the part of `rhs` outside the numerical range
    // of `g`; `‖g x - rhs‖` would carry cond(g)·ε of rounding noise.
    let (_, range) = eig.select_columns(|lam| lam > cutoff);
    let outside = rhs - &range * (range.adjoint() * rhs);
    let scale = rhs.norm();
    let rel = if scale > 0.0 { outside.norm() / scale } else { 0.0 };
    let top = eig.max_abs_eigenvalue();
    let cond = eig
        .eigenvalues
        .iter()
        .find(|&&lam| lam > cutoff)
        .map_or(1.0, |&lam| top / lam);
    Ok((x, rel, cond))
}

/// `l = 0`: solvable iff `S_0 ⪰ 0`.
pub fn check_l0(s0: &HermMatrix) -> SolvabilityReport {
    let cond = psd_condition(COND_S0, "S_0 min-eig".into(), s0);
    SolvabilityReport::from_conditions(ProblemCase::L0, vec![cond], None, None)
}

/// Block-Hankel positivity: `Γ_d, Γ̃_d ⪰ 0` for `l = 2d`, `H_d, H̃_d ⪰ 0`
/// for `l = 2d + 1`.
pub fn check_cdfk(seq: &MomentSequence) -> Result<bool> {
    let l = seq.l();
    if l == 0 {
        return Err(Error::Validation("check_cdfk needs l >= 1".into()));
    }
    let d = l / 2;
    let pair = if l.is_multiple_of(2) {
        (build_gamma(seq, d)?.matrix, build_gamma_tilde(seq, d)?.matrix)
    } else {
        let (h, ht) = build_h_pair(seq, d)?;
        (h.matrix, ht.matrix)
    };
    Ok(crate::linalg::check_psd(&pair.0, PSD_TOL) && crate::linalg::check_psd(&pair.1, PSD_TOL))
}
