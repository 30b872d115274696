//! Solution measures from canonical extensions, verification against
//! prescribed moments, and a Stieltjes–Perron cross-check.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::extensions::{
    canonical_extension, extremal_extensions, CanonicalParameter, ExtensionInterval,
    ResolventEvaluator,
};
use crate::linalg::{check_psd, hermitian_eig, loewner_leq, CMat, HermMatrix, PSD_TOL};
use crate::moments::{moments_of, Atom, DiscreteMatrixMeasure, MomentSequence};
use crate::operator::{build_gram_space, build_operators};
use crate::solvability::{check_even, check_l0, check_odd, ProblemCase};

/// Eigenvalues closer than this are one atom.
pub const CLUSTER_TOL: f64 = 1e-9;
/// Atoms within this fraction of `b - a` outside `[a, b]` are clamped.
pub const CLAMP_TOL: f64 = 1e-9;
/// Tolerance of the verification each solver runs before returning.
pub const SOLVE_VERIFY_TOL: f64 = 1e-8;

/// Spectral decomposition of an extension, seen through `x_0..x_{N-1}`:
/// `weights[i][j][n] = ⟨Π_i x_j, x_n⟩` for the eigenprojection `Π_i` of
/// `eigenvalues[i]`.
#[derive(Debug, Clone)]
pub struct SpectralData {
    pub eigenvalues: Vec<f64>,
    pub weights: Vec<HermMatrix>,
}

impl SpectralData {
    pub fn total(&self) -> HermMatrix {
        let n = self.weights.first().map_or(0, HermMatrix::dim);
        let mut t = CMat::zeros(n, n);
        for w in &self.weights {
            t += w.as_matrix();
        }
        HermMatrix::hermitize(t)
    }
}

/// Clustered spectral data of the self-adjoint extension `ext` (block
/// coordinates of `interval`).
pub fn spectral_data(interval: &ExtensionInterval, ext: &HermMatrix) -> SpectralData {
    let probes = interval.model().probe_vectors();
    let eig = hermitian_eig(ext);
    let mut eigenvalues = Vec::new();
    let mut weights = Vec::new();
    let mut start = 0;
    while start < eig.dim() {
        let mut end = start + 1;
        while end < eig.dim() && eig.eigenvalues[end] - eig.eigenvalues[end - 1] <= CLUSTER_TOL {
            end += 1;
        }
        let vecs = eig.eigenvectors.columns(start, end - start);
        // Y = V_c* X̂, W = conj(Y* Y)
        let y = vecs.adjoint() * &probes;
        let w = (y.adjoint() * &y).map(|z| z.conj());
        let lam = eig.eigenvalues[start..end].iter().sum::<f64>() / (end - start) as f64;
        eigenvalues.push(lam);
        weights.push(HermMatrix::hermitize(w));
        start = end;
    }
    SpectralData {
        eigenvalues,
        weights,
    }
}

fn to_interval(lam: f64, a: f64, b: f64) -> f64 {
    let x = 0.5 * (b - a) * lam + 0.5 * (a + b);
    let slack = CLAMP_TOL * (b - a);
    if x < a && x >= a - slack {
        a
    } else if x > b && x <= b + slack {
        b
    } else {
        x
    }
}

/// The matrix measure `m_{j,n}(x) = (E_{(2x - a - b)/(b - a)} x_j, x_n)`
/// induced by the extension `ext`.
pub fn measure_from_extension(
    interval: &ExtensionInterval,
    ext: &HermMatrix,
) -> Result<DiscreteMatrixMeasure> {
    let gram = interval.model().gram();
    let (a, b) = gram.interval();
    let spec = spectral_data(interval, ext);
    let atoms = spec
        .eigenvalues
        .iter()
        .zip(spec.weights)
        .map(|(&lam, weight)| Atom {
            x: to_interval(lam, a, b),
            weight,
        })
        .collect();
    DiscreteMatrixMeasure::new(a, b, gram.block_size(), atoms)
}

/// Extension interval of a solvable `l = 2d` problem.
pub fn odd_interval(seq: &MomentSequence) -> Result<ExtensionInterval> {
    let report = check_odd(seq)?;
    if !report.solvable {
        return Err(Error::Unsolvable {
            failed: report.failed_conditions,
        });
    }
    let gram = build_gram_space(seq)?;
    let model = build_operators(&gram)?;
    extremal_extensions(&model)
}

/// Solution of an `l = 2d` problem for the canonical extension `B_K`.
pub fn solve_odd(seq: &MomentSequence, k: &CanonicalParameter) -> Result<DiscreteMatrixMeasure> {
    let interval = odd_interval(seq)?;
    let ext = canonical_extension(&interval, k)?;
    let measure = measure_from_extension(&interval, &ext)?;
    ensure_verified(&measure, seq)?;
    Ok(measure)
}

fn ensure_verified(measure: &DiscreteMatrixMeasure, seq: &MomentSequence) -> Result<()> {
    let report = verify(measure, seq, SOLVE_VERIFY_TOL)?;
    if report.passed {
        Ok(())
    } else {
        Err(Error::Internal(format!(
            "constructed measure fails verification: worst moment deviation {:e}, support ok {}, weights PSD {}",
            report.worst_ratio(),
            report.support_ok,
            report.weights_psd
        )))
    }
}

/// `S_{2d+2} = S_min + Δ^{1/2} T Δ^{1/2}`, `Δ = S_max - S_min`.
pub fn select_next_moment(seq: &MomentSequence, t: &CanonicalParameter) -> Result<HermMatrix> {
    let report = check_even(seq)?;
    let data = report.even_case_data.ok_or_else(|| Error::Unsolvable {
        failed: report.failed_conditions.clone(),
    })?;
    let t = t.resolve(seq.block_size())?;
    let delta = data.s_max.sub(&data.s_min)?;
    // rounding can leave S_max - S_min slightly indefinite when the interval
    // degenerates to a point; its PSD part is what is meant
    let root = hermitian_eig(&delta).apply_fn(|lam| lam.max(0.0).sqrt());
    data
        .s_min
        .add(&t.congruence(root.as_matrix()))
}

/// Solution of an `l = 2d + 1` problem: pick `S_{2d+2}` by `T`, then solve
/// the extended `l = 2d + 2` problem with `K`.
pub fn solve_even(
    seq: &MomentSequence,
    t: &CanonicalParameter,
    k: &CanonicalParameter,
) -> Result<DiscreteMatrixMeasure> {
    let next = select_next_moment(seq, t)?;
    let measure = solve_odd(&seq.appended(next)?, k)?;
    ensure_verified(&measure, seq)?;
    Ok(measure)
}

/// Like [`solve_even`] with an explicit `S_{2d+2}`, which must lie in
/// `[S_min, S_max]`.
pub fn solve_even_with_moment(
    seq: &MomentSequence,
    next: HermMatrix,
    k: &CanonicalParameter,
) -> Result<DiscreteMatrixMeasure> {
    let report = check_even(seq)?;
    let data = report.even_case_data.ok_or_else(|| Error::Unsolvable {
        failed: report.failed_conditions.clone(),
    })?;
    if !(loewner_leq(&data.s_min, &next, PSD_TOL)? && loewner_leq(&next, &data.s_max, PSD_TOL)?) {
        return Err(Error::InvalidParameter(
            "S_{2d+2} outside [S_min, S_max]".into(),
        ));
    }
    let measure = solve_odd(&seq.appended(next)?, k)?;
    ensure_verified(&measure, seq)?;
    Ok(measure)
}

/// `l = 0`: a single atom of mass `S_0` at the midpoint.
///
/// The absolutely continuous solution `M(x) = (x - a)/(b - a) S_0` has the
/// same (only) moment but is not atomic.
pub fn solve_l0(s0: &HermMatrix, a: f64, b: f64) -> Result<DiscreteMatrixMeasure> {
    let report = check_l0(s0);
    if !report.solvable {
        return Err(Error::Unsolvable {
            failed: report.failed_conditions,
        });
    }
    DiscreteMatrixMeasure::new(
        a,
        b,
        s0.dim(),
        vec![Atom {
            x: 0.5 * (a + b),
            weight: s0.clone(),
        }],
    )
}

/// Dispatches on `l`. `t` is only used for `l = 2d + 1`, `k` for `l ≥ 1`.
pub fn solve(
    seq: &MomentSequence,
    k: &CanonicalParameter,
    t: &CanonicalParameter,
) -> Result<DiscreteMatrixMeasure> {
    match ProblemCase::of(seq) {
        ProblemCase::L0 => solve_l0(seq.moment(0), seq.a(), seq.b()),
        ProblemCase::Odd => solve_odd(seq, k),
        ProblemCase::Even => solve_even(seq, t, k),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentResidual {
    pub n: usize,
    /// Largest entrywise `|(Σ x_i^n W_i - S_n)_{jk}|`.
    pub max_deviation: f64,
    /// `tol · max(1, ‖S_n‖)`.
    pub allowed: f64,
}

impl MomentResidual {
    pub fn passed(&self) -> bool {
        self.max_deviation <= self.allowed
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerificationReport {
    pub residuals: Vec<MomentResidual>,
    pub support_ok: bool,
    pub weights_psd: bool,
    pub passed: bool,
}

impl VerificationReport {
    pub fn max_deviation(&self) -> f64 {
        self.residuals
            .iter()
            .map(|r| r.max_deviation)
            .fold(0.0, f64::max)
    }

    /// Largest `max_deviation / allowed` over all moments.
    pub fn worst_ratio(&self) -> f64 {
        self.residuals
            .iter()
            .map(|r| r.max_deviation / r.allowed.max(f64::MIN_POSITIVE))
            .fold(0.0, f64::max)
    }
}

/// Recomputes the moments of `measure` and compares them with `seq`.
pub fn verify(
    measure: &DiscreteMatrixMeasure,
    seq: &MomentSequence,
    tol: f64,
) -> Result<VerificationReport> {
    if measure.block_size() != seq.block_size() {
        return Err(Error::DimensionMismatch {
            expected: seq.block_size(),
            found: measure.block_size(),
        });
    }
    let got = moments_of(measure, seq.l());
    let residuals: Vec<MomentResidual> = (0..=seq.l())
        .map(|n| {
            let diff = got.moment(n).as_matrix() - seq.moment(n).as_matrix();
            MomentResidual {
                n,
                max_deviation: diff.iter().fold(0.0, |m, z| m.max(z.norm())),
                allowed: tol * seq.moment(n).norm().max(1.0),
            }
        })
        .collect();
    let support_ok = measure
        .atoms()
        .iter()
        .all(|at| at.x >= seq.a() && at.x <= seq.b());
    let weights_psd = measure
        .atoms()
        .iter()
        .all(|at| check_psd(&at.weight, PSD_TOL));
    let passed = support_ok && weights_psd && residuals.iter().all(MomentResidual::passed);
    Ok(VerificationReport {
        residuals,
        support_ok,
        weights_psd,
        passed,
    })
}

/// Grid for [`stieltjes_perron_recover`]: `z = t + iε` with `t` on cells of
/// width `step` covering `[-1 - margin, 1 + margin]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerronGrid {
    pub epsilon: f64,
    pub step: f64,
    pub margin: f64,
}

impl PerronGrid {
    pub fn new(epsilon: f64, step: f64) -> Self {
        Self {
            epsilon,
            step,
            margin: 0.5,
        }
    }
}

/// Approximate spectral measure (λ-coordinates, interval `[-1, 1]`) and the
/// total mass seen on the grid.
#[derive(Debug, Clone)]
pub struct PerronRecovery {
    pub measure: DiscreteMatrixMeasure,
    pub total_mass: HermMatrix,
    pub grid: PerronGrid,
}

// 5-point Gauss–Legendre on [-1, 1]; the middle node is the cell centre.
const GL_NODES: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683_1,
    0.0,
    0.538_469_310_105_683_1,
    0.906_179_845_938_664,
];
const GL_WEIGHTS: [f64; 5] = [
    0.236_926_885_056_189_1,
    0.478_628_670_499_366_5,
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_5,
    0.236_926_885_056_189_1,
];

/// Recovers `d(E_λ x_j, x_n)` from the canonical resolvent by
/// Stieltjes–Perron inversion: the density `(1/π) Im ⟨R̃_{t+iε} x_j, x_n⟩` is
/// integrated over each grid cell, peaks of its trace become atoms, and every
/// cell's mass goes to the nearest peak.
///
/// Peak positions are refined by a parabola through `1/trace density` at
/// three neighbouring cell centres, which is exact for an isolated atom.
pub fn stieltjes_perron_recover(
    interval: &ExtensionInterval,
    k: &CanonicalParameter,
    grid: PerronGrid,
) -> Result<PerronRecovery> {
    if !(grid.epsilon > 0.0 && grid.step > 0.0 && grid.margin > 0.0) {
        return Err(Error::InvalidParameter(
            "epsilon, step and margin must be positive".into(),
        ));
    }
    let eval = ResolventEvaluator::new(interval, k)?;
    let probes = interval.model().probe_vectors();
    let n = probes.ncols();
    let lo = -1.0 - grid.margin;
    let cells = ((2.0 + 2.0 * grid.margin) / grid.step).ceil() as usize;
    let h = grid.step;

    let density = |t: f64| -> Result<CMat> {
        let r = eval.evaluate(Complex64::new(t, grid.epsilon))?;
        // G[j][n] = ⟨R̃ x_j, x_n⟩ = (X̂* R̃ X̂)^T
        let g = (probes.adjoint() * r * &probes).transpose();
        let im = (&g - g.adjoint()) * Complex64::new(0.0, -0.5 / std::f64::consts::PI);
        Ok(im)
    };

    let mut centres = Vec::with_capacity(cells);
    let mut centre_trace = Vec::with_capacity(cells);
    let mut masses = Vec::with_capacity(cells);
    for c in 0..cells {
        let mid = lo + (c as f64 + 0.5) * h;
        let mut mass = CMat::zeros(n, n);
        let mut at_mid = 0.0;
        for (node, w) in GL_NODES.iter().zip(GL_WEIGHTS) {
            let dens = density(mid + 0.5 * h * node)?;
            if *node == 0.0 {
                at_mid = dens.trace().re;
            }
            mass += dens * Complex64::from(0.5 * h * w);
        }
        centres.push(mid);
        centre_trace.push(at_mid);
        masses.push(mass);
    }

    let top = centre_trace.iter().copied().fold(0.0, f64::max);
    let mut peaks = Vec::new();
    for c in 0..cells {
        let v = centre_trace[c];
        let left = if c > 0 { centre_trace[c - 1] } else { f64::NEG_INFINITY };
        let right = if c + 1 < cells { centre_trace[c + 1] } else { f64::NEG_INFINITY };
        if v > 0.0 && v >= left && v > right && v >= 1e-6 * top {
            let mut pos = centres[c];
            if c > 0 && c + 1 < cells {
                let (ym, y0, yp) = (1.0 / left, 1.0 / v, 1.0 / right);
                let curv = ym - 2.0 * y0 + yp;
                if curv > 0.0 {
                    let shift = 0.5 * h * (ym - yp) / curv;
                    if shift.abs() <= h {
                        pos += shift;
                    }
                }
            }
            peaks.push(pos);
        }
    }

    let mut weights = vec![CMat::zeros(n, n); peaks.len()];
    let mut total = CMat::zeros(n, n);
    for (mid, mass) in centres.iter().zip(&masses) {
        total += mass;
        if let Some((idx, _)) = peaks
            .iter()
            .enumerate()
            .map(|(i, p)| (i, (p - mid).abs()))
            .min_by(|x, y| x.1.total_cmp(&y.1))
        {
            weights[idx] += mass;
        }
    }
    let atoms = peaks
        .into_iter()
        .zip(weights)
        .map(|(x, w)| Atom {
            x,
            weight: HermMatrix::hermitize(w),
        })
        .collect();
    Ok(PerronRecovery {
        measure: DiscreteMatrixMeasure::new(-1.0, 1.0, n, atoms)?,
        total_mass: HermMatrix::hermitize(total),
        grid,
    })
}
