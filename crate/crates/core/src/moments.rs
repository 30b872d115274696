//! Moment sequences, atomic matrix measures and the block Hankel matrices
//! built from them.

use std::fmt;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{check_psd, CMat, HermMatrix, PSD_TOL};

/// Atoms whose weight norm is at most this fraction of the total mass are dropped.
pub const PRUNE_TOL: f64 = 1e-12;
/// Atoms closer than this fraction of `b - a` are merged.
pub const MERGE_TOL: f64 = 1e-12;

/// Hermitian moments `S_0..S_l` of an `N x N` matrix measure on `[a, b]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentSequence {
    a: f64,
    b: f64,
    block: usize,
    moments: Vec<HermMatrix>,
}

fn check_interval(a: f64, b: f64) -> Result<()> {
    if !(a.is_finite() && b.is_finite()) || a >= b {
        return Err(Error::Validation(format!(
            "interval [{a}, {b}] must be finite with a < b"
        )));
    }
    Ok(())
}

impl MomentSequence {
    pub fn new(a: f64, b: f64, moments: Vec<HermMatrix>) -> Result<Self> {
        check_interval(a, b)?;
        let first = moments
            .first()
            .ok_or_else(|| Error::Validation("moment list is empty".into()))?;
        let block = first.dim();
        if block == 0 {
            return Err(Error::Validation("block size must be positive".into()));
        }
        if let Some(bad) = moments.iter().find(|s| s.dim() != block) {
            return Err(Error::DimensionMismatch {
                expected: block,
                found: bad.dim(),
            });
        }
        Ok(Self {
            a,
            b,
            block,
            moments,
        })
    }

    /// Scalar (`N = 1`) real moments.
    pub fn scalar(a: f64, b: f64, moments: &[f64]) -> Result<Self> {
        Self::new(a, b, moments.iter().map(|&s| HermMatrix::scalar(s)).collect())
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    /// Block size `N`.
    pub fn block_size(&self) -> usize {
        self.block
    }

    /// Index of the last prescribed moment.
    pub fn l(&self) -> usize {
        self.moments.len() - 1
    }

    pub fn moments(&self) -> &[HermMatrix] {
        &self.moments
    }

    pub fn moment(&self, n: usize) -> &HermMatrix {
        &self.moments[n]
    }

    /// A copy with `extra` appended as `S_{l+1}`.
    pub fn appended(&self, extra: HermMatrix) -> Result<Self> {
        if extra.dim() != self.block {
            return Err(Error::DimensionMismatch {
                expected: self.block,
                found: extra.dim(),
            });
        }
        let mut moments = self.moments.clone();
        moments.push(extra);
        Ok(Self { moments, ..self.clone() })
    }

    /// The first `l + 1` moments.
    pub fn truncated(&self, l: usize) -> Result<Self> {
        self.require(l)?;
        Ok(Self {
            moments: self.moments[..=l].to_vec(),
            ..self.clone()
        })
    }

    fn require(&self, needed: usize) -> Result<()> {
        if needed > self.l() {
            return Err(Error::InsufficientMoments {
                needed,
                have: self.l(),
            });
        }
        Ok(())
    }

    /// `-ab S_n + (a+b) S_{n+1} - S_{n+2}`.
    pub(crate) fn localized(&self, n: usize) -> CMat {
        let (a, b) = (self.a, self.b);
        self.moments[n].as_matrix() * Complex64::from(-a * b)
            + self.moments[n + 1].as_matrix() * Complex64::from(a + b)
            - self.moments[n + 2].as_matrix()
    }
}

/// Which block Hankel form a [`BlockHankel`] holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HankelKind {
    /// `(S_{i+j})_{i,j=0}^k`
    Gamma,
    /// `(-ab S_{i+j} + (a+b) S_{i+j+1} - S_{i+j+2})_{i,j=0}^{k-1}`
    GammaTilde,
    /// `(-a S_{i+j} + S_{i+j+1})_{i,j=0}^k`
    H,
    /// `(b S_{i+j} - S_{i+j+1})_{i,j=0}^k`
    HTilde,
    /// `(S_{i+j+2})_{i,j=0}^{k-1}`, indexed by `k - 1`
    GammaHat,
}

impl fmt::Display for HankelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            HankelKind::Gamma => "Gamma",
            HankelKind::GammaTilde => "GammaTilde",
            HankelKind::H => "H",
            HankelKind::HTilde => "HTilde",
            HankelKind::GammaHat => "GammaHat",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockHankel {
    pub kind: HankelKind,
    pub order: usize,
    pub matrix: HermMatrix,
}

fn assemble(blocks: usize, n: usize, block_at: impl Fn(usize) -> CMat) -> HermMatrix {
    let cache: Vec<CMat> = (0..(2 * blocks).saturating_sub(1)).map(&block_at).collect();
    let mut m = CMat::zeros(blocks * n, blocks * n);
    for i in 0..blocks {
        for j in 0..blocks {
            m.view_mut((i * n, j * n), (n, n)).copy_from(&cache[i + j]);
        }
    }
    HermMatrix::hermitize(m)
}

/// `Γ_k`, of size `(k+1)N`.
pub fn build_gamma(seq: &MomentSequence, k: usize) -> Result<BlockHankel> {
    seq.require(2 * k)?;
    let matrix = assemble(k + 1, seq.block, |s| seq.moments[s].as_matrix().clone());
    Ok(BlockHankel {
        kind: HankelKind::Gamma,
        order: k,
        matrix,
    })
}

/// `Γ̃_k`, of size `kN`; empty for `k = 0`.
pub fn build_gamma_tilde(seq: &MomentSequence, k: usize) -> Result<BlockHankel> {
    seq.require(2 * k)?;
    let matrix = assemble(k, seq.block, |s| seq.localized(s));
    Ok(BlockHankel {
        kind: HankelKind::GammaTilde,
        order: k,
        matrix,
    })
}

/// `(H_k, H̃_k)`, each of size `(k+1)N`.
pub fn build_h_pair(seq: &MomentSequence, k: usize) -> Result<(BlockHankel, BlockHankel)> {
    seq.require(2 * k + 1)?;
    let (a, b) = (seq.a, seq.b);
    let h = assemble(k + 1, seq.block, |s| {
        seq.moments[s + 1].as_matrix() - seq.moments[s].as_matrix() * Complex64::from(a)
    });
    let ht = assemble(k + 1, seq.block, |s| {
        seq.moments[s].as_matrix() * Complex64::from(b) - seq.moments[s + 1].as_matrix()
    });
    Ok((
        BlockHankel {
            kind: HankelKind::H,
            order: k,
            matrix: h,
        },
        BlockHankel {
            kind: HankelKind::HTilde,
            order: k,
            matrix: ht,
        },
    ))
}

/// `Γ̂_{d-1} = (S_{i+j+2})_{i,j=0}^{d-1}`, of size `dN`. The stored order is `d - 1`.
pub fn build_gamma_hat(seq: &MomentSequence, d: usize) -> Result<BlockHankel> {
    if d == 0 {
        return Err(Error::Validation("GammaHat needs d >= 1".into()));
    }
    seq.require(2 * d)?;
    let matrix = assemble(d, seq.block, |s| seq.moments[s + 2].as_matrix().clone());
    Ok(BlockHankel {
        kind: HankelKind::GammaHat,
        order: d - 1,
        matrix,
    })
}

/// One point mass of a [`DiscreteMatrixMeasure`].
#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    pub x: f64,
    pub weight: HermMatrix,
}

/// `M(x) = Σ_{x_i < x} W_i`: a finite atomic matrix measure.
///
/// Construction canonicalizes: atoms are sorted, near-coincident atoms are
/// merged and negligible ones pruned. Support in `[a, b]` is not enforced
/// here; [`crate::solutions::verify`] reports it.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMatrixMeasure {
    a: f64,
    b: f64,
    block: usize,
    atoms: Vec<Atom>,
}

impl DiscreteMatrixMeasure {
    pub fn new(a: f64, b: f64, block: usize, atoms: Vec<Atom>) -> Result<Self> {
        check_interval(a, b)?;
        if block == 0 {
            return Err(Error::Validation("block size must be positive".into()));
        }
        for atom in &atoms {
            if !atom.x.is_finite() {
                return Err(Error::Validation("atom position is not finite".into()));
            }
            if atom.weight.dim() != block {
                return Err(Error::DimensionMismatch {
                    expected: block,
                    found: atom.weight.dim(),
                });
            }
            if !check_psd(&atom.weight, PSD_TOL) {
                return Err(Error::NotPsd {
                    what: format!("weight of atom at x = {}", atom.x),
                    min_eigenvalue: crate::linalg::hermitian_eig(&atom.weight)
                        .min_eigenvalue()
                        .unwrap_or(0.0),
                });
            }
        }
        Ok(Self {
            a,
            b,
            block,
            atoms: canonicalize(atoms, block, MERGE_TOL * (b - a)),
        })
    }

    pub fn empty(a: f64, b: f64, block: usize) -> Result<Self> {
        Self::new(a, b, block, Vec::new())
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn block_size(&self) -> usize {
        self.block
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// `Σ W_i = M(b)`.
    pub fn total_mass(&self) -> HermMatrix {
        let mut total = CMat::zeros(self.block, self.block);
        for atom in &self.atoms {
            total += atom.weight.as_matrix();
        }
        HermMatrix::hermitize(total)
    }

    /// Value of the left-continuous step function `M(x)`.
    pub fn cumulative(&self, x: f64) -> HermMatrix {
        let mut total = CMat::zeros(self.block, self.block);
        for atom in self.atoms.iter().take_while(|at| at.x < x) {
            total += atom.weight.as_matrix();
        }
        HermMatrix::hermitize(total)
    }

    /// Same atoms, each weight multiplied by `f(x_i)`; `f` must be
    /// non-negative on the atoms.
    pub fn reweighted(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        let atoms = self
            .atoms
            .iter()
            .map(|at| Atom {
                x: at.x,
                weight: at.weight.scale(f(at.x)),
            })
            .collect();
        Self::new(self.a, self.b, self.block, atoms)
    }
}

fn canonicalize(mut atoms: Vec<Atom>, block: usize, merge_gap: f64) -> Vec<Atom> {
    atoms.sort_by(|p, q| p.x.total_cmp(&q.x));
    let mut merged: Vec<Atom> = Vec::with_capacity(atoms.len());
    for atom in atoms {
        match merged.last_mut() {
            Some(last) if atom.x - last.x <= merge_gap => {
                let (t0, t1) = (trace(&last.weight), trace(&atom.weight));
                if t0 + t1 > 0.0 {
                    last.x = (t0 * last.x + t1 * atom.x) / (t0 + t1);
                }
                last.weight = HermMatrix::hermitize(last.weight.as_matrix() + atom.weight.as_matrix());
            }
            _ => merged.push(atom),
        }
    }
    let mut total = CMat::zeros(block, block);
    for atom in &merged {
        total += atom.weight.as_matrix();
    }
    let total_norm = HermMatrix::hermitize(total).norm();
    merged.retain(|at| at.weight.norm() > PRUNE_TOL * total_norm);
    merged
}

fn trace(h: &HermMatrix) -> f64 {
    (0..h.dim()).map(|i| h.get(i, i).re).sum()
}

/// `S_n = Σ_i x_i^n W_i` for `n = 0..=l`, with `0^0 = 1`.
pub fn moments_of(measure: &DiscreteMatrixMeasure, l: usize) -> MomentSequence {
    let n = measure.block;
    let moments = (0..=l)
        .map(|k| {
            let mut s = CMat::zeros(n, n);
            for atom in &measure.atoms {
                s += atom.weight.as_matrix() * Complex64::from(atom.x.powi(k as i32));
            }
            HermMatrix::hermitize(s)
        })
        .collect();
    MomentSequence {
        a: measure.a,
        b: measure.b,
        block: n,
        moments,
    }
}

/// Seeded random measure: `num_atoms` positions uniform in `(a, b)` and
/// full-rank weights `G* G` with complex Gaussian `G`.
pub fn gen_random_measure(
    seed: u64,
    block: usize,
    num_atoms: usize,
    a: f64,
    b: f64,
) -> Result<DiscreteMatrixMeasure> {
    check_interval(a, b)?;
    if num_atoms == 0 {
        return Err(Error::Validation("num_atoms must be at least 1".into()));
    }
    if block == 0 {
        return Err(Error::Validation("block size must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut atoms = Vec::with_capacity(num_atoms);
    for _ in 0..num_atoms {
        let x = rng.gen_range(a..b);
        let g = CMat::from_fn(block, block, |_, _| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
        });
        atoms.push(Atom {
            x,
            weight: HermMatrix::hermitize(g.adjoint() * &g),
        });
    }
    DiscreteMatrixMeasure::new(a, b, block, atoms)
}
