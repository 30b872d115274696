#![allow(dead_code)]

use matmoment::linalg::{hermitian_eig, CMat, HermMatrix};
use matmoment::moments::{gen_random_measure, DiscreteMatrixMeasure};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> CMat {
    CMat::from_fn(rows, cols, |_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    })
}

pub fn random_hermitian(rng: &mut ChaCha8Rng, n: usize) -> HermMatrix {
    let g = gaussian(rng, n, n);
    HermMatrix::new((&g + g.adjoint()).scale(0.5)).unwrap()
}

/// `G G*` with `G` of size `n x rank`.
pub fn random_psd(rng: &mut ChaCha8Rng, n: usize, rank: usize) -> HermMatrix {
    let g = gaussian(rng, n, rank);
    HermMatrix::new(&g * g.adjoint()).unwrap()
}

pub fn random_unitary(rng: &mut ChaCha8Rng, n: usize) -> CMat {
    hermitian_eig(&random_hermitian(rng, n)).eigenvectors
}

/// `U diag(u) U*`, `u` uniform in `[0, 1]`.
pub fn random_parameter(rng: &mut ChaCha8Rng, n: usize) -> HermMatrix {
    let u = random_unitary(rng, n);
    let diag: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..=1.0)).collect();
    HermMatrix::from_real_diag(&diag).congruence(&u.adjoint())
}

pub fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    assert_eq!(a.shape(), b.shape());
    (a - b).iter().fold(0.0, |m, z| m.max(z.norm()))
}

/// A measure of the acceptance distribution: N ≤ 3, ≤ 4 atoms, `d ≤ 3`,
/// interval `[0, 1]` or `[-2, 3]`.
pub fn random_case(seed: u64) -> (DiscreteMatrixMeasure, usize) {
    let mut r = rng(seed ^ 0x5eed);
    let n = r.gen_range(1..=3);
    let atoms = r.gen_range(1..=4);
    let d = r.gen_range(1..=3);
    let (a, b) = if r.gen_bool(0.5) { (0.0, 1.0) } else { (-2.0, 3.0) };
    (gen_random_measure(seed, n, atoms, a, b).unwrap(), d)
}
