//! Seeded random sampling. Every random object in the crate comes from a
//! `ChaCha8Rng` built here so a report's seed reproduces it exactly.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::opcore::{LinearOp, C64};

pub type SeededRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Complex number with independent standard normal parts.
pub fn random_c64(r: &mut SeededRng) -> C64 {
    C64::new(r.sample(StandardNormal), r.sample(StandardNormal))
}

pub fn random_vector(r: &mut SeededRng, n: usize) -> Vec<C64> {
    (0..n).map(|_| random_c64(r)).collect()
}

pub fn random_op(r: &mut SeededRng, n: usize) -> LinearOp {
    LinearOp::from_row_major(n, random_vector(r, n * n)).expect("square buffer")
}

pub fn random_hermitian_op(r: &mut SeededRng, n: usize) -> LinearOp {
    let a = random_op(r, n);
    (&a + &a.adjoint()).scale_real(0.5)
}

/// `exp(iH)` for Hermitian `H`, via the eigendecomposition.
pub fn exp_i_hermitian(h: &LinearOp) -> LinearOp {
    let eig = h.to_dmatrix().symmetric_eigen();
    let n = h.dim();
    let v = &eig.eigenvectors;
    LinearOp::from_fn(n, |i, j| {
        (0..n)
            .map(|k| v[(i, k)] * C64::from_polar(1.0, eig.eigenvalues[k]) * v[(j, k)].conj())
            .sum()
    })
}

/// Random Hermitian matrix rescaled so its operator norm is at most `π`.
pub fn bounded_hermitian(r: &mut SeededRng, n: usize) -> LinearOp {
    let h = random_hermitian_op(r, n);
    let eig = h.to_dmatrix().symmetric_eigenvalues();
    let spec = eig.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let target = r.random_range(0.0..PI);
    if spec > 0.0 {
        h.scale_real(target / spec)
    } else {
        h
    }
}

/// `exp(iH)` with `H` random Hermitian of norm at most `π`.
pub fn random_unitary_op(r: &mut SeededRng, n: usize) -> LinearOp {
    exp_i_hermitian(&bounded_hermitian(r, n))
}
