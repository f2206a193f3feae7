//! Seeded random matrix synthesis.
//!
//! All generators draw from `ChaCha8Rng` so a seed produces the same matrix
//! on every platform.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::decomp::scale_columns;
use super::matrix::ComplexMatrix;

pub type MatrixRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> MatrixRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// SplitMix64 finalizer; used to derive independent per-instance seeds.
pub fn mix_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed
        .wrapping_add(stream.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn complex_normal(rng: &mut MatrixRng) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// I.i.d. standard complex Gaussian entries.
pub fn random_general_with(rows: usize, cols: usize, rng: &mut MatrixRng) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| complex_normal(rng))
}

pub fn random_general(rows: usize, cols: usize, seed: u64) -> ComplexMatrix {
    random_general_with(rows, cols, &mut rng_from_seed(seed))
}

/// Haar-like unitary from the QR factorization of a Gaussian matrix.
pub fn random_unitary_with(n: usize, rng: &mut MatrixRng) -> ComplexMatrix {
    let g = random_general_with(n, n, rng).to_faer();
    let qr = g.qr();
    let (q, r) = (qr.compute_Q(), qr.R());
    // Fix the column phases so the distribution does not depend on the QR sign convention.
    ComplexMatrix::from_fn(n, n, |i, j| {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 {
            d / d.norm()
        } else {
            Complex64::new(1.0, 0.0)
        };
        q[(i, j)] * phase
    })
}

/// `U diag(s) V*` with singular values log-uniform in
/// `[cond_bound^-1/2, cond_bound^1/2]`, so `sigma_max / sigma_min <= cond_bound`.
pub fn random_invertible_with(n: usize, cond_bound: f64, rng: &mut MatrixRng) -> ComplexMatrix {
    assert!(n >= 1, "n must be positive");
    assert!(cond_bound > 1.0, "cond_bound must exceed 1");
    let u = random_unitary_with(n, rng);
    let v = random_unitary_with(n, rng);
    let log_k = cond_bound.ln();
    // Stay strictly inside the bound so rounding in the product cannot push past it.
    let span = 0.999 * log_k;
    let s: Vec<f64> = (0..n)
        .map(|_| {
            let t: f64 = rng.random();
            ((t - 0.5) * span).exp()
        })
        .collect();
    &scale_columns(&u, &s) * &v.conj_transpose()
}

pub fn random_invertible(n: usize, cond_bound: f64, seed: u64) -> ComplexMatrix {
    random_invertible_with(n, cond_bound, &mut rng_from_seed(seed))
}

/// Random complex scalar with modulus in `[0.5, 2]`.
pub fn random_unit_scalar(rng: &mut MatrixRng) -> Complex64 {
    let r: f64 = rng.random_range(0.5..2.0);
    let theta: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    Complex64::from_polar(r, theta)
}
