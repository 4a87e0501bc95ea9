#![allow(dead_code)]

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use ssv_core::linalg::{hermitian_part, CMatrix};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Entries with independent standard normal real and imaginary parts.
pub fn gaussian(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| {
        c(StandardNormal.sample(&mut *rng), StandardNormal.sample(&mut *rng))
    })
}

/// `U diag(λ) U^H` with a random unitary `U` and random complex `λ`.
pub fn normal_matrix(n: usize, rng: &mut ChaCha8Rng) -> CMatrix {
    let q = gaussian(n, n, rng).qr().q();
    let d = CMatrix::from_fn(n, n, |i, j| {
        if i == j {
            c(StandardNormal.sample(&mut *rng), StandardNormal.sample(&mut *rng))
        } else {
            c(0.0, 0.0)
        }
    });
    &q * d * q.adjoint()
}

/// Hermitian positive definite with eigenvalues in `[lo, hi]`.
pub fn hpd(n: usize, lo: f64, hi: f64, rng: &mut ChaCha8Rng) -> CMatrix {
    let q = gaussian(n, n, rng).qr().q();
    let d = CMatrix::from_fn(n, n, |i, j| {
        if i == j {
            c(rng.random_range(lo..hi), 0.0)
        } else {
            c(0.0, 0.0)
        }
    });
    hermitian_part(&(&q * d * q.adjoint()))
}

pub fn data_path(name: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}
