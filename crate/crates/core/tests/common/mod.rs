#![allow(dead_code)]

use commutant_core::{CMatrix, Complex64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn complex_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| {
        Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    })
}

pub fn square(rng: &mut ChaCha8Rng, n: usize) -> CMatrix {
    complex_matrix(rng, n, n)
}

pub fn hermitian(rng: &mut ChaCha8Rng, n: usize) -> CMatrix {
    let m = square(rng, n);
    (&m + m.adjoint()).unscale(2.0)
}

/// Haar-ish unitary from the QR factor of a random matrix.
pub fn unitary(rng: &mut ChaCha8Rng, n: usize) -> CMatrix {
    square(rng, n).qr().q()
}

pub fn op_norm(m: &CMatrix) -> f64 {
    m.singular_values().max()
}
