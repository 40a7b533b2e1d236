//! Dense helpers shared by the numerical modules.
//!
//! Every public routine takes complex matrices. Internally the heavy kernels
//! are generic over [`Scalar`] so that real inputs (the common case for the
//! built-in models) run through real arithmetic.

use alloc::vec::Vec;

use nalgebra::{ComplexField, DMatrix};
use num_complex::Complex64;

use crate::error::Error;

/// Dense complex matrix used throughout the crate.
pub type CMatrix = DMatrix<Complex64>;

/// Field the generic kernels operate over (`f64` or [`Complex64`]).
pub trait Scalar: ComplexField<RealField = f64> + Copy {
    fn from_complex(z: Complex64) -> Self;
    fn into_complex(self) -> Complex64;
}

impl Scalar for f64 {
    fn from_complex(z: Complex64) -> Self {
        z.re
    }
    fn into_complex(self) -> Complex64 {
        Complex64::new(self, 0.0)
    }
}

impl Scalar for Complex64 {
    fn from_complex(z: Complex64) -> Self {
        z
    }
    fn into_complex(self) -> Complex64 {
        self
    }
}

pub fn is_real(m: &CMatrix) -> bool {
    m.iter().all(|z| z.im == 0.0)
}

pub fn convert<T: Scalar>(m: &CMatrix) -> DMatrix<T> {
    m.map(T::from_complex)
}

pub fn to_complex<T: Scalar>(m: &DMatrix<T>) -> CMatrix {
    m.map(Scalar::into_complex)
}

pub fn check_square(m: &CMatrix) -> Result<usize, Error> {
    if m.nrows() != m.ncols() {
        return Err(Error::NonSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite);
    }
    Ok(m.nrows())
}

/// Singular values, nonincreasing.
pub fn singular_values_of<T: Scalar>(m: &DMatrix<T>) -> Vec<f64> {
    if m.is_empty() {
        return Vec::new();
    }
    let mut values: Vec<f64> = m.clone().singular_values().iter().map(|s| s.max(0.0)).collect();
    values.sort_by(|a, b| b.total_cmp(a));
    values
}

pub fn singular_values_complex(m: &CMatrix) -> Vec<f64> {
    if is_real(m) {
        singular_values_of(&convert::<f64>(m))
    } else {
        singular_values_of(m)
    }
}

pub fn operator_norm(m: &CMatrix) -> f64 {
    singular_values_complex(m).first().copied().unwrap_or(0.0)
}

pub fn trace(m: &CMatrix) -> Complex64 {
    m.diagonal().iter().sum()
}

/// `Tr(a b)` without forming the product.
pub fn trace_of_product(a: &CMatrix, b: &CMatrix) -> Complex64 {
    debug_assert_eq!(a.ncols(), b.nrows());
    debug_assert_eq!(a.nrows(), b.ncols());
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..a.nrows() {
        for l in 0..a.ncols() {
            acc += a[(i, l)] * b[(l, i)];
        }
    }
    acc
}

/// Leading `k x k` block, zero-padded when `k` exceeds the matrix size.
pub fn leading<T: Scalar>(m: &DMatrix<T>, k: usize) -> DMatrix<T> {
    let mut out = DMatrix::<T>::zeros(k, k);
    let rows = k.min(m.nrows());
    let cols = k.min(m.ncols());
    out.view_mut((0, 0), (rows, cols))
        .copy_from(&m.view((0, 0), (rows, cols)));
    out
}

/// Smallest `s` such that every nonzero entry lies in the leading `s x s` block.
pub fn support_size(m: &CMatrix) -> usize {
    let mut s = 0;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            if m[(i, j)] != Complex64::new(0.0, 0.0) {
                s = s.max(i.max(j) + 1);
            }
        }
    }
    s
}

/// Largest `|i - j|` over the nonzero entries.
pub fn bandwidth_of(m: &CMatrix) -> usize {
    let mut b = 0;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            if m[(i, j)] != Complex64::new(0.0, 0.0) {
                b = b.max(i.abs_diff(j));
            }
        }
    }
    b
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

pub fn hermitian_deviation(m: &CMatrix) -> f64 {
    max_abs_diff(m, &m.adjoint())
}

/// `T S - S T` where `T` has bandwidth `band`.
///
/// The banded loops sum over a fixed index window, so entries away from the
/// bottom-right corner do not depend on the matrix dimension.
pub fn commutator_banded<T: Scalar>(t: &DMatrix<T>, s: &DMatrix<T>, band: usize) -> DMatrix<T> {
    let n = t.nrows();
    if band + 1 >= n / 2 {
        return t * s - s * t;
    }
    let mut out = DMatrix::<T>::zeros(n, n);
    for k in 0..n {
        for i in 0..n {
            let mut acc = T::zero();
            let lo = i.saturating_sub(band);
            let hi = (i + band).min(n - 1);
            for l in lo..=hi {
                acc += t[(i, l)] * s[(l, k)];
            }
            let lo = k.saturating_sub(band);
            let hi = (k + band).min(n - 1);
            for l in lo..=hi {
                acc -= s[(i, l)] * t[(l, k)];
            }
            out[(i, k)] = acc;
        }
    }
    out
}

/// Spectral clamp of a hermitian matrix to `[lo, hi]`.
pub fn clamp_spectrum<T: Scalar>(m: &DMatrix<T>, lo: f64, hi: f64) -> DMatrix<T> {
    if m.is_empty() {
        return m.clone();
    }
    let sym = (m + m.adjoint()).scale(0.5);
    let eig = sym.symmetric_eigen();
    let clamped = eig.eigenvalues.map(|v| T::from_real(v.clamp(lo, hi)));
    let v = &eig.eigenvectors;
    let scaled = DMatrix::from_fn(v.nrows(), v.ncols(), |i, j| v[(i, j)] * clamped[j]);
    let out = scaled * v.adjoint();
    (&out + out.adjoint()).scale(0.5)
}

/// Extreme eigenvalues `(min, max)` of a hermitian matrix.
pub fn eigen_range<T: Scalar>(m: &DMatrix<T>) -> (f64, f64) {
    if m.is_empty() {
        return (0.0, 0.0);
    }
    let sym = (m + m.adjoint()).scale(0.5);
    let values = sym.symmetric_eigenvalues();
    values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
}

pub fn eigen_range_complex(m: &CMatrix) -> (f64, f64) {
    if is_real(m) {
        eigen_range(&convert::<f64>(m))
    } else {
        eigen_range(m)
    }
}

pub fn frobenius<T: Scalar>(m: &DMatrix<T>) -> f64 {
    m.iter().map(|z| z.modulus_squared()).sum::<f64>().sqrt()
}
