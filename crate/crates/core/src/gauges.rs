//! Symmetric gauge functions, singular values and the ideal norms they induce.
//!
//! A gauge is evaluated on the nonincreasing rearrangement of the absolute
//! values of a finite sequence; finite sequences are understood as padded with
//! zeros, so Ky Fan indices larger than the sequence length are allowed.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use nalgebra::DMatrix;

use crate::error::Error;
use crate::linalg::{self, CMatrix, Scalar};

/// Family of a symmetric gauge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GaugeFamily {
    /// `(sum t_i^p)^(1/p)`, `p >= 1`.
    SchattenP(f64),
    /// Sum of the `k` largest entries.
    KyFan(usize),
    /// Largest entry.
    SupGauge,
    /// `max(t_1, (sum t_i) / k)`, the conjugate of `KyFan(k)`.
    KyFanDual(usize),
}

/// A norming function together with a display label.
#[derive(Debug, Clone, PartialEq)]
pub struct GaugeSpec {
    pub family: GaugeFamily,
    pub label: String,
}

/// Nonincreasing list of singular values.
#[derive(Debug, Clone, PartialEq)]
pub struct SingularValueList {
    values: Vec<f64>,
}

impl SingularValueList {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn largest(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

impl fmt::Display for GaugeFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GaugeFamily::SchattenP(p) => write!(f, "schatten-{p}"),
            GaugeFamily::KyFan(k) => write!(f, "kyfan-{k}"),
            GaugeFamily::SupGauge => f.write_str("sup"),
            GaugeFamily::KyFanDual(k) => write!(f, "kyfan-dual-{k}"),
        }
    }
}

impl GaugeSpec {
    pub fn new(family: GaugeFamily) -> Result<Self, Error> {
        match family {
            GaugeFamily::SchattenP(p) if !(p >= 1.0) || !p.is_finite() => {
                return Err(Error::InvalidExponent(p))
            }
            GaugeFamily::KyFan(0) | GaugeFamily::KyFanDual(0) => {
                return Err(Error::InvalidKyFanIndex)
            }
            _ => {}
        }
        Ok(Self {
            family,
            label: alloc::format!("{family}"),
        })
    }

    pub fn schatten(p: f64) -> Result<Self, Error> {
        Self::new(GaugeFamily::SchattenP(p))
    }

    pub fn ky_fan(k: usize) -> Result<Self, Error> {
        Self::new(GaugeFamily::KyFan(k))
    }

    pub fn sup() -> Self {
        Self {
            family: GaugeFamily::SupGauge,
            label: String::from("sup"),
        }
    }

    /// Trace norm, the gauge of the trace class.
    pub fn trace_class() -> Self {
        Self {
            family: GaugeFamily::SchattenP(1.0),
            label: String::from("schatten-1"),
        }
    }

    /// True for the pairing the classical duality theorem leaves out: the trace
    /// class against the operator norm.
    pub fn is_trace_class_pairing(&self) -> bool {
        matches!(self.family, GaugeFamily::SchattenP(p) if p == 1.0)
            || matches!(self.family, GaugeFamily::SupGauge)
    }

    /// Evaluates the gauge on an arbitrary finite sequence (absolute values are
    /// rearranged nonincreasingly first).
    pub fn evaluate(&self, t: &[f64]) -> f64 {
        let mut s: Vec<f64> = t.iter().map(|v| v.abs()).collect();
        s.sort_by(|a, b| b.total_cmp(a));
        self.evaluate_sorted(&s)
    }

    /// Evaluates the gauge on a nonincreasing nonnegative sequence.
    pub fn evaluate_sorted(&self, s: &[f64]) -> f64 {
        match self.family {
            GaugeFamily::SchattenP(p) => schatten_value(s, p),
            GaugeFamily::KyFan(k) => s.iter().take(k).sum(),
            GaugeFamily::SupGauge => s.first().copied().unwrap_or(0.0),
            GaugeFamily::KyFanDual(k) => {
                let first = s.first().copied().unwrap_or(0.0);
                first.max(s.iter().sum::<f64>() / k as f64)
            }
        }
    }

    /// Weights `w` with `sum w_i s_i = gauge(s)` and conjugate-gauge norm at
    /// most one: a subgradient of the gauge at `s` expressed on the singular
    /// basis.
    pub(crate) fn dual_weights(&self, s: &[f64]) -> Vec<f64> {
        let mut w = alloc::vec![0.0; s.len()];
        let top = s.first().copied().unwrap_or(0.0);
        if top <= 0.0 {
            return w;
        }
        let cutoff = top * 1e-14;
        match self.family {
            GaugeFamily::SchattenP(p) if p == 1.0 => {
                for (wi, &si) in w.iter_mut().zip(s) {
                    if si > cutoff {
                        *wi = 1.0;
                    }
                }
            }
            GaugeFamily::SchattenP(p) => {
                let norm = schatten_value(s, p);
                for (wi, &si) in w.iter_mut().zip(s) {
                    *wi = libm::pow(si / norm, p - 1.0);
                }
            }
            GaugeFamily::KyFan(k) => {
                for (wi, &si) in w.iter_mut().zip(s).take(k) {
                    if si > cutoff {
                        *wi = 1.0;
                    }
                }
            }
            GaugeFamily::SupGauge => w[0] = 1.0,
            GaugeFamily::KyFanDual(k) => {
                let sum: f64 = s.iter().sum();
                if top * k as f64 >= sum {
                    w[0] = 1.0;
                } else {
                    for wi in w.iter_mut() {
                        *wi = 1.0 / k as f64;
                    }
                }
            }
        }
        w
    }
}

impl fmt::Display for GaugeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label)
    }
}

fn schatten_value(s: &[f64], p: f64) -> f64 {
    let top = s.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if top == 0.0 {
        return 0.0;
    }
    if p == 1.0 {
        return s.iter().map(|v| v.abs()).sum();
    }
    if p == 2.0 {
        return libm::sqrt(s.iter().map(|v| v * v).sum::<f64>());
    }
    // scaled by the largest entry to keep powers in range
    let sum: f64 = s.iter().map(|v| libm::pow(v.abs() / top, p)).sum();
    top * libm::pow(sum, 1.0 / p)
}

/// Singular values `s_1 >= s_2 >= ...` of a square matrix.
pub fn singular_values(m: &CMatrix) -> Result<SingularValueList, Error> {
    linalg::check_square(m)?;
    Ok(SingularValueList {
        values: linalg::singular_values_complex(m),
    })
}

/// `|M|_g = g(s_1(M), s_2(M), ...)`.
pub fn gauge_norm(g: &GaugeSpec, m: &CMatrix) -> Result<f64, Error> {
    if let GaugeFamily::SchattenP(p) = g.family {
        if !(p >= 1.0) {
            return Err(Error::InvalidExponent(p));
        }
    }
    let s = singular_values(m)?;
    Ok(g.evaluate_sorted(s.values()))
}

/// `|M|_g` for a possibly rectangular matrix (zero-padding leaves symmetric
/// gauges unchanged), taking the real or Frobenius shortcut when available.
pub(crate) fn gauge_norm_fast(g: &GaugeSpec, m: &CMatrix) -> f64 {
    if linalg::is_real(m) {
        gauge_norm_of(g, &linalg::convert::<f64>(m))
    } else {
        gauge_norm_of(g, m)
    }
}

pub(crate) fn gauge_norm_of<T: Scalar>(g: &GaugeSpec, m: &DMatrix<T>) -> f64 {
    match g.family {
        GaugeFamily::SchattenP(p) if p == 2.0 => linalg::frobenius(m),
        _ => g.evaluate_sorted(&linalg::singular_values_of(m)),
    }
}

/// A subgradient of `X -> |X|_g` at `m`, i.e. `U diag(w) V*` with dual-aligned
/// weights. Returns the gauge value alongside.
pub(crate) fn gauge_subgradient<T: Scalar>(g: &GaugeSpec, m: &DMatrix<T>) -> (f64, DMatrix<T>) {
    if let GaugeFamily::SchattenP(p) = g.family {
        if p == 2.0 {
            let norm = linalg::frobenius(m);
            if norm == 0.0 {
                return (0.0, DMatrix::zeros(m.nrows(), m.ncols()));
            }
            return (norm, m.unscale(norm));
        }
    }
    let svd = m.clone().svd(true, true);
    let (u, v_t) = match (svd.u, svd.v_t) {
        (Some(u), Some(v_t)) => (u, v_t),
        _ => unreachable!("svd requested with both factors"),
    };
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let sorted: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
    let weights = g.dual_weights(&sorted);
    let mut out = DMatrix::<T>::zeros(m.nrows(), m.ncols());
    for (rank, &idx) in order.iter().enumerate() {
        let w = weights[rank];
        if w == 0.0 {
            continue;
        }
        let col = u.column(idx);
        let row = v_t.row(idx);
        out += (col * row).scale(w);
    }
    (g.evaluate_sorted(&sorted), out)
}

/// Conjugate norming function implementing the trace-pairing Hölder
/// inequality `|Tr(XY)| <= |X|_g |Y|_{g*}`.
pub fn conjugate_gauge(g: &GaugeSpec) -> Result<GaugeSpec, Error> {
    let family = match g.family {
        GaugeFamily::SchattenP(p) if !(p >= 1.0) => return Err(Error::InvalidExponent(p)),
        GaugeFamily::SchattenP(p) if p == 1.0 => return Ok(GaugeSpec::sup()),
        GaugeFamily::SchattenP(p) => GaugeFamily::SchattenP(p / (p - 1.0)),
        GaugeFamily::KyFan(k) => GaugeFamily::KyFanDual(k),
        GaugeFamily::KyFanDual(k) => GaugeFamily::KyFan(k),
        GaugeFamily::SupGauge => return Ok(GaugeSpec::trace_class()),
    };
    GaugeSpec::new(family)
}

/// Both sides of the trace-duality inequality for one pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HolderReport {
    pub lhs: f64,
    pub rhs: f64,
    pub ok: bool,
}

pub fn holder_check(x: &CMatrix, y: &CMatrix, g: &GaugeSpec) -> Result<HolderReport, Error> {
    let n = linalg::check_square(x)?;
    let m = linalg::check_square(y)?;
    if n != m {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: m,
        });
    }
    let dual = conjugate_gauge(g)?;
    let lhs = linalg::trace_of_product(x, y).norm();
    let rhs = gauge_norm(g, x)? * gauge_norm(&dual, y)?;
    Ok(HolderReport {
        lhs,
        rhs,
        ok: lhs <= rhs + 1e-9 * (1.0 + rhs),
    })
}
