//! Hermitian operator tuples given by banded infinite matrices, their finite
//! corners, commutators, and the two norms on the commutant.

use alloc::string::ToString;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::Error;
use crate::gauges::{gauge_norm, GaugeSpec};
use crate::linalg::{self, CMatrix, Scalar};

/// Grid step used when a model is built without an explicit one.
pub const DEFAULT_GRID_STEP: f64 = 1.0 / 400.0;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Built-in generators of banded hermitian operator tuples.
///
/// Entries are deterministic functions of the indices, so every corner is the
/// leading block of every larger corner.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OperatorModel {
    /// `T_k = diag(min(1, k * j * grid_step))`, `k = 1..=n`, `j = 1, 2, ...`.
    DiagonalGrid { n: usize, grid_step: f64 },
    /// Position `diag(min(1, j * grid_step))` and the Laplacian
    /// `scale * tridiag(-1, 2, -1)`.
    LapPos { scale: f64, grid_step: f64 },
    /// Real and imaginary parts of the unilateral shift.
    ShiftParts,
}

impl OperatorModel {
    /// Builds a model from its configuration name.
    ///
    /// `params`: `[grid_step]` for `diagonal-grid`, `[scale, grid_step]` for
    /// `lap-pos`, nothing for `shift-parts`.
    pub fn from_name(name: &str, n: usize, params: &[f64]) -> Result<Self, Error> {
        let model = match name {
            "diagonal-grid" => OperatorModel::DiagonalGrid {
                n,
                grid_step: params.first().copied().unwrap_or(DEFAULT_GRID_STEP),
            },
            "lap-pos" => OperatorModel::LapPos {
                scale: params.first().copied().unwrap_or(1.0),
                grid_step: params.get(1).copied().unwrap_or(DEFAULT_GRID_STEP),
            },
            "shift-parts" => OperatorModel::ShiftParts,
            other => return Err(Error::UnknownModel(other.to_string())),
        };
        model.validate()?;
        Ok(model)
    }

    fn validate(&self) -> Result<(), Error> {
        let bad = |what: &str| Err(Error::InvalidArgument(what.to_string()));
        match *self {
            OperatorModel::DiagonalGrid { n, grid_step } => {
                if n == 0 {
                    return Err(Error::EmptyTuple);
                }
                if !(grid_step > 0.0 && grid_step.is_finite()) {
                    return bad("grid step must be positive");
                }
            }
            OperatorModel::LapPos { scale, grid_step } => {
                if !scale.is_finite() {
                    return bad("scale must be finite");
                }
                if !(grid_step > 0.0 && grid_step.is_finite()) {
                    return bad("grid step must be positive");
                }
            }
            OperatorModel::ShiftParts => {}
        }
        Ok(())
    }

    pub fn name(&self) -> &'static str {
        match self {
            OperatorModel::DiagonalGrid { .. } => "diagonal-grid",
            OperatorModel::LapPos { .. } => "lap-pos",
            OperatorModel::ShiftParts => "shift-parts",
        }
    }

    /// Number of operators in the tuple.
    pub fn arity(&self) -> usize {
        match self {
            OperatorModel::DiagonalGrid { n, .. } => *n,
            _ => 2,
        }
    }

    pub fn bandwidth(&self) -> usize {
        match self {
            OperatorModel::DiagonalGrid { .. } => 0,
            _ => 1,
        }
    }

    pub fn min_dimension(&self) -> usize {
        2 * self.bandwidth() + 2
    }

    /// Entry `(i, j)` (0-based) of operator `index` of the infinite tuple.
    pub fn entry(&self, index: usize, i: usize, j: usize) -> Complex64 {
        let re = |v: f64| Complex64::new(v, 0.0);
        match *self {
            OperatorModel::DiagonalGrid { grid_step, .. } => {
                if i == j {
                    re(((index + 1) as f64 * (i + 1) as f64 * grid_step).min(1.0))
                } else {
                    ZERO
                }
            }
            OperatorModel::LapPos { scale, grid_step } => match index {
                0 if i == j => re(((i + 1) as f64 * grid_step).min(1.0)),
                1 if i == j => re(2.0 * scale),
                1 if i.abs_diff(j) == 1 => re(-scale),
                _ => ZERO,
            },
            OperatorModel::ShiftParts => {
                if i.abs_diff(j) != 1 {
                    return ZERO;
                }
                match (index, i > j) {
                    (0, _) => re(0.5),
                    // (S - S*) / 2i with S e_j = e_{j+1}
                    (_, true) => Complex64::new(0.0, -0.5),
                    (_, false) => Complex64::new(0.0, 0.5),
                }
            }
        }
    }

    /// Leading `dimension x dimension` corners of the tuple.
    pub fn instantiate(&self, dimension: usize) -> Result<HermitianTuple, Error> {
        let required = self.min_dimension();
        if dimension < required {
            return Err(Error::DimensionTooSmall {
                dimension,
                required,
            });
        }
        let matrices = (0..self.arity())
            .map(|index| CMatrix::from_fn(dimension, dimension, |i, j| self.entry(index, i, j)))
            .collect();
        Ok(HermitianTuple {
            matrices,
            bandwidth: self.bandwidth(),
            model: Some(*self),
        })
    }
}

/// An `n`-tuple of hermitian `N x N` matrices sharing a bandwidth.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianTuple {
    matrices: Vec<CMatrix>,
    bandwidth: usize,
    model: Option<OperatorModel>,
}

impl HermitianTuple {
    /// Wraps explicit matrices; the bandwidth is read off the nonzero pattern.
    pub fn from_matrices(matrices: Vec<CMatrix>) -> Result<Self, Error> {
        let first = matrices.first().ok_or(Error::EmptyTuple)?;
        let dimension = linalg::check_square(first)?;
        let mut bandwidth = 0;
        for (index, m) in matrices.iter().enumerate() {
            let found = linalg::check_square(m)?;
            if found != dimension {
                return Err(Error::DimensionMismatch {
                    expected: dimension,
                    found,
                });
            }
            let deviation = linalg::hermitian_deviation(m);
            if deviation > 1e-12 {
                return Err(Error::NotHermitian { index, deviation });
            }
            bandwidth = bandwidth.max(linalg::bandwidth_of(m));
        }
        Ok(Self {
            matrices,
            bandwidth,
            model: None,
        })
    }

    pub fn dimension(&self) -> usize {
        self.matrices[0].nrows()
    }

    pub fn len(&self) -> usize {
        self.matrices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matrices.is_empty()
    }

    pub fn bandwidth(&self) -> usize {
        self.bandwidth
    }

    pub fn matrices(&self) -> &[CMatrix] {
        &self.matrices
    }

    pub fn model(&self) -> Option<&OperatorModel> {
        self.model.as_ref()
    }

    pub fn is_real(&self) -> bool {
        self.matrices.iter().all(linalg::is_real)
    }

    /// The tuple of leading `k x k` blocks, `k <= dimension`.
    pub fn leading(&self, k: usize) -> Result<HermitianTuple, Error> {
        if k > self.dimension() {
            return Err(Error::SupportExceedsInstantiation {
                required: k,
                available: self.dimension(),
            });
        }
        Ok(Self {
            matrices: self.matrices.iter().map(|m| linalg::leading(m, k)).collect(),
            bandwidth: self.bandwidth,
            model: self.model,
        })
    }

    /// Block size on which commutators with an operator supported in the first
    /// `support` coordinates are computed without truncation error.
    pub fn exact_block(&self, support: usize) -> Result<usize, Error> {
        let required = support + self.bandwidth;
        if required > self.dimension() {
            return Err(Error::SupportExceedsInstantiation {
                required,
                available: self.dimension(),
            });
        }
        Ok(required)
    }

    pub(crate) fn converted<T: Scalar>(&self) -> Vec<DMatrix<T>> {
        self.matrices.iter().map(linalg::convert::<T>).collect()
    }

    fn check_dimension(&self, s: &CMatrix) -> Result<(), Error> {
        linalg::check_square(s)?;
        if s.nrows() != self.dimension() {
            return Err(Error::DimensionMismatch {
                expected: self.dimension(),
                found: s.nrows(),
            });
        }
        Ok(())
    }
}

/// `([T_1, S], ..., [T_n, S])` with `[T, S] = TS - ST`.
pub fn commutator_tuple(tau: &HermitianTuple, s: &CMatrix) -> Result<Vec<CMatrix>, Error> {
    tau.check_dimension(s)?;
    Ok(commutators_unchecked(tau, s))
}

pub(crate) fn commutators_unchecked(tau: &HermitianTuple, s: &CMatrix) -> Vec<CMatrix> {
    if tau.is_real() && linalg::is_real(s) {
        let s = linalg::convert::<f64>(s);
        tau.converted::<f64>()
            .iter()
            .map(|t| linalg::to_complex(&linalg::commutator_banded(t, &s, tau.bandwidth)))
            .collect()
    } else {
        tau.matrices
            .iter()
            .map(|t| linalg::commutator_banded(t, s, tau.bandwidth))
            .collect()
    }
}

/// `max_j |K_j|_g`.
pub fn tuple_gauge_norm(kappa: &[CMatrix], g: &GaugeSpec) -> Result<f64, Error> {
    if kappa.is_empty() {
        return Err(Error::EmptyTuple);
    }
    let n = linalg::check_square(&kappa[0])?;
    let mut best = 0.0_f64;
    for k in kappa {
        if linalg::check_square(k)? != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: k.nrows(),
            });
        }
        best = best.max(gauge_norm(g, k)?);
    }
    Ok(best)
}

/// `|||S||| = ||S|| + |[tau, S]|_g`.
pub fn e_norm_sum(tau: &HermitianTuple, g: &GaugeSpec, s: &CMatrix) -> Result<f64, Error> {
    let (op, comm) = norm_parts(tau, g, s)?;
    Ok(op + comm)
}

/// `|||S|||_M = max(||S||, |[tau, S]|_g)`.
pub fn e_norm_max(tau: &HermitianTuple, g: &GaugeSpec, s: &CMatrix) -> Result<f64, Error> {
    let (op, comm) = norm_parts(tau, g, s)?;
    Ok(op.max(comm))
}

fn norm_parts(tau: &HermitianTuple, g: &GaugeSpec, s: &CMatrix) -> Result<(f64, f64), Error> {
    let kappa = commutator_tuple(tau, s)?;
    Ok((linalg::operator_norm(s), tuple_gauge_norm(&kappa, g)?))
}

/// Behaviour of an [`Operator`] outside its finite part.
#[derive(Debug, Clone, PartialEq)]
pub enum Tail {
    None,
    /// `c * I`.
    Scalar(Complex64),
    /// Operator `index` of a built-in model.
    ModelMember { model: OperatorModel, index: usize },
    /// Constant diagonals: `(offset, value)` puts `value` at every `(i, i + offset)`.
    Toeplitz(Vec<(isize, Complex64)>),
    /// `diag(values[j mod len])`.
    PeriodicDiagonal(Vec<Complex64>),
}

/// A bounded operator on `l^2` that can be sampled on any finite block: a
/// finitely supported part plus a structured tail.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    finite: CMatrix,
    tail: Tail,
}

impl From<CMatrix> for Operator {
    fn from(m: CMatrix) -> Self {
        Operator::finite(m)
    }
}

impl Operator {
    /// The finitely supported operator with the given leading block.
    pub fn finite(m: CMatrix) -> Self {
        Self {
            finite: m,
            tail: Tail::None,
        }
    }

    pub fn scalar(c: Complex64) -> Self {
        Self {
            finite: CMatrix::zeros(0, 0),
            tail: Tail::Scalar(c),
        }
    }

    pub fn identity() -> Self {
        Self::scalar(Complex64::new(1.0, 0.0))
    }

    pub fn model_member(model: OperatorModel, index: usize) -> Result<Self, Error> {
        if index >= model.arity() {
            return Err(Error::InvalidArgument(alloc::format!(
                "model {} has {} operators",
                model.name(),
                model.arity()
            )));
        }
        Ok(Self {
            finite: CMatrix::zeros(0, 0),
            tail: Tail::ModelMember { model, index },
        })
    }

    pub fn toeplitz(diagonals: Vec<(isize, Complex64)>) -> Self {
        Self {
            finite: CMatrix::zeros(0, 0),
            tail: Tail::Toeplitz(diagonals),
        }
    }

    pub fn periodic_diagonal(values: Vec<Complex64>) -> Result<Self, Error> {
        if values.is_empty() {
            return Err(Error::InvalidArgument("empty diagonal pattern".to_string()));
        }
        Ok(Self {
            finite: CMatrix::zeros(0, 0),
            tail: Tail::PeriodicDiagonal(values),
        })
    }

    /// Adds a finitely supported perturbation.
    pub fn with_finite(mut self, m: CMatrix) -> Self {
        let k = self.finite.nrows().max(m.nrows()).max(m.ncols());
        let mut sum = linalg::leading(&self.finite, k);
        sum += linalg::leading(&m, k);
        self.finite = sum;
        self
    }

    pub fn tail(&self) -> &Tail {
        &self.tail
    }

    pub fn finite_part(&self) -> &CMatrix {
        &self.finite
    }

    pub fn is_finitely_supported(&self) -> bool {
        matches!(self.tail, Tail::None)
    }

    /// Size of the leading block containing the finite part.
    pub fn finite_extent(&self) -> usize {
        self.finite.nrows().max(self.finite.ncols())
    }

    /// Support size when finitely supported.
    pub fn support(&self) -> Option<usize> {
        self.is_finitely_supported()
            .then(|| linalg::support_size(&self.finite))
    }

    fn tail_bandwidth(&self) -> usize {
        match &self.tail {
            Tail::None | Tail::Scalar(_) | Tail::PeriodicDiagonal(_) => 0,
            Tail::ModelMember { model, .. } => model.bandwidth(),
            Tail::Toeplitz(d) => d.iter().map(|(o, _)| o.unsigned_abs()).max().unwrap_or(0),
        }
    }

    /// Number of leading columns that can be nonzero in the first `rows` rows
    /// (equivalently rows in the first `rows` columns).
    pub fn reach(&self, rows: usize) -> usize {
        let tail = if matches!(self.tail, Tail::None) {
            0
        } else {
            rows + self.tail_bandwidth()
        };
        tail.max(self.finite_extent())
    }

    pub fn entry(&self, i: usize, j: usize) -> Complex64 {
        let v = if i < self.finite.nrows() && j < self.finite.ncols() {
            self.finite[(i, j)]
        } else {
            ZERO
        };
        v + self.tail_entry(i, j)
    }

    fn tail_entry(&self, i: usize, j: usize) -> Complex64 {
        match &self.tail {
            Tail::None => ZERO,
            Tail::Scalar(c) if i == j => *c,
            Tail::Scalar(_) => ZERO,
            Tail::ModelMember { model, index } => model.entry(*index, i, j),
            Tail::Toeplitz(d) => d
                .iter()
                .filter(|(o, _)| j as isize - i as isize == *o)
                .map(|(_, z)| *z)
                .sum(),
            Tail::PeriodicDiagonal(p) if i == j => p[i % p.len()],
            Tail::PeriodicDiagonal(_) => ZERO,
        }
    }

    /// Block of rows `rows.0..rows.1` and columns `cols.0..cols.1`.
    pub fn block(&self, rows: (usize, usize), cols: (usize, usize)) -> CMatrix {
        CMatrix::from_fn(rows.1 - rows.0, cols.1 - cols.0, |i, j| {
            self.entry(rows.0 + i, cols.0 + j)
        })
    }

    /// Leading `k x k` corner.
    pub fn corner(&self, k: usize) -> CMatrix {
        self.block((0, k), (0, k))
    }

    /// `A S` for `A` supported in the leading `a.nrows()` coordinates; the
    /// product is finitely supported.
    pub fn left_multiply(&self, a: &CMatrix) -> Operator {
        let r = a.nrows();
        let c = self.reach(r);
        let k = r.max(c);
        let mut out = CMatrix::zeros(k, k);
        // the first r rows of S are sparse: a finite block plus a band
        let mut add = |l: usize, j: usize, z: Complex64| {
            if z != ZERO {
                out.view_mut((0, j), (r, 1)).column_mut(0).axpy(z, &a.column(l), Complex64::new(1.0, 0.0));
            }
        };
        for j in 0..self.finite.ncols() {
            for l in 0..self.finite.nrows().min(r) {
                add(l, j, self.finite[(l, j)]);
            }
        }
        let band = self.tail_bandwidth();
        if !matches!(self.tail, Tail::None) {
            for l in 0..r {
                for j in l.saturating_sub(band)..=(l + band).min(c.saturating_sub(1)) {
                    add(l, j, self.tail_entry(l, j));
                }
            }
        }
        Operator::finite(out)
    }
}

/// `|||S|||` for an operator whose norm is exactly computable on a corner:
/// finitely supported, possibly plus a multiple of the identity.
pub fn e_norm_sum_operator(tau: &HermitianTuple, g: &GaugeSpec, s: &Operator) -> Result<f64, Error> {
    let (op, comm) = operator_norm_parts(tau, g, s)?;
    Ok(op + comm)
}

/// `|||S|||_M` for an exactly normable operator (see [`e_norm_sum_operator`]).
pub fn e_norm_max_operator(tau: &HermitianTuple, g: &GaugeSpec, s: &Operator) -> Result<f64, Error> {
    let (op, comm) = operator_norm_parts(tau, g, s)?;
    Ok(op.max(comm))
}

fn operator_norm_parts(
    tau: &HermitianTuple,
    g: &GaugeSpec,
    s: &Operator,
) -> Result<(f64, f64), Error> {
    let extra = match s.tail() {
        Tail::None => 0,
        Tail::Scalar(_) => 1,
        _ => return Err(Error::NotNormable("only finite parts plus scalars are normed exactly")),
    };
    let k = tau.exact_block(s.finite_extent() + extra)?.max(1);
    let block = tau.leading(k)?;
    norm_parts(&block, g, &s.corner(k))
}
