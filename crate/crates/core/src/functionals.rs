//! Functionals on the commutant: trace parts `S -> Tr(SX + sum_j Y_j [T_j, S])`,
//! tail-state models of singular functionals, sampled norm bounds, and the
//! quotient norm of the predual.

use alloc::string::ToString;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::Error;
use crate::gauges::{conjugate_gauge, gauge_norm, gauge_subgradient, GaugeSpec};
use crate::idealops::{e_norm_max_operator, e_norm_sum_operator, HermitianTuple, Operator};
use crate::limits::{detect_limit, LimitRule};
use crate::linalg::{self, CMatrix};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Finitely supported data `(X, (Y_j))` of a functional
/// `S -> Tr(SX) + sum_j Tr(Y_j [T_j, S])`.
///
/// `X` is measured in the trace norm and each `Y_j` in the conjugate of
/// `gauge`. Matrices are leading blocks; everything outside is zero.
#[derive(Debug, Clone, PartialEq)]
pub struct TracePart {
    x: CMatrix,
    ys: Vec<CMatrix>,
    gauge: GaugeSpec,
}

impl TracePart {
    /// `ys` may be empty (no commutator terms) or hold one matrix per operator
    /// of the tuple the functional is evaluated against.
    pub fn new(x: CMatrix, ys: Vec<CMatrix>, gauge: GaugeSpec) -> Result<Self, Error> {
        linalg::check_square(&x)?;
        for y in &ys {
            linalg::check_square(y)?;
        }
        Ok(Self { x, ys, gauge })
    }

    pub fn zero(gauge: GaugeSpec) -> Self {
        Self {
            x: CMatrix::zeros(0, 0),
            ys: Vec::new(),
            gauge,
        }
    }

    pub fn x(&self) -> &CMatrix {
        &self.x
    }

    pub fn ys(&self) -> &[CMatrix] {
        &self.ys
    }

    pub fn gauge(&self) -> &GaugeSpec {
        &self.gauge
    }

    pub fn x_extent(&self) -> usize {
        self.x.nrows()
    }

    pub fn y_extent(&self) -> usize {
        self.ys.iter().map(|y| y.nrows()).max().unwrap_or(0)
    }

    /// Dimension an instantiation needs for evaluations to be exact finite sums.
    pub fn required_dimension(&self, bandwidth: usize) -> usize {
        let y = self.y_extent();
        let y = if y > 0 { y + bandwidth } else { 0 };
        self.x_extent().max(y)
    }

    fn check_against(&self, tau: &HermitianTuple) -> Result<(), Error> {
        if !self.ys.is_empty() && self.ys.len() != tau.len() {
            return Err(Error::DimensionMismatch {
                expected: tau.len(),
                found: self.ys.len(),
            });
        }
        let required = self.required_dimension(tau.bandwidth());
        if required > tau.dimension() {
            return Err(Error::SupportExceedsInstantiation {
                required,
                available: tau.dimension(),
            });
        }
        Ok(())
    }

    /// `|X|_1 + sum_j |Y_j|_{g*}`, the norm of the representative for the max
    /// convention on the commutant.
    pub fn norm_m(&self) -> Result<f64, Error> {
        let (x, y) = self.norm_parts()?;
        Ok(x + y)
    }

    /// `max(|X|_1, sum_j |Y_j|_{g*})`, for the sum convention.
    pub fn norm_sum(&self) -> Result<f64, Error> {
        let (x, y) = self.norm_parts()?;
        Ok(x.max(y))
    }

    fn norm_parts(&self) -> Result<(f64, f64), Error> {
        let dual = conjugate_gauge(&self.gauge)?;
        let x = gauge_norm(&GaugeSpec::trace_class(), &self.x)?;
        let mut y = 0.0;
        for m in &self.ys {
            y += gauge_norm(&dual, m)?;
        }
        Ok((x, y))
    }

    /// `alpha * self + beta * other`, padding to common supports.
    pub fn combine(&self, alpha: Complex64, other: &TracePart, beta: Complex64) -> Result<Self, Error> {
        if self.gauge != other.gauge {
            return Err(gauge_mismatch(&self.gauge, &other.gauge));
        }
        let k = self.x_extent().max(other.x_extent());
        let x = linalg::leading(&self.x, k).map(|z| z * alpha)
            + linalg::leading(&other.x, k).map(|z| z * beta);
        let n = self.ys.len().max(other.ys.len());
        let ky = self.y_extent().max(other.y_extent());
        let pick = |ys: &[CMatrix], j: usize| {
            ys.get(j)
                .map(|y| linalg::leading(y, ky))
                .unwrap_or_else(|| CMatrix::zeros(ky, ky))
        };
        let ys = (0..n)
            .map(|j| pick(&self.ys, j).map(|z| z * alpha) + pick(&other.ys, j).map(|z| z * beta))
            .collect();
        Ok(Self {
            x,
            ys,
            gauge: self.gauge.clone(),
        })
    }
}

fn gauge_mismatch(expected: &GaugeSpec, found: &GaugeSpec) -> Error {
    Error::GaugeMismatch {
        expected: expected.label.clone(),
        found: found.label.clone(),
    }
}

/// Leading `k` block of `[T_j, S]`, exact when `k + bandwidth <= dim tau`.
fn commutator_block(tau: &HermitianTuple, j: usize, s: &Operator, k: usize) -> CMatrix {
    let l = k + tau.bandwidth();
    let t = linalg::leading(&tau.matrices()[j], l);
    let full = linalg::commutator_banded(&t, &s.corner(l), tau.bandwidth());
    linalg::leading(&full, k)
}

/// `Tr(SX) + sum_j Tr(Y_j [T_j, S])` as an exact finite sum.
pub fn eval_trace_part(tp: &TracePart, tau: &HermitianTuple, s: &Operator) -> Result<Complex64, Error> {
    tp.check_against(tau)?;
    let sx = tp.x_extent();
    let mut value = linalg::trace_of_product(&s.corner(sx), &tp.x);
    for (j, y) in tp.ys.iter().enumerate() {
        let k = y.nrows();
        if k == 0 {
            continue;
        }
        value += linalg::trace_of_product(y, &commutator_block(tau, j, s, k));
    }
    Ok(value)
}

/// `X' = X - sum_j [T_j, Y_j]`, so that the functional is `S -> Tr(SX')`.
pub fn reduce_to_trace(tp: &TracePart, tau: &HermitianTuple) -> Result<CMatrix, Error> {
    tp.check_against(tau)?;
    let k = tp.required_dimension(tau.bandwidth());
    let mut out = linalg::leading(&tp.x, k);
    for (j, y) in tp.ys.iter().enumerate() {
        if y.nrows() == 0 {
            continue;
        }
        let t = linalg::leading(&tau.matrices()[j], k);
        out -= linalg::commutator_banded(&t, &linalg::leading(y, k), tau.bandwidth());
    }
    Ok(out)
}

/// Density matrix placed on every window of a [`TailStateSpec`].
#[derive(Debug, Clone, PartialEq)]
pub enum TailState {
    /// The vector state of the first coordinate of the window.
    Coordinate,
    /// `I / width`.
    Uniform,
    /// An explicit `width x width` density matrix.
    Fixed(CMatrix),
}

/// States `rho_k` on windows `W_k = [first + k * stride, first + k * stride + width)`
/// marching to infinity; the designated limit of `tr(rho_k S)` models a
/// singular functional.
#[derive(Debug, Clone, PartialEq)]
pub struct TailStateSpec {
    first: usize,
    stride: usize,
    width: usize,
    state: TailState,
    rule: LimitRule,
}

impl TailStateSpec {
    pub fn new(
        first: usize,
        stride: usize,
        width: usize,
        state: TailState,
        rule: LimitRule,
    ) -> Result<Self, Error> {
        if stride == 0 {
            return Err(Error::InvalidState("windows must advance (stride >= 1)".to_string()));
        }
        if width == 0 {
            return Err(Error::InvalidState("windows must be nonempty".to_string()));
        }
        if let TailState::Fixed(rho) = &state {
            if rho.nrows() != width || rho.ncols() != width {
                return Err(Error::InvalidState("state size differs from window width".to_string()));
            }
            let tr = linalg::trace(rho);
            if (tr - Complex64::new(1.0, 0.0)).norm() > 1e-12 {
                return Err(Error::InvalidState(alloc::format!("trace {tr} is not 1")));
            }
            if linalg::hermitian_deviation(rho) > 1e-12 {
                return Err(Error::InvalidState("state is not hermitian".to_string()));
            }
            if linalg::eigen_range_complex(rho).0 < -1e-12 {
                return Err(Error::InvalidState("state is not positive semidefinite".to_string()));
            }
        }
        Ok(Self {
            first,
            stride,
            width,
            state,
            rule,
        })
    }

    /// Vector states `e_first, e_{first+1}, ...`.
    pub fn coordinate(first: usize, rule: LimitRule) -> Self {
        Self {
            first,
            stride: 1,
            width: 1,
            state: TailState::Coordinate,
            rule,
        }
    }

    pub fn rule(&self) -> LimitRule {
        self.rule
    }

    pub fn state(&self) -> &TailState {
        &self.state
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn stride(&self) -> usize {
        self.stride
    }

    pub fn first(&self) -> usize {
        self.first
    }

    /// Window `k` as a half-open index range.
    pub fn window(&self, k: usize) -> (usize, usize) {
        let start = self.first + k * self.stride;
        (start, start + self.width)
    }

    fn density(&self) -> CMatrix {
        match &self.state {
            TailState::Coordinate => {
                let mut rho = CMatrix::zeros(self.width, self.width);
                rho[(0, 0)] = Complex64::new(1.0, 0.0);
                rho
            }
            TailState::Uniform => CMatrix::identity(self.width, self.width).unscale(self.width as f64),
            TailState::Fixed(rho) => rho.clone(),
        }
    }

    /// `tr(rho_k S)` for `k < depth`.
    pub fn sequence(&self, s: &Operator, depth: usize) -> Vec<Complex64> {
        let rho = self.density();
        (0..depth)
            .map(|k| {
                let w = self.window(k);
                linalg::trace_of_product(&rho, &s.block(w, w))
            })
            .collect()
    }
}

/// The designated limit of `tr(rho_k S)`.
///
/// Finitely supported operators give exactly zero: every window from some
/// index on lies outside the support, so the sequence is eventually zero.
pub fn eval_singular_part(ts: &TailStateSpec, s: &Operator, depth: usize) -> Result<Complex64, Error> {
    if s.is_finitely_supported() {
        return Ok(ZERO);
    }
    detect_limit(&ts.sequence(s, depth), ts.rule)
}

/// `psi = sum_i weight_i * (tail-state limit)_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedTail {
    pub weight: Complex64,
    pub tail: TailStateSpec,
}

/// A functional given in decomposed form: an optional trace part plus a
/// combination of tail-state limits.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionalSpec {
    trace_part: Option<TracePart>,
    singular_part: Vec<WeightedTail>,
}

impl FunctionalSpec {
    pub fn new(trace_part: Option<TracePart>, singular_part: Vec<WeightedTail>) -> Result<Self, Error> {
        if trace_part.is_none() && singular_part.is_empty() {
            return Err(Error::InvalidArgument(
                "a functional needs a trace part or a singular part".to_string(),
            ));
        }
        Ok(Self {
            trace_part,
            singular_part,
        })
    }

    pub fn trace_only(tp: TracePart) -> Self {
        Self {
            trace_part: Some(tp),
            singular_part: Vec::new(),
        }
    }

    pub fn singular_only(parts: Vec<WeightedTail>) -> Result<Self, Error> {
        Self::new(None, parts)
    }

    pub fn zero(gauge: GaugeSpec) -> Self {
        Self::trace_only(TracePart::zero(gauge))
    }

    pub fn trace_part(&self) -> Option<&TracePart> {
        self.trace_part.as_ref()
    }

    pub fn singular_part(&self) -> &[WeightedTail] {
        &self.singular_part
    }

    /// The ultraweak part (trace part alone), when present.
    pub fn absolutely_continuous(&self) -> Option<FunctionalSpec> {
        self.trace_part.clone().map(Self::trace_only)
    }

    /// The singular part alone, when present.
    pub fn singular(&self) -> Option<FunctionalSpec> {
        (!self.singular_part.is_empty()).then(|| Self {
            trace_part: None,
            singular_part: self.singular_part.clone(),
        })
    }

    /// `sum_i |weight_i|`; each tail-state limit has norm at most one.
    pub fn singular_weight(&self) -> f64 {
        self.singular_part.iter().map(|w| w.weight.norm()).sum()
    }

    /// `alpha * self + beta * other`, part by part.
    pub fn combine(&self, alpha: Complex64, other: &FunctionalSpec, beta: Complex64) -> Result<Self, Error> {
        let trace_part = match (&self.trace_part, &other.trace_part) {
            (None, None) => None,
            (Some(a), None) => Some(a.combine(alpha, &TracePart::zero(a.gauge.clone()), ZERO)?),
            (None, Some(b)) => Some(TracePart::zero(b.gauge.clone()).combine(ZERO, b, beta)?),
            (Some(a), Some(b)) => Some(a.combine(alpha, b, beta)?),
        };
        let singular_part = self
            .singular_part
            .iter()
            .map(|w| (w, alpha))
            .chain(other.singular_part.iter().map(|w| (w, beta)))
            .map(|(w, c)| WeightedTail {
                weight: w.weight * c,
                tail: w.tail.clone(),
            })
            .collect();
        Self::new(trace_part, singular_part)
    }

    fn check_gauge(&self, g: &GaugeSpec) -> Result<(), Error> {
        match &self.trace_part {
            Some(tp) if tp.gauge != *g => Err(gauge_mismatch(&tp.gauge, g)),
            _ => Ok(()),
        }
    }
}

/// Trace part plus singular part; `NotConverged` propagates from the latter.
pub fn eval_functional(
    phi: &FunctionalSpec,
    tau: &HermitianTuple,
    s: &Operator,
    depth: usize,
) -> Result<Complex64, Error> {
    let mut value = match &phi.trace_part {
        Some(tp) => eval_trace_part(tp, tau, s)?,
        None => ZERO,
    };
    for part in &phi.singular_part {
        value += part.weight * eval_singular_part(&part.tail, s, depth)?;
    }
    Ok(value)
}

/// Sampled lower and certified upper bounds on the norm of a functional, for
/// both commutant norm conventions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormBounds {
    /// `max_S |phi(S)| / |||S|||_M` over the samples.
    pub lower: f64,
    /// `|X|_1 + sum_j |Y_j|_{g*} + sum_i |w_i|`.
    pub upper: f64,
    /// As `lower` with `|||S|||` in place of `|||S|||_M`.
    pub lower_sum: f64,
    /// `max(|X|_1 + sum_i |w_i|, sum_j |Y_j|_{g*})`.
    pub upper_sum: f64,
    pub evaluated: usize,
    /// Samples skipped because a limit was not detected or the sample is zero.
    pub skipped: usize,
}

/// Norm bounds from the decomposed form and a sample set. Samples must be
/// exactly normable (finitely supported, possibly plus a scalar).
pub fn functional_norm_bounds(
    phi: &FunctionalSpec,
    tau: &HermitianTuple,
    g: &GaugeSpec,
    samples: &[Operator],
    depth: usize,
) -> Result<NormBounds, Error> {
    phi.check_gauge(g)?;
    let singular = phi.singular_weight();
    let (x_norm, y_norm) = match &phi.trace_part {
        Some(tp) => tp.norm_parts()?,
        None => (0.0, 0.0),
    };
    let mut bounds = NormBounds {
        lower: 0.0,
        upper: x_norm + y_norm + singular,
        lower_sum: 0.0,
        upper_sum: (x_norm + singular).max(y_norm),
        evaluated: 0,
        skipped: 0,
    };
    for s in samples {
        let value = match eval_functional(phi, tau, s, depth) {
            Ok(v) => v,
            Err(Error::NotConverged { .. }) => {
                bounds.skipped += 1;
                continue;
            }
            Err(e) => return Err(e),
        };
        let norm_m = e_norm_max_operator(tau, g, s)?;
        if norm_m == 0.0 {
            bounds.skipped += 1;
            continue;
        }
        let norm_sum = e_norm_sum_operator(tau, g, s)?;
        bounds.evaluated += 1;
        bounds.lower = bounds.lower.max(value.norm() / norm_m);
        bounds.lower_sum = bounds.lower_sum.max(value.norm() / norm_sum);
    }
    Ok(bounds)
}

/// A representative `(x, (y_j))` of a class in `(C_1 x G_{g*}^n) / N`, where
/// `N = {(sum_j [T_j, u_j], (u_j))}` is the annihilator of the commutant.
#[derive(Debug, Clone, PartialEq)]
pub struct PredualElement {
    representative: TracePart,
}

impl PredualElement {
    pub fn new(x: CMatrix, ys: Vec<CMatrix>, gauge: GaugeSpec) -> Result<Self, Error> {
        Ok(Self {
            representative: TracePart::new(x, ys, gauge)?,
        })
    }

    /// The element `(sum_j [T_j, y_j], (y_j))` of `N`.
    pub fn in_null_space(tau: &HermitianTuple, ys: Vec<CMatrix>, gauge: GaugeSpec) -> Result<Self, Error> {
        let zero = TracePart::new(CMatrix::zeros(0, 0), ys, gauge)?;
        let x = -reduce_to_trace(&zero, tau)?;
        let TracePart { ys, gauge, .. } = zero;
        Self::new(x, ys, gauge)
    }

    pub fn representative(&self) -> &TracePart {
        &self.representative
    }

    /// `|x|_1 + sum_j |y_j|_{g*}`.
    pub fn norm_m(&self) -> Result<f64, Error> {
        self.representative.norm_m()
    }

    /// `max(|x|_1, sum_j |y_j|_{g*})`.
    pub fn norm_sum(&self) -> Result<f64, Error> {
        self.representative.norm_sum()
    }

    /// `Tr(Sx + sum_j y_j [T_j, S])`.
    pub fn pairing(&self, tau: &HermitianTuple, s: &Operator) -> Result<Complex64, Error> {
        eval_trace_part(&self.representative, tau, s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuotientParams {
    pub max_iterations: usize,
    pub step_scale: f64,
    pub stop_tolerance: f64,
    pub patience: usize,
}

impl Default for QuotientParams {
    fn default() -> Self {
        Self {
            max_iterations: 500,
            step_scale: 1.0,
            stop_tolerance: 1e-10,
            patience: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuotientBounds {
    /// `max_S |pairing(S)| / |||S|||_M` over the samples.
    pub lower: f64,
    /// Smallest `||(x + sum_j [T_j, u_j], (y_j + u_j))||_M` found.
    pub upper: f64,
    /// Sampled bound for the other convention (`|||S|||` denominators).
    pub lower_sum: f64,
    /// `max(|x'|_1, sum_j |y'_j|_{g*})` at the best representative.
    pub upper_sum: f64,
    /// Norm of the given representative.
    pub initial: f64,
    pub iterations: usize,
    pub skipped: usize,
    /// Best representative found.
    pub best: PredualElement,
}

/// Bounds on the quotient norm of `pe`. The upper bound minimizes the
/// M-norm over representatives `(x + sum_j [T_j, u_j], (y_j + u_j))` with each
/// `u_j` supported in the leading `window` coordinates, by subgradient descent
/// started from the better of `u = 0` and `u = -y`.
pub fn quotient_norm_bounds(
    pe: &PredualElement,
    tau: &HermitianTuple,
    g: &GaugeSpec,
    window: usize,
    samples: &[Operator],
    params: &QuotientParams,
) -> Result<QuotientBounds, Error> {
    let rep = &pe.representative;
    if rep.gauge != *g {
        return Err(gauge_mismatch(&rep.gauge, g));
    }
    rep.check_against(tau)?;
    if window < rep.y_extent() {
        return Err(Error::InvalidArgument(alloc::format!(
            "window {window} does not contain the support {} of the y_j",
            rep.y_extent()
        )));
    }
    let k = tau.exact_block(window)?.max(rep.x_extent());
    let n = tau.len();
    let band = tau.bandwidth();
    let dual = conjugate_gauge(g)?;
    let trace_class = GaugeSpec::trace_class();
    let ts: Vec<CMatrix> = tau.matrices().iter().map(|t| linalg::leading(t, k)).collect();
    let x = linalg::leading(&rep.x, k);
    let y: Vec<CMatrix> = (0..n)
        .map(|j| match rep.ys.get(j) {
            Some(m) => linalg::leading(m, window),
            None => CMatrix::zeros(window, window),
        })
        .collect();

    let residual = |u: &[CMatrix]| -> CMatrix {
        let mut z = x.clone();
        for (t, uj) in ts.iter().zip(u) {
            z += linalg::commutator_banded(t, &linalg::leading(uj, k), band);
        }
        z
    };
    let objective = |u: &[CMatrix]| -> f64 {
        let mut f = crate::gauges::gauge_norm_of(&trace_class, &residual(u));
        for (yj, uj) in y.iter().zip(u) {
            f += crate::gauges::gauge_norm_of(&dual, &(yj + uj));
        }
        f
    };

    let zero_u: Vec<CMatrix> = (0..n).map(|_| CMatrix::zeros(window, window)).collect();
    let minus_y: Vec<CMatrix> = y.iter().map(|m| -m).collect();
    let initial = objective(&zero_u);
    let reduced = objective(&minus_y);
    let (mut u, start) = if reduced < initial {
        (minus_y, reduced)
    } else {
        (zero_u, initial)
    };
    let mut best = (start, u.clone());
    let mut reference = start;
    let mut stall = 0;
    let mut step_constant = None;
    let mut iterations = 0;
    if start > 0.0 {
        for it in 1..=params.max_iterations {
            iterations = it;
            let (_, gz) = gauge_subgradient(&trace_class, &residual(&u));
            let mut dirs: Vec<DMatrix<Complex64>> = Vec::with_capacity(n);
            for j in 0..n {
                let from_x = linalg::commutator_banded(&ts[j], &gz, band);
                let (_, gy) = gauge_subgradient(&dual, &(&y[j] + &u[j]));
                dirs.push(linalg::leading(&from_x, window) + gy);
            }
            let dnorm2: f64 = dirs.iter().map(|d| { let f = linalg::frobenius(d); f * f }).sum();
            if dnorm2 == 0.0 {
                break;
            }
            let c = *step_constant
                .get_or_insert(params.step_scale * crate::qau::TARGET_DECREASE * start / dnorm2);
            let step = c / libm::sqrt(it as f64);
            for (uj, d) in u.iter_mut().zip(&dirs) {
                *uj -= d.scale(step);
            }
            let f = objective(&u);
            if f < best.0 {
                best = (f, u.clone());
            }
            if reference - best.0 >= params.stop_tolerance {
                reference = best.0;
                stall = 0;
            } else {
                stall += 1;
                if stall >= params.patience {
                    break;
                }
            }
        }
    }

    let best_x = residual(&best.1);
    let best_ys: Vec<CMatrix> = y.iter().zip(&best.1).map(|(a, b)| a + b).collect();
    let best_pe = PredualElement::new(best_x, best_ys, g.clone())?;
    let upper = best_pe.norm_m()?;
    let upper_sum = best_pe.norm_sum()?;

    let mut lower = 0.0_f64;
    let mut lower_sum = 0.0_f64;
    let mut skipped = 0;
    for s in samples {
        let norm_m = e_norm_max_operator(tau, g, s)?;
        if norm_m == 0.0 {
            skipped += 1;
            continue;
        }
        let value = pe.pairing(tau, s)?.norm();
        lower = lower.max(value / norm_m);
        lower_sum = lower_sum.max(value / e_norm_sum_operator(tau, g, s)?);
    }
    Ok(QuotientBounds {
        lower,
        upper,
        lower_sum,
        upper_sum,
        initial: pe.norm_m()?,
        iterations,
        skipped,
        best: best_pe,
    })
}
