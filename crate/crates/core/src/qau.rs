//! Quasicentral approximate units.
//!
//! A unit element is a hermitian `A` with `P_m <= A <= I` supported in the
//! first `r` coordinates (`m` the floor, `r` the cap). Such an `A` is
//! `I_m ⊕ B ⊕ 0` with `0 <= B <= I` on the coordinates `m..r`, which makes the
//! Frobenius projection onto the constraint set a single spectral clamp of
//! the middle block.

use alloc::string::ToString;
use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::error::Error;
use crate::gauges::{gauge_norm_fast, gauge_norm_of, gauge_subgradient, GaugeSpec};
use crate::idealops::{commutators_unchecked, HermitianTuple};
use crate::linalg::{self, CMatrix, Scalar};

/// Certificate tolerance on eigenvalue constraints.
pub const CERT_TOLERANCE: f64 = 1e-10;
/// Slack allowed when comparing neighbouring cells of a [`KEstimateTable`].
pub const TABLE_TOLERANCE: f64 = 1e-6;
/// Fraction of the warm-start objective the first step aims to remove.
pub const TARGET_DECREASE: f64 = 0.01;
/// Rounds of alternating projections used when monotonizing a schedule.
pub const DYKSTRA_ROUNDS: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverParams {
    pub max_iterations: usize,
    /// Multiplier of the automatic step constant.
    pub step_scale: f64,
    /// Minimal improvement of the best value that resets the stall counter.
    pub stop_tolerance: f64,
    /// Iterations without such an improvement before stopping.
    pub patience: usize,
    /// Carried into reports; the solver itself is deterministic.
    pub seed: u64,
}

impl Default for SolverParams {
    fn default() -> Self {
        Self {
            max_iterations: 2000,
            step_scale: 1.0,
            stop_tolerance: 1e-8,
            patience: 50,
            seed: 0,
        }
    }
}

/// Constraint residuals of a unit element.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitCertificate {
    pub min_eigenvalue: f64,
    pub max_eigenvalue: f64,
    /// `max(0, -lambda_min(A - P_m))`.
    pub floor_residual: f64,
    /// Largest entry outside the leading `cap x cap` block.
    pub support_leak: f64,
}

impl UnitCertificate {
    pub fn ok(&self) -> bool {
        self.min_eigenvalue >= -CERT_TOLERANCE
            && self.max_eigenvalue <= 1.0 + CERT_TOLERANCE
            && self.floor_residual <= CERT_TOLERANCE
            && self.support_leak == 0.0
    }
}

/// A finite-rank `A` with `P_floor <= A <= I`, supported in the first `cap`
/// coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitElement {
    a: CMatrix,
    floor: usize,
    cap: usize,
    certificate: UnitCertificate,
}

impl UnitElement {
    /// Certifies `a` against the window; fails if any constraint is violated.
    pub fn new(a: CMatrix, floor: usize, cap: usize) -> Result<Self, Error> {
        linalg::check_square(&a)?;
        if floor > cap || cap > a.nrows() {
            return Err(Error::InfeasibleWindow {
                floor,
                cap,
                reason: "need floor <= cap <= dimension",
            });
        }
        let certificate = certify(&a, floor, cap);
        if !certificate.ok() {
            return Err(Error::ProjectionFailed(alloc::format!("{certificate:?}")));
        }
        Ok(Self {
            a,
            floor,
            cap,
            certificate,
        })
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.a
    }

    pub fn floor(&self) -> usize {
        self.floor
    }

    pub fn cap(&self) -> usize {
        self.cap
    }

    pub fn certificate(&self) -> &UnitCertificate {
        &self.certificate
    }

    /// The leading `cap x cap` block, which carries all nonzero entries.
    pub fn block(&self) -> CMatrix {
        linalg::leading(&self.a, self.cap)
    }

    /// `max_j |[T_j, A]|_g`, computed on the block where it is exact.
    pub fn commutator_norm(&self, tau: &HermitianTuple, g: &GaugeSpec) -> Result<f64, Error> {
        let k = tau.exact_block(self.cap)?;
        let block = tau.leading(k)?;
        let a = linalg::leading(&self.a, k);
        Ok(commutators_unchecked(&block, &a)
            .iter()
            .map(|c| gauge_norm_fast(g, c))
            .fold(0.0, f64::max))
    }
}

fn certify(a: &CMatrix, floor: usize, cap: usize) -> UnitCertificate {
    let n = a.nrows();
    let mut support_leak = 0.0_f64;
    for j in 0..n {
        for i in 0..n {
            if i >= cap || j >= cap {
                support_leak = support_leak.max(a[(i, j)].norm());
            }
        }
    }
    let block = linalg::leading(a, cap);
    let (min_eigenvalue, max_eigenvalue) = linalg::eigen_range_complex(&block);
    let mut shifted = block;
    for i in 0..floor {
        shifted[(i, i)] -= 1.0;
    }
    let (floor_min, _) = linalg::eigen_range_complex(&shifted);
    UnitCertificate {
        min_eigenvalue,
        max_eigenvalue,
        floor_residual: (-floor_min).max(0.0),
        support_leak,
    }
}

fn check_window(tau: &HermitianTuple, floor: usize, cap: usize) -> Result<(), Error> {
    let infeasible = |reason| Err(Error::InfeasibleWindow { floor, cap, reason });
    if floor == 0 {
        return infeasible("floor must be positive");
    }
    if floor > cap {
        return infeasible("floor exceeds cap");
    }
    if cap + tau.bandwidth() > tau.dimension() {
        return infeasible("cap plus bandwidth exceeds the instantiated dimension");
    }
    Ok(())
}

/// Diagonal of the linear ramp: 1 up to `floor`, `(cap - j) / (cap - floor)` in
/// between, 0 from `cap` on (1-based `j`).
pub fn ramp_profile(floor: usize, cap: usize, len: usize) -> Vec<f64> {
    (1..=len)
        .map(|j| {
            if j <= floor {
                1.0
            } else if j >= cap {
                0.0
            } else {
                (cap - j) as f64 / (cap - floor) as f64
            }
        })
        .collect()
}

/// The diagonal ramp unit for the window `(floor, cap)`, `0 < floor < cap`.
pub fn ramp_unit(tau: &HermitianTuple, floor: usize, cap: usize) -> Result<UnitElement, Error> {
    check_window(tau, floor, cap)?;
    if floor == cap {
        return Err(Error::InfeasibleWindow {
            floor,
            cap,
            reason: "a ramp needs floor < cap",
        });
    }
    UnitElement::new(ramp_matrix(floor, cap, tau.dimension()), floor, cap)
}

fn ramp_matrix(floor: usize, cap: usize, n: usize) -> CMatrix {
    let profile = ramp_profile(floor, cap, n);
    CMatrix::from_fn(n, n, |i, j| {
        if i == j {
            profile[i].into()
        } else {
            0.0.into()
        }
    })
}

fn projection_matrix(rank: usize, n: usize) -> CMatrix {
    CMatrix::from_fn(n, n, |i, j| if i == j && i < rank { 1.0.into() } else { 0.0.into() })
}

/// Frobenius projection onto `{P_floor <= A <= I, supp A within cap}` for an
/// `L x L` matrix, `L >= cap`.
fn project_unit<T: Scalar>(a: &DMatrix<T>, floor: usize, cap: usize) -> DMatrix<T> {
    let l = a.nrows();
    let mut out = DMatrix::<T>::zeros(l, l);
    for i in 0..floor {
        out[(i, i)] = T::one();
    }
    if cap > floor {
        let w = cap - floor;
        let mid = a.view((floor, floor), (w, w)).clone_owned();
        out.view_mut((floor, floor), (w, w))
            .copy_from(&linalg::clamp_spectrum(&mid, 0.0, 1.0));
    }
    out
}

/// Why the solver stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverStatus {
    /// The warm start already has objective zero.
    WarmStartOptimal,
    /// Degenerate window `floor == cap`: the only feasible point is `P_floor`.
    Degenerate,
    /// The projected subgradient vanished.
    Stationary,
    /// No improvement above the stop tolerance within the patience window.
    Stalled,
    MaxIterations,
}

impl SolverStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            SolverStatus::WarmStartOptimal => "warm-start-optimal",
            SolverStatus::Degenerate => "degenerate",
            SolverStatus::Stationary => "stationary",
            SolverStatus::Stalled => "stalled",
            SolverStatus::MaxIterations => "max-iterations",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    pub value: f64,
    pub best: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizedUnit {
    pub unit: UnitElement,
    /// `max_j |[T_j, A]|_g` at the returned unit.
    pub value: f64,
    /// Objective of the ramp warm start.
    pub warm_start_value: f64,
    pub iterations: usize,
    pub status: SolverStatus,
    pub trace: Vec<IterationRecord>,
}

/// Minimizes `max_j |[T_j, A]|_g` over the unit elements of the window by
/// projected subgradient descent started at the ramp.
///
/// Steps are `c / sqrt(k)` along the subgradient of the active (lowest-index
/// maximizing) commutator, with `c` scaled from the warm-start objective. The
/// best iterate is returned, so the result is never worse than the ramp.
pub fn optimize_unit(
    tau: &HermitianTuple,
    g: &GaugeSpec,
    floor: usize,
    cap: usize,
    params: &SolverParams,
) -> Result<OptimizedUnit, Error> {
    check_window(tau, floor, cap)?;
    let n = tau.dimension();
    if floor == cap {
        let unit = UnitElement::new(projection_matrix(floor, n), floor, cap)?;
        let value = unit.commutator_norm(tau, g)?;
        return Ok(OptimizedUnit {
            unit,
            value,
            warm_start_value: value,
            iterations: 0,
            status: SolverStatus::Degenerate,
            trace: Vec::new(),
        });
    }
    let l = tau.exact_block(cap)?;
    let block = tau.leading(l)?;
    let run = if block.is_real() {
        let (a, run) = descend::<f64>(&block, g, floor, cap, params);
        (linalg::to_complex(&a), run)
    } else {
        let (a, run) = descend::<num_complex::Complex64>(&block, g, floor, cap, params);
        (linalg::to_complex(&a), run)
    };
    let (a_block, (warm_start_value, iterations, status, trace)) = run;
    let mut a = CMatrix::zeros(n, n);
    a.view_mut((0, 0), (l, l)).copy_from(&a_block);
    let unit = UnitElement::new(a, floor, cap)?;
    let value = unit.commutator_norm(tau, g)?;
    Ok(OptimizedUnit {
        unit,
        value,
        warm_start_value,
        iterations,
        status,
        trace,
    })
}

type DescentRun = (f64, usize, SolverStatus, Vec<IterationRecord>);

fn descend<T: Scalar>(
    block: &HermitianTuple,
    g: &GaugeSpec,
    floor: usize,
    cap: usize,
    params: &SolverParams,
) -> (DMatrix<T>, DescentRun) {
    let ts = block.converted::<T>();
    let band = block.bandwidth();
    let l = block.dimension();
    let width = cap - floor;

    let evaluate = |a: &DMatrix<T>| -> (f64, usize, Vec<DMatrix<T>>) {
        let ks: Vec<DMatrix<T>> = ts
            .iter()
            .map(|t| linalg::commutator_banded(t, a, band))
            .collect();
        let mut best = (f64::NEG_INFINITY, 0);
        for (j, k) in ks.iter().enumerate() {
            let v = gauge_norm_of(g, k);
            if v > best.0 {
                best = (v, j);
            }
        }
        (best.0, best.1, ks)
    };

    let ramp = ramp_profile(floor, cap, l);
    let mut a = DMatrix::<T>::from_fn(l, l, |i, j| {
        if i == j {
            T::from_real(ramp[i])
        } else {
            T::zero()
        }
    });
    let (warm, mut active, mut ks) = evaluate(&a);
    let mut trace = Vec::new();
    if warm == 0.0 {
        return (a, (warm, 0, SolverStatus::WarmStartOptimal, trace));
    }

    let mut best_value = warm;
    let mut best_a = a.clone();
    let mut reference = warm;
    let mut stall = 0;
    let mut step_constant = None;
    let mut status = SolverStatus::MaxIterations;
    let mut iterations = 0;

    for k in 1..=params.max_iterations {
        iterations = k;
        let (_, sub) = gauge_subgradient(g, &ks[active]);
        let full = linalg::commutator_banded(&ts[active], &sub, band);
        let mid = full.view((floor, floor), (width, width));
        let direction = (mid + mid.adjoint()).scale(0.5);
        let dnorm = linalg::frobenius(&direction);
        if dnorm == 0.0 {
            status = SolverStatus::Stationary;
            break;
        }
        // Polyak step aimed at a TARGET_DECREASE fraction of the warm start
        let c = *step_constant
            .get_or_insert(params.step_scale * TARGET_DECREASE * warm / (dnorm * dnorm));
        let step = c / libm::sqrt(k as f64);
        let mut trial = a.clone();
        let moved = a.view((floor, floor), (width, width)) - direction.scale(step);
        trial.view_mut((floor, floor), (width, width)).copy_from(&moved);
        a = project_unit(&trial, floor, cap);
        let (value, next_active, next_ks) = evaluate(&a);
        active = next_active;
        ks = next_ks;
        if value < best_value {
            best_value = value;
            best_a = a.clone();
        }
        trace.push(IterationRecord {
            iteration: k,
            value,
            best: best_value,
        });
        if reference - best_value >= params.stop_tolerance {
            reference = best_value;
            stall = 0;
        } else {
            stall += 1;
            if stall >= params.patience {
                status = SolverStatus::Stalled;
                break;
            }
        }
    }
    (best_a, (warm, iterations, status, trace))
}

/// Per-cell status of a [`KEstimateTable`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellStatus {
    Ok(SolverStatus),
    /// The cell breaks the monotonicity of the table beyond tolerance.
    MonotonicityViolation(SolverStatus),
}

impl CellStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            CellStatus::Ok(s) => s.as_str(),
            CellStatus::MonotonicityViolation(_) => "monotonicity-violation",
        }
    }

    pub fn is_failure(&self) -> bool {
        matches!(self, CellStatus::MonotonicityViolation(_))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KEstimateCell {
    pub floor: usize,
    pub cap: usize,
    /// Achieved minimum of `|[tau, A]|_g` over the window.
    pub beta: f64,
    pub warm_start_value: f64,
    pub iterations: usize,
    pub status: CellStatus,
}

/// Table of window minima `beta(floor, cap)`.
#[derive(Debug, Clone, PartialEq)]
pub struct KEstimateTable {
    pub cells: Vec<KEstimateCell>,
    /// `max_floor min_cap beta`.
    pub estimate: f64,
    /// Pairs of cell indices `(a, b)` whose ordering contradicts the
    /// monotonicity of the table.
    pub violations: Vec<(usize, usize)>,
}

impl KEstimateTable {
    /// Sorts cells lexicographically by `(floor, cap)`, checks monotonicity
    /// and computes the summary estimate.
    pub fn from_cells(mut cells: Vec<KEstimateCell>) -> Self {
        cells.sort_by_key(|c| (c.floor, c.cap));
        let mut violations = Vec::new();
        for (i, a) in cells.iter().enumerate() {
            for (j, b) in cells.iter().enumerate() {
                // larger cap: smaller beta; larger floor: larger beta
                let cap_order = a.floor == b.floor && a.cap > b.cap && a.beta > b.beta + TABLE_TOLERANCE;
                let floor_order = a.cap == b.cap && a.floor > b.floor && a.beta + TABLE_TOLERANCE < b.beta;
                if cap_order || floor_order {
                    violations.push((i, j));
                }
            }
        }
        for &(i, _) in &violations {
            if let CellStatus::Ok(s) = cells[i].status {
                cells[i].status = CellStatus::MonotonicityViolation(s);
            }
        }
        let mut estimate = 0.0_f64;
        let mut i = 0;
        while i < cells.len() {
            let floor = cells[i].floor;
            let mut row_min = f64::INFINITY;
            while i < cells.len() && cells[i].floor == floor {
                row_min = row_min.min(cells[i].beta);
                i += 1;
            }
            estimate = estimate.max(row_min);
        }
        Self {
            cells,
            estimate,
            violations,
        }
    }

    pub fn failures(&self) -> usize {
        self.cells.iter().filter(|c| c.status.is_failure()).count()
    }

    pub fn beta(&self, floor: usize, cap: usize) -> Option<f64> {
        self.cells
            .iter()
            .find(|c| c.floor == floor && c.cap == cap)
            .map(|c| c.beta)
    }
}

pub fn k_estimate_cell(
    tau: &HermitianTuple,
    g: &GaugeSpec,
    floor: usize,
    cap: usize,
    params: &SolverParams,
) -> Result<KEstimateCell, Error> {
    let result = optimize_unit(tau, g, floor, cap, params)?;
    Ok(KEstimateCell {
        floor,
        cap,
        beta: result.value,
        warm_start_value: result.warm_start_value,
        iterations: result.iterations,
        status: CellStatus::Ok(result.status),
    })
}

/// Every `(floor, cap)` cell of the grid, evaluated sequentially in
/// lexicographic order. Any infeasible cell aborts.
pub fn k_estimate(
    tau: &HermitianTuple,
    g: &GaugeSpec,
    floors: &[usize],
    caps: &[usize],
    params: &SolverParams,
) -> Result<KEstimateTable, Error> {
    for &m in floors {
        for &r in caps {
            check_window(tau, m, r)?;
        }
    }
    let mut cells = Vec::with_capacity(floors.len() * caps.len());
    for &m in floors {
        for &r in caps {
            cells.push(k_estimate_cell(tau, g, m, r, params)?);
        }
    }
    Ok(KEstimateTable::from_cells(cells))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScheduleMode {
    /// Diagonal ramps; monotone by construction.
    Ramp,
    /// Optimized units, each pushed above its predecessor and re-certified.
    OptimizedThenMonotonized(SolverParams),
}

/// A monotone sequence of unit elements with certified commutator norms.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitSchedule {
    pub steps: Vec<UnitElement>,
    pub commutator_norms: Vec<f64>,
    pub gauge: GaugeSpec,
}

impl UnitSchedule {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Re-checks certificates, monotonicity, window growth and the stored
    /// commutator norms.
    pub fn verify(&self, tau: &HermitianTuple) -> Result<(), Error> {
        validate_windows(
            &self
                .steps
                .iter()
                .map(|s| (s.floor, s.cap))
                .collect::<Vec<_>>(),
        )?;
        for (k, step) in self.steps.iter().enumerate() {
            if !certify(&step.a, step.floor, step.cap).ok() {
                return Err(Error::InvalidSchedule(alloc::format!("step {k} fails its certificate")));
            }
            let norm = step.commutator_norm(tau, &self.gauge)?;
            if (norm - self.commutator_norms[k]).abs() > CERT_TOLERANCE {
                return Err(Error::InvalidSchedule(alloc::format!(
                    "step {k}: stored commutator norm differs from recomputation"
                )));
            }
            if k > 0 {
                let gap = order_gap(&self.steps[k - 1].a, &step.a, step.cap);
                if gap < -CERT_TOLERANCE {
                    return Err(Error::InvalidSchedule(alloc::format!(
                        "step {k} is not above step {}",
                        k - 1
                    )));
                }
            }
        }
        Ok(())
    }
}

/// `lambda_min(upper - lower)` on the leading `cap` block.
fn order_gap(lower: &CMatrix, upper: &CMatrix, cap: usize) -> f64 {
    let diff = linalg::leading(upper, cap) - linalg::leading(lower, cap);
    linalg::eigen_range_complex(&diff).0
}

fn validate_windows(windows: &[(usize, usize)]) -> Result<(), Error> {
    if windows.is_empty() {
        return Err(Error::InvalidSchedule("no windows".to_string()));
    }
    for k in 1..windows.len() {
        let (m0, r0) = windows[k - 1];
        let (m1, r1) = windows[k];
        if m1 < m0 || r1 <= r0 {
            return Err(Error::InvalidSchedule(alloc::format!(
                "window {k} must have floor >= {m0} and cap > {r0}"
            )));
        }
        if k >= 2 && m1 < windows[k - 2].1 {
            return Err(Error::InvalidSchedule(alloc::format!(
                "floor of window {k} is below the cap of window {}",
                k - 2
            )));
        }
    }
    Ok(())
}

/// Builds a monotone schedule over the given windows.
pub fn build_schedule(
    tau: &HermitianTuple,
    g: &GaugeSpec,
    windows: &[(usize, usize)],
    mode: ScheduleMode,
) -> Result<UnitSchedule, Error> {
    validate_windows(windows)?;
    let mut steps: Vec<UnitElement> = Vec::with_capacity(windows.len());
    for (k, &(m, r)) in windows.iter().enumerate() {
        let unit = match mode {
            ScheduleMode::Ramp => ramp_unit(tau, m, r)?,
            ScheduleMode::OptimizedThenMonotonized(params) => {
                let optimized = optimize_unit(tau, g, m, r, &params)?.unit;
                match steps.last() {
                    None => optimized,
                    Some(prev) => monotonize(prev, &optimized, k)?,
                }
            }
        };
        steps.push(unit);
    }
    let commutator_norms = steps
        .iter()
        .map(|s| s.commutator_norm(tau, g))
        .collect::<Result<Vec<_>, _>>()?;
    let schedule = UnitSchedule {
        steps,
        commutator_norms,
        gauge: g.clone(),
    };
    if let ScheduleMode::OptimizedThenMonotonized(_) = mode {
        schedule.verify(tau).map_err(|e| Error::MonotonizationFailed {
            step: windows.len() - 1,
            reason: alloc::format!("{e}"),
        })?;
    }
    Ok(schedule)
}

/// Pushes `current` above `prev` inside the window of `current`: Dykstra's
/// alternating projections between `{A >= prev}` and the unit set, then, if the
/// order is still violated, the smallest blend towards `P_max(floor, prev.cap)`
/// that restores it.
fn monotonize(prev: &UnitElement, current: &UnitElement, step: usize) -> Result<UnitElement, Error> {
    let (m, r) = (current.floor, current.cap);
    let n = current.a.nrows();
    let lower = linalg::leading(&prev.a, r);
    let mut x = linalg::leading(&current.a, r);
    let mut p = CMatrix::zeros(r, r);
    let mut q = CMatrix::zeros(r, r);
    for _ in 0..DYKSTRA_ROUNDS {
        let y = {
            let shifted = &x + &p - &lower;
            &lower + linalg::clamp_spectrum(&shifted, 0.0, f64::INFINITY)
        };
        p = &x + &p - &y;
        let next = project_unit(&(&y + &q), m, r);
        q = &y + &q - &next;
        x = next;
        if linalg::eigen_range_complex(&(&x - &lower)).0 >= -CERT_TOLERANCE / 10.0 {
            break;
        }
    }
    if linalg::eigen_range_complex(&(&x - &lower)).0 < -CERT_TOLERANCE / 10.0 {
        let safe = projection_matrix(m.max(prev.cap), r);
        let gap_at = |t: f64| {
            let blend = x.scale(1.0 - t) + safe.scale(t);
            linalg::eigen_range_complex(&(&blend - &lower)).0
        };
        if gap_at(1.0) < -CERT_TOLERANCE {
            return Err(Error::MonotonizationFailed {
                step,
                reason: "no unit element of the window dominates the previous step".to_string(),
            });
        }
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..40 {
            let mid = 0.5 * (lo + hi);
            if gap_at(mid) >= -CERT_TOLERANCE / 10.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        x = x.scale(1.0 - hi) + safe.scale(hi);
    }
    let mut a = CMatrix::zeros(n, n);
    a.view_mut((0, 0), (r, r)).copy_from(&x);
    UnitElement::new(a, m, r).map_err(|e| Error::MonotonizationFailed {
        step,
        reason: alloc::format!("{e}"),
    })
}
