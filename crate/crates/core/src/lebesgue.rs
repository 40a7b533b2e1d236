//! Recovery of the ultraweak part of a functional along a quasicentral
//! schedule, `phi_a(S) = lim_k phi(A_k S)`, with the explicit per-step error
//! bound and the projection identities of `phi -> phi_a`.

use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::Error;
use crate::functionals::{
    eval_functional, eval_trace_part, functional_norm_bounds, FunctionalSpec, TracePart,
};
use crate::gauges::{conjugate_gauge, gauge_norm_fast, GaugeSpec};
use crate::idealops::{HermitianTuple, Operator, Tail};
use crate::limits::{detect_limit, LimitRule};
use crate::linalg::{self, CMatrix};
use crate::qau::{UnitElement, UnitSchedule};

/// Residuals of `phi - phi_a` on finitely supported operators must vanish to
/// this tolerance.
pub const RESIDUAL_TOLERANCE: f64 = 1e-8;
/// Slack of the norm-additivity sandwich.
pub const ADDITIVITY_TOLERANCE: f64 = 1e-6;

/// The sequence `phi(A_k S)` and its detected limit.
#[derive(Debug, Clone, PartialEq)]
pub struct Recovery {
    pub sequence: Vec<Complex64>,
    /// `NotConverged` when the sequence does not settle within the schedule.
    pub limit: Result<Complex64, Error>,
}

fn check_schedule(schedule: &UnitSchedule, tau: &HermitianTuple) -> Result<(), Error> {
    for step in &schedule.steps {
        if step.matrix().nrows() != tau.dimension() {
            return Err(Error::DimensionMismatch {
                expected: tau.dimension(),
                found: step.matrix().nrows(),
            });
        }
    }
    Ok(())
}

/// `v_k = phi(A_k S)` along the schedule, with the plain limit rule.
pub fn recover_ac_part(
    phi: &FunctionalSpec,
    schedule: &UnitSchedule,
    tau: &HermitianTuple,
    s: &Operator,
    depth: usize,
) -> Result<Recovery, Error> {
    check_schedule(schedule, tau)?;
    let mut sequence = Vec::with_capacity(schedule.len());
    for step in &schedule.steps {
        let product = s.left_multiply(&step.block());
        sequence.push(eval_functional(phi, tau, &product, depth)?);
    }
    let limit = detect_limit(&sequence, LimitRule::Plain);
    Ok(Recovery { sequence, limit })
}

/// `||S||`, exact for finite parts plus scalars, otherwise the norm of the
/// instantiated corner.
fn operator_norm(s: &Operator, n: usize) -> f64 {
    match s.tail() {
        Tail::None => linalg::operator_norm(s.finite_part()),
        Tail::Scalar(_) => linalg::operator_norm(&s.corner(s.finite_extent() + 1)),
        _ => linalg::operator_norm(&s.corner(n)),
    }
}

/// Bound on `|phi_a(S) - phi(A_k S)|` for a trace part:
///
/// `|X - X A_k|_1 ||S|| + sum_j |(I - A_k)[S, T_j]|_g |Y_j|_{g*}
///  + |[A_k, tau]|_g ||S|| sum_j |Y_j|_{g*}`.
///
/// Exact when `S` is finitely supported within `dim tau - bandwidth`;
/// otherwise `S` enters through its instantiated corner.
pub fn recovery_error_bound(
    tp: &TracePart,
    tau: &HermitianTuple,
    g: &GaugeSpec,
    a_k: &UnitElement,
    s: &Operator,
) -> Result<f64, Error> {
    let commutator = a_k.commutator_norm(tau, g)?;
    bound_with_commutator(tp, tau, g, a_k, s, commutator)
}

fn bound_with_commutator(
    tp: &TracePart,
    tau: &HermitianTuple,
    g: &GaugeSpec,
    a_k: &UnitElement,
    s: &Operator,
    commutator: f64,
) -> Result<f64, Error> {
    if tp.gauge() != g {
        return Err(Error::GaugeMismatch {
            expected: tp.gauge().label.clone(),
            found: g.label.clone(),
        });
    }
    let n = tau.dimension();
    if a_k.matrix().nrows() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: a_k.matrix().nrows(),
        });
    }
    let required = tp.required_dimension(tau.bandwidth());
    if required > n {
        return Err(Error::SupportExceedsInstantiation {
            required,
            available: n,
        });
    }
    let dual = conjugate_gauge(g)?;
    let trace_class = GaugeSpec::trace_class();
    let s_norm = operator_norm(s, n);
    let cap = a_k.cap();

    // X - X A_k lives in the first x_extent rows
    let sx = tp.x_extent();
    let width = sx.max(cap);
    let x_rows = linalg::leading(tp.x(), width).rows(0, sx).into_owned();
    let a = linalg::leading(a_k.matrix(), width);
    let x_term = gauge_norm_fast(&trace_class, &(&x_rows - &x_rows * &a)) * s_norm;

    let y_norms: Vec<f64> = tp.ys().iter().map(|y| gauge_norm_fast(&dual, y)).collect();
    let y_total: f64 = y_norms.iter().sum();

    // [S, T_j] is supported in the first `reach` coordinates
    // a scalar tail commutes with every T_j, so only the finite part counts
    let support = match s.tail() {
        Tail::None | Tail::Scalar(_) => Some(linalg::support_size(s.finite_part())),
        _ => None,
    };
    let reach = match support {
        Some(e) => {
            let r = e + tau.bandwidth();
            if r > n {
                return Err(Error::SupportExceedsInstantiation {
                    required: r,
                    available: n,
                });
            }
            r
        }
        None => n,
    };
    let mut tail_term = 0.0;
    if y_total > 0.0 && reach > 0 {
        let l = reach.max(cap);
        let a = linalg::leading(a_k.matrix(), l);
        let s_block = s.corner(l);
        for (j, y_norm) in y_norms.iter().enumerate() {
            if *y_norm == 0.0 {
                continue;
            }
            let t = linalg::leading(&tau.matrices()[j], l);
            let comm = -linalg::commutator_banded(&t, &s_block, tau.bandwidth());
            let cols = comm.columns(0, reach).into_owned();
            let projected = &cols - &a * &cols;
            tail_term += gauge_norm_fast(g, &projected) * y_norm;
        }
    }
    Ok(x_term + tail_term + commutator * s_norm * y_total)
}

/// Recovery data for one test operator.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorReport {
    pub index: usize,
    pub finitely_supported: bool,
    pub recovery: Recovery,
    /// `phi(S)`, when its singular part has a detected limit.
    pub direct: Result<Complex64, Error>,
    /// `phi_a(S)` from the trace part of the constructed form.
    pub expected: Complex64,
    /// Per step `|phi_a(S) - phi(A_k S)|`.
    pub gaps: Vec<f64>,
    /// Per step error bound (zero without a trace part).
    pub bounds: Vec<f64>,
    /// `phi(S) - lim_k phi(A_k S)`.
    pub residual: Option<Complex64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdditivityCheck {
    /// Sampled lower bound on `||phi||_M`.
    pub lower: f64,
    /// Upper bound on `||phi_a||_M`.
    pub upper_ac: f64,
    /// Upper bound on `||phi_s||_M`.
    pub upper_singular: f64,
    /// `upper_ac + upper_singular - lower`; negative beyond tolerance fails.
    pub slack: f64,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecompositionReport {
    pub per_operator: Vec<OperatorReport>,
    /// The ultraweak part as identified from the constructed form.
    pub identified_trace_part: Option<TracePart>,
    /// Largest `|phi(S) - phi_a(S)|` over finitely supported test operators.
    pub max_residual: f64,
    pub additivity: AdditivityCheck,
    /// Largest change when recovering again from the recovered part.
    pub idempotence_gap: f64,
    /// Whether each recovered value stays within its final error bound.
    pub certificates_ok: bool,
    pub failures: Vec<alloc::string::String>,
}

impl DecompositionReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

fn trace_value(phi: &FunctionalSpec, tau: &HermitianTuple, s: &Operator) -> Result<Complex64, Error> {
    match phi.trace_part() {
        Some(tp) => eval_trace_part(tp, tau, s),
        None => Ok(Complex64::new(0.0, 0.0)),
    }
}

fn is_exactly_normable(s: &Operator) -> bool {
    matches!(s.tail(), Tail::None | Tail::Scalar(_))
}

/// Recovers `phi_a` on every test operator and checks residuals, error
/// certificates, the norm-additivity sandwich and idempotence.
pub fn decompose(
    phi: &FunctionalSpec,
    schedule: &UnitSchedule,
    tau: &HermitianTuple,
    g: &GaugeSpec,
    test_set: &[Operator],
    depth: usize,
) -> Result<DecompositionReport, Error> {
    check_schedule(schedule, tau)?;
    if schedule.gauge != *g {
        return Err(Error::GaugeMismatch {
            expected: schedule.gauge.label.clone(),
            found: g.label.clone(),
        });
    }
    let mut failures = Vec::new();
    let mut per_operator = Vec::with_capacity(test_set.len());
    let mut max_residual = 0.0_f64;
    let mut certificates_ok = true;
    let ac = phi.absolutely_continuous();

    for (index, s) in test_set.iter().enumerate() {
        let recovery = recover_ac_part(phi, schedule, tau, s, depth)?;
        let expected = trace_value(phi, tau, s)?;
        let gaps: Vec<f64> = recovery.sequence.iter().map(|v| (expected - v).norm()).collect();
        let bounds = match phi.trace_part() {
            Some(tp) => schedule
                .steps
                .iter()
                .zip(&schedule.commutator_norms)
                .map(|(a_k, &c)| bound_with_commutator(tp, tau, g, a_k, s, c))
                .collect::<Result<Vec<_>, _>>()?,
            None => alloc::vec![0.0; schedule.len()],
        };
        if gaps.iter().zip(&bounds).any(|(gap, bound)| *gap > bound + 1e-9) {
            certificates_ok = false;
            failures.push(alloc::format!("operator {index}: recovery gap exceeds its bound"));
        }
        let direct = eval_functional(phi, tau, s, depth);
        let residual = match (&direct, &recovery.limit) {
            (Ok(d), Ok(l)) => Some(d - l),
            _ => None,
        };
        if let Err(e) = &recovery.limit {
            failures.push(alloc::format!("operator {index}: recovery {e}"));
        }
        let finitely_supported = s.is_finitely_supported();
        if finitely_supported {
            match residual {
                Some(r) => {
                    max_residual = max_residual.max(r.norm());
                    if r.norm() > RESIDUAL_TOLERANCE {
                        failures.push(alloc::format!(
                            "operator {index}: residual {:e} on a finitely supported operator",
                            r.norm()
                        ));
                    }
                }
                None => failures.push(alloc::format!("operator {index}: residual unavailable")),
            }
        }
        per_operator.push(OperatorReport {
            index,
            finitely_supported,
            recovery,
            direct,
            expected,
            gaps,
            bounds,
            residual,
        });
    }

    let samples: Vec<Operator> = test_set
        .iter()
        .filter(|s| is_exactly_normable(s))
        .cloned()
        .collect();
    let lower = functional_norm_bounds(phi, tau, g, &samples, depth)?.lower;
    let upper_ac = match phi.trace_part() {
        Some(tp) => tp.norm_m()?,
        None => 0.0,
    };
    let upper_singular = phi.singular_weight();
    let slack = upper_ac + upper_singular - lower;
    let additivity = AdditivityCheck {
        lower,
        upper_ac,
        upper_singular,
        slack,
        ok: slack >= -ADDITIVITY_TOLERANCE,
    };
    if !additivity.ok {
        failures.push(alloc::format!("norm sandwich violated by {:e}", -slack));
    }

    let mut idempotence_gap = 0.0_f64;
    for (s, report) in test_set.iter().zip(&per_operator) {
        let first = match &report.recovery.limit {
            Ok(v) => *v,
            Err(_) => continue,
        };
        let second = match &ac {
            Some(ac) => recover_ac_part(ac, schedule, tau, s, depth)?.limit,
            None => Ok(Complex64::new(0.0, 0.0)),
        };
        match second {
            Ok(v) => idempotence_gap = idempotence_gap.max((v - first).norm()),
            Err(e) => failures.push(alloc::format!("operator {}: second pass {e}", report.index)),
        }
    }

    Ok(DecompositionReport {
        per_operator,
        identified_trace_part: phi.trace_part().cloned(),
        max_residual,
        additivity,
        idempotence_gap,
        certificates_ok,
        failures,
    })
}

/// Gaps of the identities `P^2 = P`, linearity of `P` and norm additivity for
/// `P phi = phi_a`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionReport {
    pub idempotence_gaps: Vec<f64>,
    /// One entry per consecutive pair `(phi_i, phi_{i+1})`.
    pub linearity_gaps: Vec<f64>,
    /// Additivity slack per functional (negative is a violation).
    pub additivity_gaps: Vec<f64>,
}

fn recovered_values(
    phi: &FunctionalSpec,
    schedule: &UnitSchedule,
    tau: &HermitianTuple,
    test_set: &[Operator],
    depth: usize,
) -> Result<Vec<Complex64>, Error> {
    test_set
        .iter()
        .map(|s| recover_ac_part(phi, schedule, tau, s, depth)?.limit)
        .collect()
}

/// Checks idempotence, linearity (`alpha phi_i + beta phi_{i+1}`) and
/// additivity of the recovery map over `test_set`.
#[allow(clippy::too_many_arguments)]
pub fn projection_check(
    phis: &[FunctionalSpec],
    schedule: &UnitSchedule,
    tau: &HermitianTuple,
    g: &GaugeSpec,
    test_set: &[Operator],
    alpha: Complex64,
    beta: Complex64,
    depth: usize,
) -> Result<ProjectionReport, Error> {
    let mut recovered = Vec::with_capacity(phis.len());
    let mut idempotence_gaps = Vec::with_capacity(phis.len());
    let mut additivity_gaps = Vec::with_capacity(phis.len());
    for phi in phis {
        let report = decompose(phi, schedule, tau, g, test_set, depth)?;
        if let Some(failure) = report
            .failures
            .iter()
            .find(|f| f.contains("recovery") || f.contains("second pass"))
        {
            return Err(Error::InvalidArgument(failure.clone()));
        }
        idempotence_gaps.push(report.idempotence_gap);
        additivity_gaps.push(report.additivity.slack);
        recovered.push(recovered_values(phi, schedule, tau, test_set, depth)?);
    }
    let mut linearity_gaps = Vec::new();
    for i in 1..phis.len() {
        let combined = phis[i - 1].combine(alpha, &phis[i], beta)?;
        let values = recovered_values(&combined, schedule, tau, test_set, depth)?;
        let gap = values
            .iter()
            .zip(&recovered[i - 1])
            .zip(&recovered[i])
            .map(|((v, a), b)| (v - (alpha * a + beta * b)).norm())
            .fold(0.0, f64::max);
        linearity_gaps.push(gap);
    }
    Ok(ProjectionReport {
        idempotence_gaps,
        linearity_gaps,
        additivity_gaps,
    })
}

/// `A_k S` as a finite matrix, for callers that want to inspect products.
pub fn schedule_product(a_k: &UnitElement, s: &Operator) -> CMatrix {
    s.left_multiply(&a_k.block()).finite_part().clone()
}
