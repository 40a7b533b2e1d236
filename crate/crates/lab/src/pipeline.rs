//! Stage runners. Each stage returns a serializable section with its own
//! pass/fail verdict; nothing here touches the filesystem.

use commutant_core::functionals::FunctionalSpec;
use commutant_core::gauges::{conjugate_gauge, gauge_norm, holder_check, GaugeSpec};
use commutant_core::idealops::{HermitianTuple, Operator};
use commutant_core::lebesgue::{decompose, projection_check, DecompositionReport};
use commutant_core::qau::{build_schedule, k_estimate_cell, KEstimateTable, ScheduleMode, UnitSchedule};
use commutant_core::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, ScheduleModeConfig};
use crate::error::LabError;
use crate::generate;

pub const SCHEMA_VERSION: &str = "1";
/// Relative tolerance of the gauge norm identities.
pub const NORM_TOLERANCE: f64 = 1e-9;
pub const IDEMPOTENCE_TOLERANCE: f64 = 1e-9;
pub const LINEARITY_TOLERANCE: f64 = 1e-8;

fn pair(z: Complex64) -> [f64; 2] {
    [z.re, z.im]
}

/// A configured experiment with the effective seed.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub tau: HermitianTuple,
}

impl Experiment {
    pub fn new(mut config: ExperimentConfig, seed_override: Option<u64>) -> Result<Self, LabError> {
        if let Some(seed) = seed_override {
            config.seed = seed;
        }
        config.validate()?;
        let tau = config
            .operator_model()
            .and_then(|m| m.instantiate(config.dimension))
            .map_err(LabError::core("model"))?;
        Ok(Self { config, tau })
    }

    pub fn seed(&self) -> u64 {
        self.config.seed
    }

    fn gauge(&self, index: usize) -> Result<GaugeSpec, LabError> {
        self.config.gauge(index).map_err(LabError::core("gauges"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaugeCheckRow {
    pub gauge: String,
    pub conjugate: String,
    pub trace_class_pairing: bool,
    pub samples: usize,
    /// Largest `(|M+N| - |M| - |N|) / (1 + |M| + |N|)`.
    pub triangle_excess: f64,
    /// Largest `||UMV| - |M|| / (1 + |M|)`.
    pub unitary_gap: f64,
    /// Largest `(|AMB| - ||A|| |M| ||B||) / (1 + rhs)`.
    pub ideal_excess: f64,
    pub holder_pairs: usize,
    pub holder_failures: usize,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaugeCheckSection {
    pub rows: Vec<GaugeCheckRow>,
    pub passed: bool,
}

pub fn run_gauge_check(exp: &Experiment) -> Result<GaugeCheckSection, LabError> {
    let defaults = crate::config::GaugeCheckConfig {
        samples: 100,
        min_dim: 2,
        max_dim: 12,
        holder_pairs: 50,
    };
    let gc = exp.config.gauge_check.clone().unwrap_or(defaults);
    let mut rows = Vec::new();
    for i in 0..exp.config.gauges.len() {
        let g = exp.gauge(i)?;
        let dual = conjugate_gauge(&g).map_err(LabError::core("gauge-check"))?;
        let mut rng = generate::stream(exp.seed(), generate::STREAM_GAUGE_CHECK + 16 * i as u64);
        let norm = |m: &commutant_core::CMatrix| gauge_norm(&g, m).map_err(LabError::core("gauge-check"));
        let (mut triangle, mut unitary, mut ideal) = (f64::NEG_INFINITY, 0.0_f64, f64::NEG_INFINITY);
        for _ in 0..gc.samples {
            let n = rng.random_range(gc.min_dim..=gc.max_dim);
            let m = generate::complex_matrix(&mut rng, n, n);
            let other = generate::complex_matrix(&mut rng, n, n);
            let (nm, no) = (norm(&m)?, norm(&other)?);
            triangle = triangle.max((norm(&(&m + &other))? - nm - no) / (1.0 + nm + no));
            let u = generate::unitary(&mut rng, n);
            let v = generate::unitary(&mut rng, n);
            unitary = unitary.max((norm(&(&u * &m * &v))? - nm).abs() / (1.0 + nm));
            let a = generate::complex_matrix(&mut rng, n, n);
            let b = generate::complex_matrix(&mut rng, n, n);
            let rhs = commutant_core::linalg::operator_norm(&a) * nm * commutant_core::linalg::operator_norm(&b);
            ideal = ideal.max((norm(&(&a * &m * &b))? - rhs) / (1.0 + rhs));
        }
        let mut holder_failures = 0;
        for _ in 0..gc.holder_pairs {
            let n = rng.random_range(gc.min_dim..=gc.max_dim);
            let x = generate::complex_matrix(&mut rng, n, n);
            let y = generate::complex_matrix(&mut rng, n, n);
            if !holder_check(&x, &y, &g).map_err(LabError::core("gauge-check"))?.ok {
                holder_failures += 1;
            }
        }
        let passed = triangle <= NORM_TOLERANCE
            && unitary <= NORM_TOLERANCE
            && ideal <= NORM_TOLERANCE
            && holder_failures == 0;
        rows.push(GaugeCheckRow {
            gauge: g.label.clone(),
            conjugate: dual.label.clone(),
            trace_class_pairing: g.is_trace_class_pairing(),
            samples: gc.samples,
            triangle_excess: if gc.samples == 0 { 0.0 } else { triangle },
            unitary_gap: unitary,
            ideal_excess: if gc.samples == 0 { 0.0 } else { ideal },
            holder_pairs: gc.holder_pairs,
            holder_failures,
            passed,
        });
    }
    let passed = rows.iter().all(|r| r.passed);
    Ok(GaugeCheckSection { rows, passed })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KCellRecord {
    pub m: usize,
    pub r: usize,
    pub beta: f64,
    pub warm_start: f64,
    pub iterations: usize,
    pub status: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KEstimateSection {
    pub model: String,
    pub dimension: usize,
    pub gauge: String,
    pub cells: Vec<KCellRecord>,
    pub estimate: f64,
    pub violations: Vec<[usize; 2]>,
    pub passed: bool,
}

/// Evaluates all cells on a pool of `jobs` threads; cells are reduced in
/// lexicographic `(m, r)` order, so the table does not depend on `jobs`.
pub fn run_k_estimate(exp: &Experiment, jobs: usize) -> Result<KEstimateSection, LabError> {
    let kc = exp
        .config
        .k_estimate
        .as_ref()
        .ok_or_else(|| LabError::Validation {
            path: "k_estimate".into(),
            message: "section missing".into(),
        })?;
    let g = exp.gauge(kc.gauge)?;
    let params = exp.config.solver.params(exp.seed());
    let mut grid: Vec<(usize, usize)> = kc
        .floors
        .iter()
        .flat_map(|&m| kc.caps.iter().map(move |&r| (m, r)))
        .collect();
    grid.sort_unstable();
    grid.dedup();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| LabError::Format(e.to_string()))?;
    let cells = pool.install(|| {
        grid.par_iter()
            .map(|&(m, r)| k_estimate_cell(&exp.tau, &g, m, r, &params))
            .collect::<Result<Vec<_>, _>>()
    });
    let table = KEstimateTable::from_cells(cells.map_err(LabError::core("k-estimate"))?);
    Ok(k_section(exp, &g, &table))
}

fn k_section(exp: &Experiment, g: &GaugeSpec, table: &KEstimateTable) -> KEstimateSection {
    KEstimateSection {
        model: exp.config.model.name.clone(),
        dimension: exp.config.dimension,
        gauge: g.label.clone(),
        cells: table
            .cells
            .iter()
            .map(|c| KCellRecord {
                m: c.floor,
                r: c.cap,
                beta: c.beta,
                warm_start: c.warm_start_value,
                iterations: c.iterations,
                status: c.status.as_str().to_string(),
            })
            .collect(),
        estimate: table.estimate,
        violations: table.violations.iter().map(|&(m, r)| [m, r]).collect(),
        passed: table.failures() == 0,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleStepRecord {
    pub k: usize,
    pub m: usize,
    pub r: usize,
    pub commutator_norm: f64,
    pub min_eigenvalue: f64,
    pub max_eigenvalue: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleSection {
    pub schedule_id: String,
    pub gauge: String,
    pub mode: String,
    pub steps: Vec<ScheduleStepRecord>,
    pub verified: bool,
    pub passed: bool,
}

pub fn schedule_id(exp: &Experiment) -> String {
    match &exp.config.schedule {
        Some(s) => format!(
            "{}-{}-{}",
            exp.config.model.name,
            match s.mode {
                ScheduleModeConfig::Ramp => "ramp",
                ScheduleModeConfig::OptimizedThenMonotonized => "optimized",
            },
            s.windows.len()
        ),
        None => "none".into(),
    }
}

pub fn build(exp: &Experiment) -> Result<(UnitSchedule, ScheduleSection), LabError> {
    let sc = exp.config.schedule.as_ref().ok_or_else(|| LabError::Validation {
        path: "schedule".into(),
        message: "section missing".into(),
    })?;
    let g = exp.gauge(sc.gauge)?;
    let mode = match sc.mode {
        ScheduleModeConfig::Ramp => ScheduleMode::Ramp,
        ScheduleModeConfig::OptimizedThenMonotonized => {
            ScheduleMode::OptimizedThenMonotonized(exp.config.solver.params(exp.seed()))
        }
    };
    let windows: Vec<(usize, usize)> = sc.windows.iter().map(|w| (w[0], w[1])).collect();
    let schedule = build_schedule(&exp.tau, &g, &windows, mode).map_err(LabError::core("schedule"))?;
    let verified = schedule.verify(&exp.tau).is_ok();
    let steps = schedule
        .steps
        .iter()
        .zip(&schedule.commutator_norms)
        .enumerate()
        .map(|(k, (s, c))| ScheduleStepRecord {
            k,
            m: s.floor(),
            r: s.cap(),
            commutator_norm: *c,
            min_eigenvalue: s.certificate().min_eigenvalue,
            max_eigenvalue: s.certificate().max_eigenvalue,
        })
        .collect();
    let section = ScheduleSection {
        schedule_id: schedule_id(exp),
        gauge: g.label.clone(),
        mode: match sc.mode {
            ScheduleModeConfig::Ramp => "ramp".into(),
            ScheduleModeConfig::OptimizedThenMonotonized => "optimized-then-monotonized".into(),
        },
        steps,
        verified,
        passed: verified,
    };
    Ok((schedule, section))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerOperatorRecord {
    pub s_id: String,
    pub finitely_supported: bool,
    pub sequence: Vec<[f64; 2]>,
    pub limit: Option<[f64; 2]>,
    pub expected: [f64; 2],
    pub direct: Option<[f64; 2]>,
    pub gaps: Vec<f64>,
    pub bounds: Vec<f64>,
    pub residual: Option<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualRecord {
    pub max: f64,
    pub checked: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdditivityRecord {
    pub lower: f64,
    pub upper_ac: f64,
    pub upper_singular: f64,
    pub slack: f64,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionRecord {
    pub phi_id: String,
    pub schedule_id: String,
    pub per_s: Vec<PerOperatorRecord>,
    pub residuals: ResidualRecord,
    pub additivity: AdditivityRecord,
    pub idempotence_gap: f64,
    pub certificates_ok: bool,
    pub failures: Vec<String>,
    pub status: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionRecord {
    pub phi_ids: Vec<String>,
    pub alpha: [f64; 2],
    pub beta: [f64; 2],
    pub idempotence_gaps: Vec<f64>,
    pub linearity_gaps: Vec<f64>,
    pub additivity_gaps: Vec<f64>,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecomposeSection {
    pub schedule: ScheduleSection,
    pub reports: Vec<DecompositionRecord>,
    pub projection: Option<ProjectionRecord>,
    pub passed: bool,
}

pub fn decomposition_record(phi_id: &str, schedule_id: &str, report: &DecompositionReport) -> DecompositionRecord {
    let per_s = report
        .per_operator
        .iter()
        .map(|op| PerOperatorRecord {
            s_id: format!("S{}", op.index),
            finitely_supported: op.finitely_supported,
            sequence: op.recovery.sequence.iter().map(|z| pair(*z)).collect(),
            limit: op.recovery.limit.as_ref().ok().map(|z| pair(*z)),
            expected: pair(op.expected),
            direct: op.direct.as_ref().ok().map(|z| pair(*z)),
            gaps: op.gaps.clone(),
            bounds: op.bounds.clone(),
            residual: op.residual.map(pair),
        })
        .collect();
    let a = &report.additivity;
    DecompositionRecord {
        phi_id: phi_id.to_string(),
        schedule_id: schedule_id.to_string(),
        per_s,
        residuals: ResidualRecord {
            max: report.max_residual,
            checked: report.per_operator.iter().filter(|o| o.finitely_supported).count(),
        },
        additivity: AdditivityRecord {
            lower: a.lower,
            upper_ac: a.upper_ac,
            upper_singular: a.upper_singular,
            slack: a.slack,
            ok: a.ok,
        },
        idempotence_gap: report.idempotence_gap,
        certificates_ok: report.certificates_ok,
        failures: report.failures.clone(),
        status: if report.passed() { "pass".into() } else { "fail".into() },
    }
}

pub fn functionals(exp: &Experiment, g: &GaugeSpec) -> Result<Vec<(String, FunctionalSpec)>, LabError> {
    exp.config
        .functionals
        .iter()
        .enumerate()
        .map(|(i, f)| {
            generate::functional(f, i, g, exp.seed())
                .map(|phi| (f.id.clone(), phi))
                .map_err(|e| LabError::Validation {
                    path: format!("functionals[{i}]"),
                    message: e.to_string(),
                })
        })
        .collect()
}

pub fn test_operators(exp: &Experiment) -> Result<Vec<Operator>, LabError> {
    let ts = exp.config.test_set.as_ref().ok_or_else(|| LabError::Validation {
        path: "test_set".into(),
        message: "section missing".into(),
    })?;
    Ok(generate::test_set(ts, exp.seed()))
}

pub fn run_decompose(exp: &Experiment) -> Result<DecomposeSection, LabError> {
    let (schedule, schedule_section) = build(exp)?;
    let dc = &exp.config.decompose;
    let g = exp.gauge(dc.gauge)?;
    if schedule.gauge != g {
        return Err(LabError::Validation {
            path: "decompose.gauge".into(),
            message: "must match schedule.gauge".into(),
        });
    }
    let phis = functionals(exp, &g)?;
    let tests = test_operators(exp)?;
    let sid = schedule_section.schedule_id.clone();
    let mut reports = Vec::with_capacity(phis.len());
    for (id, phi) in &phis {
        let report = decompose(phi, &schedule, &exp.tau, &g, &tests, dc.depth).map_err(LabError::core("decompose"))?;
        reports.push(decomposition_record(id, &sid, &report));
    }
    let projection = if phis.is_empty() {
        None
    } else {
        let specs: Vec<FunctionalSpec> = phis.iter().map(|(_, p)| p.clone()).collect();
        let alpha = Complex64::new(dc.alpha[0], dc.alpha[1]);
        let beta = Complex64::new(dc.beta[0], dc.beta[1]);
        Some(
            match projection_check(&specs, &schedule, &exp.tau, &g, &tests, alpha, beta, dc.depth) {
                Ok(p) => {
                    let passed = p.idempotence_gaps.iter().all(|x| *x <= IDEMPOTENCE_TOLERANCE)
                        && p.linearity_gaps.iter().all(|x| *x <= LINEARITY_TOLERANCE)
                        && p.additivity_gaps.iter().all(|x| *x >= -commutant_core::lebesgue::ADDITIVITY_TOLERANCE);
                    ProjectionRecord {
                        phi_ids: phis.iter().map(|(id, _)| id.clone()).collect(),
                        alpha: dc.alpha,
                        beta: dc.beta,
                        idempotence_gaps: p.idempotence_gaps,
                        linearity_gaps: p.linearity_gaps,
                        additivity_gaps: p.additivity_gaps,
                        passed,
                    }
                }
                // a recovery that does not settle is already reported per functional
                Err(_) => ProjectionRecord {
                    phi_ids: phis.iter().map(|(id, _)| id.clone()).collect(),
                    alpha: dc.alpha,
                    beta: dc.beta,
                    idempotence_gaps: Vec::new(),
                    linearity_gaps: Vec::new(),
                    additivity_gaps: Vec::new(),
                    passed: false,
                },
            },
        )
    };
    let passed = schedule_section.passed
        && reports.iter().all(|r| r.status == "pass")
        && projection.as_ref().is_none_or(|p| p.passed);
    Ok(DecomposeSection {
        schedule: schedule_section,
        reports,
        projection,
        passed,
    })
}
