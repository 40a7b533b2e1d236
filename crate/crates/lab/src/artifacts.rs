//! JSON and CSV artifacts, the on-disk bundle, and plot-data rendering.

use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::config::Format;
use crate::error::LabError;
use crate::pipeline::{DecomposeSection, GaugeCheckSection, KEstimateSection, ScheduleSection, SCHEMA_VERSION};

pub const GAUGE_CHECK: &str = "gauge_check";
pub const K_ESTIMATE: &str = "k_estimate";
pub const SCHEDULE: &str = "schedule";
pub const DECOMPOSITION: &str = "decomposition";
pub const SUMMARY: &str = "summary";
pub const PLOT_DIR: &str = "plots";

/// Common header of every JSON artifact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Envelope<T> {
    pub schema_version: String,
    pub kind: String,
    pub seed: u64,
    #[serde(flatten)]
    pub body: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageOutcome {
    pub stage: String,
    pub passed: bool,
    /// Set when the stage aborted; carries the failing module.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub command: String,
    pub stages: Vec<StageOutcome>,
    pub passed_checks: usize,
    pub failed_checks: usize,
}

impl Summary {
    pub fn passed(&self) -> bool {
        self.failed_checks == 0
    }
}

/// Floats in CSV carry 17 significant digits.
pub fn fmt_float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> LabError + '_ {
    move |source| LabError::Io {
        path: path.display().to_string(),
        source,
    }
}

pub struct ArtifactWriter {
    dir: PathBuf,
    seed: u64,
    formats: Vec<Format>,
    written: Vec<PathBuf>,
}

impl ArtifactWriter {
    pub fn new(dir: &Path, seed: u64, formats: &[Format]) -> Result<Self, LabError> {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            seed,
            formats: formats.to_vec(),
            written: Vec::new(),
        })
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }

    pub fn json<T: Serialize>(&mut self, kind: &str, body: &T) -> Result<(), LabError> {
        // the summary is always written; it is what the exit code reflects
        if kind != SUMMARY && !self.formats.contains(&Format::Json) {
            return Ok(());
        }
        let envelope = Envelope {
            schema_version: SCHEMA_VERSION.to_string(),
            kind: kind.to_string(),
            seed: self.seed,
            body,
        };
        let mut text = serde_json::to_string_pretty(&envelope).map_err(|e| LabError::Format(e.to_string()))?;
        text.push('\n');
        let path = self.dir.join(format!("{kind}.json"));
        fs::write(&path, text).map_err(io_err(&path))?;
        self.written.push(path);
        Ok(())
    }

    pub fn csv(&mut self, kind: &str, header: &[&str], rows: Vec<Vec<String>>) -> Result<(), LabError> {
        if !self.formats.contains(&Format::Csv) {
            return Ok(());
        }
        let path = self.dir.join(format!("{kind}.csv"));
        let mut w = csv::Writer::from_path(&path).map_err(|e| LabError::Format(e.to_string()))?;
        w.write_record(header).map_err(|e| LabError::Format(e.to_string()))?;
        for row in rows {
            w.write_record(&row).map_err(|e| LabError::Format(e.to_string()))?;
        }
        w.flush().map_err(io_err(&path))?;
        self.written.push(path);
        Ok(())
    }
}

pub fn write_gauge_check(w: &mut ArtifactWriter, s: &GaugeCheckSection) -> Result<(), LabError> {
    w.json(GAUGE_CHECK, s)?;
    let rows = s
        .rows
        .iter()
        .map(|r| {
            vec![
                r.gauge.clone(),
                r.conjugate.clone(),
                fmt_float(r.triangle_excess),
                fmt_float(r.unitary_gap),
                fmt_float(r.ideal_excess),
                r.holder_failures.to_string(),
                r.passed.to_string(),
            ]
        })
        .collect();
    w.csv(
        GAUGE_CHECK,
        &["gauge", "conjugate", "triangle_excess", "unitary_gap", "ideal_excess", "holder_failures", "passed"],
        rows,
    )
}

pub fn write_k_estimate(w: &mut ArtifactWriter, s: &KEstimateSection) -> Result<(), LabError> {
    w.json(K_ESTIMATE, s)?;
    let rows = s
        .cells
        .iter()
        .map(|c| vec![c.m.to_string(), c.r.to_string(), fmt_float(c.beta), c.iterations.to_string(), c.status.clone()])
        .collect();
    w.csv(K_ESTIMATE, &["m", "r", "beta", "iterations", "status"], rows)
}

fn schedule_rows(s: &ScheduleSection) -> Vec<Vec<String>> {
    s.steps
        .iter()
        .map(|t| vec![t.k.to_string(), t.m.to_string(), t.r.to_string(), fmt_float(t.commutator_norm)])
        .collect()
}

pub fn write_schedule(w: &mut ArtifactWriter, s: &ScheduleSection) -> Result<(), LabError> {
    w.json(SCHEDULE, s)?;
    w.csv(SCHEDULE, &["k", "m", "r", "commutator_norm"], schedule_rows(s))
}

pub fn write_decomposition(w: &mut ArtifactWriter, s: &DecomposeSection) -> Result<(), LabError> {
    w.json(DECOMPOSITION, s)?;
    let mut rows = Vec::new();
    for r in &s.reports {
        for op in &r.per_s {
            for (k, v) in op.sequence.iter().enumerate() {
                rows.push(vec![
                    r.phi_id.clone(),
                    op.s_id.clone(),
                    k.to_string(),
                    fmt_float(v[0]),
                    fmt_float(v[1]),
                    fmt_float(op.gaps[k]),
                    fmt_float(op.bounds[k]),
                ]);
            }
        }
    }
    w.csv(DECOMPOSITION, &["phi_id", "s_id", "k", "value_re", "value_im", "gap", "bound"], rows)
}

/// The artifacts found in an output directory.
#[derive(Debug, Clone, Default)]
pub struct Bundle {
    pub gauge_check: Option<Envelope<GaugeCheckSection>>,
    pub k_estimate: Option<Envelope<KEstimateSection>>,
    pub schedule: Option<Envelope<ScheduleSection>>,
    pub decomposition: Option<Envelope<DecomposeSection>>,
}

fn read_optional<T: DeserializeOwned>(dir: &Path, kind: &str) -> Result<Option<T>, LabError> {
    let path = dir.join(format!("{kind}.json"));
    if !path.exists() {
        return Ok(None);
    }
    let text = fs::read_to_string(&path).map_err(io_err(&path))?;
    serde_json::from_str(&text)
        .map(Some)
        .map_err(|e| LabError::Format(format!("{}: {e}", path.display())))
}

impl Bundle {
    pub fn load(dir: &Path) -> Result<Self, LabError> {
        Ok(Self {
            gauge_check: read_optional(dir, GAUGE_CHECK)?,
            k_estimate: read_optional(dir, K_ESTIMATE)?,
            schedule: read_optional(dir, SCHEDULE)?,
            decomposition: read_optional(dir, DECOMPOSITION)?,
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RenderOutcome {
    pub files: Vec<PathBuf>,
    pub notices: Vec<String>,
}

fn sanitize(id: &str) -> String {
    id.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

fn write_table(path: &Path, header: &str, rows: &[String]) -> Result<(), LabError> {
    let mut text = String::from(header);
    text.push('\n');
    for r in rows {
        text.push_str(r);
        text.push('\n');
    }
    fs::write(path, text).map_err(io_err(path))
}

/// Writes whitespace-separated plot data under `<out>/plots`: one convergence
/// file per (functional, test operator), the `(m, r, beta)` grid, and the
/// schedule commutator norms. Missing sections are skipped with a notice.
pub fn render_report(bundle: &Bundle, out: &Path) -> Result<RenderOutcome, LabError> {
    let mut outcome = RenderOutcome::default();
    let dir = out.join(PLOT_DIR);
    let ensure_dir = |outcome: &RenderOutcome| -> Result<(), LabError> {
        if outcome.files.is_empty() {
            fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        }
        Ok(())
    };
    match &bundle.decomposition {
        Some(d) => {
            for r in &d.body.reports {
                for op in &r.per_s {
                    ensure_dir(&outcome)?;
                    let path = dir.join(format!("convergence_{}_{}.dat", sanitize(&r.phi_id), sanitize(&op.s_id)));
                    let rows: Vec<String> = op
                        .sequence
                        .iter()
                        .enumerate()
                        .map(|(k, v)| {
                            format!(
                                "{k} {} {} {} {}",
                                fmt_float(v[0]),
                                fmt_float(v[1]),
                                fmt_float(op.bounds[k]),
                                fmt_float(op.gaps[k])
                            )
                        })
                        .collect();
                    write_table(&path, "k value_re value_im bound gap", &rows)?;
                    outcome.files.push(path);
                }
            }
        }
        None => outcome.notices.push("no decomposition section; convergence plots skipped".into()),
    }
    match &bundle.k_estimate {
        Some(k) => {
            ensure_dir(&outcome)?;
            let path = dir.join("beta_grid.dat");
            let rows: Vec<String> = k
                .body
                .cells
                .iter()
                .map(|c| format!("{} {} {}", c.m, c.r, fmt_float(c.beta)))
                .collect();
            write_table(&path, "m r beta", &rows)?;
            outcome.files.push(path);
        }
        None => outcome.notices.push("no k-estimate section; beta grid skipped".into()),
    }
    let schedule = bundle
        .schedule
        .as_ref()
        .map(|s| &s.body)
        .or(bundle.decomposition.as_ref().map(|d| &d.body.schedule));
    match schedule {
        Some(s) => {
            ensure_dir(&outcome)?;
            let path = dir.join("schedule_commutators.dat");
            let rows: Vec<String> = s
                .steps
                .iter()
                .map(|t| format!("{} {} {} {}", t.k, t.m, t.r, fmt_float(t.commutator_norm)))
                .collect();
            write_table(&path, "k m r commutator_norm", &rows)?;
            outcome.files.push(path);
        }
        None => outcome.notices.push("no schedule section; commutator curve skipped".into()),
    }
    Ok(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_keep_seventeen_digits() {
        assert_eq!(fmt_float(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_float(0.1).parse::<f64>().unwrap(), 0.1);
        assert_eq!(fmt_float(f64::NAN), "NaN");
    }

    #[test]
    fn empty_bundle_renders_notices_only() {
        let dir = tempfile::tempdir().unwrap();
        let bundle = Bundle::load(dir.path()).unwrap();
        let outcome = render_report(&bundle, dir.path()).unwrap();
        assert!(outcome.files.is_empty());
        assert_eq!(outcome.notices.len(), 3);
        assert!(!dir.path().join(PLOT_DIR).exists());
    }

    #[test]
    fn formats_gate_outputs_except_summary() {
        let dir = tempfile::tempdir().unwrap();
        let mut w = ArtifactWriter::new(dir.path(), 5, &[Format::Csv]).unwrap();
        w.json(GAUGE_CHECK, &serde_json::json!({"x": 1})).unwrap();
        w.json(SUMMARY, &serde_json::json!({"x": 2})).unwrap();
        w.csv(SCHEDULE, &["a"], vec![vec!["x".into()]]).unwrap();
        assert!(!dir.path().join("gauge_check.json").exists());
        let summary: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
        assert_eq!(summary["seed"], 5);
        assert_eq!(fs::read_to_string(dir.path().join("schedule.csv")).unwrap(), "a\nx\n");
    }
}
