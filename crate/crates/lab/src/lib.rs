//! Experiment runner for `commutant-core`: TOML configurations, seeded
//! generators, stage pipelines and deterministic JSON/CSV artifacts.

pub mod artifacts;
pub mod config;
pub mod error;
pub mod generate;
pub mod pipeline;

use std::path::{Path, PathBuf};

use artifacts::{ArtifactWriter, Bundle, RenderOutcome, StageOutcome, Summary};
pub use config::ExperimentConfig;
pub use error::LabError;
use pipeline::Experiment;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    GaugeCheck,
    KEstimate,
    Schedule,
    Decompose,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::GaugeCheck => "gauge-check",
            Command::KEstimate => "k-estimate",
            Command::Schedule => "schedule",
            Command::Decompose => "decompose",
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    /// Overrides `outputs.dir`.
    pub out: Option<PathBuf>,
    /// Overrides `seed`.
    pub seed: Option<u64>,
    pub jobs: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            out: None,
            seed: None,
            jobs: 1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub summary: Summary,
    pub out_dir: PathBuf,
    pub files: Vec<PathBuf>,
}

fn tally(checks: impl IntoIterator<Item = bool>, summary: &mut Summary) {
    for ok in checks {
        if ok {
            summary.passed_checks += 1;
        } else {
            summary.failed_checks += 1;
        }
    }
}

/// Runs one pipeline stage and writes its artifacts plus `summary.json`.
///
/// Validation problems are returned as errors (exit code 2); failures inside a
/// stage are recorded in the summary with the failing module.
pub fn run(command: Command, config: ExperimentConfig, options: &RunOptions) -> Result<RunResult, LabError> {
    let exp = Experiment::new(config, options.seed)?;
    let out_dir = options
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(&exp.config.outputs.dir));
    // check stage-specific inputs before any work
    match command {
        Command::KEstimate if exp.config.k_estimate.is_none() => return Err(missing("k_estimate")),
        Command::Schedule if exp.config.schedule.is_none() => return Err(missing("schedule")),
        Command::Decompose => {
            if exp.config.schedule.is_none() {
                return Err(missing("schedule"));
            }
            if exp.config.test_set.is_none() {
                return Err(missing("test_set"));
            }
            if exp.config.functionals.is_empty() {
                return Err(missing("functionals"));
            }
        }
        _ => {}
    }
    let mut writer = ArtifactWriter::new(&out_dir, exp.seed(), &exp.config.outputs.formats)?;
    let mut summary = Summary {
        command: command.name().to_string(),
        stages: Vec::new(),
        passed_checks: 0,
        failed_checks: 0,
    };
    let outcome: Result<bool, LabError> = match command {
        Command::GaugeCheck => pipeline::run_gauge_check(&exp).and_then(|s| {
            tally(s.rows.iter().map(|r| r.passed), &mut summary);
            artifacts::write_gauge_check(&mut writer, &s)?;
            Ok(s.passed)
        }),
        Command::KEstimate => pipeline::run_k_estimate(&exp, options.jobs).and_then(|s| {
            tally(s.cells.iter().map(|c| !s.violations.contains(&[c.m, c.r])), &mut summary);
            artifacts::write_k_estimate(&mut writer, &s)?;
            Ok(s.passed)
        }),
        Command::Schedule => pipeline::build(&exp).and_then(|(_, s)| {
            tally([s.passed], &mut summary);
            artifacts::write_schedule(&mut writer, &s)?;
            Ok(s.passed)
        }),
        Command::Decompose => pipeline::run_decompose(&exp).and_then(|s| {
            tally(s.reports.iter().map(|r| r.status == "pass"), &mut summary);
            tally(s.projection.iter().map(|p| p.passed), &mut summary);
            artifacts::write_decomposition(&mut writer, &s)?;
            Ok(s.passed)
        }),
    };
    match outcome {
        Ok(passed) => summary.stages.push(StageOutcome {
            stage: command.name().to_string(),
            passed,
            error: None,
        }),
        Err(e @ LabError::Validation { .. }) => return Err(e),
        Err(e) => {
            summary.failed_checks += 1;
            summary.stages.push(StageOutcome {
                stage: command.name().to_string(),
                passed: false,
                error: Some(e.to_string()),
            });
        }
    }
    writer.json(artifacts::SUMMARY, &summary)?;
    Ok(RunResult {
        summary,
        out_dir,
        files: writer.written().to_vec(),
    })
}

fn missing(section: &str) -> LabError {
    LabError::Validation {
        path: section.to_string(),
        message: "section required by this command is missing".into(),
    }
}

/// Renders plot data from the artifacts in `dir`.
pub fn report(dir: &Path) -> Result<RenderOutcome, LabError> {
    let bundle = Bundle::load(dir)?;
    artifacts::render_report(&bundle, dir)
}
