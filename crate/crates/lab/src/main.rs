use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use commutant_lab::{report, run, Command, ExperimentConfig, LabError, RunOptions};

#[derive(Parser)]
#[command(name = "commutant", version, about = "Reproducible experiments on commutants modulo normed ideals")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(clap::Args)]
struct Common {
    /// Experiment configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `outputs.dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for independent cells.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Subcommand)]
enum Sub {
    /// Gauge axioms and Hölder duality on seeded random matrices.
    GaugeCheck(Common),
    /// Table of optimized commutator norms over (floor, cap) windows.
    KEstimate(Common),
    /// Monotone schedule of unit elements with certified commutator norms.
    Schedule(Common),
    /// Recovery of ultraweak parts, residuals and projection identities.
    Decompose(Common),
    /// Plot-data files from the artifacts of earlier runs.
    Report {
        /// Directory holding the artifacts.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Reads `outputs.dir` from this configuration when `--out` is absent.
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

fn execute(cli: Cli) -> Result<bool, LabError> {
    let (command, common) = match cli.command {
        Sub::GaugeCheck(c) => (Command::GaugeCheck, c),
        Sub::KEstimate(c) => (Command::KEstimate, c),
        Sub::Schedule(c) => (Command::Schedule, c),
        Sub::Decompose(c) => (Command::Decompose, c),
        Sub::Report { out, config } => {
            let dir = match (out, config) {
                (Some(dir), _) => dir,
                (None, Some(path)) => PathBuf::from(ExperimentConfig::load(&path)?.outputs.dir),
                (None, None) => {
                    return Err(LabError::Validation {
                        path: "--out".into(),
                        message: "give --out or --config".into(),
                    })
                }
            };
            let outcome = report(&dir)?;
            for notice in &outcome.notices {
                eprintln!("notice: {notice}");
            }
            if outcome.files.is_empty() {
                eprintln!("notice: nothing to render in {}", dir.display());
            }
            for f in &outcome.files {
                println!("{}", f.display());
            }
            return Ok(true);
        }
    };
    let config = ExperimentConfig::load(&common.config)?;
    let options = RunOptions {
        out: common.out,
        seed: common.seed,
        jobs: common.jobs,
    };
    let result = run(command, config, &options)?;
    let s = &result.summary;
    for stage in &s.stages {
        match &stage.error {
            Some(e) => eprintln!("{}: error: {e}", stage.stage),
            None => eprintln!("{}: {}", stage.stage, if stage.passed { "pass" } else { "fail" }),
        }
    }
    println!(
        "{} passed, {} failed; artifacts in {}",
        s.passed_checks,
        s.failed_checks,
        result.out_dir.display()
    );
    Ok(s.passed())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
