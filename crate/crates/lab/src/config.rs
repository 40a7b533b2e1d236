//! Experiment configuration (TOML) and its validation.

use std::path::Path;

use commutant_core::gauges::{GaugeFamily, GaugeSpec};
use commutant_core::idealops::OperatorModel;
use commutant_core::limits::LimitRule;
use commutant_core::qau::SolverParams;
use serde::{Deserialize, Serialize};

use crate::error::LabError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub model: ModelConfig,
    pub dimension: usize,
    pub gauges: Vec<GaugeConfig>,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub gauge_check: Option<GaugeCheckConfig>,
    #[serde(default)]
    pub k_estimate: Option<KEstimateConfig>,
    #[serde(default)]
    pub schedule: Option<ScheduleConfig>,
    #[serde(default)]
    pub functionals: Vec<FunctionalConfig>,
    #[serde(default)]
    pub test_set: Option<TestSetConfig>,
    #[serde(default)]
    pub decompose: DecomposeConfig,
    #[serde(default)]
    pub outputs: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub name: String,
    /// Number of operators (only `diagonal-grid` uses it).
    #[serde(default = "default_arity")]
    pub n: usize,
    #[serde(default)]
    pub parameters: Vec<f64>,
}

fn default_arity() -> usize {
    2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum GaugeConfig {
    Schatten { p: f64 },
    KyFan { k: usize },
    Sup,
}

impl GaugeConfig {
    pub fn to_spec(&self) -> Result<GaugeSpec, commutant_core::Error> {
        GaugeSpec::new(match *self {
            GaugeConfig::Schatten { p } => GaugeFamily::SchattenP(p),
            GaugeConfig::KyFan { k } => GaugeFamily::KyFan(k),
            GaugeConfig::Sup => GaugeFamily::SupGauge,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub max_iterations: usize,
    pub step_scale: f64,
    pub stop_tolerance: f64,
    pub patience: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let p = SolverParams::default();
        Self {
            max_iterations: p.max_iterations,
            step_scale: p.step_scale,
            stop_tolerance: p.stop_tolerance,
            patience: p.patience,
        }
    }
}

impl SolverConfig {
    pub fn params(&self, seed: u64) -> SolverParams {
        SolverParams {
            max_iterations: self.max_iterations,
            step_scale: self.step_scale,
            stop_tolerance: self.stop_tolerance,
            patience: self.patience,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaugeCheckConfig {
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_min_dim")]
    pub min_dim: usize,
    #[serde(default = "default_max_dim")]
    pub max_dim: usize,
    #[serde(default = "default_pairs")]
    pub holder_pairs: usize,
}

fn default_samples() -> usize {
    100
}
fn default_min_dim() -> usize {
    2
}
fn default_max_dim() -> usize {
    12
}
fn default_pairs() -> usize {
    50
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KEstimateConfig {
    /// Index into `gauges`.
    #[serde(default)]
    pub gauge: usize,
    pub floors: Vec<usize>,
    pub caps: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ScheduleModeConfig {
    #[default]
    Ramp,
    OptimizedThenMonotonized,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleConfig {
    #[serde(default)]
    pub gauge: usize,
    pub windows: Vec<[usize; 2]>,
    #[serde(default)]
    pub mode: ScheduleModeConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Entry {
    pub row: usize,
    pub col: usize,
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

/// A `size x size` block: seeded random entries (scaled by `scale`) when
/// `random`, plus the explicit `entries`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixConfig {
    pub size: usize,
    #[serde(default)]
    pub random: bool,
    #[serde(default = "default_scale")]
    pub scale: f64,
    #[serde(default)]
    pub entries: Vec<Entry>,
}

fn default_scale() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceConfig {
    pub x: MatrixConfig,
    #[serde(default)]
    pub ys: Vec<MatrixConfig>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum TailKind {
    #[default]
    Coordinate,
    Uniform,
    /// Seeded random density matrix.
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum RuleConfig {
    #[default]
    Plain,
    Cesaro,
}

impl From<RuleConfig> for LimitRule {
    fn from(r: RuleConfig) -> Self {
        match r {
            RuleConfig::Plain => LimitRule::Plain,
            RuleConfig::Cesaro => LimitRule::Cesaro,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TailConfig {
    #[serde(default = "default_weight")]
    pub weight: [f64; 2],
    #[serde(default)]
    pub first: usize,
    #[serde(default = "default_one")]
    pub stride: usize,
    #[serde(default = "default_one")]
    pub width: usize,
    #[serde(default)]
    pub state: TailKind,
    #[serde(default)]
    pub rule: RuleConfig,
}

fn default_weight() -> [f64; 2] {
    [1.0, 0.0]
}
fn default_one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionalConfig {
    pub id: String,
    #[serde(default)]
    pub trace: Option<TraceConfig>,
    #[serde(default)]
    pub tails: Vec<TailConfig>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TestKind {
    /// Finite hermitian block.
    RandomHermitian,
    /// Banded finite block on top of a scalar tail.
    Banded,
    /// Finite complex block.
    FinitelySupported,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TestSetConfig {
    /// Defaults to the experiment seed.
    #[serde(default)]
    pub seed: Option<u64>,
    pub count: usize,
    pub kind: TestKind,
    #[serde(default = "default_test_size")]
    pub size: usize,
}

fn default_test_size() -> usize {
    8
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DecomposeConfig {
    pub gauge: usize,
    /// Windows evaluated for tail-state limits.
    pub depth: usize,
    pub alpha: [f64; 2],
    pub beta: [f64; 2],
}

impl Default for DecomposeConfig {
    fn default() -> Self {
        Self {
            gauge: 0,
            depth: 200,
            alpha: [2.0, 0.0],
            beta: [-1.0, 0.0],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: String,
    pub formats: Vec<Format>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: "out".into(),
            formats: vec![Format::Json, Format::Csv],
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, LabError> {
        let config: Self = toml::from_str(text).map_err(|e| LabError::Validation {
            path: e.span().map(|s| format!("byte {}", s.start)).unwrap_or_else(|| "<root>".into()),
            message: e.message().to_string(),
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, LabError> {
        let text = std::fs::read_to_string(path).map_err(|e| LabError::Validation {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::from_toml(&text)
    }

    pub fn operator_model(&self) -> Result<OperatorModel, commutant_core::Error> {
        OperatorModel::from_name(&self.model.name, self.model.n, &self.model.parameters)
    }

    pub fn gauge(&self, index: usize) -> Result<GaugeSpec, commutant_core::Error> {
        self.gauges[index].to_spec()
    }

    /// Checks every cross-reference and margin precondition, reporting the
    /// offending field path.
    pub fn validate(&self) -> Result<(), LabError> {
        let fail = |path: &str, message: String| {
            Err(LabError::Validation {
                path: path.to_string(),
                message,
            })
        };
        let model = match self.operator_model() {
            Ok(m) => m,
            Err(e) => return fail("model", e.to_string()),
        };
        if self.dimension < model.min_dimension() {
            return fail(
                "dimension",
                format!("{} is below the minimum {}", self.dimension, model.min_dimension()),
            );
        }
        let b = model.bandwidth();
        let n = self.dimension;
        if self.gauges.is_empty() {
            return fail("gauges", "at least one gauge is required".into());
        }
        for (i, g) in self.gauges.iter().enumerate() {
            if let Err(e) = g.to_spec() {
                return fail(&format!("gauges[{i}]"), e.to_string());
            }
        }
        let gauge_ref = |path: &str, i: usize| {
            if i >= self.gauges.len() {
                fail(path, format!("index {i} but only {} gauges", self.gauges.len()))
            } else {
                Ok(())
            }
        };
        let s = &self.solver;
        if !(s.step_scale > 0.0 && s.step_scale.is_finite()) {
            return fail("solver.step_scale", "must be positive".into());
        }
        if !(s.stop_tolerance >= 0.0) {
            return fail("solver.stop_tolerance", "must be nonnegative".into());
        }
        if let Some(gc) = &self.gauge_check {
            if gc.min_dim == 0 || gc.min_dim > gc.max_dim {
                return fail("gauge_check.min_dim", "need 1 <= min_dim <= max_dim".into());
            }
        }
        if let Some(k) = &self.k_estimate {
            gauge_ref("k_estimate.gauge", k.gauge)?;
            if k.floors.is_empty() || k.caps.is_empty() {
                return fail("k_estimate", "floors and caps must be nonempty".into());
            }
            for (i, &m) in k.floors.iter().enumerate() {
                for (j, &r) in k.caps.iter().enumerate() {
                    if m == 0 || m > r {
                        return fail(&format!("k_estimate.floors[{i}]"), format!("floor {m} does not fit cap {r} (caps[{j}])"));
                    }
                    if r + b > n {
                        return fail(&format!("k_estimate.caps[{j}]"), format!("cap {r} + bandwidth {b} exceeds dimension {n}"));
                    }
                }
            }
        }
        if let Some(sc) = &self.schedule {
            gauge_ref("schedule.gauge", sc.gauge)?;
            if sc.windows.is_empty() {
                return fail("schedule.windows", "at least one window is required".into());
            }
            for (i, w) in sc.windows.iter().enumerate() {
                let path = format!("schedule.windows[{i}]");
                if w[0] == 0 || w[0] > w[1] {
                    return fail(&path, format!("need 1 <= floor <= cap, got {w:?}"));
                }
                if w[1] + b > n {
                    return fail(&path, format!("cap {} + bandwidth {b} exceeds dimension {n}", w[1]));
                }
                if i > 0 {
                    let p = sc.windows[i - 1];
                    if w[0] < p[0] || w[1] <= p[1] {
                        return fail(&path, "floors must not decrease and caps must increase".into());
                    }
                }
                if i > 1 && w[0] < sc.windows[i - 2][1] {
                    return fail(&path, format!("floor must reach the cap {} of window {}", sc.windows[i - 2][1], i - 2));
                }
            }
        }
        let mut ids = std::collections::BTreeSet::new();
        for (i, f) in self.functionals.iter().enumerate() {
            let path = format!("functionals[{i}]");
            if !ids.insert(f.id.as_str()) {
                return fail(&format!("{path}.id"), format!("duplicate id {:?}", f.id));
            }
            if f.trace.is_none() && f.tails.is_empty() {
                return fail(&path, "needs a trace part or tails".into());
            }
            if let Some(t) = &f.trace {
                let arity = model.arity();
                if !t.ys.is_empty() && t.ys.len() != arity {
                    return fail(&format!("{path}.trace.ys"), format!("expected {arity} matrices, found {}", t.ys.len()));
                }
                let mut required = t.x.size;
                for (j, y) in t.ys.iter().chain(std::iter::once(&t.x)).enumerate() {
                    for e in &y.entries {
                        if e.row >= y.size || e.col >= y.size {
                            return fail(&format!("{path}.trace"), format!("entry ({}, {}) outside block {j}", e.row, e.col));
                        }
                    }
                }
                for y in &t.ys {
                    if y.size > 0 {
                        required = required.max(y.size + b);
                    }
                }
                if required > n {
                    return fail(&format!("{path}.trace"), format!("supports need dimension {required}, have {n}"));
                }
            }
            for (j, tail) in f.tails.iter().enumerate() {
                if tail.stride == 0 || tail.width == 0 {
                    return fail(&format!("{path}.tails[{j}]"), "stride and width must be positive".into());
                }
            }
        }
        if let Some(ts) = &self.test_set {
            if ts.size == 0 {
                return fail("test_set.size", "must be positive".into());
            }
            if ts.size + b > n {
                return fail("test_set.size", format!("size {} + bandwidth {b} exceeds dimension {n}", ts.size));
            }
        }
        gauge_ref("decompose.gauge", self.decompose.gauge)?;
        if self.decompose.depth == 0 {
            return fail("decompose.depth", "must be positive".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
seed = 3
dimension = 40

[model]
name = "lap-pos"

[[gauges]]
family = "schatten"
p = 2.0
"#;

    fn path_of(text: &str) -> String {
        match ExperimentConfig::from_toml(text) {
            Err(LabError::Validation { path, .. }) => path,
            other => panic!("expected a validation error, got {other:?}"),
        }
    }

    #[test]
    fn minimal_config_parses() {
        let c = ExperimentConfig::from_toml(BASE).unwrap();
        assert_eq!(c.model.n, 2);
        assert_eq!(c.outputs.formats, vec![Format::Json, Format::Csv]);
        assert!(c.schedule.is_none());
        assert_eq!(c.gauge(0).unwrap(), GaugeSpec::schatten(2.0).unwrap());
    }

    #[test]
    fn errors_carry_field_paths() {
        assert_eq!(path_of(&format!("{BASE}\n[schedule]\ngauge = 0\nwindows = [[2, 8], [1, 16]]\n")), "schedule.windows[1]");
        assert_eq!(path_of(&format!("{BASE}\n[schedule]\ngauge = 0\nwindows = [[2, 40]]\n")), "schedule.windows[0]");
        assert_eq!(
            path_of(&format!("{BASE}\n[schedule]\ngauge = 0\nwindows = [[2, 8], [4, 16], [6, 20]]\n")),
            "schedule.windows[2]"
        );
        assert_eq!(path_of(&format!("{BASE}\n[k_estimate]\ngauge = 1\nfloors = [2]\ncaps = [8]\n")), "k_estimate.gauge");
        assert_eq!(path_of(&format!("{BASE}\n[k_estimate]\ngauge = 0\nfloors = [9]\ncaps = [8]\n")), "k_estimate.floors[0]");
        assert_eq!(path_of(&BASE.replace("p = 2.0", "p = 0.5")), "gauges[0]");
        assert_eq!(path_of(&BASE.replace("lap-pos", "no-such-model")), "model");
        assert_eq!(path_of(&BASE.replace("dimension = 40", "dimension = 1")), "dimension");
        assert_eq!(
            path_of(&format!("{BASE}\n[[functionals]]\nid = \"a\"\n[[functionals.tails]]\nweight = [1.0, 0.0]\nfirst = 0\nstride = 0\nwidth = 1\nstate = \"coordinate\"\n")),
            "functionals[0].tails[0]"
        );
    }

    #[test]
    fn unknown_fields_are_rejected() {
        assert!(matches!(
            ExperimentConfig::from_toml(&format!("{BASE}\nsurprise = 1\n")),
            Err(LabError::Validation { .. })
        ));
    }

    #[test]
    fn shipped_configs_validate() {
        let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
        for entry in std::fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            ExperimentConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        }
    }
}
