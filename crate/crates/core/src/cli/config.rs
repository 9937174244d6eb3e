//! Experiment configuration: a TOML document, validated as a whole.

use std::path::PathBuf;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::analysis::{example_smoothness_model, ExampleModel};
use crate::line_search::{ConstantModel, LineSearchParams, SmoothnessModel, DEFAULT_MAX_HALVINGS};
use crate::objective::{DiagonalQuadratic, SeparableObjective};
use crate::optimizers::{Method, Objective, RunOptions, StoppingRule};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    #[default]
    Single,
    Sweep,
    RemarkCheck,
    Basin,
    Claim6,
    Invariants,
}

impl ExperimentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::Single => "single",
            ExperimentKind::Sweep => "sweep",
            ExperimentKind::RemarkCheck => "remark-check",
            ExperimentKind::Basin => "basin",
            ExperimentKind::Claim6 => "claim6",
            ExperimentKind::Invariants => "invariants",
        }
    }

    fn needs_method(self) -> bool {
        matches!(
            self,
            ExperimentKind::Single | ExperimentKind::Sweep | ExperimentKind::Basin
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutputFormat {
    #[default]
    Csv,
    JsonLines,
}

impl OutputFormat {
    pub fn extension(self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::JsonLines => "jsonl",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ObjectiveConfig {
    /// `½ Σ λ_i (z_i − c_i)²`.
    Quadratic {
        coefficients: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        center: Option<Vec<f64>>,
    },
    /// `g(t) = t³ sin(1/t)` on the line.
    ExampleG {},
    /// `g(x) + g(y)`.
    #[serde(rename = "example-g-2d")]
    ExampleG2d {},
    /// Sum of two diagonal quadratics, one per block.
    SeparableQuadratic { block1: Vec<f64>, block2: Vec<f64> },
}

impl Default for ObjectiveConfig {
    fn default() -> Self {
        ObjectiveConfig::Quadratic {
            coefficients: vec![1.0],
            center: None,
        }
    }
}

impl ObjectiveConfig {
    pub fn dimension(&self) -> usize {
        match self {
            ObjectiveConfig::Quadratic { coefficients, .. } => coefficients.len(),
            ObjectiveConfig::ExampleG {} => 1,
            ObjectiveConfig::ExampleG2d {} => 2,
            ObjectiveConfig::SeparableQuadratic { block1, block2 } => block1.len() + block2.len(),
        }
    }

    pub fn is_separable(&self) -> bool {
        matches!(
            self,
            ObjectiveConfig::ExampleG2d {} | ObjectiveConfig::SeparableQuadratic { .. }
        )
    }

    /// Panics on a configuration that did not pass validation.
    pub fn build(&self) -> Objective {
        match self {
            ObjectiveConfig::Quadratic {
                coefficients,
                center,
            } => {
                let q = match center {
                    Some(c) => DiagonalQuadratic::with_center(coefficients.clone(), c.clone())
                        .expect("validated center"),
                    None => DiagonalQuadratic::new(coefficients.clone()),
                };
                Objective::Plain(Arc::new(q))
            }
            ObjectiveConfig::ExampleG {} => Objective::Plain(Arc::new(crate::objective::ExampleG)),
            ObjectiveConfig::ExampleG2d {} => {
                Objective::Separable(SeparableObjective::example_g_2d())
            }
            ObjectiveConfig::SeparableQuadratic { block1, block2 } => {
                Objective::Separable(SeparableObjective::new(
                    Arc::new(DiagonalQuadratic::new(block1.clone())),
                    Arc::new(DiagonalQuadratic::new(block2.clone())),
                ))
            }
        }
    }

    fn validate(&self, errors: &mut Vec<String>) {
        let positive = |name: &str, v: &[f64], errors: &mut Vec<String>| {
            if v.is_empty() {
                errors.push(format!("objective.{name}: must not be empty"));
            }
            if v.iter().any(|c| !(c.is_finite() && *c > 0.0)) {
                errors.push(format!(
                    "objective.{name}: entries must be positive and finite"
                ));
            }
        };
        match self {
            ObjectiveConfig::Quadratic {
                coefficients,
                center,
            } => {
                positive("coefficients", coefficients, errors);
                if let Some(c) = center {
                    if c.len() != coefficients.len() {
                        errors.push(format!(
                            "objective.center: expected {} entries, got {}",
                            coefficients.len(),
                            c.len()
                        ));
                    }
                    if c.iter().any(|v| !v.is_finite()) {
                        errors.push("objective.center: entries must be finite".into());
                    }
                }
            }
            ObjectiveConfig::SeparableQuadratic { block1, block2 } => {
                positive("block1", block1, errors);
                positive("block2", block2, errors);
            }
            ObjectiveConfig::ExampleG {} | ObjectiveConfig::ExampleG2d {} => {}
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ModelConfig {
    /// The envelope model for `g`, with an optional floor `L₀` on `L`.
    Example {
        shrink: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        l_floor: Option<f64>,
    },
    Constant {
        radius: f64,
        lipschitz: f64,
    },
}

impl ModelConfig {
    fn validate(&self, errors: &mut Vec<String>) {
        match *self {
            ModelConfig::Example { shrink, l_floor } => {
                if !(shrink > 0.0 && shrink < 1.0) {
                    errors.push("model.shrink: shrink must lie in (0,1)".into());
                }
                if let Some(l) = l_floor {
                    if !(l > 0.0 && l.is_finite()) {
                        errors.push("model.l_floor: must be positive and finite".into());
                    }
                }
            }
            ModelConfig::Constant { radius, lipschitz } => {
                if !(radius > 0.0) {
                    errors.push("model.radius: must be positive".into());
                }
                if !(lipschitz > 0.0 && lipschitz.is_finite()) {
                    errors.push("model.lipschitz: must be positive and finite".into());
                }
            }
        }
    }

    /// The example model, if this is one. Panics on an unvalidated config.
    pub fn example(&self) -> Option<ExampleModel> {
        match *self {
            ModelConfig::Example { shrink, l_floor } => {
                let m = example_smoothness_model(shrink).expect("validated shrink");
                Some(match l_floor {
                    Some(l) => m.with_lipschitz_floor(l).expect("validated floor"),
                    None => m,
                })
            }
            ModelConfig::Constant { .. } => None,
        }
    }

    pub fn build(&self) -> Arc<dyn SmoothnessModel> {
        match *self {
            ModelConfig::Example { .. } => Arc::new(self.example().unwrap()),
            ModelConfig::Constant { radius, lipschitz } => {
                Arc::new(ConstantModel { radius, lipschitz })
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitConfig {
    /// Starting point of a single run. Defaults to all ones.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub point: Option<Vec<f64>>,
    /// One `[lo, hi]` per coordinate for sampled starts. Defaults to `[-1, 1]`.
    #[serde(rename = "box", skip_serializing_if = "Option::is_none")]
    pub init_box: Option<Vec<[f64; 2]>>,
    /// Relative half-width of the uniform `(α, β, δ₀)` perturbation.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub perturbation: Option<f64>,
}

fn default_alpha() -> f64 {
    0.5
}
fn default_beta() -> f64 {
    0.5
}
fn default_delta0() -> f64 {
    1.0
}
fn default_samples() -> usize {
    1000
}
fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}
fn default_thinning() -> usize {
    1
}
fn default_max_halvings() -> usize {
    DEFAULT_MAX_HALVINGS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub kind: ExperimentKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub method: Option<Method>,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_beta")]
    pub beta: f64,
    #[serde(default = "default_delta0")]
    pub delta0: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub format: OutputFormat,
    #[serde(default = "default_thinning")]
    pub thinning: usize,
    #[serde(default = "default_max_halvings")]
    pub max_halvings: usize,
    #[serde(default)]
    pub objective: ObjectiveConfig,
    #[serde(default)]
    pub stopping: StoppingRule,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelConfig>,
    #[serde(default)]
    pub init: InitConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            kind: ExperimentKind::default(),
            method: None,
            alpha: default_alpha(),
            beta: default_beta(),
            delta0: default_delta0(),
            seed: 0,
            samples: default_samples(),
            output_dir: default_output_dir(),
            format: OutputFormat::default(),
            thinning: default_thinning(),
            max_halvings: default_max_halvings(),
            objective: ObjectiveConfig::default(),
            stopping: StoppingRule::default(),
            model: None,
            init: InitConfig::default(),
        }
    }
}

/// Why a configuration was rejected.
#[derive(Debug, Clone, PartialEq)]
pub enum ConfigError {
    /// Malformed document or a wrong type or unknown key.
    Parse {
        line: Option<usize>,
        message: String,
    },
    /// Every failed field rule, as `field: reason`.
    Invalid(Vec<String>),
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ConfigError::Parse {
                line: Some(line),
                message,
            } => write!(f, "parse error at line {line}: {message}"),
            ConfigError::Parse {
                line: None,
                message,
            } => write!(f, "parse error: {message}"),
            ConfigError::Invalid(errors) => {
                write!(f, "invalid configuration: {}", errors.join("; "))
            }
        }
    }
}

impl std::error::Error for ConfigError {}

/// Parses and validates a configuration document.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let cfg = parse_document(text)?;
    cfg.validate()?;
    Ok(cfg)
}

/// Parses without the range checks, so that overrides can be applied first.
pub fn parse_document(text: &str) -> Result<ExperimentConfig, ConfigError> {
    toml::from_str(text).map_err(|e| {
        let line = e
            .span()
            .map(|span| text[..span.start.min(text.len())].matches('\n').count() + 1);
        ConfigError::Parse {
            line,
            message: e.message().trim().to_string(),
        }
    })
}

pub fn serialize_config(cfg: &ExperimentConfig) -> String {
    toml::to_string(cfg).expect("configuration is always representable")
}

impl ExperimentConfig {
    /// Checks every field rule and reports all failures at once.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut errors = Vec::new();
        let unit = |name: &str, v: f64, errors: &mut Vec<String>| {
            if !(v > 0.0 && v < 1.0) {
                errors.push(format!("{name}: {name} must lie in (0,1)"));
            }
        };
        unit("alpha", self.alpha, &mut errors);
        unit("beta", self.beta, &mut errors);
        if !(self.delta0 > 0.0 && self.delta0.is_finite()) {
            errors.push("delta0: delta0 must be positive and finite".into());
        }
        if i64::try_from(self.seed).is_err() {
            errors.push(format!("seed: must be at most {}", i64::MAX));
        }
        if self.thinning == 0 {
            errors.push("thinning: must be at least 1".into());
        }
        if self.max_halvings == 0 {
            errors.push("max_halvings: must be at least 1".into());
        }
        if let Err(crate::error::Error::InvalidParameter { name, reason }) =
            self.stopping.validate()
        {
            errors.push(format!("stopping.{name}: {reason}"));
        }
        self.objective.validate(&mut errors);
        if let Some(m) = &self.model {
            m.validate(&mut errors);
        }

        match (self.kind.needs_method(), self.method) {
            (true, None) => errors.push(format!(
                "method: required for experiment kind {}",
                self.kind.as_str()
            )),
            (true, Some(m)) => {
                if m.needs_model() && self.model.is_none() {
                    errors.push(format!("model: required for method {m}"));
                }
                if m.is_coordinatewise() && !self.objective.is_separable() {
                    errors.push(format!(
                        "objective.name: method {m} needs a separable objective"
                    ));
                }
            }
            (false, _) => {}
        }
        if self.kind == ExperimentKind::Claim6 {
            if self.method.is_some_and(|m| m != Method::Gdnew) {
                errors.push("method: claim6 always runs gdnew".into());
            }
            if self.objective != (ObjectiveConfig::ExampleG2d {}) {
                errors.push("objective.name: claim6 needs example-g-2d".into());
            }
            if !matches!(self.model, Some(ModelConfig::Example { .. })) {
                errors.push("model: claim6 needs an example model".into());
            }
        }
        if self.kind != ExperimentKind::Single && self.samples == 0 {
            errors.push("samples: must be at least 1".into());
        }

        let dim = self.objective.dimension();
        if let Some(p) = &self.init.point {
            if p.len() != dim {
                errors.push(format!(
                    "init.point: expected {dim} entries, got {}",
                    p.len()
                ));
            }
            if p.iter().any(|v| !v.is_finite()) {
                errors.push("init.point: entries must be finite".into());
            }
        }
        if let Some(b) = &self.init.init_box {
            if b.len() != dim {
                errors.push(format!(
                    "init.box: expected {dim} intervals, got {}",
                    b.len()
                ));
            }
            if b.iter()
                .any(|[lo, hi]| !(lo.is_finite() && hi.is_finite() && lo <= hi))
            {
                errors.push("init.box: intervals must be finite with lo <= hi".into());
            }
        }
        if let Some(p) = self.init.perturbation {
            if !(0.0..1.0).contains(&p) {
                errors.push("init.perturbation: must lie in [0,1)".into());
            } else if self.alpha * (1.0 + p) >= 1.0 || self.beta * (1.0 + p) >= 1.0 {
                errors.push("init.perturbation: perturbed alpha or beta could reach 1".into());
            }
        }

        if errors.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::Invalid(errors))
        }
    }

    /// Panics on a configuration that did not pass validation.
    pub fn params(&self) -> LineSearchParams {
        LineSearchParams::new(self.alpha, self.beta, self.delta0).expect("validated parameters")
    }

    pub fn run_options(&self) -> RunOptions {
        RunOptions {
            stop: self.stopping,
            max_halvings: self.max_halvings,
            thinning: self.thinning,
        }
    }

    pub fn start_point(&self) -> Vec<f64> {
        self.init
            .point
            .clone()
            .unwrap_or_else(|| vec![1.0; self.objective.dimension()])
    }

    pub fn sample_box(&self) -> Vec<(f64, f64)> {
        match &self.init.init_box {
            Some(b) => b.iter().map(|&[lo, hi]| (lo, hi)).collect(),
            None => vec![(-1.0, 1.0); self.objective.dimension()],
        }
    }
}
