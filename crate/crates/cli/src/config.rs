//! Experiment configuration: a flat JSON-compatible key-value document with
//! field-level validation errors.

use std::fmt;
use std::str::FromStr;

use serde_json::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum EstimatorKind {
    Direct,
    Exact,
    Approx,
    Asymptotic,
    Sigma,
}

impl EstimatorKind {
    pub const ALL: [EstimatorKind; 5] = [
        EstimatorKind::Direct,
        EstimatorKind::Exact,
        EstimatorKind::Approx,
        EstimatorKind::Asymptotic,
        EstimatorKind::Sigma,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            EstimatorKind::Direct => "direct",
            EstimatorKind::Exact => "exact",
            EstimatorKind::Approx => "approx",
            EstimatorKind::Asymptotic => "asymptotic",
            EstimatorKind::Sigma => "sigma",
        }
    }
}

impl FromStr for EstimatorKind {
    type Err = ConfigError;
    fn from_str(s: &str) -> Result<Self, ConfigError> {
        EstimatorKind::ALL
            .iter()
            .find(|e| e.name() == s)
            .copied()
            .ok_or_else(|| ConfigError::field("estimators", format!("unknown estimator name '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = ConfigError;
    fn from_str(s: &str) -> Result<Self, ConfigError> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(ConfigError::field(
                "output_format",
                format!("expected 'csv' or 'json', got '{other}'"),
            )),
        }
    }
}

/// Schema violation with the offending field named.
#[derive(Debug, Clone)]
pub struct ConfigError {
    pub field: Option<String>,
    pub message: String,
}

impl ConfigError {
    pub fn field(field: &str, message: impl Into<String>) -> Self {
        ConfigError {
            field: Some(field.to_string()),
            message: message.into(),
        }
    }

    pub fn document(message: impl Into<String>) -> Self {
        ConfigError {
            field: None,
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.field {
            Some(field) => write!(f, "config field '{field}': {}", self.message),
            None => write!(f, "config: {}", self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub dims: Vec<usize>,
    pub epsilons: Vec<f64>,
    pub estimators: Vec<EstimatorKind>,
    pub n_samples: u64,
    pub n_steps: u64,
    pub reorth_period: u64,
    pub master_seed: u64,
    pub workers: usize,
    /// None writes to stdout.
    pub output_path: Option<String>,
    pub output_format: OutputFormat,
}

pub fn default_workers() -> usize {
    std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            dims: Vec::new(),
            epsilons: Vec::new(),
            estimators: Vec::new(),
            n_samples: 10_000,
            n_steps: 10_000,
            reorth_period: 1,
            master_seed: 0,
            workers: default_workers(),
            output_path: None,
            output_format: OutputFormat::Csv,
        }
    }
}

impl ExperimentConfig {
    /// Checks the cross-field invariants; parse_config calls this and CLI
    /// overrides re-check through it.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.dims.is_empty() {
            return Err(ConfigError::field("dims", "must be non-empty"));
        }
        if self.epsilons.is_empty() {
            return Err(ConfigError::field("epsilons", "must be non-empty"));
        }
        if self.estimators.is_empty() {
            return Err(ConfigError::field("estimators", "must be non-empty"));
        }
        if let Some(&d) = self.dims.iter().find(|&&d| d < 1) {
            return Err(ConfigError::field("dims", format!("must be >= 1, got {d}")));
        }
        if let Some(&e) = self.epsilons.iter().find(|&&e| e.is_nan() || e <= 0.0) {
            return Err(ConfigError::field(
                "epsilons",
                format!("must be positive, got {e}"),
            ));
        }
        if self.n_samples < 1 {
            return Err(ConfigError::field("n_samples", "must be >= 1"));
        }
        if self.n_steps < 1 {
            return Err(ConfigError::field("n_steps", "must be >= 1"));
        }
        if self.reorth_period < 1 {
            return Err(ConfigError::field("reorth_period", "must be >= 1"));
        }
        if self.workers < 1 {
            return Err(ConfigError::field("workers", "must be >= 1"));
        }
        Ok(())
    }
}

fn as_u64(field: &str, v: &Value) -> Result<u64, ConfigError> {
    v.as_u64()
        .ok_or_else(|| ConfigError::field(field, format!("expected a non-negative integer, got {v}")))
}

/// Parses and validates the flat key-value document, filling defaults for
/// absent optional fields and rejecting unknown keys.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let value: Value = serde_json::from_str(text)
        .map_err(|e| ConfigError::document(format!("not well-formed JSON: {e}")))?;
    let obj = value
        .as_object()
        .ok_or_else(|| ConfigError::document("top level must be a key-value object"))?;

    let mut cfg = ExperimentConfig::default();
    for (key, v) in obj {
        match key.as_str() {
            "dims" => {
                let arr = v
                    .as_array()
                    .ok_or_else(|| ConfigError::field("dims", "expected an array of integers"))?;
                cfg.dims = arr
                    .iter()
                    .map(|x| as_u64("dims", x).map(|n| n as usize))
                    .collect::<Result<_, _>>()?;
            }
            "epsilons" => {
                let arr = v
                    .as_array()
                    .ok_or_else(|| ConfigError::field("epsilons", "expected an array of numbers"))?;
                cfg.epsilons = arr
                    .iter()
                    .map(|x| {
                        x.as_f64().ok_or_else(|| {
                            ConfigError::field("epsilons", format!("expected a number, got {x}"))
                        })
                    })
                    .collect::<Result<_, _>>()?;
            }
            "estimators" => {
                let arr = v.as_array().ok_or_else(|| {
                    ConfigError::field("estimators", "expected an array of names")
                })?;
                cfg.estimators = arr
                    .iter()
                    .map(|x| {
                        x.as_str()
                            .ok_or_else(|| {
                                ConfigError::field(
                                    "estimators",
                                    format!("expected a string, got {x}"),
                                )
                            })
                            .and_then(EstimatorKind::from_str)
                    })
                    .collect::<Result<_, _>>()?;
            }
            "n_samples" => cfg.n_samples = as_u64("n_samples", v)?,
            "n_steps" => cfg.n_steps = as_u64("n_steps", v)?,
            "reorth_period" => cfg.reorth_period = as_u64("reorth_period", v)?,
            "master_seed" => cfg.master_seed = as_u64("master_seed", v)?,
            "workers" => cfg.workers = as_u64("workers", v)? as usize,
            "output_path" => {
                cfg.output_path = Some(
                    v.as_str()
                        .ok_or_else(|| ConfigError::field("output_path", "expected a string"))?
                        .to_string(),
                );
            }
            "output_format" => {
                cfg.output_format = v
                    .as_str()
                    .ok_or_else(|| ConfigError::field("output_format", "expected a string"))?
                    .parse()?;
            }
            other => {
                return Err(ConfigError::field(other, "unknown field"));
            }
        }
    }
    cfg.validate()?;
    Ok(cfg)
}
