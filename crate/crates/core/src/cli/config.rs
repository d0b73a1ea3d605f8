//! Experiment configuration files.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::conditions::{BoundOptions, M0Denominator};
use crate::integrator::IntegratorConfig;
use crate::model::{ModelParams, State};
use crate::orbit::{OrbitOptions, MIN_SAMPLES};

/// Newton settings for the orbit search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default = "default_orbit_tol")]
    pub orbit_tol: f64,
    #[serde(default = "default_newton_max_iter")]
    pub newton_max_iter: usize,
}

fn default_orbit_tol() -> f64 {
    1e-10
}

fn default_newton_max_iter() -> usize {
    10
}

fn default_seed_periods() -> usize {
    30
}

fn default_samples() -> usize {
    MIN_SAMPLES
}

fn default_lambda3() -> f64 {
    1.0
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            orbit_tol: default_orbit_tol(),
            newton_max_iter: default_newton_max_iter(),
        }
    }
}

/// Everything one run of the tool needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelParams,
    #[serde(default)]
    pub integrator: IntegratorConfig,
    /// Interval for the coefficient extrema; `[0, T]` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extremum_interval: Option<[f64; 2]>,
    #[serde(default)]
    pub m0_denominator: M0Denominator,
    #[serde(default = "default_lambda3")]
    pub lambda3: f64,
    pub initial_state: State,
    /// Simulation length.
    pub horizon: f64,
    /// Transient periods used to seed the orbit search.
    #[serde(default = "default_seed_periods")]
    pub seed_periods: usize,
    #[serde(default)]
    pub tolerances: Tolerances,
    /// Output samples per period.
    #[serde(default = "default_samples")]
    pub samples_per_period: usize,
}

/// A configuration problem with enough context to fix the file.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub source_name: String,
    /// 1-based position for syntax and type errors.
    pub line: Option<usize>,
    pub column: Option<usize>,
    /// Dotted field path for semantic errors.
    pub field: Option<String>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.source_name)?;
        if let (Some(l), Some(c)) = (self.line, self.column) {
            write!(f, ":{l}:{c}")?;
        }
        if let Some(field) = &self.field {
            write!(f, ": field `{field}`")?;
        }
        write!(f, ": {}", self.message)
    }
}

impl std::error::Error for ConfigError {}

impl ExperimentConfig {
    /// Parses and validates a JSON document. `source_name` labels diagnostics.
    pub fn from_json(text: &str, source_name: &str) -> Result<Self, ConfigError> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| ConfigError {
            source_name: source_name.to_string(),
            line: Some(e.line()),
            column: Some(e.column()),
            field: None,
            message: e.to_string(),
        })?;
        cfg.validate().map_err(|(field, message)| ConfigError {
            source_name: source_name.to_string(),
            line: None,
            column: None,
            field: Some(field),
            message,
        })?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let name = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
            source_name: name.clone(),
            line: None,
            column: None,
            field: None,
            message: format!("cannot read file: {e}"),
        })?;
        Self::from_json(&text, &name)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Semantic checks beyond the JSON shape, as `(field, message)`.
    pub fn validate(&self) -> Result<(), (String, String)> {
        self.model.validate().map_err(|e| ("model".to_string(), e.to_string()))?;
        self.integrator
            .validate()
            .map_err(|e| ("integrator".to_string(), e.to_string()))?;
        if let Some([a, b]) = self.extremum_interval {
            if !(a.is_finite() && b.is_finite() && a < b) {
                return Err(("extremum_interval".into(), format!("need a < b, got [{a}, {b}]")));
            }
        }
        if !(self.lambda3 > 0.0 && self.lambda3.is_finite()) {
            return Err(("lambda3".into(), format!("must be > 0, got {}", self.lambda3)));
        }
        let State { x1, x2 } = self.initial_state;
        if !(x1 > 0.0 && x2 > 0.0 && x1.is_finite() && x2.is_finite()) {
            return Err(("initial_state".into(), format!("densities must be positive, got ({x1}, {x2})")));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(("horizon".into(), format!("must be > 0, got {}", self.horizon)));
        }
        if self.seed_periods == 0 {
            return Err(("seed_periods".into(), "must be at least 1".into()));
        }
        if !(self.tolerances.orbit_tol > 0.0) {
            return Err((
                "tolerances.orbit_tol".into(),
                format!("must be > 0, got {}", self.tolerances.orbit_tol),
            ));
        }
        if self.tolerances.newton_max_iter == 0 {
            return Err(("tolerances.newton_max_iter".into(), "must be at least 1".into()));
        }
        if self.samples_per_period == 0 {
            return Err(("samples_per_period".into(), "must be at least 1".into()));
        }
        Ok(())
    }

    pub fn bound_options(&self) -> BoundOptions {
        BoundOptions {
            interval: self.extremum_interval,
            m0_denominator: self.m0_denominator,
            lambda3: self.lambda3,
        }
    }

    pub fn orbit_options(&self) -> OrbitOptions {
        OrbitOptions {
            tol: self.tolerances.orbit_tol,
            max_iter: self.tolerances.newton_max_iter,
            samples: self.samples_per_period,
        }
    }
}
