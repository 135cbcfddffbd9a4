//! Run configuration: one JSON document, optionally overridden by flags.

use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use tightwalk::assembly::EnsembleFormat;
use tightwalk::contact::{ChargeDistribution, Charges, CustomWeights};
use tightwalk::diagnostics::integrability::Mode;
use tightwalk::diagnostics::EnsembleSource;
use tightwalk::{WalkParams, WeightFamily};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FamilyKind {
    #[default]
    Homogeneous,
    Periodic,
    Disordered,
    Custom,
}

/// Every knob of every command. Unused fields are ignored by a command but
/// still recorded in sidecars, so a sidecar reproduces its run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub p: f64,
    pub family: FamilyKind,
    pub beta: f64,
    /// Periodic rewards `beta_1..beta_Theta`.
    pub betas: Vec<f64>,
    pub lambda: f64,
    pub charges_file: Option<PathBuf>,
    /// Seed of the disorder; the run seed when absent.
    pub charge_seed: Option<u64>,
    pub charge_distribution: ChargeDistribution,
    pub bulk_weights: Option<PathBuf>,
    pub final_weights: Option<PathBuf>,
    /// Give each excursion a fair sign.
    pub signed: bool,

    #[serde(rename = "N")]
    pub sizes: Vec<usize>,
    pub replicas: u64,
    pub seed: u64,
    pub batch: u64,
    pub format: EnsembleFormat,

    pub deltas: Vec<f64>,
    pub gamma: f64,
    pub quantiles: Vec<f64>,
    pub a_grid: Vec<f64>,
    pub n_list: Vec<usize>,
    pub n_max: usize,
    pub mode: Mode,
    pub samples: u64,
    pub rational: bool,
    pub tolerance: f64,

    pub out: PathBuf,
    pub workers: Option<usize>,

    /// Written into sidecars; ignored on input.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sidecar: Option<serde_json::Value>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            p: 0.3,
            family: FamilyKind::Homogeneous,
            beta: 0.0,
            betas: Vec::new(),
            lambda: 0.0,
            charges_file: None,
            charge_seed: None,
            charge_distribution: ChargeDistribution::Rademacher,
            bulk_weights: None,
            final_weights: None,
            signed: false,
            sizes: vec![100],
            replicas: 1000,
            seed: 0,
            batch: 10_000,
            format: EnsembleFormat::Csv,
            deltas: (0..=8).map(|k| 0.5f64.powi(k)).collect(),
            gamma: 0.5,
            quantiles: vec![0.5, 0.9, 0.99],
            a_grid: (0..=40).map(|j| 0.25 * j as f64).collect(),
            n_list: vec![1000, 2000, 4000],
            n_max: 200,
            mode: Mode::Exact,
            samples: 100_000,
            rational: false,
            tolerance: tightwalk::oracle::ORACLE_TOLERANCE,
            out: PathBuf::from("."),
            workers: None,
            sidecar: None,
        }
    }
}

/// A configuration problem tied to one field, and to a line of the
/// config file when the field appears there.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub file: Option<PathBuf>,
    pub line: Option<usize>,
    pub field: String,
    pub message: String,
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match (&self.file, self.line) {
            (Some(file), Some(line)) => write!(f, "{}:{line}: ", file.display())?,
            (Some(file), None) => write!(f, "{}: ", file.display())?,
            _ => {}
        }
        write!(f, "field `{}`: {}", self.field, self.message)
    }
}

fn field_err(field: &str, message: impl Into<String>) -> ConfigError {
    ConfigError {
        file: None,
        line: None,
        field: field.to_owned(),
        message: message.into(),
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
            file: Some(path.to_owned()),
            line: None,
            field: "config".into(),
            message: e.to_string(),
        })?;
        serde_json::from_str(&text).map_err(|e| {
            let msg = e.to_string();
            let field = msg
                .split('`')
                .nth(1)
                .filter(|_| msg.contains("field"))
                .unwrap_or("config")
                .to_owned();
            ConfigError {
                file: Some(path.to_owned()),
                line: Some(e.line()),
                field,
                message: msg,
            }
        })
    }

    pub fn walk(&self) -> Result<WalkParams, ConfigError> {
        WalkParams::new(self.p).map_err(|e| match e {
            tightwalk::Error::InvalidParameter { reason, .. } => field_err("p", reason),
            other => field_err("p", other.to_string()),
        })
    }

    pub fn weight_family(&self) -> Result<WeightFamily, ConfigError> {
        let finite = |name: &str, x: f64| {
            if x.is_finite() {
                Ok(())
            } else {
                Err(field_err(name, "must be finite"))
            }
        };
        Ok(match self.family {
            FamilyKind::Homogeneous => {
                finite("beta", self.beta)?;
                WeightFamily::Homogeneous { beta: self.beta }
            }
            FamilyKind::Periodic => {
                if self.betas.is_empty() {
                    return Err(field_err("betas", "periodic family needs at least one reward"));
                }
                for &b in &self.betas {
                    finite("betas", b)?;
                }
                WeightFamily::Periodic { betas: self.betas.clone() }
            }
            FamilyKind::Disordered => {
                finite("beta", self.beta)?;
                finite("lambda", self.lambda)?;
                let charges = match &self.charges_file {
                    Some(path) => Charges::Fixed(
                        tightwalk::contact::read_charges(path).map_err(|e| field_err("charges_file", e.to_string()))?,
                    ),
                    None => Charges::Seeded {
                        seed: self.charge_seed.unwrap_or(self.seed),
                        distribution: self.charge_distribution,
                    },
                };
                WeightFamily::Disordered {
                    beta: self.beta,
                    lambda: self.lambda,
                    charges,
                }
            }
            FamilyKind::Custom => {
                let bulk = self.bulk_weights.as_ref().ok_or_else(|| field_err("bulk_weights", "custom family needs a weight table"))?;
                let last = self.final_weights.as_ref().ok_or_else(|| field_err("final_weights", "custom family needs a weight table"))?;
                WeightFamily::Custom(CustomWeights::from_csv_files(bulk, last).map_err(|e| field_err("bulk_weights", e.to_string()))?)
            }
        })
    }

    pub fn source(&self) -> Result<EnsembleSource, ConfigError> {
        Ok(EnsembleSource {
            walk: self.walk()?,
            family: self.weight_family()?,
            signed: self.signed,
        })
    }

    /// Checks the fields shared by all commands.
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.walk()?;
        if self.sizes.is_empty() {
            return Err(field_err("N", "grid is empty"));
        }
        if self.sizes.contains(&0) {
            return Err(field_err("N", "system sizes must be at least 1"));
        }
        if self.replicas == 0 {
            return Err(field_err("replicas", "must be at least 1"));
        }
        if self.workers == Some(0) {
            return Err(field_err("workers", "must be at least 1"));
        }
        for (name, grid) in [("deltas", &self.deltas), ("a_grid", &self.a_grid), ("quantiles", &self.quantiles)] {
            if grid.is_empty() {
                return Err(field_err(name, "grid is empty"));
            }
            if grid.iter().any(|x| !x.is_finite()) {
                return Err(field_err(name, "grid values must be finite"));
            }
        }
        if self.deltas.iter().any(|&d| !(d > 0.0 && d <= 1.0)) {
            return Err(field_err("deltas", "values must lie in (0, 1]"));
        }
        if self.quantiles.iter().any(|q| !(0.0..=1.0).contains(q)) {
            return Err(field_err("quantiles", "values must lie in [0, 1]"));
        }
        if self.n_list.is_empty() {
            return Err(field_err("n_list", "grid is empty"));
        }
        if self.n_list.contains(&0) {
            return Err(field_err("n_list", "lengths must be at least 1"));
        }
        if self.n_max == 0 {
            return Err(field_err("n_max", "must be at least 1"));
        }
        if !self.gamma.is_finite() {
            return Err(field_err("gamma", "must be finite"));
        }
        if self.tolerance.is_nan() || self.tolerance < 0.0 {
            return Err(field_err("tolerance", "must be nonnegative"));
        }
        if self.mode == Mode::Mc && self.samples < 2 {
            return Err(field_err("samples", "need at least two Monte Carlo samples"));
        }
        self.weight_family()?;
        Ok(())
    }
}

/// Attaches the config file, and the line on which `field` is set there.
pub fn anchor(mut err: ConfigError, path: Option<&Path>) -> ConfigError {
    if let Some(path) = path {
        err.file = Some(path.to_owned());
        if err.line.is_none() {
            if let Ok(text) = std::fs::read_to_string(path) {
                let key = format!("\"{}\"", err.field);
                err.line = text.lines().position(|l| l.contains(&key)).map(|i| i + 1);
            }
        }
    }
    err
}
