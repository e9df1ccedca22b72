//! Run configuration: one JSON file, every key overridable from the
//! command line.

use std::fmt;
use std::path::{Path, PathBuf};

use leontief::dist::Marginal;
use leontief::{Distribution, Family, Numerics, Tabulated};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum DistributionSpec {
    Uniform,
    Example1,
    Example2,
    Independent { value: Marginal, ratio: Marginal },
    /// CSV with header `v,k,density`; relative paths resolve against the
    /// config file's directory.
    Tabulated { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleConfig {
    pub k_nodes: usize,
    pub rho_nodes: usize,
    pub bound_tol: f64,
    pub oracle_tol: f64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        let d = leontief::solve::CertifyOptions::default();
        Self { k_nodes: d.k_nodes, rho_nodes: d.rho_nodes, bound_tol: d.bound_tol, oracle_tol: d.oracle_tol }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub distribution: DistributionSpec,
    #[serde(alias = "kfloor")]
    pub k_floor: f64,
    /// Side of the square `v x k` mesh used by `verify`.
    pub grid: usize,
    /// Tolerance of the incentive checks.
    pub tol: f64,
    pub out: PathBuf,
    /// Recorded with every run; no command draws random numbers.
    pub seed: u64,
    /// Mechanism JSON read by `verify` and `revenue`.
    pub mechanism: Option<PathBuf>,
    pub oracle: OracleConfig,
    pub numerics: Numerics,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            distribution: DistributionSpec::Uniform,
            k_floor: 1e-3,
            grid: 50,
            tol: 1e-9,
            out: PathBuf::from("out"),
            seed: 0,
            mechanism: None,
            oracle: OracleConfig::default(),
            numerics: Numerics::default(),
        }
    }
}

/// A configuration problem tied to one key.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub key: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(key: impl Into<String>, message: impl Into<String>) -> Self {
        Self { key: key.into(), message: message.into() }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config key `{}`: {}", self.key, self.message)
    }
}

impl std::error::Error for ConfigError {}

/// Pulls the offending key out of a serde message such as
/// "unknown field `grd`, expected ...".
fn key_from_serde(msg: &str) -> String {
    for marker in ["unknown field `", "missing field `", "unknown variant `"] {
        if let Some(rest) = msg.split(marker).nth(1) {
            if let Some(key) = rest.split('`').next() {
                return key.to_string();
            }
        }
    }
    "config".into()
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let msg = e.into_inner().to_string();
            let key = if path == "." { key_from_serde(&msg) } else { path };
            ConfigError::new(key, msg)
        })
    }

    /// Reads a config file; tabulated paths become relative to its
    /// directory.
    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::new("config", format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_json(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        if let DistributionSpec::Tabulated { path: p } = &mut cfg.distribution {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        if let Some(m) = &mut cfg.mechanism {
            if m.is_relative() {
                *m = base.join(&*m);
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.k_floor > 0.0 && self.k_floor <= 0.5) {
            return Err(ConfigError::new("k_floor", format!("{} not in (0, 0.5]", self.k_floor)));
        }
        if self.grid < 3 {
            return Err(ConfigError::new("grid", format!("{} is below the minimum resolution 3", self.grid)));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(ConfigError::new("tol", format!("{} must be positive", self.tol)));
        }
        let o = &self.oracle;
        if o.k_nodes == 0 || o.k_nodes > leontief::solve::ORACLE_MAX_K_NODES {
            return Err(ConfigError::new("oracle.k_nodes", format!("{} not in 1..=6", o.k_nodes)));
        }
        if !(3..=leontief::solve::ORACLE_MAX_RHO_NODES).contains(&o.rho_nodes) {
            return Err(ConfigError::new("oracle.rho_nodes", format!("{} not in 3..=40", o.rho_nodes)));
        }
        for (key, v) in [("oracle.bound_tol", o.bound_tol), ("oracle.oracle_tol", o.oracle_tol)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(ConfigError::new(key, format!("{v} must be positive")));
            }
        }
        self.effective_numerics().validate().map_err(|e| {
            let msg = e.to_string();
            let key = msg.split_whitespace().find(|w| w.starts_with("numerics.")).unwrap_or("numerics").to_string();
            ConfigError::new(key, msg)
        })
    }

    /// Library numerics with the run's ratio floor.
    pub fn effective_numerics(&self) -> Numerics {
        Numerics { k_floor: self.k_floor, ..self.numerics.clone() }
    }

    pub fn distribution(&self) -> Result<Distribution, ConfigError> {
        let bad = |e: leontief::Error| ConfigError::new("distribution", e.to_string());
        let family = match &self.distribution {
            DistributionSpec::Uniform => Family::Uniform,
            DistributionSpec::Example1 => Family::Example1,
            DistributionSpec::Example2 => Family::Example2,
            DistributionSpec::Independent { value, ratio } => Family::Independent { value: *value, ratio: *ratio },
            DistributionSpec::Tabulated { path } => {
                let t = Tabulated::from_csv_path(path)
                    .map_err(|e| ConfigError::new("distribution.path", format!("{}: {e}", path.display())))?;
                Family::Tabulated(t)
            }
        };
        Distribution::new(family, self.k_floor).map_err(bad)
    }
}
