//! Analysis configuration file (`tslcheck.json`).

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::shapeops::DatasetSpec;
use crate::solver::Budget;
use crate::surface::ArgValue;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Backend {
    #[default]
    Internal,
    SmtlibExport,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Human,
    Json,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct SolverBudget {
    #[serde(default = "default_timeout_ms")]
    pub timeout_ms: u64,
    #[serde(default = "default_max_tuples")]
    pub max_tuples: u64,
}

fn default_timeout_ms() -> u64 {
    10_000
}

fn default_max_tuples() -> u64 {
    1_000_000
}

fn default_path_cap() -> usize {
    4096
}

fn default_true() -> bool {
    true
}

impl Default for SolverBudget {
    fn default() -> Self {
        SolverBudget {
            timeout_ms: default_timeout_ms(),
            max_tuples: default_max_tuples(),
        }
    }
}

impl SolverBudget {
    pub fn budget(&self) -> Budget {
        Budget {
            max_tuples: self.max_tuples,
            timeout: Duration::from_millis(self.timeout_ms),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct AnalysisConfig {
    #[serde(default)]
    pub entry: Option<PathBuf>,
    #[serde(default)]
    pub cli_args: BTreeMap<String, ArgValue>,
    #[serde(default)]
    pub dataset_overrides: BTreeMap<String, DatasetSpec>,
    #[serde(default = "default_path_cap")]
    pub path_cap: usize,
    #[serde(default)]
    pub solver_budget: SolverBudget,
    #[serde(default)]
    pub backend: Backend,
    #[serde(default)]
    pub format: Format,
    /// Merge pure, shape-identical branch arms.
    #[serde(default = "default_true")]
    pub merge: bool,
    /// Directory receiving one `.smt2` script per path.
    #[serde(default)]
    pub emit_smt2: Option<PathBuf>,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            entry: None,
            cli_args: BTreeMap::new(),
            dataset_overrides: BTreeMap::new(),
            path_cap: default_path_cap(),
            solver_budget: SolverBudget::default(),
            backend: Backend::default(),
            format: Format::default(),
            merge: true,
            emit_smt2: None,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{field}: {message}")]
    Invalid { field: String, message: String },
}

impl AnalysisConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |field: &str, message: &str| {
            Err(ConfigError::Invalid {
                field: field.into(),
                message: message.into(),
            })
        };
        if self.path_cap == 0 {
            return bad("pathCap", "must be at least 1");
        }
        if self.solver_budget.timeout_ms == 0 {
            return bad("solverBudget.timeoutMs", "must be positive");
        }
        if self.solver_budget.max_tuples == 0 {
            return bad("solverBudget.maxTuples", "must be positive");
        }
        Ok(())
    }
}

/// Parses a configuration document, applying defaults for absent keys.
pub fn parse_config(text: &str) -> Result<AnalysisConfig, ConfigError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let cfg: AnalysisConfig = serde_path_to_error::deserialize(de).map_err(|e| ConfigError::Invalid {
        field: match e.path().to_string() {
            p if p == "." => "<root>".into(),
            p => p,
        },
        message: e.inner().to_string(),
    })?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<AnalysisConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_owned(),
        source,
    })?;
    parse_config(&text)
}
