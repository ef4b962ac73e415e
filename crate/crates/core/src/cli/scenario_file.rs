//! JSON scenario files.
//!
//! ```json
//! {
//!   "name": "scenario2",
//!   "tasks": [[5, 5], [2.5, 10]],
//!   "robots": [{ "mean": [1, 5], "cov": [[1.25, 0], [0, 1.25]] },
//!              { "mean": [2, 2], "cov": [[1.25, 0], [0, 1.25]] }],
//!   "adjacency": [[0, 1], [1, 0]],
//!   "ut": { "alpha": 1, "beta": 2, "kappa": 0 }
//! }
//! ```
//!
//! `adjacency` and `ut` are optional, as is each key inside `ut`. Unknown
//! keys are rejected.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::pipeline::{PipelineError, Scenario};
use crate::unscented::{GaussianVector, UnscentedError, UtParams};

#[derive(Debug, Error)]
pub enum ScenarioFileError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("schema error at `{path}`: {message}")]
    Schema { path: String, message: String },
    #[error("robot {index} covariance: {source}")]
    RobotCovariance { index: usize, source: UnscentedError },
    #[error("{robots} robots but {tasks} tasks")]
    CountMismatch { robots: usize, tasks: usize },
    #[error(transparent)]
    Scenario(#[from] PipelineError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub name: String,
    pub tasks: Vec<[f64; 2]>,
    pub robots: Vec<RobotEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub adjacency: Option<Vec<Vec<u8>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ut: Option<UtSettings>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobotEntry {
    pub mean: [f64; 2],
    pub cov: [[f64; 2]; 2],
}

/// Unscented-transform scaling; absent keys take the defaults 1, 2, 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UtSettings {
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_beta")]
    pub beta: f64,
    #[serde(default = "default_kappa")]
    pub kappa: f64,
}

fn default_alpha() -> f64 {
    UtParams::DEFAULT_ALPHA
}
fn default_beta() -> f64 {
    UtParams::DEFAULT_BETA
}
fn default_kappa() -> f64 {
    UtParams::DEFAULT_KAPPA
}

impl Default for UtSettings {
    fn default() -> Self {
        Self { alpha: default_alpha(), beta: default_beta(), kappa: default_kappa() }
    }
}

impl UtSettings {
    pub fn params(&self, dim: usize) -> Result<UtParams, UnscentedError> {
        UtParams::new(dim, self.alpha, self.beta, self.kappa)
    }
}

/// A validated scenario with the settings and digest of the file it came from.
#[derive(Debug, Clone)]
pub struct LoadedScenario {
    pub scenario: Scenario,
    pub ut: UtSettings,
    /// Lower-case hex SHA-256 of the file bytes.
    pub sha256: String,
}

pub fn parse_scenario(path: impl AsRef<Path>) -> Result<LoadedScenario, ScenarioFileError> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|source| ScenarioFileError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_scenario_bytes(&bytes)
}

pub fn parse_scenario_bytes(bytes: &[u8]) -> Result<LoadedScenario, ScenarioFileError> {
    let mut de = serde_json::Deserializer::from_slice(bytes);
    let file: ScenarioFile = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        if inner.is_syntax() || inner.is_eof() {
            ScenarioFileError::Syntax { line: inner.line(), column: inner.column(), message: inner.to_string() }
        } else {
            ScenarioFileError::Schema { path, message: inner.to_string() }
        }
    })?;
    de.end().map_err(|e| ScenarioFileError::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let scenario = file.to_scenario()?;
    Ok(LoadedScenario {
        scenario,
        ut: file.ut.unwrap_or_default(),
        sha256: sha256_hex(bytes),
    })
}

impl ScenarioFile {
    pub fn to_scenario(&self) -> Result<Scenario, ScenarioFileError> {
        if self.robots.len() != self.tasks.len() {
            return Err(ScenarioFileError::CountMismatch { robots: self.robots.len(), tasks: self.tasks.len() });
        }
        let robots = self
            .robots
            .iter()
            .enumerate()
            .map(|(index, r)| {
                let c = r.cov;
                GaussianVector::new(
                    DVector::from_column_slice(&r.mean),
                    DMatrix::from_row_slice(2, 2, &[c[0][0], c[0][1], c[1][0], c[1][1]]),
                )
                .map_err(|source| ScenarioFileError::RobotCovariance { index, source })
            })
            .collect::<Result<Vec<_>, _>>()?;
        let adjacency = match &self.adjacency {
            None => None,
            Some(rows) => {
                let mut out = Vec::with_capacity(rows.len());
                for (i, row) in rows.iter().enumerate() {
                    let mut r = Vec::with_capacity(row.len());
                    for (j, &x) in row.iter().enumerate() {
                        match x {
                            0 => r.push(false),
                            1 => r.push(true),
                            other => {
                                return Err(ScenarioFileError::Schema {
                                    path: format!("adjacency[{i}][{j}]"),
                                    message: format!("expected 0 or 1, got {other}"),
                                })
                            }
                        }
                    }
                    out.push(r);
                }
                Some(out)
            }
        };
        Ok(Scenario::new(self.name.clone(), robots, self.tasks.clone(), adjacency)?)
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}
