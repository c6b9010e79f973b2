//! JSON run configuration for the command-line driver.
//!
//! A file holds one object whose `command` key selects the payload:
//!
//! ```json
//! {"command": "converge", "family": "lower", "hmax": 0.125, "levels": 4}
//! {"command": "arterial", "output_dir": "arterial_output", "parameters": {"t_final": 0.006}}
//! {"command": "check-mesh", "path": "domain.mesh"}
//! {"command": "small-data", "family": "lower", "n": 8, "sources": "mms"}
//! {"command": "solve", "mesh": "domain.mesh", "dt": 1e-3, "t_final": 1e-2}
//! ```
//!
//! Missing keys take their defaults; unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assembly::{BoundaryConditions, Family, ProblemCoefficients};
use crate::benchmark::ArterialConfig;
use crate::mesh::DiagonalPattern;
use crate::stepper::{EnergyConstants, SolverConfig};
use crate::verification::ConvergenceConfig;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{}line {line}, column {column}: {message}", origin(.path))]
    Parse {
        path: Option<PathBuf>,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{}at `{key}`: {message}", origin(.path))]
    Schema {
        path: Option<PathBuf>,
        key: String,
        message: String,
    },
    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

fn origin(path: &Option<PathBuf>) -> String {
    path.as_ref().map_or(String::new(), |p| format!("{}: ", p.display()))
}

fn invalid(e: impl std::fmt::Display) -> ConfigError {
    ConfigError::Invalid(e.to_string())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum RunConfig {
    Converge(ConvergeRun),
    Arterial(ArterialRun),
    CheckMesh(CheckMeshRun),
    SmallData(SmallDataRun),
    Solve(SolveRun),
}

impl RunConfig {
    pub fn from_json_str(text: &str) -> Result<Self, ConfigError> {
        parse(text, None)
    }

    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
        parse(&text, Some(path))
    }

    pub fn command(&self) -> &'static str {
        match self {
            RunConfig::Converge(_) => "converge",
            RunConfig::Arterial(_) => "arterial",
            RunConfig::CheckMesh(_) => "check-mesh",
            RunConfig::SmallData(_) => "small-data",
            RunConfig::Solve(_) => "solve",
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("configuration serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        match self {
            RunConfig::Converge(c) => c.study().map(|_| ()),
            RunConfig::Arterial(c) => c.parameters.validate().map_err(invalid),
            RunConfig::CheckMesh(_) => Ok(()),
            RunConfig::SmallData(c) => c.validate(),
            RunConfig::Solve(c) => c.validate(),
        }
    }
}

fn parse(text: &str, path: Option<&Path>) -> Result<RunConfig, ConfigError> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| ConfigError::Parse {
        path: path.map(Path::to_path_buf),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let schema = |key: &str, message: String| ConfigError::Schema { path: path.map(Path::to_path_buf), key: key.into(), message };
    let serde_json::Value::Object(mut map) = value else {
        return Err(schema(".", "expected an object".into()));
    };
    let command = match map.remove("command") {
        Some(serde_json::Value::String(c)) => c,
        Some(_) => return Err(schema("command", "expected a string".into())),
        None => return Err(schema("command", "missing field".into())),
    };
    let payload = serde_json::Value::Object(map);
    let cfg = match command.as_str() {
        "converge" => payload_of(payload).map(RunConfig::Converge),
        "arterial" => payload_of(payload).map(RunConfig::Arterial),
        "check-mesh" => payload_of(payload).map(RunConfig::CheckMesh),
        "small-data" => payload_of(payload).map(RunConfig::SmallData),
        "solve" => payload_of(payload).map(RunConfig::Solve),
        other => {
            return Err(schema(
                "command",
                format!("unknown command `{other}` (expected converge, arterial, check-mesh, small-data or solve)"),
            ))
        }
    }
    .map_err(|(key, message)| schema(&key, message))?;
    cfg.validate()?;
    Ok(cfg)
}

fn payload_of<T: serde::de::DeserializeOwned>(value: serde_json::Value) -> Result<T, (String, String)> {
    serde_path_to_error::deserialize(value).map_err(|e| (e.path().to_string(), e.inner().to_string()))
}

/// Right-hand side and boundary data of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceSpec {
    Zero,
    /// Data of the manufactured solution, with matching initial state.
    #[default]
    Mms,
}

impl std::str::FromStr for SourceSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "zero" => Ok(SourceSpec::Zero),
            "mms" => Ok(SourceSpec::Mms),
            _ => Err(format!("unknown sources `{s}` (expected zero or mms)")),
        }
    }
}

/// Mesh sequence `h = hmax / 2^k`, `k < levels`. Unset time parameters
/// take the family defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConvergeRun {
    pub family: Family,
    pub hmax: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub levels: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_final: Option<f64>,
    pub pattern: DiagonalPattern,
    /// CSV destination; defaults to `convergence_<family>.csv`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

impl Default for ConvergeRun {
    fn default() -> Self {
        Self {
            family: Family::Lower,
            hmax: 0.125,
            levels: None,
            dt: None,
            t_final: None,
            pattern: DiagonalPattern::Alternating,
            output: None,
        }
    }
}

impl ConvergeRun {
    pub fn study(&self) -> Result<ConvergenceConfig, ConfigError> {
        let mut cfg = ConvergenceConfig::of_family(self.family);
        let n = (1.0 / self.hmax).round();
        if !(self.hmax > 0.0 && n >= 1.0 && (n * self.hmax - 1.0).abs() < 1e-9) {
            return Err(ConfigError::Invalid(format!("hmax must be 1/n for an integer n, got {}", self.hmax)));
        }
        cfg.n_coarse = n as usize;
        cfg.levels = self.levels.unwrap_or(cfg.levels);
        cfg.dt = self.dt.unwrap_or(cfg.dt);
        cfg.t_final = self.t_final.unwrap_or(cfg.t_final);
        cfg.pattern = self.pattern;
        cfg.validate().map_err(invalid)?;
        Ok(cfg)
    }

    pub fn output_path(&self) -> PathBuf {
        self.output.clone().unwrap_or_else(|| {
            let name = match self.family {
                Family::Lower => "lower",
                Family::Higher => "higher",
            };
            PathBuf::from(format!("convergence_{name}.csv"))
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArterialRun {
    pub output_dir: PathBuf,
    pub parameters: ArterialConfig,
}

impl Default for ArterialRun {
    fn default() -> Self {
        Self { output_dir: PathBuf::from("arterial_output"), parameters: ArterialConfig::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckMeshRun {
    pub path: PathBuf,
}

/// Small data condition on the `n x n` manufactured-solution mesh.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SmallDataRun {
    pub family: Family,
    pub n: usize,
    pub dt: f64,
    pub t_final: f64,
    pub pattern: DiagonalPattern,
    pub coefficients: ProblemCoefficients,
    pub constants: EnergyConstants,
    pub sources: SourceSpec,
}

impl Default for SmallDataRun {
    fn default() -> Self {
        Self {
            family: Family::Lower,
            n: 8,
            dt: 2.5e-4,
            t_final: 0.1,
            pattern: DiagonalPattern::Alternating,
            coefficients: ProblemCoefficients::unit(),
            constants: EnergyConstants::default(),
            sources: SourceSpec::Mms,
        }
    }
}

impl SmallDataRun {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.n == 0 {
            return Err(ConfigError::Invalid("n must be at least 1".into()));
        }
        SolverConfig::new(self.dt, self.t_final).validate().map_err(invalid)?;
        self.coefficients.validate().map_err(invalid)?;
        self.constants.validate().map_err(invalid)
    }
}

/// Time integration on a mesh file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveRun {
    pub mesh: PathBuf,
    #[serde(default = "lower")]
    pub family: Family,
    #[serde(default = "ProblemCoefficients::unit")]
    pub coefficients: ProblemCoefficients,
    #[serde(default)]
    pub sources: SourceSpec,
    #[serde(default = "BoundaryConditions::mms")]
    pub bcs: BoundaryConditions,
    pub dt: f64,
    pub t_final: f64,
    /// Destination of the final-state VTK files and the run summary.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

fn lower() -> Family {
    Family::Lower
}

impl SolveRun {
    pub fn validate(&self) -> Result<(), ConfigError> {
        SolverConfig::new(self.dt, self.t_final).validate().map_err(invalid)?;
        self.coefficients.validate().map_err(invalid)
    }
}
