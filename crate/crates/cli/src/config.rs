//! Config file schema, flag/file/default resolution and up-front budget checks.

use std::fmt;
use std::path::{Path, PathBuf};

use catsim::table::format_float;
use serde::Deserialize;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Budget(String),
    Numeric(catsim::Error),
    Property(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Budget(_) | CliError::Numeric(_) => 3,
            CliError::Property(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Budget(m) => write!(f, "budget exceeded: {m}"),
            CliError::Numeric(e) => write!(f, "numerical error: {e}"),
            CliError::Property(m) => write!(f, "property check failed: {m}"),
        }
    }
}

impl From<catsim::Error> for CliError {
    fn from(e: catsim::Error) -> Self {
        match e {
            catsim::Error::InvalidParameter(m) => CliError::Config(m),
            other => CliError::Numeric(other),
        }
    }
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T> OneOrMany<T> {
    pub fn into_vec(self) -> Vec<T> {
        match self {
            OneOrMany::One(x) => vec![x],
            OneOrMany::Many(v) => v,
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    /// Comma-separated table with a header row.
    Csv,
    /// One `key=value` record per line.
    Records,
}

/// Everything a config file may set. Unknown keys are rejected.
#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct FileConfig {
    pub experiment: Option<String>,
    pub seed: Option<u64>,
    pub output: Option<PathBuf>,
    pub format: Option<Format>,
    pub alpha: Option<OneOrMany<f64>>,
    pub theta: Option<OneOrMany<f64>>,
    pub strength: Option<OneOrMany<f64>>,
    pub n: Option<OneOrMany<usize>>,
    pub epsilon: Option<f64>,
    pub shots: Option<usize>,
    pub repeats: Option<usize>,
    pub trials: Option<usize>,
    pub lambda: Option<f64>,
    pub points: Option<usize>,
    pub theta_min: Option<f64>,
    pub theta_max: Option<f64>,
    pub alpha_max: Option<f64>,
    pub cases: Option<usize>,
}

impl FileConfig {
    pub fn load(path: &Path, experiment: &str) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let cfg: FileConfig = toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        if let Some(name) = &cfg.experiment {
            if name != experiment {
                return Err(CliError::Config(format!("{}: file is for `{name}`, not `{experiment}`", path.display())));
            }
        }
        Ok(cfg)
    }
}

/// Flag, then file, then default.
pub fn pick<T>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}

pub fn pick_list<T>(flag: Vec<T>, file: Option<OneOrMany<T>>, default: Vec<T>) -> Vec<T> {
    if !flag.is_empty() {
        flag
    } else {
        file.map(OneOrMany::into_vec).unwrap_or(default)
    }
}

pub fn require(cond: bool, msg: impl Into<String>) -> Result<(), CliError> {
    if cond {
        Ok(())
    } else {
        Err(CliError::Config(msg.into()))
    }
}

pub fn budget(cond: bool, msg: impl Into<String>) -> Result<(), CliError> {
    if cond {
        Ok(())
    } else {
        Err(CliError::Budget(msg.into()))
    }
}

/// A resolved config value as it appears in the output header.
pub enum Echo {
    Float(f64),
    Floats(Vec<f64>),
    Int(u64),
    Ints(Vec<usize>),
    Text(String),
}

impl fmt::Display for Echo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Echo::Float(x) => f.write_str(&format_float(*x)),
            Echo::Floats(v) => f.write_str(&v.iter().map(|x| format_float(*x)).collect::<Vec<_>>().join(",")),
            Echo::Int(i) => write!(f, "{i}"),
            Echo::Ints(v) => f.write_str(&v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")),
            Echo::Text(s) => f.write_str(s),
        }
    }
}
