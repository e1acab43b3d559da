//! Run configuration: one flat parameter set per subcommand, read from JSON
//! and overridable from the command line.

use std::fmt;

use clap::ValueEnum;
use kklab_core::spectral::Scheme;
use kklab_core::stochastic::Convention;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Soliton,
    Audit,
    Ode,
    Ensemble,
    Pde,
    Pii,
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = self.to_possible_value().expect("no skipped variants");
        f.write_str(s.get_name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// A rejected configuration value; always maps to the usage exit code.
#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("config is not valid JSON: {0}")]
    Syntax(String),
    #[error("config for `{command}`: {msg}")]
    Schema { command: Command, msg: String },
    #[error("invalid value for `{key}`: {msg}")]
    Invalid { key: &'static str, msg: String },
    #[error("manifest was written by `{found}`, not `{expected}`")]
    CommandMismatch { expected: Command, found: Command },
}

fn invalid(key: &'static str, msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { key, msg: msg.into() }
}

fn require(ok: bool, key: &'static str, msg: &str) -> Result<(), ConfigError> {
    if ok { Ok(()) } else { Err(invalid(key, msg)) }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolitonConfig {
    pub k: f64,
    pub x_min: f64,
    pub x_max: f64,
    pub nx: usize,
    pub t_min: f64,
    pub t_max: f64,
    pub nt: usize,
    /// Time of the 2-D profile slice.
    pub slice_t: f64,
}

impl Default for SolitonConfig {
    fn default() -> Self {
        Self { k: 1.0, x_min: -10.0, x_max: 10.0, nx: 201, t_min: 0.0, t_max: 5.0, nt: 51, slice_t: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AuditConfig {
    pub k: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl Default for AuditConfig {
    fn default() -> Self {
        Self { k: 1.0, alpha: 0.1, beta: 0.1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OdeConfig {
    pub alpha: f64,
    pub beta: f64,
    pub k0: f64,
    pub t_max: f64,
    /// Output intervals; the CSV holds `samples + 1` rows.
    pub samples: usize,
    pub rk4_steps: usize,
}

impl Default for OdeConfig {
    fn default() -> Self {
        Self { alpha: 1.0, beta: 0.1, k0: 1.0, t_max: 2.0, samples: 50, rk4_steps: 10_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnsembleConfig {
    pub sigma2: Vec<f64>,
    pub alpha0: f64,
    pub beta: f64,
    pub k0: f64,
    pub dt: f64,
    pub t_max: f64,
    pub output_dt: f64,
    pub n_paths: usize,
    pub convention: Convention,
    pub seed: u64,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        Self {
            sigma2: vec![0.05, 0.15, 0.25],
            alpha0: 0.0,
            beta: 0.1,
            k0: 1.0,
            dt: 1e-3,
            t_max: 5.0,
            output_dt: 0.05,
            n_paths: 10_000,
            convention: Convention::Ito,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PdeConfigFile {
    /// Soliton parameter of the initial profile.
    pub k: f64,
    pub length: f64,
    pub n: usize,
    pub dt: f64,
    pub t_end: f64,
    pub alpha: f64,
    pub beta: f64,
    /// Noise intensity of a stochastic `α` path; 0 keeps `α` constant.
    pub sigma2: f64,
    pub scheme: Scheme,
    pub dealias: bool,
    pub sample_every: usize,
    pub snapshot_every: Option<usize>,
    pub seed: u64,
}

impl Default for PdeConfigFile {
    fn default() -> Self {
        Self {
            k: 1.0,
            length: 80.0,
            n: 512,
            dt: 1e-5,
            t_end: 0.05,
            alpha: 0.0,
            beta: 0.0,
            sigma2: 0.0,
            scheme: Scheme::Etdrk4,
            dealias: true,
            sample_every: 100,
            snapshot_every: None,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReductionConfig {
    pub n: f64,
    pub m: f64,
    pub lambda: f64,
    pub k0: f64,
    pub t_end: f64,
    pub steps: usize,
}

impl Default for ReductionConfig {
    fn default() -> Self {
        // λ = −(4/5)β with β = 0.1
        Self { n: 0.3, m: 1.0, lambda: -0.08, k0: 0.2, t_end: 2.0, steps: 2000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PiiConfig {
    pub delta: f64,
    pub z_start: f64,
    pub z_end: f64,
    pub steps: usize,
    /// Initial data; when absent, taken from the rational solution for integer `δ`.
    pub q0: Option<f64>,
    pub q0_prime: Option<f64>,
    pub reduction: ReductionConfig,
}

impl Default for PiiConfig {
    fn default() -> Self {
        Self { delta: 1.0, z_start: 1.0, z_end: 5.0, steps: 4000, q0: None, q0_prime: None, reduction: ReductionConfig::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Params {
    Soliton(SolitonConfig),
    Audit(AuditConfig),
    Ode(OdeConfig),
    Ensemble(EnsembleConfig),
    Pde(PdeConfigFile),
    Pii(PiiConfig),
}

impl Params {
    pub fn defaults(command: Command) -> Self {
        match command {
            Command::Soliton => Self::Soliton(Default::default()),
            Command::Audit => Self::Audit(Default::default()),
            Command::Ode => Self::Ode(Default::default()),
            Command::Ensemble => Self::Ensemble(Default::default()),
            Command::Pde => Self::Pde(Default::default()),
            Command::Pii => Self::Pii(Default::default()),
        }
    }

    /// Parses a flat parameter object for `command`. Missing keys take
    /// defaults; unknown keys are rejected.
    pub fn from_value(command: Command, value: Value) -> Result<Self, ConfigError> {
        let schema = |e: serde_json::Error| ConfigError::Schema { command, msg: e.to_string() };
        Ok(match command {
            Command::Soliton => Self::Soliton(serde_json::from_value(value).map_err(schema)?),
            Command::Audit => Self::Audit(serde_json::from_value(value).map_err(schema)?),
            Command::Ode => Self::Ode(serde_json::from_value(value).map_err(schema)?),
            Command::Ensemble => Self::Ensemble(serde_json::from_value(value).map_err(schema)?),
            Command::Pde => Self::Pde(serde_json::from_value(value).map_err(schema)?),
            Command::Pii => Self::Pii(serde_json::from_value(value).map_err(schema)?),
        })
    }

    pub fn seed(&self) -> Option<u64> {
        match self {
            Self::Ensemble(c) => Some(c.seed),
            Self::Pde(c) => Some(c.seed),
            _ => None,
        }
    }

    pub fn set_seed(&mut self, seed: u64) {
        match self {
            Self::Ensemble(c) => c.seed = seed,
            Self::Pde(c) => c.seed = seed,
            _ => {}
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        match self {
            Self::Soliton(c) => {
                finite_all(&[("k", c.k), ("x_min", c.x_min), ("x_max", c.x_max), ("t_min", c.t_min), ("t_max", c.t_max), ("slice_t", c.slice_t)])?;
                require(c.k >= 0.0, "k", "must be >= 0")?;
                require(c.x_max > c.x_min, "x_max", "must exceed x_min")?;
                require(c.t_max >= c.t_min, "t_max", "must be >= t_min")?;
                require(c.nx >= 2, "nx", "must be >= 2")?;
                require(c.nt >= 1, "nt", "must be >= 1")?;
                require((c.nx as u64) * (c.nt as u64) <= 50_000_000, "nx", "surface too large")
            }
            Self::Audit(c) => {
                finite_all(&[("k", c.k), ("alpha", c.alpha), ("beta", c.beta)])?;
                require(c.k >= 0.0, "k", "must be >= 0")
            }
            Self::Ode(c) => {
                finite_all(&[("alpha", c.alpha), ("beta", c.beta), ("k0", c.k0), ("t_max", c.t_max)])?;
                require(c.beta >= 0.0, "beta", "must be >= 0")?;
                require(c.t_max > 0.0, "t_max", "must be > 0")?;
                require(c.samples >= 1, "samples", "must be >= 1")?;
                require(c.rk4_steps >= c.samples, "rk4_steps", "must be >= samples")
            }
            Self::Ensemble(c) => {
                finite_all(&[("alpha0", c.alpha0), ("beta", c.beta), ("k0", c.k0), ("dt", c.dt), ("t_max", c.t_max), ("output_dt", c.output_dt)])?;
                require(!c.sigma2.is_empty(), "sigma2", "must list at least one value")?;
                require(c.sigma2.iter().all(|s| s.is_finite() && *s >= 0.0), "sigma2", "values must be finite and >= 0")?;
                require(c.beta >= 0.0, "beta", "must be >= 0")?;
                require(c.dt > 0.0, "dt", "must be > 0")?;
                require(c.t_max > 0.0, "t_max", "must be > 0")?;
                require(c.output_dt >= c.dt, "output_dt", "must be >= dt")?;
                let ratio = c.output_dt / c.dt;
                require((ratio - ratio.round()).abs() < 1e-9 * ratio, "output_dt", "must be a whole multiple of dt")?;
                require(c.n_paths >= kklab_core::stochastic::MIN_PATHS, "n_paths", "must be >= 100")?;
                require(c.t_max / c.dt <= 1e8, "dt", "too many steps")
            }
            Self::Pde(c) => {
                finite_all(&[("k", c.k), ("length", c.length), ("dt", c.dt), ("t_end", c.t_end), ("alpha", c.alpha), ("beta", c.beta), ("sigma2", c.sigma2)])?;
                require(c.k >= 0.0, "k", "must be >= 0")?;
                require(c.length > 0.0, "length", "must be > 0")?;
                require(c.n >= 64 && c.n.is_power_of_two() && c.n <= 1 << 20, "n", "must be a power of two in [64, 2^20]")?;
                require(c.dt > 0.0, "dt", "must be > 0")?;
                require(c.t_end > 0.0, "t_end", "must be > 0")?;
                require(c.t_end / c.dt <= 1e8, "dt", "too many steps")?;
                require(c.beta >= 0.0, "beta", "must be >= 0")?;
                require(c.sigma2 >= 0.0, "sigma2", "must be >= 0")?;
                require(c.sample_every >= 1, "sample_every", "must be >= 1")?;
                require(c.snapshot_every != Some(0), "snapshot_every", "must be >= 1")
            }
            Self::Pii(c) => {
                finite_all(&[("delta", c.delta), ("z_start", c.z_start), ("z_end", c.z_end)])?;
                require(c.z_end != c.z_start, "z_end", "must differ from z_start")?;
                require((4..=100_000_000).contains(&c.steps), "steps", "must be in [4, 1e8]")?;
                if c.q0.is_none() || c.q0_prime.is_none() {
                    let integer = c.delta.fract() == 0.0 && c.delta.abs() <= 2.0;
                    require(integer, "q0", "required unless delta is an integer in [-2, 2]")?;
                }
                for (key, v) in [("q0", c.q0), ("q0_prime", c.q0_prime)] {
                    if let Some(v) = v {
                        require(v.is_finite(), key, "must be finite")?;
                    }
                }
                let r = &c.reduction;
                finite_all(&[("reduction.n", r.n), ("reduction.m", r.m), ("reduction.lambda", r.lambda), ("reduction.k0", r.k0), ("reduction.t_end", r.t_end)])?;
                require(r.m != 0.0, "reduction.m", "must be nonzero")?;
                require(r.lambda != 0.0, "reduction.lambda", "must be nonzero")?;
                require(r.t_end > 0.0, "reduction.t_end", "must be > 0")?;
                require((4..=100_000_000).contains(&r.steps), "reduction.steps", "must be in [4, 1e8]")
            }
        }
    }
}

fn finite_all(values: &[(&'static str, f64)]) -> Result<(), ConfigError> {
    for &(key, v) in values {
        require(v.is_finite(), key, "must be finite")?;
    }
    Ok(())
}

/// Everything needed to reproduce a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: Command,
    pub format: Format,
    pub config: Value,
    #[serde(default)]
    pub outputs: Vec<String>,
}

/// A configuration file is either a flat parameter object or a manifest
/// from an earlier run (recognised by its `tool`/`command` keys).
pub fn parse_config(command: Command, text: &str) -> Result<(Params, Option<Format>), ConfigError> {
    let value: Value = serde_json::from_str(text).map_err(|e| ConfigError::Syntax(e.to_string()))?;
    if value.get("tool").is_some() && value.get("command").is_some() {
        let manifest = parse_manifest_value(value)?;
        if manifest.command != command {
            return Err(ConfigError::CommandMismatch { expected: command, found: manifest.command });
        }
        let params = Params::from_value(command, manifest.config)?;
        return Ok((params, Some(manifest.format)));
    }
    Ok((Params::from_value(command, value)?, None))
}

pub fn parse_manifest(text: &str) -> Result<Manifest, ConfigError> {
    let value: Value = serde_json::from_str(text).map_err(|e| ConfigError::Syntax(e.to_string()))?;
    parse_manifest_value(value)
}

fn parse_manifest_value(value: Value) -> Result<Manifest, ConfigError> {
    serde_json::from_value(value).map_err(|e| ConfigError::Syntax(format!("manifest: {e}")))
}
