//! `kklab`: runs the soliton, momentum, stochastic-ensemble, spectral and
//! Painlevé computations and writes reproducible CSV/JSON artifacts.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 usage or configuration error,
//! 3 numerical divergence (blow-up, finite-time singularity, diverged
//! spectral state, empty ensemble).

pub mod commands;
pub mod config;
pub mod output;

use std::fs;
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Parser;
use kklab_core::KkError;

use config::{parse_config, Command, ConfigError, Format, Manifest, Params};
use output::OutDir;

pub const EXIT_IO: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_DIVERGED: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "kklab", version, about = "Soliton momentum laboratory")]
pub struct Cli {
    pub command: Command,
    /// JSON parameter file, or a manifest from an earlier run.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Overrides the seed of stochastic runs.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value = "kklab-out")]
    pub out: PathBuf,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

/// The resolved run: file values, then flag overrides, then validation.
pub fn resolve(cli: &Cli) -> Result<(Params, Format)> {
    let (mut params, file_format) = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
            parse_config(cli.command, &text)?
        }
        None => (Params::defaults(cli.command), None),
    };
    if let Some(seed) = cli.seed {
        params.set_seed(seed);
    }
    params.validate()?;
    Ok((params, cli.format.or(file_format).unwrap_or_default()))
}

pub fn run(cli: &Cli) -> Result<()> {
    let (params, format) = resolve(cli)?;
    let mut out = OutDir::create(&cli.out)?;
    match &params {
        Params::Soliton(c) => commands::soliton(c, &mut out, format)?,
        Params::Audit(c) => commands::audit(c, &mut out, format)?,
        Params::Ode(c) => commands::ode(c, &mut out, format)?,
        Params::Ensemble(c) => commands::ensemble(c, &mut out, format)?,
        Params::Pde(c) => commands::pde(c, &mut out, format)?,
        Params::Pii(c) => commands::pii(c, &mut out, format)?,
    }
    let manifest = Manifest {
        tool: "kklab".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command: cli.command,
        format,
        config: serde_json::to_value(&params)?,
        outputs: out.written().to_vec(),
    };
    out.json("manifest.json", &manifest)
}

/// Maps an error to the documented exit code.
pub fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<ConfigError>() {
            return EXIT_USAGE;
        }
        if let Some(e) = cause.downcast_ref::<KkError>() {
            return match e {
                KkError::Diverged { .. }
                | KkError::Blowup { .. }
                | KkError::FiniteTimeSingularity { .. }
                | KkError::DegenerateEnsemble { .. }
                | KkError::Pole { .. }
                | KkError::Quadrature { .. } => EXIT_DIVERGED,
                _ => EXIT_USAGE,
            };
        }
    }
    EXIT_IO
}
