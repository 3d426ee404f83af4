//! Front end for the `rydswitch` binary.
//!
//! Exit codes: 0 success, 2 bad input (files, config, CSV), 3 a physics or
//! invariant violation, 4 a fit or likelihood search that failed.

pub mod commands;
pub mod config;
pub mod error;
pub mod table;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::commands::Method;
use crate::config::Scenario;
pub use crate::error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(
    name = "rydswitch",
    version,
    about = "Rydberg-EIT photon switch toolkit"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Scenario JSON.
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Overrides the scenario's `seed`.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MethodArg {
    Mle,
    Linear,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Susceptibility and transmission over `grid`, written as CSV.
    Spectrum(Common),
    /// Fits the `fit.free` parameters to a transmission spectrum.
    Fit {
        #[command(flatten)]
        common: Common,
        /// CSV with `detuning_2pi_mhz,transmission[,sigma]`; without it the
        /// data are synthesised from `params` on `grid`.
        #[arg(long)]
        data: Option<PathBuf>,
        /// Fitted-curve CSV (default: `<out>` with extension `curve.csv`).
        #[arg(long)]
        curve: Option<PathBuf>,
    },
    /// Sends a biphoton through the gate-off and gate-on media.
    Propagate {
        #[command(flatten)]
        common: Common,
        /// Contrast JSON (default: `<out>` with extension `json`).
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Reconstructs a two-photon density matrix from 16 coincidence counts.
    Tomo {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// CSV with `basis_s1,basis_s2,counts`; without it counts are
        /// simulated from the config's `tomography` section.
        #[arg(long)]
        counts: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "mle")]
        method: MethodArg,
    },
    /// Blockade radius and gate photons per blockade sphere.
    Blockade(Common),
}

fn load(path: &Path, seed: Option<u64>) -> CliResult<Scenario> {
    let mut sc = Scenario::load(path)?;
    if let Some(s) = seed {
        sc.seed = s;
    }
    Ok(sc)
}

pub fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Spectrum(c) => commands::spectrum_cmd(&load(&c.config, c.seed)?, &c.out),
        Command::Fit {
            common: c,
            data,
            curve,
        } => {
            let sc = load(&c.config, c.seed)?;
            let curve = curve.unwrap_or_else(|| c.out.with_extension("curve.csv"));
            commands::fit_cmd(&sc, data.as_deref(), &c.out, &curve, sc.seed)
        }
        Command::Propagate { common: c, summary } => {
            let summary = summary.unwrap_or_else(|| c.out.with_extension("json"));
            if summary == c.out {
                return Err(CliError::Input("--summary must differ from --out".into()));
            }
            commands::propagate_cmd(&load(&c.config, c.seed)?, &c.out, &summary)
        }
        Command::Tomo {
            config,
            out,
            seed,
            counts,
            method,
        } => {
            let sc = config.map(|p| load(&p, seed)).transpose()?;
            let seed = seed.or(sc.as_ref().map(|s| s.seed)).unwrap_or(0);
            let method = match method {
                MethodArg::Mle => Method::Mle,
                MethodArg::Linear => Method::Linear,
            };
            commands::tomo_cmd(sc.as_ref(), counts.as_deref(), method, &out, seed)
        }
        Command::Blockade(c) => commands::blockade_cmd(&load(&c.config, c.seed)?, &c.out),
    }
}
