//! Command-line experiment runner for expert-advice discovery.
//!
//! ```text
//! discovery simulate --config exp.toml [--seed S] [--out DIR] [--threads N] [--svg]
//! discovery macroscopic [--config macro.toml]
//! discovery concentration [--config coverage.toml]
//! discovery reproduce fig1|fig2
//! ```
//!
//! Exit codes: 0 success, 2 config error, 3 runtime or IO error, 4 failed check.

pub mod commands;
pub mod config;
pub mod coverage;
pub mod error;
pub mod svg;

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::{ConcentrationConfig, ExperimentConfig, MacroConfig};
pub use crate::error::CliError;

/// Configuration files shipped with the tool.
pub mod presets {
    pub const FIG1: &str = include_str!("../presets/fig1.toml");
    pub const FIG2: &str = include_str!("../presets/fig2.toml");
    pub const MACRO7: &str = include_str!("../presets/macro7.toml");
    pub const COVERAGE: &str = include_str!("../presets/coverage.toml");
}

#[derive(Debug, Parser)]
#[command(name = "discovery", version, about = "Optimal discovery with probabilistic expert advice")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// TOML configuration file.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Overrides the configured master seed.
    #[arg(long, global = true, value_name = "U64")]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Worker threads (0 = one per core). Output does not depend on it.
    #[arg(long, global = true, value_name = "N", default_value_t = 0)]
    pub threads: usize,
    /// Also write SVG plots.
    #[arg(long, global = true)]
    pub svg: bool,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Run policies on an instance and write trajectories and waiting times.
    Simulate,
    /// Tabulate closed-form limits (defaults to the seven-expert profile).
    Macroscopic,
    /// Check the coverage of the missing-mass confidence interval.
    Concentration,
    /// Rerun a shipped experiment preset.
    Reproduce {
        #[arg(value_enum)]
        figure: Figure,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Figure {
    Fig1,
    Fig2,
}

fn read_config(path: &Option<PathBuf>, fallback: Option<&'static str>) -> Result<String, CliError> {
    match (path, fallback) {
        (Some(path), _) => fs::read_to_string(path).map_err(CliError::io(path)),
        (None, Some(text)) => Ok(text.to_string()),
        (None, None) => Err(CliError::Config("--config PATH is required".into())),
    }
}

fn output_dir(common: &CommonArgs, configured: &Option<PathBuf>, default: &str) -> PathBuf {
    common
        .out
        .clone()
        .or_else(|| configured.clone())
        .unwrap_or_else(|| Path::new("out").join(default))
}

fn report(paths: &[PathBuf]) {
    for p in paths {
        println!("wrote {}", p.display());
    }
}

fn load_experiment(common: &CommonArgs, fallback: Option<&'static str>) -> Result<ExperimentConfig, CliError> {
    let mut cfg = ExperimentConfig::from_toml(&read_config(&common.config, fallback)?)?;
    if let Some(seed) = common.seed {
        cfg.master_seed = seed;
    }
    cfg.emit_svg |= common.svg;
    Ok(cfg)
}

/// Executes one parsed command line.
pub fn run(cli: &Cli) -> Result<(), CliError> {
    let common = &cli.common;
    match &cli.command {
        Command::Simulate => {
            let cfg = load_experiment(common, None)?;
            let exp = cfg.build()?;
            let (_, bundle) = commands::simulate(&exp, &commands::describe(&cfg.instance), common.threads)?;
            report(&bundle.write_to(&output_dir(common, &cfg.output_dir, "simulate"))?);
        }
        Command::Reproduce { figure } => {
            let (preset, name) = match figure {
                Figure::Fig1 => (presets::FIG1, "fig1"),
                Figure::Fig2 => (presets::FIG2, "fig2"),
            };
            let cfg = load_experiment(common, Some(preset))?;
            let bundle = match figure {
                Figure::Fig1 => commands::reproduce_fig1(&cfg, common.threads)?,
                Figure::Fig2 => commands::simulate(&cfg.build()?, &commands::describe(&cfg.instance), common.threads)?.1,
            };
            report(&bundle.write_to(&output_dir(common, &cfg.output_dir, name))?);
        }
        Command::Macroscopic => {
            let mut cfg = MacroConfig::from_toml(&read_config(&common.config, Some(presets::MACRO7))?)?;
            cfg.emit_svg |= common.svg;
            let bundle = commands::macroscopic_from_config(&cfg)?;
            report(&bundle.write_to(&output_dir(common, &cfg.output_dir, "macroscopic"))?);
        }
        Command::Concentration => {
            let mut cfg = ConcentrationConfig::from_toml(&read_config(&common.config, Some(presets::COVERAGE))?)?;
            if let Some(seed) = common.seed {
                cfg.master_seed = seed;
            }
            let (cells, bundle) = commands::concentration(&cfg, common.threads)?;
            report(&bundle.write_to(&output_dir(common, &cfg.output_dir, "concentration"))?);
            let failed: Vec<String> = cells
                .iter()
                .filter(|c| !c.passes())
                .map(|c| {
                    format!(
                        "n={} delta={}: coverage {:.4} < {:.4}",
                        c.n,
                        c.delta,
                        c.empirical(),
                        c.threshold()
                    )
                })
                .collect();
            if !failed.is_empty() {
                return Err(CliError::Check(failed.join("; ")));
            }
        }
    }
    Ok(())
}
