//! Command-line front end: configuration parsing, pipeline orchestration
//! and JSON/SVG emission.

pub mod commands;
pub mod config;
pub mod exit;
pub mod json;
pub mod svg;
pub mod verify;

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::config::RunConfig;
use crate::exit::{CliError, Exit};

#[derive(Debug, Parser)]
#[command(name = "specnet", version, about = "Spectral networks and non-abelianization for quadratic differentials on the sphere")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Run configuration (JSON).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Override the phase θ of the configuration.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub theta: Option<f64>,
    /// Write the JSON report here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Write an SVG picture of the network here.
    #[arg(long, global = true)]
    pub svg: Option<PathBuf>,
    /// Seed for randomized checks.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Build the spectral network and write it as JSON (and optionally SVG).
    Network,
    /// List the standard saddle classes and their charges.
    Saddles,
    /// Decide real-exactness from the standard saddles (exit 5 if not).
    Exact,
    /// Non-abelianize the configured local system.
    Nonab,
    /// Run the invariant suite.
    Verify,
    /// Write only the SVG picture of the network.
    ExportSvg,
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::new(Exit::Io, format!("{}: {e}", path.display())))
}

/// Run a parsed command line; returns the process exit code.
pub fn run(cli: &Cli) -> i32 {
    match execute(cli) {
        Ok(code) => code.code(),
        Err(e) => {
            eprintln!("error: {e}");
            e.exit.code()
        }
    }
}

fn execute(cli: &Cli) -> Result<Exit, CliError> {
    let path = cli.config.as_ref().ok_or_else(|| CliError::new(Exit::Parse, "--config is required"))?;
    let cfg = RunConfig::load(path)?;
    let theta = cli.theta.unwrap_or(cfg.theta);
    let outcome = match cli.command {
        Command::Network | Command::ExportSvg => commands::network(&cfg, theta)?,
        Command::Saddles | Command::Exact => commands::exact(&cfg)?,
        Command::Nonab => commands::nonab(&cfg, theta)?,
        Command::Verify => verify::verify(&cfg, theta, cli.seed)?,
    };
    let svg_path = cli.svg.clone().or_else(|| cfg.outputs.svg_path.clone());
    let json_path = cli.out.clone().or_else(|| cfg.outputs.json_path.clone());
    if cli.command == Command::ExportSvg {
        let target = svg_path
            .or(json_path)
            .ok_or_else(|| CliError::new(Exit::Parse, "export-svg needs --svg, --out or outputs.svg_path"))?;
        write_file(&target, outcome.svg.as_deref().unwrap_or_default())?;
    } else {
        match json_path {
            Some(p) => write_file(&p, &outcome.json)?,
            None => print!("{}", outcome.json),
        }
        if let (Some(p), Some(svg)) = (svg_path, outcome.svg.as_deref()) {
            write_file(&p, svg)?;
        }
    }
    eprintln!("{}", outcome.summary);
    Ok(outcome.exit)
}
