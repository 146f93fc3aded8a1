// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::Format;

/// Counterpropagating downconversion: joint spectra, Schmidt purity and
/// grating design.
#[derive(Debug, Parser)]
#[command(name = "counterpdc", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// TOML run configuration; built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory (overrides `output.dir`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Override a configuration key, e.g. `--set pump.fwhm_nm=0.3`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,

    /// Data file format (overrides `output.format`).
    #[arg(long, value_enum, global = true)]
    format: Option<Format>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Joint spectral amplitude and its marginals.
    Jsa,
    /// Schmidt decomposition of the joint spectral amplitude.
    Schmidt,
    /// Phasematching angle and the analytic separability residual.
    Angle,
    /// Grating period for the configured wavelengths.
    Grating,
    /// Pump width maximizing the leading Schmidt weight.
    OptimizePump,
    /// Degenerate emission swept across wavelength, grating re-solved per row.
    SweepDegenerate,
    /// Pump tuned at the grating fixed for the reference wavelength.
    SweepTuning,
    /// Resolve and check the configuration without computing anything.
    Validate,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Jsa => "jsa",
            Command::Schmidt => "schmidt",
            Command::Angle => "angle",
            Command::Grating => "grating",
            Command::OptimizePump => "optimize-pump",
            Command::SweepDegenerate => "sweep-degenerate",
            Command::SweepTuning => "sweep-tuning",
            Command::Validate => "validate",
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };

    let mut overrides = cli.overrides.clone();
    if let Some(out) = &cli.out {
        overrides.push(format!("output.dir={}", toml::Value::String(out.display().to_string())));
    }
    if let Some(format) = cli.format {
        let name = match format {
            Format::Csv => "csv",
            Format::Json => "json",
        };
        overrides.push(format!("output.format={name}"));
    }

    let run = config::load(cli.config.as_deref(), &overrides).and_then(|cfg| {
        let library = cfg.validate()?;
        Ok((cfg, library))
    });
    let (cfg, library) = match run {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: invalid configuration: {e}");
            return ExitCode::from(1);
        }
    };

    match commands::run(cli.command, &cfg, &library) {
        Ok(()) => ExitCode::SUCCESS,
        Err(commands::Failure::Numerical(msg)) => {
            eprintln!("error: {} failed: {msg}", cli.command.name());
            ExitCode::from(2)
        }
        Err(commands::Failure::Io(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
