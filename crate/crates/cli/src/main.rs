//! `bouncer`: reproducible data files for the spin-dependent quantum bouncer.
//!
//! Settings are merged as command-line flag > `--config` JSON file > built-in
//! default. Exit codes: 0 success, 2 invalid input, 3 numerical failure or a
//! failed check, 4 I/O error.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

use config::{Command, FileConfig, Format, InvalidInput, RunConfig, StencilChoice};

#[derive(Debug, Parser)]
#[command(name = "bouncer", version, about = "Gravitational bound states with spin-dependent mass-energy corrections")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Subcommand)]
enum Sub {
    /// Energy levels and their spin-up mass-energy shift at one field.
    Spectrum,
    /// Spin-up shifts over a grid of fields and levels.
    Table1,
    /// Spin interference probability, phase and visibility against time.
    Interference,
    /// Bound-state quantum Fisher information curves.
    Qfi,
    /// Free-fall Gaussian QFI, its t^6 limit, and the branch phase.
    Freefall,
    /// Run the invariant suite and write a JSON report.
    Check {
        /// Skip the grid-propagation checks.
        #[arg(long)]
        skip_propagator: bool,
    },
}

#[derive(Debug, Args)]
struct Common {
    /// Flat JSON config file; flags take precedence over its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file, written atomically. Defaults to stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[arg(long, global = true)]
    field_tesla: Option<f64>,
    /// Comma-separated fields for table1.
    #[arg(long, global = true, value_delimiter = ',')]
    fields_tesla: Option<Vec<f64>>,
    #[arg(long, global = true)]
    level: Option<usize>,
    /// Comma-separated levels for spectrum and table1.
    #[arg(long, global = true, value_delimiter = ',')]
    levels: Option<Vec<usize>>,
    #[arg(long, global = true)]
    t_max_s: Option<f64>,
    #[arg(long, global = true)]
    samples: Option<usize>,
    #[arg(long, global = true)]
    grid_points: Option<usize>,
    #[arg(long, global = true)]
    grid_z_max_m: Option<f64>,
    #[arg(long, global = true)]
    grid_dt_s: Option<f64>,
    #[arg(long, global = true, value_enum)]
    grid_stencil: Option<StencilChoice>,
    /// Finite-difference step in delta for the numeric QFI.
    #[arg(long, global = true)]
    epsilon: Option<f64>,
    /// Free-fall packet width [m].
    #[arg(long, global = true)]
    sigma_m: Option<f64>,
    /// Comma-separated QFI models: numeric, short-time, semiclassical, full-analytic, free-fall.
    #[arg(long, global = true, value_delimiter = ',')]
    models: Option<Vec<String>>,
    /// Replace the field-derived delta by this value (test mode).
    #[arg(long, global = true)]
    delta_override: Option<f64>,
    /// Multiplies every check tolerance; below 1 tightens the suite.
    #[arg(long, global = true)]
    tolerance_scale: Option<f64>,
    #[arg(long, global = true)]
    mass_kg: Option<f64>,
    #[arg(long, global = true)]
    g_m_per_s2: Option<f64>,
}

impl Common {
    fn as_overrides(&self) -> FileConfig {
        FileConfig {
            mass_kg: self.mass_kg,
            g_m_per_s2: self.g_m_per_s2,
            field_tesla: self.field_tesla,
            fields_tesla: self.fields_tesla.clone(),
            level: self.level,
            levels: self.levels.clone(),
            time_max_s: self.t_max_s,
            samples: self.samples,
            grid_z_max_m: self.grid_z_max_m,
            grid_points: self.grid_points,
            grid_dt_s: self.grid_dt_s,
            grid_stencil: self.grid_stencil,
            epsilon: self.epsilon,
            sigma_m: self.sigma_m,
            models: self.models.clone(),
            delta_override: self.delta_override,
            tolerance_scale: self.tolerance_scale,
            out: self.out.clone(),
            format: self.format,
            ..FileConfig::default()
        }
    }
}

/// Raised when the check suite ran but some checks failed.
#[derive(Debug)]
struct ChecksFailed(usize);

impl std::fmt::Display for ChecksFailed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} check(s) failed", self.0)
    }
}

impl std::error::Error for ChecksFailed {}

fn notice_delta_override(d: f64) {
    let bar = "!".repeat(72);
    eprintln!("{bar}\n!! DELTA OVERRIDE ACTIVE: delta = {d:e} replaces the field-derived value.\n!! Results are a numerical test mode, not a physical prediction.\n{bar}");
}

fn run(cli: Cli) -> Result<()> {
    let file = match &cli.common.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    let command = match cli.command {
        Sub::Spectrum => Command::Spectrum,
        Sub::Table1 => Command::Table1,
        Sub::Interference => Command::Interference,
        Sub::Qfi => Command::Qfi,
        Sub::Freefall => Command::Freefall,
        Sub::Check { .. } => Command::Check,
    };
    let rc = RunConfig::resolve(command, cli.common.as_overrides(), file)?;
    if let Some(d) = rc.delta_override {
        notice_delta_override(d);
    }

    let table = match cli.command {
        Sub::Spectrum => commands::spectrum(&rc)?,
        Sub::Table1 => commands::table1_cmd(&rc)?,
        Sub::Interference => commands::interference(&rc)?,
        Sub::Qfi => commands::qfi(&rc)?,
        Sub::Freefall => commands::freefall(&rc)?,
        Sub::Check { skip_propagator } => {
            let report = commands::check(&rc, !skip_propagator)?;
            eprint!("{}", commands::check_table(&report));
            let mut json = serde_json::to_string_pretty(&report)?;
            json.push('\n');
            output::emit(&json, rc.out.as_deref())?;
            if report.failed > 0 {
                return Err(ChecksFailed(report.failed).into());
            }
            return Ok(());
        }
    };
    output::emit(&table.render(&rc), rc.out.as_deref())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<InvalidInput>() {
            return 2;
        }
        if let Some(e) = cause.downcast_ref::<bouncer::Error>() {
            return if e.is_validation() { 2 } else { 3 };
        }
        if cause.is::<ChecksFailed>() {
            return 3;
        }
        if cause.is::<std::io::Error>() {
            return 4;
        }
    }
    3
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
