//! `spinmeter`: regenerate profiles, densities, spin fields and walk
//! distributions as CSV, and cross-check the three propagators.
//!
//! Exit status: 0 success, 1 internal error, 2 configuration error,
//! 3 quadrature non-convergence, 4 I/O error, 5 a cross-route check failed.

mod commands;
mod csv;
mod error;
mod settings;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::error::CliResult;
use crate::settings::{RawConfig, RunConfig};

#[derive(Parser)]
#[command(name = "spinmeter", version, about = "Pulsed spin-orbit coupling as a joint measurement of σx and σy")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Subcommand)]
enum Command {
    /// Ring profiles and exact kernel over a radial sweep.
    Profile,
    /// Pointer density on a Cartesian grid.
    Density {
        /// exact or asymptotic
        #[arg(long)]
        route: Option<String>,
    },
    /// Final spin direction on a polar grid.
    Spinfield {
        /// Emit the radial spin projection along θ = 0 instead.
        #[arg(long)]
        projection: bool,
    },
    /// Time-averaged spin distribution of the lattice walk.
    Walk {
        /// Dump raw lattice amplitudes instead.
        #[arg(long)]
        amplitudes: bool,
    },
    /// Cross-check the analytic, spectral and walk routes.
    Compare,
}

#[derive(Args)]
struct Common {
    /// Flat `key = value` configuration file; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output CSV (standard output by default).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long = "r0-over-rso", global = true, value_name = "X", allow_hyphen_values = true)]
    r0_over_rso: Option<String>,
    /// a, b, c or d
    #[arg(long, global = true)]
    variant: Option<String>,
    /// z+, z-, x+, x-, y+, y- or re1,im1,re2,im2
    #[arg(long, global = true, allow_hyphen_values = true)]
    eta: Option<String>,
    #[arg(long = "grid-n", global = true, value_name = "N", allow_hyphen_values = true)]
    grid_n: Option<String>,
    #[arg(long = "walk-steps", global = true, value_name = "L", allow_hyphen_values = true)]
    walk_steps: Option<String>,
    /// Relative quadrature tolerance.
    #[arg(long, global = true, allow_hyphen_values = true)]
    tol: Option<String>,
    /// on or off
    #[arg(long, global = true)]
    kinetic: Option<String>,
    /// semiconductor or cold_atom
    #[arg(long, global = true)]
    preset: Option<String>,
    /// Emit CGS lengths and densities.
    #[arg(long, global = true)]
    physical: bool,
    /// Any configuration key, e.g. `--set r_max=1.2`.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
}

fn resolve(cli: &Cli) -> CliResult<RunConfig> {
    let c = &cli.common;
    let mut raw = match &c.config {
        Some(p) => RawConfig::load(p)?,
        None => RawConfig::default(),
    };
    for pair in &c.set {
        raw.set_pair(pair)?;
    }
    let flags = [
        ("r0_over_rso", &c.r0_over_rso),
        ("variant", &c.variant),
        ("eta", &c.eta),
        ("grid_n", &c.grid_n),
        ("walk_steps", &c.walk_steps),
        ("tol", &c.tol),
        ("kinetic", &c.kinetic),
        ("preset", &c.preset),
    ];
    for (key, value) in flags {
        if let Some(v) = value {
            raw.set(key, v.as_str())?;
        }
    }
    if let Some(p) = &c.out {
        raw.set("out", p.display().to_string())?;
    }
    if c.physical {
        raw.set("physical", "true")?;
    }
    match &cli.command {
        Command::Density { route: Some(r) } => raw.set("route", r.as_str())?,
        Command::Spinfield { projection: true } => raw.set("mode", "projection")?,
        Command::Walk { amplitudes: true } => raw.set("amplitudes", "true")?,
        _ => {}
    }
    RunConfig::resolve(&raw)
}

fn run(cli: &Cli) -> CliResult<()> {
    let rc = resolve(cli)?;
    match cli.command {
        Command::Profile => commands::profile(&rc),
        Command::Density { .. } => commands::density(&rc),
        Command::Spinfield { .. } => commands::spinfield(&rc),
        Command::Walk { .. } => commands::walk(&rc),
        Command::Compare => commands::compare(&rc),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("spinmeter: {e}");
            e.exit_code()
        }
    }
}
