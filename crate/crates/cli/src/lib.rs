//! Scenario-driven front end for `gaugeforge-core`.
//!
//! A scenario is a JSON document (schema in `docs/scenario-schema-v1.json`)
//! naming an algebra, fields, gauge functions, matter and a test particle.
//! [`run`] loads it, applies command-line overrides and executes one
//! [`Command`], returning PASS/FAIL lines and the files written.

pub mod commands;
pub mod error;
pub mod scenario;

use std::path::Path;

pub use commands::Report;
pub use error::{exit, CliError};
pub use scenario::{Overrides, Scenario};

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    CheckAlgebra,
    Curvature,
    Invariance,
    Residuals,
    Trajectory,
}

/// Loads the scenario and runs `cmd`. Warnings raised while loading are
/// returned alongside the report.
pub fn run(cmd: Command, scenario: &Path, output: Option<&Path>, overrides: &Overrides) -> Result<(Report, Vec<String>), CliError> {
    let sc = Scenario::load(scenario, overrides)?;
    let report = match cmd {
        Command::CheckAlgebra => commands::check_algebra(&sc, output)?,
        Command::Curvature => commands::curvature(&sc, output)?,
        Command::Invariance => commands::invariance(&sc, output)?,
        Command::Residuals => commands::residuals(&sc, output)?,
        Command::Trajectory => commands::trajectory(&sc, output)?,
    };
    Ok((report, sc.warnings))
}
