use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use gaugeforge_cli::{exit, run, Command, Overrides};

/// Numerical checks and particle integration for gauge theories of the
/// centrally extended Poincare group.
#[derive(Parser, Debug)]
#[command(name = "gaugeforge", version)]
struct Args {
    #[arg(value_enum)]
    command: Command,
    /// Scenario JSON file.
    #[arg(long)]
    scenario: PathBuf,
    /// Directory for reports and trajectories.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Gauge parameter for the invariance checks.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Grid points per axis.
    #[arg(long)]
    grid: Option<usize>,
    /// Mixing coupling of the extended algebra and the particle.
    #[arg(long)]
    kappa: Option<f64>,
    /// Drop or alter one term of the transformation laws.
    #[arg(long)]
    ablate: Option<String>,
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { exit::INPUT } else { exit::PASS };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    let overrides = Overrides { epsilon: args.epsilon, grid: args.grid, kappa: args.kappa, ablate: args.ablate };
    match run(args.command, &args.scenario, args.output.as_deref(), &overrides) {
        Ok((report, warnings)) => {
            for w in warnings {
                eprintln!("warning: {w}");
            }
            for line in &report.lines {
                println!("{line}");
            }
            for f in &report.files {
                println!("wrote {}", f.display());
            }
            ExitCode::from(if report.passed { exit::PASS } else { exit::CHECK_FAILED } as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
