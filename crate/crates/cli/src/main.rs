//! `evofam`: bounded mild solutions and almost-automorphy diagnostics from a scenario file.

mod config;
mod error;
mod output;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::{Problem, ScenarioConfig, SCHEMA_VERSION};
use crate::error::CliError;
use crate::run::{Command, Overrides};

#[derive(Parser)]
#[command(name = "evofam", version, about = "Bounded mild solutions of evolution equations with an exponential dichotomy")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Green's-function series for a linear problem.
    SolveLinear(Common),
    /// Picard iteration for a semilinear problem.
    SolveSemilinear(Common),
    /// Reaction-diffusion demo against the finite-difference oracle.
    RdDemo(Common),
    /// Stepanov norm of a signal for each configured exponent.
    StepanovNorm(Common),
    /// Weighted ergodic means over growing radii.
    ErgodicMean(Common),
    /// Stepanov translation defects.
    ShiftDefect(Common),
    /// Randomized checks of the dichotomy axioms.
    DichotomyCheck(Common),
}

#[derive(Args)]
struct Common {
    /// Scenario file (JSON).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output path; the extension selects csv, json or svg.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Evaluation times as `start:end:step`.
    #[arg(long, allow_hyphen_values = true)]
    times: Option<String>,
    /// Window as `start:end:step`.
    #[arg(long, allow_hyphen_values = true)]
    window: Option<String>,
    /// Tolerance override.
    #[arg(long, allow_negative_numbers = true)]
    tol: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn load(cmd: Command, common: &Common) -> Result<ScenarioConfig, CliError> {
    match (&common.config, cmd) {
        (Some(path), _) => ScenarioConfig::from_path(path),
        (None, Command::RdDemo) => Ok(ScenarioConfig {
            schema: SCHEMA_VERSION,
            problem: Problem::RdDemo {
                demo: Default::default(),
                defect_shifts: None,
                defect_samples: 20,
            },
            solver: Default::default(),
            output: Default::default(),
        }),
        (None, _) => Err(CliError::invalid("--config", format!("{} needs a scenario file", cmd.name()))),
    }
}

fn execute(cmd: Command, common: Common) -> Result<i32, CliError> {
    let cfg = load(cmd, &common)?;
    let ov = Overrides {
        out: common.out,
        times: common.times,
        window: common.window,
        tol: common.tol,
        seed: common.seed,
    };
    let stdout_mode = ov.out.is_none() && cfg.output.path.is_none();
    let (report, code) = run::run(cmd, cfg, &ov)?;
    if stdout_mode {
        let json = serde_json::to_string_pretty(&report).map_err(|e| CliError::Output(e.to_string()))?;
        eprintln!("{json}");
    }
    Ok(code)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (cmd, common) = match cli.command {
        Sub::SolveLinear(c) => (Command::SolveLinear, c),
        Sub::SolveSemilinear(c) => (Command::SolveSemilinear, c),
        Sub::RdDemo(c) => (Command::RdDemo, c),
        Sub::StepanovNorm(c) => (Command::StepanovNorm, c),
        Sub::ErgodicMean(c) => (Command::ErgodicMean, c),
        Sub::ShiftDefect(c) => (Command::ShiftDefect, c),
        Sub::DichotomyCheck(c) => (Command::DichotomyCheck, c),
    };
    match execute(cmd, common) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
