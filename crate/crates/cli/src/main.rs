use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use cbb_core::baselines::hardness_analysis;
use cbb_core::harness::{parse_sweep, run_and_write, sweep, ExperimentConfig};
use cbb_core::verify::{verify_suite, Level};
use cbb_core::{named_instance, solve_lp, LpObjective};

#[derive(Parser)]
#[command(name = "cbb", version, about = "Contextual blocking bandits simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment described by a JSON config.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run a config once per value of a named-instance parameter.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// e.g. `gap=0.4,0.6,0.8`
        #[arg(long)]
        param: String,
    },
    /// Run the property checks and print a report.
    Verify {
        #[arg(long, default_value = "fast")]
        level: Level,
        /// Print the report as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Evaluate the lower-bound construction and print a JSON record.
    Hardness {
        #[arg(long)]
        d: u64,
        #[arg(long)]
        eps: f64,
        #[arg(long = "R", alias = "r")]
        r: f64,
    },
    /// Solve the LP of a named instance under its true means.
    Solve {
        #[arg(long)]
        instance: String,
    },
}

fn load(path: &Path) -> Result<ExperimentConfig> {
    ExperimentConfig::from_path(path).with_context(|| format!("reading config {}", path.display()))
}

fn main() -> Result<ExitCode> {
    match Cli::parse().command {
        Command::Run { config } => {
            for f in run_and_write(&load(&config)?)? {
                println!("{}", f.display());
            }
        }
        Command::Sweep { config, param } => {
            let cfg = load(&config)?;
            let (name, values) = parse_sweep(&param)?;
            for f in sweep(&cfg, &name, &values)? {
                println!("{}", f.display());
            }
        }
        Command::Verify { level, json } => {
            let report = verify_suite(level);
            if json {
                println!("{}", serde_json::to_string_pretty(&report)?);
            } else {
                for e in &report.entries {
                    let mark = if e.passed { "PASS" } else { "FAIL" };
                    println!("{mark}  {:<34} {}  ({:.1}s)", e.name, e.measured, e.seconds);
                }
            }
            if !report.all_passed() {
                return Ok(ExitCode::FAILURE);
            }
        }
        Command::Hardness { d, eps, r } => {
            println!("{}", serde_json::to_string_pretty(&hardness_analysis(d, eps, r)?)?);
        }
        Command::Solve { instance } => {
            let inst = named_instance(&instance)?;
            let z = solve_lp(&inst, &LpObjective::means(&inst));
            println!("{}", serde_json::to_string_pretty(&z)?);
        }
    }
    Ok(ExitCode::SUCCESS)
}
