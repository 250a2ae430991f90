//! `radioplan` command-line interface.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use radioplan::synth::SceneSpec;
use radioplan::Error;

use config::{CommonArgs, RunConfig};

#[derive(Debug, Parser)]
#[command(
    name = "radioplan",
    version,
    about = "Radio twin calibration and base-station placement"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a random synthetic scene
    #[command(allow_negative_numbers = true)]
    GenScene {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, default_value_t = 300.0)]
        width: f64,
        #[arg(long, default_value_t = 300.0)]
        height: f64,
        #[arg(long, default_value_t = 10)]
        n_buildings: usize,
        /// Output scene file (default: <out-dir>/scene.json)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sample noisy RSRP measurements using the scene's materials as ground truth
    #[command(allow_negative_numbers = true)]
    SynthMeasurements {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, default_value_t = 1494)]
        n_points: usize,
        #[arg(long, default_value_t = 0.0)]
        noise_sigma: f64,
        /// Output CSV (default: <out-dir>/measurements.csv)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit material parameters to measurements
    #[command(allow_negative_numbers = true)]
    Calibrate {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Place new base stations with the Bayesian planner
    #[command(allow_negative_numbers = true)]
    Plan {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Run the planner, random sampling and exhaustive search side by side
    #[command(allow_negative_numbers = true)]
    Baselines {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Export the radio map of the existing stations, plus a plan's stations
    #[command(allow_negative_numbers = true)]
    Map {
        #[command(flatten)]
        common: CommonArgs,
        /// Plan report whose selected stations are added
        #[arg(long)]
        plan: Option<PathBuf>,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io { .. } | Error::Parse(_) | Error::Argument(_) => 2,
        Error::Validation(_) | Error::Planning(_) => 3,
        Error::Numerical(_) => 4,
    }
}

fn run(cli: Cli) -> radioplan::Result<()> {
    match cli.command {
        Command::GenScene {
            common,
            width,
            height,
            n_buildings,
            out,
        } => {
            let cfg = RunConfig::resolve(&common)?;
            let spec = SceneSpec {
                width,
                height,
                n_buildings,
                seed: cfg.seed,
            };
            commands::gen_scene_cmd(&cfg, spec, out)?;
        }
        Command::SynthMeasurements {
            common,
            n_points,
            noise_sigma,
            out,
        } => {
            let cfg = RunConfig::resolve(&common)?;
            commands::synth_cmd(&cfg, n_points, noise_sigma, out)?;
        }
        Command::Calibrate { common } => {
            commands::calibrate_cmd(&RunConfig::resolve(&common)?)?;
        }
        Command::Plan { common } => {
            commands::plan_cmd(&RunConfig::resolve(&common)?)?;
        }
        Command::Baselines { common } => {
            commands::baselines_cmd(&RunConfig::resolve(&common)?)?;
        }
        Command::Map { common, plan } => {
            commands::map_cmd(&RunConfig::resolve(&common)?, plan.as_deref())?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
