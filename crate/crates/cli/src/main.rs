use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dtsync::config::ExperimentConfig;
use dtsync::experiment::{self, FigureId, OUTPUT_DIR_ENV};

#[derive(Parser)]
#[command(name = "dtsync", version, about = "DT placement and AoCI-aware update scheduling experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML configuration file; defaults apply when omitted.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Override a value, e.g. `--set chain.q=0.5` (repeatable, wins over the file).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Master seed (same as `--set seed=N`).
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(short, long, env = OUTPUT_DIR_ENV)]
    output_dir: Option<PathBuf>,
}

impl Common {
    fn load(&self) -> dtsync::Result<ExperimentConfig> {
        let mut overrides = self.overrides.clone();
        if let Some(seed) = self.seed {
            overrides.push(format!("seed={seed}"));
        }
        ExperimentConfig::load(self.config.as_deref(), &overrides)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Solve the scheduling MDP; writes policy.csv and solve.csv.
    Solve(Common),
    /// Simulate ZW, SAC, threshold and solved policies over the sweep.
    Simulate(Common),
    /// Train the deployment learner and compare it with the baselines.
    Deploy(Common),
    /// Write the CSV bundle of one figure.
    Experiment {
        /// fig-convergence, fig-deploy-compare, fig-total-cost or fig-breakdown.
        figure: String,
        #[command(flatten)]
        common: Common,
    },
    /// Check a configuration and print its effective TOML.
    ValidateConfig(Common),
}

fn run(cli: Cli) -> dtsync::Result<()> {
    let (common, action): (&Common, &dyn Fn(&ExperimentConfig, &std::path::Path) -> dtsync::Result<Vec<PathBuf>>) =
        match &cli.command {
            Command::Solve(c) => (c, &experiment::cmd_solve),
            Command::Simulate(c) => (c, &experiment::cmd_simulate),
            Command::Deploy(c) => (c, &experiment::cmd_deploy),
            Command::Experiment { figure, common } => {
                let figure: FigureId = figure.parse()?;
                let config = common.load()?;
                let out = experiment::output_dir(common.output_dir.as_deref());
                for p in experiment::cmd_experiment(&config, figure, &out)? {
                    println!("{}", p.display());
                }
                return Ok(());
            }
            Command::ValidateConfig(c) => {
                let config = c.load()?;
                print!("{}", config.canonical_toml());
                return Ok(());
            }
        };
    let config = common.load()?;
    let out = experiment::output_dir(common.output_dir.as_deref());
    for p in action(&config, &out)? {
        println!("{}", p.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
