//! Command implementations behind the `labournet` binary.

pub mod commands;
pub mod config;
pub mod error;
pub mod manifest;

use clap::{Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "labournet",
    version,
    about = "Labour market simulation on occupation-region mobility networks"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Ingest transitions, merge sparse occupations and build the mobility network
    BuildNetwork(commands::build_network::BuildNetworkArgs),
    /// Turn sector demand paths into per-node target demand
    PrepareScenario(commands::prepare_scenario::PrepareScenarioArgs),
    /// Run seed ensembles for each scenario
    Simulate(commands::simulate::SimulateArgs),
    /// Compute outcome tables from simulation runs
    Analyze(commands::analyze::AnalyzeArgs),
    /// Write a synthetic input data set
    GenSynthetic(commands::gen_synthetic::GenSyntheticArgs),
    /// Fit spontaneous rates to a target baseline unemployment rate
    Calibrate(commands::calibrate::CalibrateArgs),
}

pub fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::BuildNetwork(a) => commands::build_network::run(&a),
        Command::PrepareScenario(a) => commands::prepare_scenario::run(&a),
        Command::Simulate(a) => commands::simulate::run(&a),
        Command::Analyze(a) => commands::analyze::run(&a),
        Command::GenSynthetic(a) => commands::gen_synthetic::run(&a),
        Command::Calibrate(a) => commands::calibrate::run(&a),
    }
}
