use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::Result;
use clap::Args;
use labournet_core::abm::{run as run_model, SimulationParams, Trajectory};
use labournet_core::network::complete_network;
use labournet_core::ErrorKind;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{build_network, prepare_scenario};
use crate::config::SimFlags;
use crate::error::{input_error, internal_error};
use crate::manifest::{create, write_json, FileDigest, Manifest, RunRecord, RunStatus};

pub const TIMING: &str = "timing.json";

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    /// Output directory of build-network
    #[arg(long)]
    pub network: PathBuf,
    /// Output directory of prepare-scenario
    #[arg(long)]
    pub scenarios_dir: PathBuf,
    /// Scenarios to run (default: all); the baseline is always included
    #[arg(long, value_delimiter = ',')]
    pub scenario: Vec<String>,
    /// Replace the network by the equal-weight complete network over its nodes
    #[arg(long)]
    pub no_friction: bool,
    #[command(flatten)]
    pub sim: SimFlags,
    #[arg(long)]
    pub out: PathBuf,
}

/// Everything `analyze` needs to know about how runs were produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationSettings {
    pub params: SimulationParams,
    pub seeds: Vec<u64>,
    pub scenarios: Vec<String>,
    pub no_friction: bool,
    pub first_year: i32,
}

pub fn run_path(scenario: &str, seed: u64) -> String {
    format!("runs/{scenario}/seed_{seed}.csv")
}

pub fn flows_path(scenario: &str, seed: u64) -> String {
    format!("runs/{scenario}/seed_{seed}_flows.csv")
}

fn write_run(dir: &Path, scenario: &str, seed: u64, traj: &Trajectory) -> Result<FileDigest> {
    let rel = run_path(scenario, seed);
    let mut w = create(&dir.join(&rel))?;
    traj.write_csv(&mut w)?;
    drop(w);
    traj.write_flows_csv(create(&dir.join(flows_path(scenario, seed)))?)?;
    FileDigest::of_relative(dir, &rel)
}

pub fn run(args: &SimulateArgs) -> Result<()> {
    let (cfg, seeds) = args.sim.resolve()?;
    let (mut network, net_manifest) = build_network::load(&args.network)?;
    let (scenarios, clock, sc_manifest) = prepare_scenario::load(&args.scenarios_dir)?;

    let mut params = cfg.params.clone();
    match args.sim.steps_per_year {
        Some(spy) if spy != clock.steps_per_year => {
            return Err(input_error(format!(
                "--steps-per-year {spy} does not match the prepared scenarios ({})",
                clock.steps_per_year
            )))
        }
        _ => params.steps_per_year = clock.steps_per_year,
    }
    params.validate()?;
    if args.no_friction {
        network = complete_network(network.nodes().to_vec())?;
    }

    let mut names: Vec<String> = if !args.scenario.is_empty() {
        args.scenario.clone()
    } else if let Some(list) = &cfg.scenarios {
        list.clone()
    } else {
        clock.scenarios.clone()
    };
    if !names
        .iter()
        .any(|n| n == labournet_core::scenario::BASELINE)
    {
        names.insert(0, labournet_core::scenario::BASELINE.to_string());
    }
    for n in &names {
        if !scenarios.contains_key(n) {
            return Err(input_error(format!(
                "scenario {n:?} not found in {}",
                args.scenarios_dir.display()
            )));
        }
    }

    let jobs: Vec<(&str, u64)> = names
        .iter()
        .flat_map(|n| seeds.iter().map(move |s| (n.as_str(), *s)))
        .collect();
    std::fs::create_dir_all(&args.out)?;
    let started = Instant::now();
    let results: Vec<(Result<RunRecord>, f64)> = jobs
        .par_iter()
        .map(|&(name, seed)| {
            let t0 = Instant::now();
            let p = SimulationParams {
                seed,
                ..params.clone()
            };
            let record = match run_model(&scenarios[name], &network, &p) {
                Ok(traj) => write_run(&args.out, name, seed, &traj).map(|digest| RunRecord {
                    scenario: name.to_string(),
                    seed,
                    status: RunStatus::Ok,
                    trajectory: Some(digest),
                    error: None,
                }),
                Err(e) if e.kind() == ErrorKind::Internal => {
                    log::error!("run {name}/{seed} aborted: {e}");
                    Ok(RunRecord {
                        scenario: name.to_string(),
                        seed,
                        status: RunStatus::Fault,
                        trajectory: None,
                        error: Some(e.to_string()),
                    })
                }
                Err(e) => Err(e.into()),
            };
            (record, t0.elapsed().as_secs_f64())
        })
        .collect();

    let mut runs = Vec::with_capacity(results.len());
    let mut timing = Vec::with_capacity(results.len());
    for ((record, secs), (name, seed)) in results.into_iter().zip(&jobs) {
        runs.push(record?);
        timing.push(serde_json::json!({"scenario": name, "seed": seed, "seconds": secs}));
    }
    write_json(
        &args.out.join(TIMING),
        &serde_json::json!({"total_seconds": started.elapsed().as_secs_f64(), "runs": timing}),
    )?;

    let settings = SimulationSettings {
        params,
        seeds,
        scenarios: names,
        no_friction: args.no_friction,
        first_year: clock.first_year,
    };
    let mut manifest = Manifest::new("simulate", serde_json::to_value(&settings)?);
    for (role, m) in [("network", &net_manifest), ("scenarios", &sc_manifest)] {
        for (k, d) in &m.outputs {
            manifest.inputs.insert(format!("{role}/{k}"), d.clone());
        }
    }
    if let Some(p) = &args.sim.config {
        manifest.input("config", p)?;
    }
    let faults = runs.iter().filter(|r| r.status == RunStatus::Fault).count();
    manifest.runs = runs;
    manifest.write(&args.out)?;
    if faults > 0 {
        return Err(internal_error(format!(
            "{faults} run(s) aborted with internal faults; see manifest"
        )));
    }
    Ok(())
}
