use std::path::PathBuf;

use anyhow::Result;
use clap::Args;
use labournet_core::abm::{
    initial_expected_state, run_mean_field_from_state, scaled_targets, SimulationParams,
};
use labournet_core::network::MobilityNetwork;
use labournet_core::scenario::BASELINE;
use serde::Serialize;

use super::{build_network, prepare_scenario};
use crate::config::SimFlags;
use crate::error::{constraint_error, input_error};
use crate::manifest::write_json;

#[derive(Debug, Clone, Args)]
pub struct CalibrateArgs {
    #[arg(long)]
    pub network: PathBuf,
    #[arg(long)]
    pub scenarios_dir: PathBuf,
    /// Desired steady-state aggregate unemployment rate of the baseline
    #[arg(long)]
    pub target_rate: f64,
    /// Mean-field steps used to reach the steady state
    #[arg(long, default_value_t = 600)]
    pub steps: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub tolerance: f64,
    #[command(flatten)]
    pub sim: SimFlags,
    /// Calibrated parameters, usable as --config
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Serialize)]
struct Calibrated {
    #[serde(flatten)]
    params: SimulationParams,
    calibration: CalibrationReport,
}

#[derive(Debug, Serialize)]
struct CalibrationReport {
    target_rate: f64,
    achieved_rate: f64,
    multiplier: f64,
    iterations: usize,
}

/// Aggregate unemployment rate averaged over the final simulated year of a
/// mean-field run at constant first-year demand.
pub fn steady_state_rate(
    targets: &[f64],
    network: &MobilityNetwork,
    params: &SimulationParams,
    steps: usize,
) -> Result<f64> {
    let path = vec![targets.to_vec(); steps + 1];
    let traj = run_mean_field_from_state(
        initial_expected_state(targets, params),
        &path,
        network,
        params,
    )?;
    let tail = steps.saturating_sub(params.steps_per_year)..=steps;
    let (mut u, mut l) = (0.0, 0.0);
    for t in tail {
        let ut: f64 = traj.unemployed[t].iter().sum();
        u += ut;
        l += ut + traj.employed[t].iter().sum::<f64>();
    }
    Ok(u / l)
}

pub fn run(args: &CalibrateArgs) -> Result<()> {
    if !(args.target_rate > 0.0 && args.target_rate < 1.0) {
        return Err(input_error(
            "--target-rate must lie strictly between 0 and 1",
        ));
    }
    let (cfg, _) = args.sim.resolve()?;
    let (network, _) = build_network::load(&args.network)?;
    let (scenarios, clock, _) = prepare_scenario::load(&args.scenarios_dir)?;
    let base = scenarios
        .get(BASELINE)
        .ok_or_else(|| input_error("prepared scenarios have no baseline"))?;
    let mut params = cfg.params.clone();
    params.steps_per_year = clock.steps_per_year;
    params.validate()?;
    let first = scaled_targets(base, &network, params.scale)?.swap_remove(0);

    let with = |m: f64| SimulationParams {
        delta_u: params.delta_u * m,
        delta_v: params.delta_v * m,
        ..params.clone()
    };
    let rate = |m: f64| steady_state_rate(&first, &network, &with(m), args.steps);
    let max_delta = params.delta_u.max(params.delta_v);
    if max_delta <= 0.0 {
        return Err(input_error(
            "calibration scales delta_u and delta_v, which are both zero",
        ));
    }
    let (mut lo, mut hi) = (1e-3, 1.0 / max_delta);
    let (r_lo, r_hi) = (rate(lo)?, rate(hi)?);
    if !(r_lo..=r_hi).contains(&args.target_rate) {
        return Err(constraint_error(format!(
            "target rate {} is outside the reachable range [{r_lo:.6}, {r_hi:.6}]",
            args.target_rate
        )));
    }
    let mut iterations = 0;
    let (mut m, mut achieved) = (lo, r_lo);
    while iterations < 100 {
        iterations += 1;
        m = 0.5 * (lo + hi);
        achieved = rate(m)?;
        if (achieved - args.target_rate).abs() <= args.tolerance {
            break;
        }
        if achieved < args.target_rate {
            lo = m;
        } else {
            hi = m;
        }
    }
    let calibrated = Calibrated {
        params: with(m),
        calibration: CalibrationReport {
            target_rate: args.target_rate,
            achieved_rate: achieved,
            multiplier: m,
            iterations,
        },
    };
    if let Some(dir) = args.out.parent() {
        std::fs::create_dir_all(dir)?;
    }
    write_json(&args.out, &calibrated)?;
    Ok(())
}
