use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::matching::{applications, expected_matching, matching};
use super::params::{Mode, SimulationParams};
use super::process::{expected_separations_and_openings, separations_and_openings};
use super::state::{Count, ExpectedState, FlowMatrix, LabourState, VacancyAges};
use super::trajectory::Trajectory;
use crate::error::{Error, Result};
use crate::network::MobilityNetwork;
use crate::scenario::DemandScenario;

/// Everything that happened during one step besides the new state.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome<T> {
    pub flows: FlowMatrix<T>,
    pub separations: Vec<T>,
    pub openings: Vec<T>,
}

fn fault(timestep: usize, message: impl Into<String>) -> Error {
    Error::InternalFault {
        timestep,
        message: message.into(),
    }
}

fn check_shapes<T>(
    state: &LabourState<T>,
    targets: &[f64],
    network: &MobilityNetwork,
) -> Result<()> {
    let n = state.employed.len();
    if targets.len() != n || network.len() != n {
        return Err(Error::invalid(format!(
            "state has {n} nodes, targets {}, network {}",
            targets.len(),
            network.len()
        )));
    }
    if targets.iter().any(|t| t.is_nan() || *t < 0.0) {
        return Err(Error::invalid("target demand must be non-negative"));
    }
    Ok(())
}

/// Removes `count` vacancies uniformly at random from an age histogram.
fn remove_uniform<R: Rng + ?Sized>(ages: &mut VacancyAges<u64>, count: u64, rng: &mut R) -> bool {
    let mut total = ages.total();
    if count > total {
        return false;
    }
    for _ in 0..count {
        let mut pick = rng.random_range(0..total);
        for bucket in ages.buckets_mut() {
            if pick < *bucket {
                *bucket -= 1;
                break;
            }
            pick -= *bucket;
        }
        total -= 1;
    }
    true
}

/// Advances an agent state by one timestep towards `targets` (target demand
/// at `t + 1`).
///
/// Order within a step: separations and openings are drawn from the current
/// state; separated workers join their node's unemployment pool and may apply
/// straight away; existing vacancies age by one step and new ones open at age
/// zero; applications are filed and matched; filled vacancies leave the age
/// histogram uniformly at random.
pub fn step<R: Rng + ?Sized>(
    state: &LabourState,
    targets: &[f64],
    network: &MobilityNetwork,
    params: &SimulationParams,
    rng: &mut R,
) -> Result<(LabourState, StepOutcome<u64>)> {
    check_shapes(state, targets, network)?;
    let n = state.len();
    let t = state.timestep + 1;
    let workers_before = state.total_workers();
    let (b, c) = separations_and_openings(state, targets, params, rng);

    let mut next = state.clone();
    next.timestep = t;
    for i in 0..n {
        next.employed[i] = next.employed[i]
            .checked_sub(b[i])
            .ok_or_else(|| fault(t, format!("node {i}: separations exceed employment")))?;
        next.unemployed[i] += b[i];
        next.vacancies[i].age_one_step();
        next.vacancies[i].add_fresh(c[i]);
    }

    let open: Vec<u64> = next.vacancies.iter().map(VacancyAges::total).collect();
    let apps = applications(
        &next.unemployed,
        &open,
        network,
        params.applications_per_worker,
        rng,
    );
    let flows = matching(&apps, &open, rng);
    let hires_in = flows.inflows(n);
    let hires_out = flows.outflows(n);

    for i in 0..n {
        next.employed[i] += hires_in[i];
        next.unemployed[i] = next.unemployed[i]
            .checked_sub(hires_out[i])
            .ok_or_else(|| fault(t, format!("node {i}: more hires out than unemployed")))?;
        if !remove_uniform(&mut next.vacancies[i], hires_in[i], rng) {
            return Err(fault(
                t,
                format!("node {i}: more hires than open vacancies"),
            ));
        }
    }
    if next.total_workers() != workers_before {
        return Err(fault(t, "worker count not conserved"));
    }
    Ok((
        next,
        StepOutcome {
            flows,
            separations: b,
            openings: c,
        },
    ))
}

/// Mean-field counterpart of [`step`]: the same sequence applied to
/// expected counts, with filled vacancies removed proportionally across ages.
pub fn mean_field_step(
    state: &ExpectedState,
    targets: &[f64],
    network: &MobilityNetwork,
    params: &SimulationParams,
) -> Result<(ExpectedState, StepOutcome<f64>)> {
    check_shapes(state, targets, network)?;
    let n = state.len();
    let t = state.timestep + 1;
    let (b, c) = expected_separations_and_openings(state, targets, params);

    let mut next = state.clone();
    next.timestep = t;
    for i in 0..n {
        next.employed[i] -= b[i];
        next.unemployed[i] += b[i];
        next.vacancies[i].age_one_step();
        next.vacancies[i].add_fresh(c[i]);
    }
    let open: Vec<f64> = next.vacancies.iter().map(VacancyAges::total).collect();
    let flows = expected_matching(&next.unemployed, &open, network);
    let hires_in = flows.inflows(n);
    let hires_out = flows.outflows(n);
    for i in 0..n {
        next.employed[i] += hires_in[i];
        next.unemployed[i] -= hires_out[i];
        if open[i] > 0.0 {
            let keep = 1.0 - hires_in[i] / open[i];
            for bucket in next.vacancies[i].buckets_mut() {
                *bucket *= keep;
            }
        }
        let tol = 1e-9 * (1.0 + state.employed[i] + state.unemployed[i] + open[i]);
        for (what, value) in [
            ("employed", next.employed[i]),
            ("unemployed", next.unemployed[i]),
            ("vacancies", next.vacancies[i].total()),
        ] {
            if value < -tol || !value.is_finite() {
                return Err(fault(t, format!("node {i}: {what} = {value}")));
            }
        }
    }
    Ok((
        next,
        StepOutcome {
            flows,
            separations: b,
            openings: c,
        },
    ))
}

/// Target demand per timestep and network node, divided by the population scale.
/// Network nodes without a scenario entry get zero demand.
pub fn scaled_targets(
    scenario: &DemandScenario,
    network: &MobilityNetwork,
    scale: f64,
) -> Result<Vec<Vec<f64>>> {
    for node in scenario.d_target.keys() {
        if !network.nodes().contains(node) {
            return Err(Error::invalid(format!(
                "scenario node {node} is not in the network"
            )));
        }
    }
    let missing = network
        .nodes()
        .iter()
        .filter(|n| !scenario.d_target.contains_key(n))
        .count();
    if missing > 0 {
        log::warn!("{missing} network node(s) have no target demand; treating as zero");
    }
    let horizon = scenario.horizon();
    Ok((0..=horizon)
        .map(|t| {
            network
                .nodes()
                .iter()
                .map(|n| scenario.target(n, t) / scale)
                .collect()
        })
        .collect())
}

fn stochastic_round<R: Rng + ?Sized>(x: f64, rng: &mut R) -> u64 {
    let floor = x.floor();
    let frac = x - floor;
    floor as u64 + u64::from(frac > 0.0 && rng.random::<f64>() < frac)
}

/// Agent state seeded from first-period demand: employment by stochastic
/// rounding, unemployment a fixed share of it, vacancies `delta_v` of it.
pub fn initial_state<R: Rng + ?Sized>(
    targets: &[f64],
    params: &SimulationParams,
    rng: &mut R,
) -> LabourState {
    let employed: Vec<u64> = targets.iter().map(|&d| stochastic_round(d, rng)).collect();
    let unemployed = employed
        .iter()
        .map(|&e| (params.initial_unemployment_share * e as f64).round() as u64)
        .collect();
    let vacancies = employed
        .iter()
        .map(|&e| (params.delta_v * e as f64).round() as u64)
        .collect();
    LabourState::new(employed, unemployed, vacancies, params.age_cap_steps())
}

pub fn initial_expected_state(targets: &[f64], params: &SimulationParams) -> ExpectedState {
    let employed = targets.to_vec();
    let unemployed = employed
        .iter()
        .map(|e| params.initial_unemployment_share * e)
        .collect();
    let vacancies = employed.iter().map(|e| params.delta_v * e).collect();
    LabourState::new(employed, unemployed, vacancies, params.age_cap_steps())
}

fn threshold_steps(params: &SimulationParams) -> Vec<usize> {
    params
        .vacancy_age_thresholds_months
        .iter()
        .map(|&m| params.months_to_steps(m))
        .collect()
}

fn sum<T: Count>(v: &[T]) -> f64 {
    v.iter().map(|x| x.to_f64()).sum()
}

/// Runs agent dynamics from `initial` through `targets[1..]`, recording
/// the initial state and every subsequent step.
pub fn run_from_state<R: Rng + ?Sized>(
    initial: LabourState,
    targets: &[Vec<f64>],
    network: &MobilityNetwork,
    params: &SimulationParams,
    rng: &mut R,
) -> Result<Trajectory> {
    params.validate()?;
    let ages = threshold_steps(params);
    let mut traj = Trajectory::new(
        network.nodes().to_vec(),
        params.steps_per_year,
        params.vacancy_age_thresholds_months.clone(),
    );
    let mut state = initial;
    traj.record(&state, &ages);
    traj.record_flows(0.0, 0.0, 0.0);
    for target in targets.iter().skip(1) {
        let (next, out) = step(&state, target, network, params, rng)?;
        traj.record(&next, &ages);
        traj.record_flows(
            out.flows.total() as f64,
            sum(&out.separations),
            sum(&out.openings),
        );
        state = next;
    }
    Ok(traj)
}

/// Mean-field counterpart of [`run_from_state`].
pub fn run_mean_field_from_state(
    initial: ExpectedState,
    targets: &[Vec<f64>],
    network: &MobilityNetwork,
    params: &SimulationParams,
) -> Result<Trajectory> {
    params.validate()?;
    let ages = threshold_steps(params);
    let mut traj = Trajectory::new(
        network.nodes().to_vec(),
        params.steps_per_year,
        params.vacancy_age_thresholds_months.clone(),
    );
    let mut state = initial;
    traj.record(&state, &ages);
    traj.record_flows(0.0, 0.0, 0.0);
    for target in targets.iter().skip(1) {
        let (next, out) = mean_field_step(&state, target, network, params)?;
        traj.record(&next, &ages);
        traj.record_flows(out.flows.total(), sum(&out.separations), sum(&out.openings));
        state = next;
    }
    Ok(traj)
}

/// Full scenario run: initialization from first-year demand, a burn-in at
/// constant first-year demand, then one step per scenario timestep.
/// Identical inputs and seed give an identical trajectory.
pub fn run(
    scenario: &DemandScenario,
    network: &MobilityNetwork,
    params: &SimulationParams,
) -> Result<Trajectory> {
    params.validate()?;
    if scenario.steps_per_year != params.steps_per_year {
        return Err(Error::invalid(format!(
            "scenario uses {} steps/year, parameters {}",
            scenario.steps_per_year, params.steps_per_year
        )));
    }
    let targets = scaled_targets(scenario, network, params.scale)?;
    let first = &targets[0];
    match params.mode {
        Mode::Stochastic => {
            let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
            let mut state = initial_state(first, params, &mut rng);
            for _ in 0..params.burn_in_steps {
                state = step(&state, first, network, params, &mut rng)?.0;
            }
            state.timestep = 0;
            run_from_state(state, &targets, network, params, &mut rng)
        }
        Mode::MeanField => {
            let mut state = initial_expected_state(first, params);
            for _ in 0..params.burn_in_steps {
                state = mean_field_step(&state, first, network, params)?.0;
            }
            state.timestep = 0;
            run_mean_field_from_state(state, &targets, network, params)
        }
    }
}
