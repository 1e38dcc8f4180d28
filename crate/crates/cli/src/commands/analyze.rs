use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::Result;
use clap::Args;
use labournet_core::abm::Trajectory;
use labournet_core::metrics::{
    aggregate_series, outcome_table, variance_decomposition, year_window, Metric, OutcomeTable,
    VarianceDecomposition,
};
use labournet_core::scenario::BASELINE;
use serde::Serialize;

use super::prepare_scenario;
use super::simulate::SimulationSettings;
use crate::error::input_error;
use crate::manifest::{create, open, write_json, Manifest, RunStatus};

#[derive(Debug, Clone, Args)]
pub struct AnalyzeArgs {
    /// Output directory of simulate
    #[arg(long)]
    pub runs: PathBuf,
    /// Separate simulate directory holding the baseline runs (default: --runs)
    #[arg(long)]
    pub baseline_runs: Option<PathBuf>,
    /// Output directory of prepare-scenario used for the runs
    #[arg(long)]
    pub scenarios_dir: PathBuf,
    /// Scenarios to compare with the baseline (default: all simulated ones)
    #[arg(long, value_delimiter = ',')]
    pub scenario: Vec<String>,
    /// Vacancy age threshold, in months, for the unfilled-vacancy rate
    #[arg(long, default_value_t = 6)]
    pub x_months: u32,
    /// First year of the averaging window (default: first scenario year)
    #[arg(long)]
    pub from_year: Option<i32>,
    /// Last year of the averaging window (default: last scenario year)
    #[arg(long)]
    pub to_year: Option<i32>,
    /// Rows in the most-affected table
    #[arg(long, default_value_t = 5)]
    pub top: usize,
    #[arg(long)]
    pub out: PathBuf,
}

struct RunSet {
    settings: SimulationSettings,
    manifest: Manifest,
    dir: PathBuf,
}

impl RunSet {
    fn load(dir: &Path) -> Result<Self> {
        let manifest = Manifest::read(dir)?;
        manifest.expect_command("simulate", dir)?;
        let settings: SimulationSettings = serde_json::from_value(manifest.parameters.clone())
            .map_err(|e| input_error(format!("simulate manifest parameters: {e}")))?;
        Ok(RunSet {
            settings,
            manifest,
            dir: dir.to_path_buf(),
        })
    }

    /// Trajectories of `scenario` keyed by seed; faulted runs are skipped.
    fn trajectories(&self, scenario: &str) -> Result<BTreeMap<u64, Trajectory>> {
        let mut out = BTreeMap::new();
        for r in self.manifest.runs.iter().filter(|r| r.scenario == scenario) {
            if r.status != RunStatus::Ok {
                log::warn!("skipping faulted run {scenario}/{}", r.seed);
                continue;
            }
            let digest = r.trajectory.as_ref().ok_or_else(|| {
                input_error(format!("run {scenario}/{} has no trajectory", r.seed))
            })?;
            let path = self.dir.join(&digest.file);
            digest.verify(&path)?;
            out.insert(
                r.seed,
                Trajectory::read_csv(open(&path)?, self.settings.params.steps_per_year)?,
            );
        }
        Ok(out)
    }
}

#[derive(Serialize)]
struct AggregateRow {
    timestep: usize,
    baseline_unemployment_rate: Option<f64>,
    scenario_unemployment_rate: Option<f64>,
}

#[derive(Serialize)]
struct ReallocationRow {
    year: i32,
    baseline: f64,
    scenario: f64,
}

#[derive(Serialize)]
struct TopRow<'a> {
    rank: usize,
    occupation: &'a str,
    region: &'a str,
    u_delta_pp: Option<f64>,
    demand_change_pct: Option<f64>,
    employment_2018: f64,
}

#[derive(Serialize)]
struct Decomposition {
    x_months: u32,
    u_delta_pp: VarianceDecomposition,
    v_delta_pp: VarianceDecomposition,
}

fn mean_series<F: Fn(&Trajectory) -> Vec<Option<f64>>>(
    runs: &[&Trajectory],
    f: F,
) -> Vec<Option<f64>> {
    let series: Vec<Vec<Option<f64>>> = runs.iter().map(|t| f(t)).collect();
    let len = series.first().map_or(0, Vec::len);
    (0..len)
        .map(|t| {
            let vals: Vec<f64> = series.iter().filter_map(|s| s[t]).collect();
            (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
        })
        .collect()
}

fn decompose(table: &OutcomeTable, metric: Metric) -> Result<VarianceDecomposition> {
    let obs: Vec<(&str, &str, f64)> = table
        .rows
        .iter()
        .filter_map(|r| {
            metric
                .of(r)
                .map(|v| (r.region.as_str(), r.occupation.as_str(), v))
        })
        .collect();
    Ok(variance_decomposition(&obs)?)
}

fn check_compatible(base: &RunSet, scen: &RunSet) -> Result<()> {
    let (a, b) = (&base.settings, &scen.settings);
    if a.params != b.params
        || a.seeds != b.seeds
        || a.no_friction != b.no_friction
        || a.first_year != b.first_year
    {
        return Err(input_error(
            "baseline and scenario runs were produced with different parameters or seeds",
        ));
    }
    let inputs = |m: &Manifest| {
        m.inputs
            .iter()
            .filter(|(k, _)| k.starts_with("network/") || k.starts_with("scenarios/"))
            .map(|(k, v)| (k.clone(), v.sha256.clone()))
            .collect::<BTreeMap<_, _>>()
    };
    if inputs(&base.manifest) != inputs(&scen.manifest) {
        return Err(input_error(
            "baseline and scenario runs used different network or scenario inputs",
        ));
    }
    Ok(())
}

pub fn run(args: &AnalyzeArgs) -> Result<()> {
    let scen_runs = RunSet::load(&args.runs)?;
    let base_runs = match &args.baseline_runs {
        Some(dir) => RunSet::load(dir)?,
        None => RunSet::load(&args.runs)?,
    };
    check_compatible(&base_runs, &scen_runs)?;

    let (scenarios, clock, sc_manifest) = prepare_scenario::load(&args.scenarios_dir)?;
    for (k, d) in &sc_manifest.outputs {
        match scen_runs.manifest.inputs.get(&format!("scenarios/{k}")) {
            Some(recorded) if recorded.sha256 == d.sha256 => {}
            _ => {
                return Err(input_error(format!(
                    "{} in {} does not match the scenario files the runs were made with",
                    k,
                    args.scenarios_dir.display()
                )))
            }
        }
    }
    let params = &scen_runs.settings.params;
    if !params
        .vacancy_age_thresholds_months
        .contains(&args.x_months)
    {
        return Err(input_error(format!(
            "runs track vacancy ages {:?} months, not {}",
            params.vacancy_age_thresholds_months, args.x_months
        )));
    }

    let names: Vec<String> = if args.scenario.is_empty() {
        scen_runs
            .settings
            .scenarios
            .iter()
            .filter(|s| *s != BASELINE)
            .cloned()
            .collect()
    } else {
        args.scenario.clone()
    };
    if names.is_empty() {
        return Err(input_error("no scenario to compare against the baseline"));
    }
    let baseline = base_runs.trajectories(BASELINE)?;
    if baseline.is_empty() {
        return Err(input_error("no successful baseline runs"));
    }
    let base_sc = &scenarios[BASELINE];
    let from = args.from_year.unwrap_or(clock.first_year);
    let to = args.to_year.unwrap_or(clock.last_year);
    let any = baseline.values().next().expect("non-empty");
    let window = year_window(any, clock.first_year, from, to)?;

    std::fs::create_dir_all(&args.out)?;
    let mut manifest = Manifest::new(
        "analyze",
        serde_json::json!({
            "x_months": args.x_months,
            "from_year": from,
            "to_year": to,
            "top": args.top,
            "scenarios": names,
        }),
    );
    for (k, d) in &scen_runs.manifest.inputs {
        manifest.inputs.insert(k.clone(), d.clone());
    }
    let mut outputs = Vec::new();
    let mut seeds_used = BTreeMap::new();
    for name in &names {
        let sc = scenarios.get(name).ok_or_else(|| {
            input_error(format!(
                "scenario {name:?} not found in {}",
                args.scenarios_dir.display()
            ))
        })?;
        let runs = scen_runs.trajectories(name)?;
        let seeds: Vec<u64> = runs
            .keys()
            .filter(|s| baseline.contains_key(s))
            .copied()
            .collect();
        if seeds.is_empty() {
            return Err(input_error(format!(
                "no seed has successful baseline and {name} runs"
            )));
        }
        let b: Vec<Trajectory> = seeds.iter().map(|s| baseline[s].clone()).collect();
        let s: Vec<Trajectory> = seeds.iter().map(|s| runs[s].clone()).collect();
        let table = outcome_table(&b, &s, base_sc, sc, window.clone(), args.x_months)?;

        let file = format!("outcomes_{name}.csv");
        table.write_csv(create(&args.out.join(&file))?)?;
        outputs.push(file);

        let file = format!("heatmap_{name}.csv");
        let mut w = csv::Writer::from_writer(create(&args.out.join(&file))?);
        for metric in [Metric::UDeltaPp, Metric::VDeltaPp] {
            for cell in table.heatmap(metric) {
                w.serialize(cell)?;
            }
        }
        w.flush()?;
        outputs.push(file);

        let file = format!("top{}_{name}.csv", args.top);
        let mut w = csv::Writer::from_writer(create(&args.out.join(&file))?);
        for (k, r) in table
            .top(Metric::UDeltaPp, args.top)
            .into_iter()
            .enumerate()
        {
            w.serialize(TopRow {
                rank: k + 1,
                occupation: &r.occupation,
                region: &r.region,
                u_delta_pp: r.u_delta_pp,
                demand_change_pct: r.demand_change_pct,
                employment_2018: r.employment_2018,
            })?;
        }
        w.flush()?;
        outputs.push(file);

        let br: Vec<&Trajectory> = b.iter().collect();
        let sr: Vec<&Trajectory> = s.iter().collect();
        let bu = mean_series(&br, |t| aggregate_series(t).unemployment_rate);
        let su = mean_series(&sr, |t| aggregate_series(t).unemployment_rate);
        let file = format!("aggregate_{name}.csv");
        let mut w = csv::Writer::from_writer(create(&args.out.join(&file))?);
        for (t, (x, y)) in bu.iter().zip(&su).enumerate() {
            w.serialize(AggregateRow {
                timestep: t,
                baseline_unemployment_rate: *x,
                scenario_unemployment_rate: *y,
            })?;
        }
        w.flush()?;
        outputs.push(file);

        let realloc = |runs: &[&Trajectory]| -> Vec<f64> {
            let per: Vec<Vec<f64>> = runs
                .iter()
                .map(|t| aggregate_series(t).yearly_reallocation)
                .collect();
            (0..per[0].len())
                .map(|y| per.iter().map(|p| p[y]).sum::<f64>() / per.len() as f64)
                .collect()
        };
        let file = format!("yearly_reallocation_{name}.csv");
        let mut w = csv::Writer::from_writer(create(&args.out.join(&file))?);
        for (k, (x, y)) in realloc(&br).into_iter().zip(realloc(&sr)).enumerate() {
            w.serialize(ReallocationRow {
                year: clock.first_year + k as i32,
                baseline: x,
                scenario: y,
            })?;
        }
        w.flush()?;
        outputs.push(file);

        let file = format!("decomposition_{name}.json");
        write_json(
            &args.out.join(&file),
            &Decomposition {
                x_months: args.x_months,
                u_delta_pp: decompose(&table, Metric::UDeltaPp)?,
                v_delta_pp: decompose(&table, Metric::VDeltaPp)?,
            },
        )?;
        outputs.push(file);
        seeds_used.insert(name.clone(), seeds);
    }
    manifest.parameters["seeds_used"] = serde_json::to_value(&seeds_used)?;
    for f in &outputs {
        manifest.output(&args.out, f)?;
    }
    manifest.write(&args.out)?;
    Ok(())
}
