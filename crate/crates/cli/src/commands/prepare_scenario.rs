use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::Result;
use clap::Args;
use labournet_core::network::{MergeMap, RegionManifest};
use labournet_core::scenario::{
    map_sector_to_occupation, normalize_demand, read_targets_csv, reallocation_volume,
    write_targets_csv, DemandScenario, OccupationIndustryMix, SectorDemandPath, BASELINE,
};
use serde::{Deserialize, Serialize};

use crate::error::input_error;
use crate::manifest::{create, open, Manifest};

pub const TARGETS: &str = "targets.csv";
pub const SUMMARY: &str = "summary.csv";
pub const REALLOCATION: &str = "reallocation.csv";

#[derive(Debug, Clone, Args)]
pub struct PrepareScenarioArgs {
    /// Sector demand: scenario,sector,region,year,demand
    #[arg(long)]
    pub sector_demand: PathBuf,
    /// Occupation-industry mix: sector,region,occupation,share. Repeat to
    /// average several reference years.
    #[arg(long, required = true)]
    pub mix: Vec<PathBuf>,
    /// The mix holds national shares (one region label); copy them to every region
    #[arg(long, requires = "regions")]
    pub national_mix: bool,
    /// Region manifest, needed with --national-mix
    #[arg(long)]
    pub regions: Option<PathBuf>,
    /// Merge map from build-network; mix occupations are recoded through it
    #[arg(long)]
    pub merge_map: Option<PathBuf>,
    #[arg(long, default_value_t = 12)]
    pub steps_per_year: usize,
    #[arg(long)]
    pub out: PathBuf,
}

/// Clock metadata stored in the manifest and needed to read targets back.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioClock {
    pub first_year: i32,
    pub last_year: i32,
    pub steps_per_year: usize,
    pub scenarios: Vec<String>,
}

#[derive(Debug, Serialize)]
struct SummaryRow<'a> {
    scenario: &'a str,
    year: i32,
    total: f64,
}

#[derive(Debug, Serialize)]
struct ReallocationRow<'a> {
    scenario: &'a str,
    group: &'a str,
    from_year: i32,
    to_year: i32,
    created: f64,
    destroyed: f64,
}

pub fn run(args: &PrepareScenarioArgs) -> Result<()> {
    if args.steps_per_year == 0 {
        return Err(input_error("--steps-per-year must be at least 1"));
    }
    let path = SectorDemandPath::from_csv(open(&args.sector_demand)?)?;
    let mixes = args
        .mix
        .iter()
        .map(|p| OccupationIndustryMix::from_csv(open(p)?).map_err(anyhow::Error::from))
        .collect::<Result<Vec<_>>>()?;
    let mut mix = OccupationIndustryMix::average(&mixes)?;
    if args.national_mix {
        let regions =
            RegionManifest::from_csv(open(args.regions.as_ref().expect("required by clap"))?)?;
        mix = mix.broadcast_national(regions.ids())?;
    }
    if let Some(p) = &args.merge_map {
        mix = mix.remap(&MergeMap::from_csv(open(p)?)?);
    }

    let raw = map_sector_to_occupation(&path, &mix)?;
    let normalized = normalize_demand(&raw, BASELINE)?;
    let names: Vec<String> = normalized.scenarios().map(str::to_string).collect();
    let scenarios = names
        .iter()
        .map(|s| DemandScenario::prepare(&normalized, s, args.steps_per_year))
        .collect::<labournet_core::Result<Vec<_>>>()?;
    let first_year = scenarios[0].first_year;
    let last_year = scenarios[0].last_year();
    if scenarios
        .iter()
        .any(|s| s.first_year != first_year || s.last_year() != last_year)
    {
        return Err(input_error("scenarios cover different year ranges"));
    }

    std::fs::create_dir_all(&args.out)?;
    write_targets_csv(&scenarios, create(&args.out.join(TARGETS))?)?;

    let mut w = csv::Writer::from_writer(create(&args.out.join(SUMMARY))?);
    for sc in &scenarios {
        for year in first_year..=last_year {
            w.serialize(SummaryRow {
                scenario: &sc.scenario_id,
                year,
                total: sc.total_at_year(year),
            })?;
        }
    }
    w.flush()?;

    let mut w = csv::Writer::from_writer(create(&args.out.join(REALLOCATION))?);
    for sc in &scenarios {
        let table = reallocation_volume(&sc.d_star, first_year, last_year, |n| {
            n.broad_group().to_string()
        })?;
        for (group, r) in &table {
            w.serialize(ReallocationRow {
                scenario: &sc.scenario_id,
                group,
                from_year: first_year,
                to_year: last_year,
                created: r.created,
                destroyed: r.destroyed,
            })?;
        }
    }
    w.flush()?;

    let clock = ScenarioClock {
        first_year,
        last_year,
        steps_per_year: args.steps_per_year,
        scenarios: names,
    };
    let mut manifest = Manifest::new("prepare-scenario", serde_json::to_value(&clock)?);
    manifest.input("sector_demand", &args.sector_demand)?;
    for (k, p) in args.mix.iter().enumerate() {
        manifest.input(&format!("mix_{k}"), p)?;
    }
    if let Some(p) = &args.regions {
        manifest.input("regions", p)?;
    }
    if let Some(p) = &args.merge_map {
        manifest.input("merge_map", p)?;
    }
    for f in [TARGETS, SUMMARY, REALLOCATION] {
        manifest.output(&args.out, f)?;
    }
    manifest.write(&args.out)?;
    Ok(())
}

/// Loads the scenarios of a `prepare-scenario` directory, checking digests.
pub fn load(dir: &Path) -> Result<(BTreeMap<String, DemandScenario>, ScenarioClock, Manifest)> {
    let manifest = Manifest::read(dir)?;
    manifest.expect_command("prepare-scenario", dir)?;
    manifest.verify_outputs(dir)?;
    let clock: ScenarioClock = serde_json::from_value(manifest.parameters.clone())
        .map_err(|e| input_error(format!("scenario manifest parameters: {e}")))?;
    let scenarios = read_targets_csv(
        open(&dir.join(TARGETS))?,
        clock.first_year,
        clock.steps_per_year,
    )?
    .into_iter()
    .map(|s| (s.scenario_id.clone(), s))
    .collect();
    Ok((scenarios, clock, manifest))
}
