//! Scenario pipeline: sector-level labour demand to per-node target demand.
//!
//! Sector demand is spread over occupations with a fixed occupation-industry
//! mix, rescaled so every year's baseline total matches the first baseline
//! year, then linearly interpolated onto the simulation clock.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{MergeMap, OccRegion};

pub const BASELINE: &str = "baseline";

const SHARE_TOLERANCE: f64 = 1e-9;

/// Sector labour demand per `(scenario, sector, region, year)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SectorDemandPath {
    values: BTreeMap<(String, String, String, i32), f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct SectorDemandRow {
    scenario: String,
    sector: String,
    region: String,
    year: i32,
    demand: f64,
}

impl SectorDemandPath {
    pub fn from_rows<I>(rows: I) -> Result<Self>
    where
        I: IntoIterator<Item = (String, String, String, i32, f64)>,
    {
        let mut values = BTreeMap::new();
        for (scenario, sector, region, year, demand) in rows {
            if !(demand >= 0.0 && demand.is_finite()) {
                return Err(Error::invalid(format!(
                    "demand {demand} for {scenario}/{sector}/{region}/{year} must be finite and non-negative"
                )));
            }
            *values
                .entry((scenario, sector, region, year))
                .or_insert(0.0) += demand;
        }
        let path = SectorDemandPath { values };
        path.validate()?;
        Ok(path)
    }

    pub fn from_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut rows = Vec::new();
        for (i, row) in rdr.deserialize::<SectorDemandRow>().enumerate() {
            let r = row.map_err(|e| Error::MalformedRow {
                source_name: "sector demand".into(),
                line: i as u64 + 2,
                message: e.to_string(),
            })?;
            rows.push((r.scenario, r.sector, r.region, r.year, r.demand));
        }
        if rows.is_empty() {
            return Err(Error::EmptyInput("sector demand".into()));
        }
        Self::from_rows(rows)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        for ((scenario, sector, region, year), demand) in &self.values {
            wtr.serialize(SectorDemandRow {
                scenario: scenario.clone(),
                sector: sector.clone(),
                region: region.clone(),
                year: *year,
                demand: *demand,
            })?;
        }
        wtr.flush()?;
        Ok(())
    }

    fn validate(&self) -> Result<()> {
        if !self.values.keys().any(|k| k.0 == BASELINE) {
            return Err(Error::invalid("sector demand has no baseline scenario"));
        }
        for (scenario, sector, region, year) in self.values.keys() {
            if scenario != BASELINE
                && !self.values.contains_key(&(
                    BASELINE.to_string(),
                    sector.clone(),
                    region.clone(),
                    *year,
                ))
            {
                return Err(Error::invalid(format!(
                    "baseline missing for sector {sector}, region {region}, year {year} covered by {scenario}"
                )));
            }
        }
        Ok(())
    }

    pub fn scenarios(&self) -> BTreeSet<&str> {
        self.values.keys().map(|k| k.0.as_str()).collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str, &str, i32, f64)> {
        self.values
            .iter()
            .map(|((sc, se, r, y), &d)| (sc.as_str(), se.as_str(), r.as_str(), *y, d))
    }
}

/// Occupational composition of each `(sector, region)`, held fixed over time.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct OccupationIndustryMix {
    shares: BTreeMap<(String, String), BTreeMap<String, f64>>,
}

#[derive(Debug, Serialize, Deserialize)]
struct MixRow {
    sector: String,
    region: String,
    occupation: String,
    share: f64,
}

impl OccupationIndustryMix {
    pub fn from_rows<I>(rows: I) -> Result<Self>
    where
        I: IntoIterator<Item = (String, String, String, f64)>,
    {
        let mut shares: BTreeMap<(String, String), BTreeMap<String, f64>> = BTreeMap::new();
        for (sector, region, occupation, share) in rows {
            if !(share >= 0.0 && share.is_finite()) {
                return Err(Error::invalid(format!(
                    "share {share} for {sector}/{region}/{occupation} must be non-negative"
                )));
            }
            *shares
                .entry((sector, region))
                .or_default()
                .entry(occupation)
                .or_insert(0.0) += share;
        }
        let mix = OccupationIndustryMix { shares };
        mix.validate()?;
        Ok(mix)
    }

    pub fn from_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut rows = Vec::new();
        for (i, row) in rdr.deserialize::<MixRow>().enumerate() {
            let r = row.map_err(|e| Error::MalformedRow {
                source_name: "occupation mix".into(),
                line: i as u64 + 2,
                message: e.to_string(),
            })?;
            rows.push((r.sector, r.region, r.occupation, r.share));
        }
        if rows.is_empty() {
            return Err(Error::EmptyInput("occupation mix".into()));
        }
        Self::from_rows(rows)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        for ((sector, region), dist) in &self.shares {
            for (occupation, share) in dist {
                wtr.serialize(MixRow {
                    sector: sector.clone(),
                    region: region.clone(),
                    occupation: occupation.clone(),
                    share: *share,
                })?;
            }
        }
        wtr.flush()?;
        Ok(())
    }

    fn validate(&self) -> Result<()> {
        for ((sector, region), dist) in &self.shares {
            let sum: f64 = dist.values().sum();
            if (sum - 1.0).abs() > SHARE_TOLERANCE {
                return Err(Error::invalid(format!(
                    "occupation shares for sector {sector}, region {region} sum to {sum}, not 1"
                )));
            }
        }
        Ok(())
    }

    pub fn get(&self, sector: &str, region: &str) -> Option<&BTreeMap<String, f64>> {
        self.shares.get(&(sector.to_string(), region.to_string()))
    }

    /// Copies a single national mix (all rows sharing one region label) to
    /// every listed region.
    pub fn broadcast_national<'a>(
        &self,
        regions: impl IntoIterator<Item = &'a str>,
    ) -> Result<Self> {
        let labels: BTreeSet<&str> = self.shares.keys().map(|k| k.1.as_str()).collect();
        if labels.len() != 1 {
            return Err(Error::invalid(format!(
                "national mix must use one region label, found {}",
                labels.len()
            )));
        }
        let regions: Vec<&str> = regions.into_iter().collect();
        let mut shares = BTreeMap::new();
        for ((sector, _), dist) in &self.shares {
            for r in &regions {
                shares.insert((sector.clone(), r.to_string()), dist.clone());
            }
        }
        Ok(OccupationIndustryMix { shares })
    }

    /// Element-wise mean of several mixes (e.g. two reference years).
    /// Every mix must cover the same `(sector, region)` keys.
    pub fn average(mixes: &[OccupationIndustryMix]) -> Result<Self> {
        let Some(first) = mixes.first() else {
            return Err(Error::invalid("no occupation mix supplied"));
        };
        let keys: BTreeSet<_> = first.shares.keys().collect();
        for m in &mixes[1..] {
            if m.shares.keys().collect::<BTreeSet<_>>() != keys {
                return Err(Error::invalid(
                    "occupation mixes cover different (sector, region) keys",
                ));
            }
        }
        let n = mixes.len() as f64;
        let mut shares: BTreeMap<(String, String), BTreeMap<String, f64>> = BTreeMap::new();
        for m in mixes {
            for (key, dist) in &m.shares {
                let out = shares.entry(key.clone()).or_default();
                for (occ, s) in dist {
                    *out.entry(occ.clone()).or_insert(0.0) += s / n;
                }
            }
        }
        let mix = OccupationIndustryMix { shares };
        mix.validate()?;
        Ok(mix)
    }

    /// Rewrites occupation codes through a merge map, summing shares.
    pub fn remap(&self, map: &MergeMap) -> Self {
        let shares = self
            .shares
            .iter()
            .map(|(key, dist)| {
                let mut out: BTreeMap<String, f64> = BTreeMap::new();
                for (occ, s) in dist {
                    *out.entry(map.apply(occ).to_string()).or_insert(0.0) += s;
                }
                (key.clone(), out)
            })
            .collect();
        OccupationIndustryMix { shares }
    }
}

/// Per-node yearly demand for each scenario.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct YearlyDemand {
    values: BTreeMap<String, BTreeMap<OccRegion, BTreeMap<i32, f64>>>,
}

impl YearlyDemand {
    pub fn from_map(values: BTreeMap<String, BTreeMap<OccRegion, BTreeMap<i32, f64>>>) -> Self {
        YearlyDemand { values }
    }

    pub fn scenarios(&self) -> impl Iterator<Item = &str> {
        self.values.keys().map(String::as_str)
    }

    pub fn scenario(&self, name: &str) -> Option<&BTreeMap<OccRegion, BTreeMap<i32, f64>>> {
        self.values.get(name)
    }

    pub fn get(&self, scenario: &str, node: &OccRegion, year: i32) -> f64 {
        self.values
            .get(scenario)
            .and_then(|m| m.get(node))
            .and_then(|y| y.get(&year))
            .copied()
            .unwrap_or(0.0)
    }

    pub fn years(&self, scenario: &str) -> BTreeSet<i32> {
        self.values
            .get(scenario)
            .map(|m| m.values().flat_map(|y| y.keys().copied()).collect())
            .unwrap_or_default()
    }

    /// Sum over nodes for one scenario and year.
    pub fn total(&self, scenario: &str, year: i32) -> f64 {
        self.values
            .get(scenario)
            .map(|m| m.values().filter_map(|y| y.get(&year)).sum())
            .unwrap_or(0.0)
    }
}

/// Spreads sector demand over occupations: each node receives the sum over
/// sectors of sector demand times the sector's occupation share.
pub fn map_sector_to_occupation(
    path: &SectorDemandPath,
    mix: &OccupationIndustryMix,
) -> Result<YearlyDemand> {
    let mut values: BTreeMap<String, BTreeMap<OccRegion, BTreeMap<i32, f64>>> = BTreeMap::new();
    for (scenario, sector, region, year, demand) in path.iter() {
        let dist = mix.get(sector, region).ok_or_else(|| {
            Error::invalid(format!(
                "occupation mix has no entry for sector {sector}, region {region}"
            ))
        })?;
        let per_scenario = values.entry(scenario.to_string()).or_default();
        for (occ, share) in dist {
            *per_scenario
                .entry(OccRegion::new(occ.clone(), region))
                .or_default()
                .entry(year)
                .or_insert(0.0) += demand * share;
        }
    }
    Ok(YearlyDemand { values })
}

/// Rescales every scenario so each year's baseline total equals the baseline
/// total of the first baseline year:
/// `D*[n, y, s] = D[n, y, s] * total(first, baseline) / total(y, baseline)`.
pub fn normalize_demand(raw: &YearlyDemand, baseline: &str) -> Result<YearlyDemand> {
    if raw.scenario(baseline).is_none() {
        return Err(Error::invalid(format!(
            "no {baseline:?} scenario to normalize against"
        )));
    }
    let years = raw.years(baseline);
    let Some(&reference) = years.iter().next() else {
        return Err(Error::invalid("baseline scenario has no years"));
    };
    let reference_total = raw.total(baseline, reference);
    let mut totals = BTreeMap::new();
    for &y in &years {
        let t = raw.total(baseline, y);
        if t.is_nan() || t <= 0.0 {
            return Err(Error::invalid(format!(
                "baseline total demand in {y} is zero"
            )));
        }
        totals.insert(y, t);
    }
    let mut values = BTreeMap::new();
    for (scenario, nodes) in &raw.values {
        let mut out = BTreeMap::new();
        for (node, yearly) in nodes {
            let mut row = BTreeMap::new();
            for (&y, &d) in yearly {
                let total = totals.get(&y).ok_or_else(|| {
                    Error::invalid(format!(
                        "scenario {scenario} covers year {y} absent from baseline"
                    ))
                })?;
                let adjusted = if y == reference {
                    d
                } else {
                    d * reference_total / total
                };
                row.insert(y, adjusted);
            }
            out.insert(node.clone(), row);
        }
        values.insert(scenario.clone(), out);
    }
    Ok(YearlyDemand { values })
}

/// Linear interpolation of consecutive yearly anchors onto
/// `steps_per_year` timesteps per year. Year `k` (0-based) anchors at
/// timestep `k * steps_per_year`; the last year anchors at the final step.
pub fn interpolate_demand(yearly: &BTreeMap<i32, f64>, steps_per_year: usize) -> Result<Vec<f64>> {
    if steps_per_year == 0 {
        return Err(Error::invalid("steps_per_year must be at least 1"));
    }
    let anchors: Vec<(i32, f64)> = yearly.iter().map(|(&y, &v)| (y, v)).collect();
    if anchors.is_empty() {
        return Err(Error::invalid("no yearly demand to interpolate"));
    }
    for w in anchors.windows(2) {
        if w[1].0 != w[0].0 + 1 {
            return Err(Error::invalid(format!(
                "gap in demand years between {} and {}",
                w[0].0, w[1].0
            )));
        }
    }
    let mut out = Vec::with_capacity((anchors.len() - 1) * steps_per_year + 1);
    for w in anchors.windows(2) {
        let (a, b) = (w[0].1, w[1].1);
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        out.push(a);
        for k in 1..steps_per_year {
            let v = a + (b - a) * (k as f64) / (steps_per_year as f64);
            out.push(v.clamp(lo, hi));
        }
    }
    out.push(anchors.last().expect("non-empty").1);
    Ok(out)
}

/// Target demand for one scenario on the simulation clock.
#[derive(Debug, Clone, PartialEq)]
pub struct DemandScenario {
    pub scenario_id: String,
    pub first_year: i32,
    pub steps_per_year: usize,
    /// Normalized yearly demand per node.
    pub d_star: BTreeMap<OccRegion, BTreeMap<i32, f64>>,
    /// Interpolated target per node, indexed by timestep.
    pub d_target: BTreeMap<OccRegion, Vec<f64>>,
}

impl DemandScenario {
    pub fn prepare(
        normalized: &YearlyDemand,
        scenario: &str,
        steps_per_year: usize,
    ) -> Result<Self> {
        let nodes = normalized
            .scenario(scenario)
            .ok_or_else(|| Error::invalid(format!("unknown scenario {scenario}")))?;
        let years = normalized.years(scenario);
        let (Some(&first), Some(&last)) = (years.iter().next(), years.iter().next_back()) else {
            return Err(Error::invalid(format!("scenario {scenario} has no years")));
        };
        let mut d_star = BTreeMap::new();
        let mut d_target = BTreeMap::new();
        for node in nodes.keys() {
            let yearly: BTreeMap<i32, f64> = (first..=last)
                .map(|y| (y, normalized.get(scenario, node, y)))
                .collect();
            d_target.insert(node.clone(), interpolate_demand(&yearly, steps_per_year)?);
            d_star.insert(node.clone(), yearly);
        }
        Ok(DemandScenario {
            scenario_id: scenario.to_string(),
            first_year: first,
            steps_per_year,
            d_star,
            d_target,
        })
    }

    /// Rebuilds a scenario from per-node targets whose year anchors sit at
    /// multiples of `steps_per_year`.
    pub fn from_targets(
        scenario_id: String,
        first_year: i32,
        steps_per_year: usize,
        d_target: BTreeMap<OccRegion, Vec<f64>>,
    ) -> Result<Self> {
        let mut horizon = None;
        let mut d_star = BTreeMap::new();
        for (node, series) in &d_target {
            if series.is_empty() || (series.len() - 1) % steps_per_year != 0 {
                return Err(Error::invalid(format!(
                    "target series for {node} has {} steps, not a whole number of years",
                    series.len()
                )));
            }
            if *horizon.get_or_insert(series.len()) != series.len() {
                return Err(Error::invalid("target series differ in length"));
            }
            let years = (series.len() - 1) / steps_per_year;
            d_star.insert(
                node.clone(),
                (0..=years)
                    .map(|k| (first_year + k as i32, series[k * steps_per_year]))
                    .collect(),
            );
        }
        Ok(DemandScenario {
            scenario_id,
            first_year,
            steps_per_year,
            d_star,
            d_target,
        })
    }

    pub fn last_year(&self) -> i32 {
        self.first_year + (self.horizon() / self.steps_per_year) as i32
    }

    /// Number of simulated steps (series length minus one).
    pub fn horizon(&self) -> usize {
        self.d_target
            .values()
            .next()
            .map_or(0, |s| s.len().saturating_sub(1))
    }

    pub fn target(&self, node: &OccRegion, timestep: usize) -> f64 {
        self.d_target
            .get(node)
            .and_then(|s| s.get(timestep))
            .copied()
            .unwrap_or(0.0)
    }

    pub fn total_at_year(&self, year: i32) -> f64 {
        self.d_star.values().filter_map(|y| y.get(&year)).sum()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Reallocation {
    pub created: f64,
    pub destroyed: f64,
}

/// Jobs created (nodes whose demand rises between `from` and `to`) and
/// destroyed (nodes whose demand falls), summed per group.
pub fn reallocation_volume<G, F>(
    d_star: &BTreeMap<OccRegion, BTreeMap<i32, f64>>,
    from: i32,
    to: i32,
    mut grouping: F,
) -> Result<BTreeMap<G, Reallocation>>
where
    G: Ord,
    F: FnMut(&OccRegion) -> G,
{
    let mut out: BTreeMap<G, Reallocation> = BTreeMap::new();
    for (node, yearly) in d_star {
        let (Some(a), Some(b)) = (yearly.get(&from), yearly.get(&to)) else {
            return Err(Error::invalid(format!(
                "demand for {node} lacks year {from} or {to}"
            )));
        };
        let entry = out.entry(grouping(node)).or_default();
        if b > a {
            entry.created += b - a;
        } else if a > b {
            entry.destroyed += a - b;
        }
    }
    Ok(out)
}

#[derive(Debug, Serialize, Deserialize)]
struct TargetRow {
    scenario: String,
    occupation: String,
    region: String,
    timestep: usize,
    target: f64,
}

/// Writes `scenario,occupation,region,timestep,target`.
pub fn write_targets_csv<W: Write>(scenarios: &[DemandScenario], writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    for sc in scenarios {
        for (node, series) in &sc.d_target {
            for (t, v) in series.iter().enumerate() {
                wtr.serialize(TargetRow {
                    scenario: sc.scenario_id.clone(),
                    occupation: node.occupation.clone(),
                    region: node.region.clone(),
                    timestep: t,
                    target: *v,
                })?;
            }
        }
    }
    wtr.flush()?;
    Ok(())
}

/// Reads a target CSV back into scenarios; clock metadata must be supplied.
pub fn read_targets_csv<R: Read>(
    reader: R,
    first_year: i32,
    steps_per_year: usize,
) -> Result<Vec<DemandScenario>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut raw: BTreeMap<String, BTreeMap<OccRegion, Vec<(usize, f64)>>> = BTreeMap::new();
    for (i, row) in rdr.deserialize::<TargetRow>().enumerate() {
        let r = row.map_err(|e| Error::MalformedRow {
            source_name: "targets".into(),
            line: i as u64 + 2,
            message: e.to_string(),
        })?;
        raw.entry(r.scenario)
            .or_default()
            .entry(OccRegion::new(r.occupation, r.region))
            .or_default()
            .push((r.timestep, r.target));
    }
    raw.into_iter()
        .map(|(scenario, nodes)| {
            let mut d_target = BTreeMap::new();
            for (node, mut steps) in nodes {
                steps.sort_by_key(|s| s.0);
                if steps.iter().enumerate().any(|(k, s)| s.0 != k) {
                    return Err(Error::invalid(format!(
                        "timesteps for {scenario}/{node} are not 0..T"
                    )));
                }
                d_target.insert(node, steps.into_iter().map(|s| s.1).collect());
            }
            DemandScenario::from_targets(scenario, first_year, steps_per_year, d_target)
        })
        .collect()
}
