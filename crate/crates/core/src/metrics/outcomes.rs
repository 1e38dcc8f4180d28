use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::rates::{avg_unemployment_rate, avg_vacancy_rate};
use crate::abm::Trajectory;
use crate::error::{Error, Result};
use crate::network::OccRegion;
use crate::scenario::DemandScenario;

/// Per-node outcomes of one scenario against the baseline, averaged over seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeRow {
    pub occupation: String,
    pub region: String,
    pub group: String,
    pub u_rate: Option<f64>,
    /// Scenario minus baseline unemployment rate, percentage points.
    pub u_delta_pp: Option<f64>,
    pub v_rate: Option<f64>,
    pub v_delta_pp: Option<f64>,
    /// Final-year demand relative to baseline, percent.
    pub demand_change_pct: Option<f64>,
    /// Baseline demand in the first year.
    pub employment_2018: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct OutcomeTable {
    pub rows: Vec<OutcomeRow>,
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (s, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| s / n as f64)
}

/// Builds the outcome table. `baseline_runs[k]` and `scenario_runs[k]` must
/// come from the same seed: deltas are taken within each pair first and then
/// averaged over seeds.
pub fn outcome_table(
    baseline_runs: &[Trajectory],
    scenario_runs: &[Trajectory],
    baseline: &DemandScenario,
    scenario: &DemandScenario,
    window: Range<usize>,
    x_months: u32,
) -> Result<OutcomeTable> {
    if baseline_runs.len() != scenario_runs.len() || baseline_runs.is_empty() {
        return Err(Error::invalid(format!(
            "need equally many baseline and scenario runs, got {} and {}",
            baseline_runs.len(),
            scenario_runs.len()
        )));
    }
    let nodes = &baseline_runs[0].nodes;
    if baseline_runs
        .iter()
        .chain(scenario_runs)
        .any(|t| &t.nodes != nodes)
    {
        return Err(Error::invalid("runs cover different nodes"));
    }
    let mut per_seed = Vec::with_capacity(baseline_runs.len());
    for (b, s) in baseline_runs.iter().zip(scenario_runs) {
        per_seed.push((
            avg_unemployment_rate(b, window.clone())?,
            avg_unemployment_rate(s, window.clone())?,
            avg_vacancy_rate(b, window.clone(), x_months)?,
            avg_vacancy_rate(s, window.clone(), x_months)?,
        ));
    }
    let first = baseline.first_year;
    let last = baseline.last_year();
    let rows = nodes
        .iter()
        .enumerate()
        .map(|(i, node)| {
            let delta = |base: &Vec<Option<f64>>, scen: &Vec<Option<f64>>| match (base[i], scen[i])
            {
                (Some(b), Some(s)) => Some(100.0 * (s - b)),
                _ => None,
            };
            let base_last = baseline
                .d_star
                .get(node)
                .and_then(|y| y.get(&last))
                .copied();
            let scen_last = scenario
                .d_star
                .get(node)
                .and_then(|y| y.get(&last))
                .copied();
            let demand_change_pct = match (base_last, scen_last) {
                (Some(b), Some(s)) if b > 0.0 => Some(100.0 * (s - b) / b),
                _ => None,
            };
            OutcomeRow {
                occupation: node.occupation.clone(),
                region: node.region.clone(),
                group: node.broad_group().to_string(),
                u_rate: mean(per_seed.iter().filter_map(|p| p.1[i])),
                u_delta_pp: mean(per_seed.iter().filter_map(|p| delta(&p.0, &p.1))),
                v_rate: mean(per_seed.iter().filter_map(|p| p.3[i])),
                v_delta_pp: mean(per_seed.iter().filter_map(|p| delta(&p.2, &p.3))),
                demand_change_pct,
                employment_2018: baseline
                    .d_star
                    .get(node)
                    .and_then(|y| y.get(&first))
                    .copied()
                    .unwrap_or(0.0),
            }
        })
        .collect();
    Ok(OutcomeTable { rows })
}

/// Which outcome column to summarise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    UDeltaPp,
    VDeltaPp,
}

impl Metric {
    pub fn name(self) -> &'static str {
        match self {
            Metric::UDeltaPp => "u_delta_pp",
            Metric::VDeltaPp => "v_delta_pp",
        }
    }

    pub fn of(self, row: &OutcomeRow) -> Option<f64> {
        match self {
            Metric::UDeltaPp => row.u_delta_pp,
            Metric::VDeltaPp => row.v_delta_pp,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatmapCell {
    pub group: String,
    pub region: String,
    pub metric: String,
    pub value: Option<f64>,
    pub nodes: usize,
}

impl OutcomeTable {
    /// Mean of `metric` for every (1-digit group, region) cell; cells
    /// without a defined value carry `None`.
    pub fn heatmap(&self, metric: Metric) -> Vec<HeatmapCell> {
        let groups: BTreeSet<&str> = self.rows.iter().map(|r| r.group.as_str()).collect();
        let regions: BTreeSet<&str> = self.rows.iter().map(|r| r.region.as_str()).collect();
        let mut acc: BTreeMap<(&str, &str), (f64, usize)> = BTreeMap::new();
        for r in &self.rows {
            if let Some(v) = metric.of(r) {
                let e = acc
                    .entry((r.group.as_str(), r.region.as_str()))
                    .or_default();
                e.0 += v;
                e.1 += 1;
            }
        }
        groups
            .iter()
            .flat_map(|g| regions.iter().map(move |r| (*g, *r)))
            .map(|(g, r)| {
                let cell = acc.get(&(g, r));
                HeatmapCell {
                    group: g.to_string(),
                    region: r.to_string(),
                    metric: metric.name().to_string(),
                    value: cell.map(|(s, n)| s / *n as f64),
                    nodes: cell.map_or(0, |c| c.1),
                }
            })
            .collect()
    }

    /// The `k` rows with the largest defined `metric`, ties broken by node.
    pub fn top(&self, metric: Metric, k: usize) -> Vec<&OutcomeRow> {
        let mut rows: Vec<(&OutcomeRow, f64)> = self
            .rows
            .iter()
            .filter_map(|r| metric.of(r).map(|v| (r, v)))
            .collect();
        rows.sort_by(|a, b| {
            b.1.total_cmp(&a.1)
                .then_with(|| (&a.0.occupation, &a.0.region).cmp(&(&b.0.occupation, &b.0.region)))
        });
        rows.into_iter().take(k).map(|r| r.0).collect()
    }

    pub fn nodes(&self) -> Vec<OccRegion> {
        self.rows
            .iter()
            .map(|r| OccRegion::new(r.occupation.clone(), r.region.clone()))
            .collect()
    }

    /// `occupation,region,group,u_rate,u_delta_pp,v_rate,v_delta_pp,demand_change_pct,employment_2018`;
    /// undefined values are left empty.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        for r in &self.rows {
            wtr.serialize(r)?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Average ranks (1-based), ties sharing the mean of their positions.
fn ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut out = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            out[k] = rank;
        }
        i = j + 1;
    }
    out
}

/// Spearman rank correlation; `None` for fewer than two points or a
/// constant input.
pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    assert_eq!(x.len(), y.len());
    if x.len() < 2 {
        return None;
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    (sxx > 0.0 && syy > 0.0).then(|| sxy / (sxx * syy).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spearman_basics() {
        assert_eq!(spearman(&[1.0, 2.0, 3.0], &[10.0, 20.0, 30.0]), Some(1.0));
        assert_eq!(spearman(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]), Some(-1.0));
        assert_eq!(spearman(&[1.0, 1.0], &[1.0, 2.0]), None);
        assert_eq!(ranks(&[5.0, 1.0, 5.0]), vec![2.5, 1.0, 2.5]);
    }

    fn row(group: &str, region: &str, u: Option<f64>) -> OutcomeRow {
        OutcomeRow {
            occupation: format!("{group}1"),
            region: region.into(),
            group: group.into(),
            u_rate: None,
            u_delta_pp: u,
            v_rate: None,
            v_delta_pp: None,
            demand_change_pct: None,
            employment_2018: 0.0,
        }
    }

    #[test]
    fn heatmap_covers_every_cell() {
        let t = OutcomeTable {
            rows: vec![
                row("1", "N", Some(1.0)),
                row("1", "S", Some(3.0)),
                row("2", "N", None),
            ],
        };
        let h = t.heatmap(Metric::UDeltaPp);
        assert_eq!(h.len(), 4);
        assert_eq!(h[0].value, Some(1.0));
        assert_eq!(h[2].value, None);
        let top = t.top(Metric::UDeltaPp, 5);
        assert_eq!(top.len(), 2);
        assert_eq!(top[0].region, "S");
    }
}
