use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::abm::Trajectory;
use crate::error::{Error, Result};

fn check_window(traj: &Trajectory, window: &Range<usize>) -> Result<()> {
    if window.is_empty() || window.end > traj.len() {
        return Err(Error::invalid(format!(
            "window {window:?} is empty or exceeds the {} recorded steps",
            traj.len()
        )));
    }
    Ok(())
}

/// Timesteps covering `from_year..=to_year` of a trajectory whose first
/// recorded step is the start of `first_year`.
pub fn year_window(
    traj: &Trajectory,
    first_year: i32,
    from_year: i32,
    to_year: i32,
) -> Result<Range<usize>> {
    if from_year < first_year || to_year < from_year {
        return Err(Error::invalid(format!(
            "bad window {from_year}..={to_year}"
        )));
    }
    let spy = traj.steps_per_year;
    let start = (from_year - first_year) as usize * spy;
    let last = (to_year - first_year) as usize * spy;
    if last >= traj.len() {
        return Err(Error::invalid(format!(
            "window end {to_year} is beyond the trajectory"
        )));
    }
    Ok(start..last + 1)
}

/// Average unemployment rate per node over `window`: summed unemployment
/// over summed labour force (not the mean of per-step ratios). `None` when a
/// node has no workers throughout.
pub fn avg_unemployment_rate(traj: &Trajectory, window: Range<usize>) -> Result<Vec<Option<f64>>> {
    check_window(traj, &window)?;
    Ok((0..traj.num_nodes())
        .map(|i| {
            let u: f64 = window.clone().map(|t| traj.unemployed[t][i]).sum();
            let e: f64 = window.clone().map(|t| traj.employed[t][i]).sum();
            (u + e > 0.0).then(|| u / (u + e))
        })
        .collect())
}

/// Average share of realised demand made of vacancies open at least
/// `x_months`, per node over `window`. The threshold must be one the
/// trajectory tracks.
pub fn avg_vacancy_rate(
    traj: &Trajectory,
    window: Range<usize>,
    x_months: u32,
) -> Result<Vec<Option<f64>>> {
    check_window(traj, &window)?;
    let old = traj.vacancies_at_least_months(x_months).ok_or_else(|| {
        Error::invalid(format!(
            "trajectory does not track {x_months}-month vacancies (tracked: {:?})",
            traj.age_thresholds_months
        ))
    })?;
    Ok((0..traj.num_nodes())
        .map(|i| {
            let num: f64 = window.clone().map(|t| old[t][i]).sum();
            let den: f64 = window
                .clone()
                .map(|t| traj.vacancies[t][i] + traj.employed[t][i])
                .sum();
            (den > 0.0).then(|| num / den)
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateSeries {
    /// Economy-wide unemployment rate per timestep.
    pub unemployment_rate: Vec<Option<f64>>,
    /// Sum over nodes of positive employment gains within each year.
    pub yearly_reallocation: Vec<f64>,
}

pub fn aggregate_series(traj: &Trajectory) -> AggregateSeries {
    let unemployment_rate = (0..traj.len())
        .map(|t| {
            let u: f64 = traj.unemployed[t].iter().sum();
            let e: f64 = traj.employed[t].iter().sum();
            (u + e > 0.0).then(|| u / (u + e))
        })
        .collect();
    let spy = traj.steps_per_year;
    let years = traj.len().saturating_sub(1) / spy;
    let yearly_reallocation = (0..years)
        .map(|y| {
            let (a, b) = (&traj.employed[y * spy], &traj.employed[(y + 1) * spy]);
            a.iter().zip(b).map(|(x, y)| (y - x).max(0.0)).sum()
        })
        .collect();
    AggregateSeries {
        unemployment_rate,
        yearly_reallocation,
    }
}
