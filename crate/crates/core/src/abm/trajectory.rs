use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::state::{Count, LabourState};
use crate::error::{Error, Result};
use crate::network::OccRegion;

/// Per-node time series of one run. Outer index is the timestep, inner the node.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub nodes: Vec<OccRegion>,
    pub steps_per_year: usize,
    /// Vacancy-duration thresholds in months, paired with `vacancies_age_ge`.
    pub age_thresholds_months: Vec<u32>,
    pub employed: Vec<Vec<f64>>,
    pub unemployed: Vec<Vec<f64>>,
    pub vacancies: Vec<Vec<f64>>,
    /// `[threshold][timestep][node]` vacancies open at least that long.
    pub vacancies_age_ge: Vec<Vec<Vec<f64>>>,
    /// Economy-wide hires, separations and openings per step (zero at t = 0).
    /// Not persisted in the trajectory CSV.
    pub hires: Vec<f64>,
    pub separations: Vec<f64>,
    pub openings: Vec<f64>,
}

impl Trajectory {
    pub(crate) fn new(nodes: Vec<OccRegion>, steps_per_year: usize, thresholds: Vec<u32>) -> Self {
        let k = thresholds.len();
        Trajectory {
            nodes,
            steps_per_year,
            age_thresholds_months: thresholds,
            employed: Vec::new(),
            unemployed: Vec::new(),
            vacancies: Vec::new(),
            vacancies_age_ge: vec![Vec::new(); k],
            hires: Vec::new(),
            separations: Vec::new(),
            openings: Vec::new(),
        }
    }

    pub(crate) fn record<T: Count>(&mut self, state: &LabourState<T>, threshold_steps: &[usize]) {
        let f = |v: &[T]| v.iter().map(|x| x.to_f64()).collect::<Vec<_>>();
        self.employed.push(f(&state.employed));
        self.unemployed.push(f(&state.unemployed));
        self.vacancies
            .push(state.vacancies.iter().map(|v| v.total().to_f64()).collect());
        for (k, &age) in threshold_steps.iter().enumerate() {
            self.vacancies_age_ge[k].push(
                state
                    .vacancies
                    .iter()
                    .map(|v| v.at_least(age).to_f64())
                    .collect(),
            );
        }
    }

    pub(crate) fn record_flows(&mut self, hires: f64, separations: f64, openings: f64) {
        self.hires.push(hires);
        self.separations.push(separations);
        self.openings.push(openings);
    }

    /// Number of recorded timesteps (initial state included).
    pub fn len(&self) -> usize {
        self.employed.len()
    }

    pub fn is_empty(&self) -> bool {
        self.employed.is_empty()
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    /// Series for the given threshold in months, if tracked.
    pub fn vacancies_at_least_months(&self, months: u32) -> Option<&Vec<Vec<f64>>> {
        self.age_thresholds_months
            .iter()
            .position(|&m| m == months)
            .map(|k| &self.vacancies_age_ge[k])
    }

    pub fn total_workers(&self, t: usize) -> f64 {
        self.employed[t].iter().sum::<f64>() + self.unemployed[t].iter().sum::<f64>()
    }

    /// `timestep,occupation,region,employed,unemployed,vacancies,vacancies_age_ge_<months>...`
    ///
    /// Values use the shortest representation that parses back to the same
    /// `f64`, so reading the file reproduces the trajectory exactly.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        let mut header: Vec<String> = [
            "timestep",
            "occupation",
            "region",
            "employed",
            "unemployed",
            "vacancies",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        header.extend(
            self.age_thresholds_months
                .iter()
                .map(|m| format!("vacancies_age_ge_{m}")),
        );
        wtr.write_record(&header)?;
        for t in 0..self.len() {
            for (i, node) in self.nodes.iter().enumerate() {
                let mut row = vec![
                    t.to_string(),
                    node.occupation.clone(),
                    node.region.clone(),
                    self.employed[t][i].to_string(),
                    self.unemployed[t][i].to_string(),
                    self.vacancies[t][i].to_string(),
                ];
                row.extend(self.vacancies_age_ge.iter().map(|s| s[t][i].to_string()));
                wtr.write_record(&row)?;
            }
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R, steps_per_year: usize) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(reader);
        let header = rdr.headers()?.clone();
        let fixed = [
            "timestep",
            "occupation",
            "region",
            "employed",
            "unemployed",
            "vacancies",
        ];
        if header.len() < fixed.len() || !header.iter().zip(fixed).all(|(a, b)| a == b) {
            return Err(Error::invalid("trajectory CSV header mismatch"));
        }
        let thresholds = header
            .iter()
            .skip(fixed.len())
            .map(|h| {
                h.strip_prefix("vacancies_age_ge_")
                    .and_then(|m| m.parse::<u32>().ok())
                    .ok_or_else(|| Error::invalid(format!("unexpected trajectory column {h}")))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut traj = Trajectory::new(Vec::new(), steps_per_year, thresholds);
        for (line, row) in rdr.records().enumerate() {
            let row = row?;
            let bad = |m: &str| Error::MalformedRow {
                source_name: "trajectory".into(),
                line: line as u64 + 2,
                message: m.to_string(),
            };
            let t: usize = row[0].parse().map_err(|_| bad("bad timestep"))?;
            let node = OccRegion::new(&row[1], &row[2]);
            if t == traj.employed.len() {
                traj.employed.push(Vec::new());
                traj.unemployed.push(Vec::new());
                traj.vacancies.push(Vec::new());
                for s in &mut traj.vacancies_age_ge {
                    s.push(Vec::new());
                }
            } else if t + 1 != traj.employed.len() {
                return Err(bad("timesteps out of order"));
            }
            let i = traj.employed[t].len();
            if t == 0 {
                traj.nodes.push(node);
            } else if traj.nodes.get(i) != Some(&node) {
                return Err(bad("node order differs between timesteps"));
            }
            let num = |k: usize| row[k].parse::<f64>().map_err(|_| bad("bad number"));
            traj.employed[t].push(num(3)?);
            traj.unemployed[t].push(num(4)?);
            traj.vacancies[t].push(num(5)?);
            for k in 0..traj.vacancies_age_ge.len() {
                let v = num(6 + k)?;
                traj.vacancies_age_ge[k][t].push(v);
            }
        }
        Ok(traj)
    }

    /// `timestep,hires,separations,openings`.
    pub fn write_flows_csv<W: Write>(&self, writer: W) -> Result<()> {
        #[derive(Serialize, Deserialize)]
        struct Row {
            timestep: usize,
            hires: f64,
            separations: f64,
            openings: f64,
        }
        let mut wtr = csv::Writer::from_writer(writer);
        for t in 0..self.hires.len() {
            wtr.serialize(Row {
                timestep: t,
                hires: self.hires[t],
                separations: self.separations[t],
                openings: self.openings[t],
            })?;
        }
        wtr.flush()?;
        Ok(())
    }
}
