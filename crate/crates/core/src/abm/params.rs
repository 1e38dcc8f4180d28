use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Individual workers and vacancies with random separations and matching.
    #[default]
    Stochastic,
    /// Deterministic evolution of expected counts.
    #[serde(rename = "meanfield")]
    MeanField,
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "stochastic" => Ok(Mode::Stochastic),
            "meanfield" | "mean-field" => Ok(Mode::MeanField),
            other => Err(Error::invalid(format!("unknown mode {other:?}"))),
        }
    }
}

/// Rates are per timestep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimulationParams {
    /// Spontaneous separation probability.
    pub delta_u: f64,
    /// Spontaneous vacancy-opening probability.
    pub delta_v: f64,
    /// Speed at which excess realised demand is shed through separations.
    pub gamma_u: f64,
    /// Speed at which unmet target demand is turned into vacancies.
    pub gamma_v: f64,
    pub steps_per_year: usize,
    /// Population divisor applied to demand at initialization.
    pub scale: f64,
    pub seed: u64,
    pub mode: Mode,
    pub applications_per_worker: u32,
    /// Unemployed workers per employed worker at initialization.
    pub initial_unemployment_share: f64,
    /// Steps run under constant first-year demand before the scenario clock starts.
    pub burn_in_steps: usize,
    /// Vacancy-duration thresholds tracked in trajectories.
    pub vacancy_age_thresholds_months: Vec<u32>,
}

impl Default for SimulationParams {
    fn default() -> Self {
        SimulationParams {
            delta_u: 0.009,
            delta_v: 0.009,
            gamma_u: 0.1,
            gamma_v: 0.1,
            steps_per_year: 12,
            scale: 1.0,
            seed: 0,
            mode: Mode::Stochastic,
            applications_per_worker: 1,
            initial_unemployment_share: 0.05,
            burn_in_steps: 24,
            vacancy_age_thresholds_months: vec![3, 6, 12],
        }
    }
}

impl SimulationParams {
    pub fn validate(&self) -> Result<()> {
        for (name, p) in [("delta_u", self.delta_u), ("delta_v", self.delta_v)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::invalid(format!("{name} = {p} is not a probability")));
            }
        }
        for (name, g) in [("gamma_u", self.gamma_u), ("gamma_v", self.gamma_v)] {
            if !(g >= 0.0 && g.is_finite()) {
                return Err(Error::invalid(format!("{name} = {g} must be non-negative")));
            }
        }
        if !(self.scale >= 1.0 && self.scale.is_finite()) {
            return Err(Error::invalid(format!(
                "scale {} must be at least 1",
                self.scale
            )));
        }
        if self.steps_per_year == 0 {
            return Err(Error::invalid("steps_per_year must be at least 1"));
        }
        if self.applications_per_worker == 0 {
            return Err(Error::invalid("applications_per_worker must be at least 1"));
        }
        if self.mode == Mode::MeanField && self.applications_per_worker != 1 {
            return Err(Error::invalid(
                "mean-field mode supports one application per worker only",
            ));
        }
        if !(self.initial_unemployment_share >= 0.0 && self.initial_unemployment_share.is_finite())
        {
            return Err(Error::invalid(
                "initial_unemployment_share must be non-negative",
            ));
        }
        Ok(())
    }

    /// Timesteps corresponding to `months`, rounded up when the clock does
    /// not divide evenly (with a warning).
    pub fn months_to_steps(&self, months: u32) -> usize {
        let num = months as usize * self.steps_per_year;
        if !num.is_multiple_of(12) {
            log::warn!(
                "{months} months is not a whole number of steps at {} steps/year; rounding up",
                self.steps_per_year
            );
        }
        num.div_ceil(12)
    }

    /// Oldest age bucket that has to be resolved exactly.
    pub fn age_cap_steps(&self) -> usize {
        self.vacancy_age_thresholds_months
            .iter()
            .map(|&m| self.months_to_steps(m))
            .max()
            .unwrap_or(0)
    }

    /// Same parameters with `gamma_u = gamma_v = gamma`.
    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma_u = gamma;
        self.gamma_v = gamma;
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        SimulationParams::default().validate().unwrap();
    }

    #[test]
    fn rejects_out_of_range() {
        let p = SimulationParams {
            delta_u: 1.5,
            ..Default::default()
        };
        assert!(p.validate().is_err());
        let p = SimulationParams {
            scale: 0.5,
            ..Default::default()
        };
        assert!(p.validate().is_err());
        let p = SimulationParams {
            gamma_v: -0.1,
            ..Default::default()
        };
        assert!(p.validate().is_err());
    }

    #[test]
    fn month_conversion() {
        let p = SimulationParams::default();
        assert_eq!(p.months_to_steps(6), 6);
        let weekly = SimulationParams {
            steps_per_year: 52,
            ..Default::default()
        };
        assert_eq!(weekly.months_to_steps(6), 26);
        assert_eq!(weekly.months_to_steps(3), 13);
        assert_eq!(p.age_cap_steps(), 12);
    }

    #[test]
    fn mode_parsing_and_serde() {
        assert_eq!("meanfield".parse::<Mode>().unwrap(), Mode::MeanField);
        assert_eq!(
            serde_json::to_string(&Mode::MeanField).unwrap(),
            "\"meanfield\""
        );
    }
}
