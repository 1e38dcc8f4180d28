use std::path::Path;

use anyhow::Result;
use clap::Args;
use labournet_core::abm::{Mode, SimulationParams};
use serde::{Deserialize, Serialize};

use crate::error::input_error;
use crate::manifest::open;

/// Settings file accepted by `--config`: simulation parameters at the top
/// level plus optional run selections. Command-line flags override it.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ConfigFile {
    #[serde(flatten)]
    pub params: SimulationParams,
    pub scenarios: Option<Vec<String>>,
    pub seeds: Option<Vec<u64>>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        serde_json::from_reader(open(path)?)
            .map_err(|e| input_error(format!("config {}: {e}", path.display())))
    }
}

/// Simulation flags shared by `simulate` and `calibrate`.
#[derive(Debug, Clone, Args)]
pub struct SimFlags {
    /// JSON file with simulation parameters
    #[arg(long)]
    pub config: Option<std::path::PathBuf>,
    /// Base seed; runs use seed, seed+1, ...
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of seeds in the ensemble
    #[arg(long)]
    pub seeds: Option<u64>,
    #[arg(long)]
    pub steps_per_year: Option<usize>,
    /// Population divisor
    #[arg(long)]
    pub scale: Option<f64>,
    #[arg(long, value_parser = parse_mode)]
    pub mode: Option<Mode>,
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    s.parse().map_err(|e: labournet_core::Error| e.to_string())
}

impl SimFlags {
    /// Parameters and seed list after applying the config file and overrides.
    pub fn resolve(&self) -> Result<(ConfigFile, Vec<u64>)> {
        let mut cfg = match &self.config {
            Some(p) => ConfigFile::load(p)?,
            None => ConfigFile::default(),
        };
        if let Some(spy) = self.steps_per_year {
            cfg.params.steps_per_year = spy;
        }
        if let Some(scale) = self.scale {
            cfg.params.scale = scale;
        }
        if let Some(mode) = self.mode {
            cfg.params.mode = mode;
        }
        let seeds = match (self.seed, self.seeds, &cfg.seeds) {
            (None, None, Some(list)) => list.clone(),
            (base, count, _) => {
                let base = base.unwrap_or(cfg.params.seed);
                let count = count.unwrap_or(1);
                (0..count).map(|k| base + k).collect()
            }
        };
        if seeds.is_empty() {
            return Err(input_error("seed list is empty"));
        }
        cfg.params.validate()?;
        Ok((cfg, seeds))
    }
}
