use std::path::PathBuf;

use anyhow::Result;
use clap::Args;
use labournet_core::synthetic::{SyntheticData, SyntheticSpec};

use crate::error::input_error;
use crate::manifest::{open, write_json, Manifest};

pub const SPEC_FILE: &str = "synthetic_spec.json";
pub const FILES: [&str; 5] = [
    "hierarchy.csv",
    "regions.csv",
    "transitions.csv",
    "sector_demand.csv",
    "mix_national.csv",
];

#[derive(Debug, Clone, Args)]
pub struct GenSyntheticArgs {
    /// JSON generator spec; defaults are used for missing fields
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// Overrides the spec's seed
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(args: &GenSyntheticArgs) -> Result<()> {
    let mut spec: SyntheticSpec = match &args.spec {
        Some(p) => serde_json::from_reader(open(p)?)
            .map_err(|e| input_error(format!("spec {}: {e}", p.display())))?,
        None => SyntheticSpec::default(),
    };
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    let data = SyntheticData::generate(&spec)?;
    data.write_dir(&args.out)?;
    write_json(&args.out.join(SPEC_FILE), &spec)?;

    let mut manifest = Manifest::new("gen-synthetic", serde_json::to_value(&spec)?);
    if let Some(p) = &args.spec {
        manifest.input("spec", p)?;
    }
    for f in FILES.iter().chain([&SPEC_FILE]) {
        manifest.output(&args.out, f)?;
    }
    manifest.write(&args.out)?;
    log::info!(
        "wrote {} nodes' worth of synthetic inputs to {}",
        spec.n_nodes(),
        args.out.display()
    );
    Ok(())
}
