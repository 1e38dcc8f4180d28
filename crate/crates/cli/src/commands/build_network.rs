use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::Result;
use clap::Args;
use labournet_core::network::{
    assortativity, build_network, complete_network, ingest_transitions, merge_occupations,
    read_transition_records, write_edge_list, write_sidecar, Hierarchy, MobilityNetwork,
    NetworkSidecar, Normalization, OccRegion, RegionManifest,
};
use serde::{Deserialize, Serialize};

use crate::error::input_error;
use crate::manifest::{create, open, write_json, Manifest};

pub const EDGES: &str = "edges.csv";
pub const NODES: &str = "nodes.json";
pub const MERGE_MAP: &str = "merge_map.csv";
pub const MERGED_COUNTS: &str = "merged_transitions.csv";
pub const REPORT: &str = "report.json";

#[derive(Debug, Clone, Args)]
pub struct BuildNetworkArgs {
    /// Transition records: source_occ,source_region,dest_occ,dest_region,count
    #[arg(long)]
    pub transitions: PathBuf,
    /// Occupation hierarchy: code,parent_code,label
    #[arg(long)]
    pub hierarchy: PathBuf,
    /// Region manifest: region_id,label
    #[arg(long)]
    pub regions: PathBuf,
    /// Minimum node volume (in plus out) an occupation needs in every region
    #[arg(long, default_value_t = 1)]
    pub min_presence: u64,
    #[arg(long, default_value = "source")]
    pub normalization: Normalization,
    /// Emit the equal-weight complete network over the merged nodes instead
    #[arg(long)]
    pub no_friction: bool,
    /// Optional node wages: occupation,region,mean_wage
    #[arg(long)]
    pub wages: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkReport {
    pub nodes: usize,
    pub edges: usize,
    pub transitions: u64,
    pub occupations_before_merge: usize,
    pub occupations_after_merge: usize,
    pub merged_occupations: usize,
    pub connected_before_merge: bool,
    pub connected: bool,
    pub normalization: Normalization,
    pub complete: bool,
    /// Weighted assortativity with regions as categories.
    pub assortativity_region: Option<f64>,
    /// Weighted assortativity with 1-digit occupation groups as categories.
    pub assortativity_occupation_group: Option<f64>,
    pub zero_marginal_nodes: usize,
}

#[derive(Debug, Deserialize)]
struct WageRow {
    occupation: String,
    region: String,
    mean_wage: f64,
}

fn read_wages(path: &Path) -> Result<BTreeMap<OccRegion, f64>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(open(path)?);
    let mut out = BTreeMap::new();
    for (i, row) in rdr.deserialize::<WageRow>().enumerate() {
        let r = row.map_err(|e| input_error(format!("{}, line {}: {e}", path.display(), i + 2)))?;
        out.insert(OccRegion::new(r.occupation, r.region), r.mean_wage);
    }
    Ok(out)
}

fn assortativities(net: &MobilityNetwork) -> Result<(Option<f64>, Option<f64>)> {
    let regions: Vec<&str> = net.nodes().iter().map(|n| n.region.as_str()).collect();
    let groups: Vec<&str> = net.nodes().iter().map(|n| n.broad_group()).collect();
    Ok((assortativity(net, &regions)?, assortativity(net, &groups)?))
}

pub fn run(args: &BuildNetworkArgs) -> Result<()> {
    let hierarchy = Hierarchy::from_csv(open(&args.hierarchy)?)?;
    let regions = RegionManifest::from_csv(open(&args.regions)?)?;
    let name = args.transitions.display().to_string();
    let counts = ingest_transitions(
        read_transition_records(open(&args.transitions)?, &name),
        &hierarchy,
        &regions,
    )?;
    let connected_before = build_network(&counts, args.normalization)?.is_connected();

    let (merged, map) = merge_occupations(&counts, &hierarchy, args.min_presence)?;
    let frictional = build_network(&merged, args.normalization)?;
    // assortativity always describes the empirical network
    let (r_region, r_group) = assortativities(&frictional)?;
    let network = if args.no_friction {
        complete_network(frictional.nodes().to_vec())?
    } else {
        frictional
    };

    let wages = args.wages.as_deref().map(read_wages).transpose()?;
    std::fs::create_dir_all(&args.out)?;
    write_edge_list(&network, create(&args.out.join(EDGES))?)?;
    write_sidecar(
        &NetworkSidecar::for_network(&network, wages.as_ref()),
        create(&args.out.join(NODES))?,
    )?;
    map.write_csv(create(&args.out.join(MERGE_MAP))?)?;
    merged.write_csv(create(&args.out.join(MERGED_COUNTS))?)?;

    let report = NetworkReport {
        nodes: network.len(),
        edges: network.num_edges(),
        transitions: merged.total(),
        occupations_before_merge: counts.occupations().len(),
        occupations_after_merge: merged.occupations().len(),
        merged_occupations: map.num_merged(),
        connected_before_merge: connected_before,
        connected: network.is_connected(),
        normalization: args.normalization,
        complete: network.is_complete(),
        assortativity_region: r_region,
        assortativity_occupation_group: r_group,
        zero_marginal_nodes: network.zero_marginal_nodes().len(),
    };
    write_json(&args.out.join(REPORT), &report)?;

    let mut manifest = Manifest::new(
        "build-network",
        serde_json::json!({
            "min_presence": args.min_presence,
            "normalization": args.normalization,
            "no_friction": args.no_friction,
        }),
    );
    manifest.input("transitions", &args.transitions)?;
    manifest.input("hierarchy", &args.hierarchy)?;
    manifest.input("regions", &args.regions)?;
    if let Some(w) = &args.wages {
        manifest.input("wages", w)?;
    }
    for f in [EDGES, NODES, MERGE_MAP, MERGED_COUNTS, REPORT] {
        manifest.output(&args.out, f)?;
    }
    manifest.write(&args.out)?;
    Ok(())
}

/// Loads a network directory written by `build-network`, checking digests.
pub fn load(dir: &Path) -> Result<(MobilityNetwork, Manifest)> {
    let manifest = Manifest::read(dir)?;
    manifest.expect_command("build-network", dir)?;
    manifest.verify_outputs(dir)?;
    let (network, _) =
        labournet_core::network::read_network(open(&dir.join(EDGES))?, open(&dir.join(NODES))?)?;
    Ok((network, manifest))
}
