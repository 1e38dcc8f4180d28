//! Shared fixtures for the benchmarks.

use labournet_core::network::build_network;
use labournet_core::synthetic::{SyntheticData, SyntheticSpec};
use labournet_core::{MobilityNetwork, Normalization};

/// Synthetic data set with `n_regions` regions on the default hierarchy
/// (20 occupations), so `20 * n_regions` nodes.
pub fn synthetic(n_regions: usize) -> SyntheticData {
    let spec = SyntheticSpec {
        n_regions,
        total_employment: 2_000.0 * (20 * n_regions) as f64,
        ..SyntheticSpec::default()
    };
    SyntheticData::generate(&spec).expect("valid synthetic spec")
}

pub fn network(data: &SyntheticData) -> MobilityNetwork {
    build_network(&data.counts, Normalization::Source).expect("connected synthetic network")
}

/// Constant demand of `per_node` workers at every node.
pub fn flat_targets(network: &MobilityNetwork, per_node: f64) -> Vec<f64> {
    vec![per_node; network.len()]
}
