//! Regional occupational mobility network: ingestion of transition records,
//! hybrid occupation merging, normalization into transition probabilities,
//! and structural statistics.

mod assortativity;
mod counts;
mod export;
mod graph;
mod hierarchy;
mod merge;

pub use assortativity::assortativity;
pub use counts::{
    ingest_records, ingest_transitions, read_transition_records, OccRegion, TransitionCounts,
    TransitionRecord,
};
pub use export::{read_network, write_edge_list, write_sidecar, NetworkSidecar, NodeMetadata};
pub use graph::{build_network, complete_network, MobilityNetwork, Normalization, RowIter};
pub use hierarchy::{Hierarchy, RegionManifest};
pub use merge::{merge_occupations, MergeMap};
