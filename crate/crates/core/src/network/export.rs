use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::counts::OccRegion;
use super::graph::{complete_network, MobilityNetwork, Normalization};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeMetadata {
    pub id: usize,
    pub occupation: String,
    pub region: String,
    pub broad_group: String,
    pub mean_wage: Option<f64>,
}

/// JSON sidecar accompanying an edge list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkSidecar {
    pub normalization: Normalization,
    pub complete: bool,
    pub nodes: Vec<NodeMetadata>,
}

impl NetworkSidecar {
    pub fn for_network(
        network: &MobilityNetwork,
        wages: Option<&BTreeMap<OccRegion, f64>>,
    ) -> Self {
        let nodes = network
            .nodes()
            .iter()
            .enumerate()
            .map(|(id, n)| NodeMetadata {
                id,
                occupation: n.occupation.clone(),
                region: n.region.clone(),
                broad_group: n.broad_group().to_string(),
                mean_wage: wages.and_then(|w| w.get(n).copied()),
            })
            .collect();
        NetworkSidecar {
            normalization: network.normalization(),
            complete: network.is_complete(),
            nodes,
        }
    }
}

/// Writes `source,dest,weight` rows with 17 significant digits, enough to
/// round-trip every weight exactly.
pub fn write_edge_list<W: Write>(network: &MobilityNetwork, writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(["source", "dest", "weight"])?;
    for (s, d, w) in network.edges() {
        wtr.write_record([s.to_string(), d.to_string(), format!("{w:.16e}")])?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_sidecar<W: Write>(sidecar: &NetworkSidecar, writer: W) -> Result<()> {
    serde_json::to_writer_pretty(writer, sidecar)?;
    Ok(())
}

/// Loads a network previously written by [`write_edge_list`] and [`write_sidecar`].
pub fn read_network<E: Read, S: Read>(
    edges: E,
    sidecar: S,
) -> Result<(MobilityNetwork, NetworkSidecar)> {
    let sidecar: NetworkSidecar = serde_json::from_reader(sidecar)?;
    for (i, n) in sidecar.nodes.iter().enumerate() {
        if n.id != i {
            return Err(Error::invalid(format!(
                "node ids must be 0..N in order, found {} at {i}",
                n.id
            )));
        }
    }
    let nodes: Vec<OccRegion> = sidecar
        .nodes
        .iter()
        .map(|n| OccRegion::new(n.occupation.clone(), n.region.clone()))
        .collect();
    if sidecar.complete {
        return Ok((complete_network(nodes)?, sidecar));
    }
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(edges);
    let mut list = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let row = row?;
        let bad = |message: String| Error::MalformedRow {
            source_name: "edge list".into(),
            line: i as u64 + 2,
            message,
        };
        if row.len() != 3 {
            return Err(bad(format!("expected 3 fields, found {}", row.len())));
        }
        let s: usize = row[0].parse().map_err(|_| bad("bad source id".into()))?;
        let d: usize = row[1].parse().map_err(|_| bad("bad dest id".into()))?;
        let w: f64 = row[2].parse().map_err(|_| bad("bad weight".into()))?;
        list.push((s, d, w));
    }
    let network = MobilityNetwork::from_edges(nodes, list, sidecar.normalization)?;
    Ok((network, sidecar))
}
