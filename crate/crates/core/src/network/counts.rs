use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::io::Read;

use serde::{Deserialize, Serialize};

use super::hierarchy::{Hierarchy, RegionManifest};
use crate::error::{Error, Result};

/// A network node: one occupation located in one region.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct OccRegion {
    pub occupation: String,
    pub region: String,
}

impl OccRegion {
    pub fn new(occupation: impl Into<String>, region: impl Into<String>) -> Self {
        OccRegion {
            occupation: occupation.into(),
            region: region.into(),
        }
    }

    /// 1-digit occupational group, i.e. the leading character of the code.
    pub fn broad_group(&self) -> &str {
        self.occupation
            .char_indices()
            .nth(1)
            .map_or(self.occupation.as_str(), |(i, _)| &self.occupation[..i])
    }
}

impl fmt::Display for OccRegion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}@{}", self.occupation, self.region)
    }
}

/// One row of the transition-record input.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransitionRecord {
    pub source_occ: String,
    pub source_region: String,
    pub dest_occ: String,
    pub dest_region: String,
    pub count: u64,
}

/// Aggregated worker moves between occupation-region pairs.
///
/// Nodes are kept sorted, so node indices are a deterministic function of
/// the node set.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionCounts {
    nodes: Vec<OccRegion>,
    index: HashMap<OccRegion, usize>,
    counts: BTreeMap<(usize, usize), u64>,
}

impl TransitionCounts {
    /// Builds counts over `nodes` (plus any endpoints not listed there),
    /// summing duplicate pairs. Zero counts register nodes only.
    pub fn from_entries<N, E>(nodes: N, entries: E) -> Self
    where
        N: IntoIterator<Item = OccRegion>,
        E: IntoIterator<Item = (OccRegion, OccRegion, u64)>,
    {
        let entries: Vec<_> = entries.into_iter().collect();
        let mut set: BTreeSet<OccRegion> = nodes.into_iter().collect();
        for (s, d, _) in &entries {
            set.insert(s.clone());
            set.insert(d.clone());
        }
        let nodes: Vec<OccRegion> = set.into_iter().collect();
        let index: HashMap<OccRegion, usize> = nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), i))
            .collect();
        let mut counts = BTreeMap::new();
        for (s, d, c) in entries {
            if c > 0 {
                *counts.entry((index[&s], index[&d])).or_insert(0) += c;
            }
        }
        TransitionCounts {
            nodes,
            index,
            counts,
        }
    }

    /// Counts from a dense matrix over already-ordered nodes. Panics if the
    /// nodes are not strictly sorted or the matrix is not square.
    pub fn from_dense(nodes: Vec<OccRegion>, matrix: &[Vec<u64>]) -> Self {
        assert!(
            nodes.windows(2).all(|w| w[0] < w[1]),
            "nodes must be sorted"
        );
        assert_eq!(matrix.len(), nodes.len());
        let mut entries = Vec::new();
        for (i, row) in matrix.iter().enumerate() {
            assert_eq!(row.len(), nodes.len());
            for (j, &c) in row.iter().enumerate() {
                entries.push((nodes[i].clone(), nodes[j].clone(), c));
            }
        }
        Self::from_entries(nodes, entries)
    }

    pub fn nodes(&self) -> &[OccRegion] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn index_of(&self, node: &OccRegion) -> Option<usize> {
        self.index.get(node).copied()
    }

    pub fn count(&self, source: usize, dest: usize) -> u64 {
        self.counts.get(&(source, dest)).copied().unwrap_or(0)
    }

    /// Positive entries in (source, dest) order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, u64)> + '_ {
        self.counts.iter().map(|(&(s, d), &c)| (s, d, c))
    }

    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }

    pub fn num_positive(&self) -> usize {
        self.counts.len()
    }

    /// In plus out volume per node; self-loops count on both sides.
    pub fn node_volumes(&self) -> Vec<u64> {
        let mut vol = vec![0u64; self.nodes.len()];
        for (s, d, c) in self.iter() {
            vol[s] += c;
            vol[d] += c;
        }
        vol
    }

    pub fn regions(&self) -> BTreeSet<&str> {
        self.nodes.iter().map(|n| n.region.as_str()).collect()
    }

    pub fn occupations(&self) -> BTreeSet<&str> {
        self.nodes.iter().map(|n| n.occupation.as_str()).collect()
    }

    /// Rewrites every occupation code through `f`, re-aggregating counts.
    pub fn remap_occupations<F>(&self, mut f: F) -> TransitionCounts
    where
        F: FnMut(&str) -> String,
    {
        let mapped: Vec<OccRegion> = self
            .nodes
            .iter()
            .map(|n| OccRegion::new(f(&n.occupation), n.region.clone()))
            .collect();
        let entries = self
            .iter()
            .map(|(s, d, c)| (mapped[s].clone(), mapped[d].clone(), c));
        TransitionCounts::from_entries(mapped.clone(), entries)
    }

    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record([
            "source_occ",
            "source_region",
            "dest_occ",
            "dest_region",
            "count",
        ])?;
        for (s, d, c) in self.iter() {
            let (s, d) = (&self.nodes[s], &self.nodes[d]);
            wtr.write_record([
                s.occupation.as_str(),
                s.region.as_str(),
                d.occupation.as_str(),
                d.region.as_str(),
                &c.to_string(),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Streams `(line, record)` pairs from a transition CSV.
pub fn read_transition_records<R: Read>(
    reader: R,
    source_name: &str,
) -> impl Iterator<Item = Result<(u64, TransitionRecord)>> {
    let source_name = source_name.to_string();
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader);
    let header_ok = match rdr.headers() {
        Ok(h) => {
            let expected = [
                "source_occ",
                "source_region",
                "dest_occ",
                "dest_region",
                "count",
            ];
            if h.iter().eq(expected.iter().copied()) {
                Ok(())
            } else {
                Err(Error::MalformedRow {
                    source_name: source_name.clone(),
                    line: 1,
                    message: format!("expected header {}", expected.join(",")),
                })
            }
        }
        Err(e) => Err(e.into()),
    };
    let header_err = header_ok.err();
    let rows = rdr.into_records();
    let name = source_name.clone();
    header_err.map(Err).into_iter().chain(
        rows.enumerate()
            .map(move |(i, row)| parse_row(&name, i as u64 + 2, row)),
    )
}

fn parse_row(
    source_name: &str,
    line: u64,
    row: std::result::Result<csv::StringRecord, csv::Error>,
) -> Result<(u64, TransitionRecord)> {
    let malformed = |message: String| Error::MalformedRow {
        source_name: source_name.to_string(),
        line,
        message,
    };
    let row = row.map_err(|e| malformed(e.to_string()))?;
    if row.len() != 5 {
        return Err(malformed(format!("expected 5 fields, found {}", row.len())));
    }
    let count: i64 = row[4]
        .parse()
        .map_err(|_| malformed(format!("count {:?} is not an integer", &row[4])))?;
    if count < 0 {
        return Err(malformed(format!("negative count {count}")));
    }
    Ok((
        line,
        TransitionRecord {
            source_occ: row[0].to_string(),
            source_region: row[1].to_string(),
            dest_occ: row[2].to_string(),
            dest_region: row[3].to_string(),
            count: count as u64,
        },
    ))
}

/// Aggregates transition records into counts, validating codes against the
/// hierarchy and regions against the manifest.
///
/// The node index holds every record endpoint plus, for each occupation
/// seen anywhere, its node in every manifest region (zero flow if unseen).
pub fn ingest_transitions<I>(
    records: I,
    hierarchy: &Hierarchy,
    regions: &RegionManifest,
) -> Result<TransitionCounts>
where
    I: IntoIterator<Item = Result<(u64, TransitionRecord)>>,
{
    let mut entries = Vec::new();
    let mut occupations = BTreeSet::new();
    for item in records {
        let (line, rec) = item?;
        let bad = |message: String| Error::MalformedRow {
            source_name: "transitions".into(),
            line,
            message,
        };
        for region in [&rec.source_region, &rec.dest_region] {
            if !regions.contains(region) {
                return Err(bad(format!("unknown region {region:?}")));
            }
        }
        for occ in [&rec.source_occ, &rec.dest_occ] {
            if !hierarchy.contains(occ) {
                return Err(bad(format!("occupation {occ:?} not in hierarchy")));
            }
        }
        occupations.insert(rec.source_occ.clone());
        occupations.insert(rec.dest_occ.clone());
        entries.push((
            OccRegion::new(rec.source_occ, rec.source_region),
            OccRegion::new(rec.dest_occ, rec.dest_region),
            rec.count,
        ));
    }
    if entries.is_empty() {
        return Err(Error::EmptyInput("transition records".into()));
    }
    let declared: Vec<OccRegion> = occupations
        .iter()
        .flat_map(|o| regions.ids().map(move |r| OccRegion::new(o.clone(), r)))
        .collect();
    Ok(TransitionCounts::from_entries(declared, entries))
}

/// Convenience wrapper for in-memory records (line numbers are 1-based data rows + header).
pub fn ingest_records(
    records: &[TransitionRecord],
    hierarchy: &Hierarchy,
    regions: &RegionManifest,
) -> Result<TransitionCounts> {
    ingest_transitions(
        records
            .iter()
            .cloned()
            .enumerate()
            .map(|(i, r)| Ok((i as u64 + 2, r))),
        hierarchy,
        regions,
    )
}
