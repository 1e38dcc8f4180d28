use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::counts::{OccRegion, TransitionCounts};
use crate::error::{Error, Result};

/// Which marginal the raw counts are divided by.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Normalization {
    /// Outgoing weights of each node sum to one.
    #[default]
    Source,
    /// Incoming weights of each node sum to one.
    Destination,
}

impl FromStr for Normalization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "source" => Ok(Normalization::Source),
            "destination" => Ok(Normalization::Destination),
            other => Err(Error::invalid(format!("unknown normalization {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Edges {
    /// Compressed rows: edges of source `i` live in `offsets[i]..offsets[i + 1]`.
    Sparse {
        offsets: Vec<usize>,
        targets: Vec<usize>,
        weights: Vec<f64>,
    },
    /// Every ordered pair, self-loops included, has weight `1 / N`.
    Complete,
}

/// Transition probabilities between occupation-region nodes.
///
/// Immutable once built; share it freely between simulation workers.
#[derive(Debug, Clone, PartialEq)]
pub struct MobilityNetwork {
    nodes: Vec<OccRegion>,
    edges: Edges,
    normalization: Normalization,
    zero_marginal: Vec<usize>,
}

impl MobilityNetwork {
    /// Builds a network from explicit `(source, dest, weight)` triples.
    /// Zero weights are dropped; duplicates are an error.
    pub fn from_edges(
        nodes: Vec<OccRegion>,
        edges: impl IntoIterator<Item = (usize, usize, f64)>,
        normalization: Normalization,
    ) -> Result<Self> {
        let n = nodes.len();
        let mut list: Vec<(usize, usize, f64)> = Vec::new();
        for (s, d, w) in edges {
            if s >= n || d >= n {
                return Err(Error::invalid(format!("edge ({s}, {d}) outside {n} nodes")));
            }
            if !(0.0..=1.0).contains(&w) {
                return Err(Error::invalid(format!(
                    "edge ({s}, {d}) weight {w} outside [0, 1]"
                )));
            }
            if w > 0.0 {
                list.push((s, d, w));
            }
        }
        list.sort_by_key(|&(s, d, _)| (s, d));
        if list
            .windows(2)
            .any(|p| (p[0].0, p[0].1) == (p[1].0, p[1].1))
        {
            return Err(Error::invalid("duplicate edge in network"));
        }
        let mut offsets = vec![0usize; n + 1];
        for &(s, _, _) in &list {
            offsets[s + 1] += 1;
        }
        for i in 0..n {
            offsets[i + 1] += offsets[i];
        }
        let targets = list.iter().map(|e| e.1).collect();
        let weights = list.iter().map(|e| e.2).collect();
        let mut network = MobilityNetwork {
            nodes,
            edges: Edges::Sparse {
                offsets,
                targets,
                weights,
            },
            normalization,
            zero_marginal: Vec::new(),
        };
        network.zero_marginal = network.find_zero_marginal();
        Ok(network)
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

    pub fn normalization(&self) -> Normalization {
        self.normalization
    }

    pub fn is_complete(&self) -> bool {
        matches!(self.edges, Edges::Complete)
    }

    /// Nodes whose normalizing marginal was zero (no outgoing edges in
    /// source mode, no incoming edges in destination mode).
    pub fn zero_marginal_nodes(&self) -> &[usize] {
        &self.zero_marginal
    }

    pub fn num_edges(&self) -> usize {
        match &self.edges {
            Edges::Sparse { targets, .. } => targets.len(),
            Edges::Complete => self.nodes.len() * self.nodes.len(),
        }
    }

    /// Outgoing `(dest, weight)` pairs of `source` with positive weight.
    pub fn row(&self, source: usize) -> RowIter<'_> {
        match &self.edges {
            Edges::Sparse {
                offsets,
                targets,
                weights,
            } => {
                let range = offsets[source]..offsets[source + 1];
                RowIter::Sparse(targets[range.clone()].iter().zip(&weights[range]))
            }
            Edges::Complete => {
                let n = self.nodes.len();
                RowIter::Complete {
                    next: 0,
                    n,
                    weight: 1.0 / n as f64,
                }
            }
        }
    }

    pub fn weight(&self, source: usize, dest: usize) -> f64 {
        match &self.edges {
            Edges::Sparse {
                offsets,
                targets,
                weights,
            } => {
                let range = offsets[source]..offsets[source + 1];
                match targets[range.clone()].binary_search(&dest) {
                    Ok(k) => weights[range.start + k],
                    Err(_) => 0.0,
                }
            }
            Edges::Complete => 1.0 / self.nodes.len() as f64,
        }
    }

    /// All positive edges as `(source, dest, weight)`, row-major.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.nodes.len()).flat_map(move |s| self.row(s).map(move |(d, w)| (s, d, w)))
    }

    pub fn out_strength(&self, source: usize) -> f64 {
        self.row(source).map(|(_, w)| w).sum()
    }

    fn find_zero_marginal(&self) -> Vec<usize> {
        let n = self.nodes.len();
        let mut has = vec![false; n];
        for (s, d, _) in self.edges() {
            match self.normalization {
                Normalization::Source => has[s] = true,
                Normalization::Destination => has[d] = true,
            }
        }
        (0..n).filter(|&i| !has[i]).collect()
    }

    /// Connected components of the undirected positive-weight support,
    /// as a component label per node (labels ordered by first member).
    pub fn components(&self) -> Vec<usize> {
        let mut uf = UnionFind::new(self.nodes.len());
        if self.is_complete() {
            for i in 1..self.nodes.len() {
                uf.union(0, i);
            }
        } else {
            for (s, d, _) in self.edges() {
                uf.union(s, d);
            }
        }
        uf.labels()
    }

    pub fn is_connected(&self) -> bool {
        self.components().iter().all(|&c| c == 0)
    }
}

pub enum RowIter<'a> {
    Sparse(std::iter::Zip<std::slice::Iter<'a, usize>, std::slice::Iter<'a, f64>>),
    Complete { next: usize, n: usize, weight: f64 },
}

impl Iterator for RowIter<'_> {
    type Item = (usize, f64);

    fn next(&mut self) -> Option<(usize, f64)> {
        match self {
            RowIter::Sparse(it) => it.next().map(|(&d, &w)| (d, w)),
            RowIter::Complete { next, n, weight } => {
                if *next < *n {
                    *next += 1;
                    Some((*next - 1, *weight))
                } else {
                    None
                }
            }
        }
    }
}

/// Divides each count by its source (or destination) marginal.
pub fn build_network(
    counts: &TransitionCounts,
    normalization: Normalization,
) -> Result<MobilityNetwork> {
    if counts.num_positive() == 0 {
        return Err(Error::EmptyInput(
            "transition counts have no positive entry".into(),
        ));
    }
    let n = counts.len();
    let mut marginal = vec![0u64; n];
    for (s, d, c) in counts.iter() {
        match normalization {
            Normalization::Source => marginal[s] += c,
            Normalization::Destination => marginal[d] += c,
        }
    }
    let edges = counts.iter().map(|(s, d, c)| {
        let m = match normalization {
            Normalization::Source => marginal[s],
            Normalization::Destination => marginal[d],
        };
        (s, d, c as f64 / m as f64)
    });
    let network = MobilityNetwork::from_edges(counts.nodes().to_vec(), edges, normalization)?;
    if !network.zero_marginal.is_empty() {
        log::warn!(
            "{} node(s) have a zero {} marginal",
            network.zero_marginal.len(),
            match normalization {
                Normalization::Source => "outgoing",
                Normalization::Destination => "incoming",
            }
        );
    }
    Ok(network)
}

/// Frictionless network: every ordered pair weighted `1 / N`.
pub fn complete_network(nodes: Vec<OccRegion>) -> Result<MobilityNetwork> {
    if nodes.is_empty() {
        return Err(Error::invalid("complete network needs at least one node"));
    }
    Ok(MobilityNetwork {
        nodes,
        edges: Edges::Complete,
        normalization: Normalization::Source,
        zero_marginal: Vec::new(),
    })
}

pub(crate) struct UnionFind {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl UnionFind {
    pub(crate) fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
            rank: vec![0; n],
        }
    }

    pub(crate) fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub(crate) fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            std::cmp::Ordering::Less => self.parent[ra] = rb,
            std::cmp::Ordering::Greater => self.parent[rb] = ra,
            std::cmp::Ordering::Equal => {
                self.parent[rb] = ra;
                self.rank[ra] += 1;
            }
        }
    }

    pub(crate) fn labels(&mut self) -> Vec<usize> {
        let n = self.parent.len();
        let mut label_of_root = vec![usize::MAX; n];
        let mut next = 0;
        (0..n)
            .map(|i| {
                let r = self.find(i);
                if label_of_root[r] == usize::MAX {
                    label_of_root[r] = next;
                    next += 1;
                }
                label_of_root[r]
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn nodes(n: usize) -> Vec<OccRegion> {
        (0..n)
            .map(|i| OccRegion::new(format!("1{i}"), "r"))
            .collect()
    }

    #[test]
    fn two_node_source_normalized() {
        let counts = TransitionCounts::from_dense(nodes(2), &[vec![3, 1], vec![1, 3]]);
        let net = build_network(&counts, Normalization::Source).unwrap();
        assert_eq!(net.weight(0, 0), 0.75);
        assert_eq!(net.weight(0, 1), 0.25);
        assert_eq!(net.weight(1, 0), 0.25);
        assert_eq!(net.weight(1, 1), 0.75);
    }

    #[test]
    fn single_node_identity() {
        let counts = TransitionCounts::from_dense(nodes(1), &[vec![7]]);
        let net = build_network(&counts, Normalization::Source).unwrap();
        assert_eq!(net.weight(0, 0), 1.0);
        assert!(net.is_connected());
    }

    #[test]
    fn asymmetric_rows_and_columns() {
        let t = [vec![5, 2, 0], vec![1, 0, 9], vec![4, 4, 4]];
        let counts = TransitionCounts::from_dense(nodes(3), &t);
        let src = build_network(&counts, Normalization::Source).unwrap();
        let dst = build_network(&counts, Normalization::Destination).unwrap();
        for i in 0..3 {
            let row: f64 = t[i].iter().sum::<u64>() as f64;
            let col: f64 = t.iter().map(|r| r[i]).sum::<u64>() as f64;
            let row_sum: f64 = (0..3).map(|j| src.weight(i, j)).sum();
            let col_sum: f64 = (0..3).map(|j| dst.weight(j, i)).sum();
            assert!((row_sum - 1.0).abs() < 1e-12);
            assert!((col_sum - 1.0).abs() < 1e-12);
            for j in 0..3 {
                assert_eq!(src.weight(i, j), t[i][j] as f64 / row);
                let colj: f64 = t.iter().map(|r| r[j]).sum::<u64>() as f64;
                assert_eq!(dst.weight(i, j), t[i][j] as f64 / colj);
            }
            let _ = col;
        }
    }

    #[test]
    fn zero_marginal_nodes_are_reported() {
        let counts =
            TransitionCounts::from_dense(nodes(3), &[vec![1, 1, 0], vec![1, 1, 0], vec![0, 0, 0]]);
        let net = build_network(&counts, Normalization::Source).unwrap();
        assert_eq!(net.zero_marginal_nodes(), &[2]);
        assert!(!net.is_connected());
    }

    #[test]
    fn complete_network_weights() {
        let net = complete_network(nodes(4)).unwrap();
        assert_eq!(net.edges().count(), 16);
        assert!(net.edges().all(|(_, _, w)| w == 0.25));
        let one = complete_network(nodes(1)).unwrap();
        assert_eq!(one.weight(0, 0), 1.0);
        assert!(complete_network(Vec::new()).is_err());
    }

    #[test]
    fn complete_network_at_full_scale() {
        let n = 3533;
        let net = complete_network(nodes(n)).unwrap();
        for i in [0, 1, n / 2, n - 1] {
            let s = net.out_strength(i);
            assert!((s - 1.0).abs() < 1e-12, "row {i} sums to {s}");
            assert_eq!(net.weight(i, 0), 1.0 / 3533.0);
        }
    }
}
