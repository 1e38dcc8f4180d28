use std::collections::{BTreeMap, BTreeSet};

use super::counts::TransitionCounts;
use super::graph::UnionFind;
use super::hierarchy::Hierarchy;
use crate::error::{Error, Result};

/// Original occupation code to the (possibly hybrid) code it was merged into.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MergeMap {
    map: BTreeMap<String, String>,
}

impl MergeMap {
    pub fn identity<'a>(codes: impl IntoIterator<Item = &'a str>) -> Self {
        MergeMap {
            map: codes
                .into_iter()
                .map(|c| (c.to_string(), c.to_string()))
                .collect(),
        }
    }

    /// Codes not present in the map are returned unchanged.
    pub fn apply<'a>(&'a self, code: &'a str) -> &'a str {
        self.map.get(code).map_or(code, String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.map.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn num_merged(&self) -> usize {
        self.map.iter().filter(|(k, v)| k != v).count()
    }

    fn redirect(&mut self, from: &BTreeSet<String>, to: &str) {
        for v in self.map.values_mut() {
            if from.contains(v.as_str()) {
                *v = to.to_string();
            }
        }
    }

    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(["original", "merged"])?;
        for (k, v) in &self.map {
            wtr.write_record([k, v])?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn from_csv<R: std::io::Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut map = BTreeMap::new();
        for row in rdr.records() {
            let row = row?;
            if row.len() != 2 {
                return Err(Error::invalid("merge map rows need 2 fields"));
            }
            map.insert(row[0].to_string(), row[1].to_string());
        }
        Ok(MergeMap { map })
    }
}

fn is_descendant(hierarchy: &Hierarchy, code: &str, ancestor: &str) -> bool {
    let mut cursor = hierarchy.parent(code);
    while let Some(c) = cursor {
        if c == ancestor {
            return true;
        }
        cursor = hierarchy.parent(c);
    }
    false
}

/// Occupations whose node volume falls below `min_presence` in some region.
fn presence_violators(counts: &TransitionCounts, min_presence: u64) -> BTreeSet<String> {
    let volumes = counts.node_volumes();
    counts
        .nodes()
        .iter()
        .zip(volumes)
        .filter(|(_, v)| *v < min_presence)
        .map(|(n, _)| n.occupation.clone())
        .collect()
}

/// Occupations with a node outside the main component of the undirected
/// positive-count support. The main component is the largest one, ties
/// going to the component holding the lowest node index.
fn connectivity_violators(counts: &TransitionCounts) -> BTreeSet<String> {
    let n = counts.len();
    let mut uf = UnionFind::new(n);
    for (s, d, _) in counts.iter() {
        uf.union(s, d);
    }
    let labels = uf.labels();
    let mut sizes = vec![0usize; n];
    for &l in &labels {
        sizes[l] += 1;
    }
    // labels are assigned in order of first member, so the first maximum wins ties
    let main = (0..n)
        .max_by_key(|&l| (sizes[l], std::cmp::Reverse(l)))
        .unwrap_or(0);
    counts
        .nodes()
        .iter()
        .zip(&labels)
        .filter(|(_, &l)| l != main)
        .map(|(node, _)| node.occupation.clone())
        .collect()
}

/// Merges sparse or disconnecting occupations into their parent codes until
/// every occupation has at least `min_presence` volume in every region and the
/// undirected support is connected.
///
/// One violating occupation is picked per round (deepest code first, then
/// smallest total volume, then lexicographic code) and its parent's whole
/// subtree collapses into the parent code, so the hybrid parent inherits the
/// presence of the violator's siblings.
pub fn merge_occupations(
    counts: &TransitionCounts,
    hierarchy: &Hierarchy,
    min_presence: u64,
) -> Result<(TransitionCounts, MergeMap)> {
    if min_presence == 0 {
        return Err(Error::invalid("min_presence must be at least 1"));
    }
    for occ in counts.occupations() {
        if !hierarchy.contains(occ) {
            return Err(Error::invalid(format!(
                "occupation {occ} not covered by hierarchy"
            )));
        }
    }
    let mut map = MergeMap::identity(counts.occupations());
    let mut current = counts.clone();
    loop {
        let mut violators = presence_violators(&current, min_presence);
        violators.extend(connectivity_violators(&current));
        if violators.is_empty() {
            return Ok((current, map));
        }
        let mut volume: BTreeMap<&str, u64> = BTreeMap::new();
        for (node, v) in current.nodes().iter().zip(current.node_volumes()) {
            *volume.entry(node.occupation.as_str()).or_default() += v;
        }
        let pick = violators
            .iter()
            .min_by_key(|c| {
                (
                    std::cmp::Reverse(hierarchy.depth(c)),
                    volume.get(c.as_str()).copied().unwrap_or(0),
                    c.as_str(),
                )
            })
            .expect("non-empty")
            .clone();
        let Some(parent) = hierarchy.parent(&pick) else {
            return Err(Error::HierarchyExhausted {
                codes: violators.into_iter().collect(),
            });
        };
        let parent = parent.to_string();
        let absorbed: BTreeSet<String> = current
            .occupations()
            .into_iter()
            .filter(|o| is_descendant(hierarchy, o, &parent))
            .map(str::to_string)
            .collect();
        log::debug!("merging {absorbed:?} into {parent}");
        map.redirect(&absorbed, &parent);
        current = current.remap_occupations(|o| {
            if absorbed.contains(o) {
                parent.clone()
            } else {
                o.to_string()
            }
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::counts::OccRegion;
    use crate::network::graph::{build_network, Normalization};

    fn hierarchy() -> Hierarchy {
        Hierarchy::from_entries([
            ("2", "", "g"),
            ("23", "2", "a"),
            ("231", "23", "b"),
            ("2311", "231", "c"),
            ("2312", "231", "d"),
            ("232", "23", "e"),
        ])
        .unwrap()
    }

    fn node(o: &str, r: &str) -> OccRegion {
        OccRegion::new(o, r)
    }

    #[test]
    fn well_present_occupations_are_untouched() {
        let entries = vec![
            (node("2311", "rA"), node("2312", "rB"), 10),
            (node("2312", "rA"), node("2311", "rB"), 10),
            (node("2311", "rA"), node("2311", "rA"), 10),
            (node("2312", "rB"), node("2312", "rB"), 10),
            (node("2311", "rB"), node("2312", "rB"), 10),
        ];
        let counts = TransitionCounts::from_entries(Vec::new(), entries);
        let (merged, map) = merge_occupations(&counts, &hierarchy(), 1).unwrap();
        assert_eq!(merged, counts);
        assert_eq!(map.num_merged(), 0);
        assert_eq!(map.apply("2311"), "2311");
    }

    #[test]
    fn absent_occupation_merges_into_parent() {
        // 2311 never seen in rB; its sibling 2312 is present everywhere
        let entries = vec![
            (node("2311", "rA"), node("2312", "rA"), 4),
            (node("2312", "rA"), node("2312", "rB"), 6),
            (node("2312", "rB"), node("2312", "rB"), 1),
            (node("232", "rA"), node("2312", "rB"), 2),
            (node("232", "rB"), node("2312", "rA"), 2),
        ];
        let counts = TransitionCounts::from_entries(vec![node("2311", "rB")], entries);
        let (merged, map) = merge_occupations(&counts, &hierarchy(), 1).unwrap();
        assert_eq!(map.apply("2311"), "231");
        assert_eq!(map.apply("2312"), "231");
        assert_eq!(map.apply("232"), "232");
        assert_eq!(merged.total(), counts.total());
        let a = merged.index_of(&node("231", "rA")).unwrap();
        let b = merged.index_of(&node("231", "rB")).unwrap();
        assert_eq!(merged.count(a, a), 4);
        assert_eq!(merged.count(a, b), 6);
        let occs: Vec<_> = merged.occupations().into_iter().collect();
        assert_eq!(occs, vec!["231", "232"]);
        assert_eq!(merged.len(), 4);
        assert!(build_network(&merged, Normalization::Source)
            .unwrap()
            .is_connected());
    }

    #[test]
    fn merge_map_is_idempotent() {
        let entries = vec![
            (node("2311", "rA"), node("2312", "rA"), 4),
            (node("2312", "rA"), node("2312", "rB"), 6),
        ];
        let counts = TransitionCounts::from_entries(vec![node("2311", "rB")], entries);
        let (_, map) = merge_occupations(&counts, &hierarchy(), 1).unwrap();
        for (orig, _) in map.iter() {
            let once = map.apply(orig);
            assert_eq!(map.apply(once), once);
        }
    }

    #[test]
    fn only_two_digit_merge_connects() {
        let h = Hierarchy::from_entries([
            ("1", "", "root"),
            ("11", "1", "mid"),
            ("111", "11", "leaf a"),
            ("112", "11", "leaf b"),
        ])
        .unwrap();
        let entries = vec![
            (node("111", "r"), node("111", "r"), 5),
            (node("112", "r"), node("112", "r"), 3),
        ];
        let counts = TransitionCounts::from_entries(Vec::new(), entries);
        assert!(!build_network(&counts, Normalization::Source)
            .unwrap()
            .is_connected());
        let (merged, map) = merge_occupations(&counts, &h, 1).unwrap();
        assert_eq!(map.apply("111"), "11");
        assert_eq!(map.apply("112"), "11");
        assert!(build_network(&merged, Normalization::Source)
            .unwrap()
            .is_connected());
        assert_eq!(merged.total(), 8);
    }

    #[test]
    fn exhausted_hierarchy_lists_codes() {
        let h = Hierarchy::from_entries([("1", "", "a"), ("2", "", "b")]).unwrap();
        let entries = vec![
            (node("1", "r"), node("1", "r"), 5),
            (node("2", "r"), node("2", "r"), 3),
        ];
        let counts = TransitionCounts::from_entries(Vec::new(), entries);
        match merge_occupations(&counts, &h, 1) {
            Err(Error::HierarchyExhausted { codes }) => assert_eq!(codes, vec!["2".to_string()]),
            other => panic!("unexpected {other:?}"),
        }
    }
}
