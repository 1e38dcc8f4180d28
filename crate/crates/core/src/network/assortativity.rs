use std::collections::BTreeMap;

use super::graph::MobilityNetwork;
use crate::error::{Error, Result};

/// Weighted categorical assortativity of `network` under a node labelling.
///
/// `e[i][j]` is the fraction of total edge weight running from category `i`
/// to category `j`; `a` and `b` are its row and column sums. Returns
/// `Ok(None)` when `1 - sum(a_i * b_i)` vanishes (all weight within a single
/// category), where the coefficient is undefined.
pub fn assortativity<C: Ord>(network: &MobilityNetwork, categories: &[C]) -> Result<Option<f64>> {
    if categories.len() != network.len() {
        return Err(Error::invalid(format!(
            "{} category labels for {} nodes",
            categories.len(),
            network.len()
        )));
    }
    let mut ids: BTreeMap<&C, usize> = BTreeMap::new();
    for c in categories {
        let next = ids.len();
        ids.entry(c).or_insert(next);
    }
    let label: Vec<usize> = categories.iter().map(|c| ids[c]).collect();
    let k = ids.len();
    let mut mixing = vec![0.0f64; k * k];
    let mut total = 0.0;
    for (s, d, w) in network.edges() {
        mixing[label[s] * k + label[d]] += w;
        total += w;
    }
    if total <= 0.0 {
        return Err(Error::invalid(
            "assortativity needs at least one positive edge",
        ));
    }
    let mut a = vec![0.0; k];
    let mut b = vec![0.0; k];
    for i in 0..k {
        for j in 0..k {
            let e = mixing[i * k + j] / total;
            mixing[i * k + j] = e;
            a[i] += e;
            b[j] += e;
        }
    }
    let trace: f64 = (0..k).map(|i| mixing[i * k + i]).sum();
    let expected: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
    let denom = 1.0 - expected;
    if denom.abs() <= 1e-15 {
        return Ok(None);
    }
    Ok(Some((trace - expected) / denom))
}
