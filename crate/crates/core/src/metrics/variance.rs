use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Split of the variance of a node outcome into region, occupation and
/// residual parts. All components are population variances over nodes
/// (divided by `n`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceDecomposition {
    pub between_region: f64,
    pub between_occupation: f64,
    pub residual: f64,
    pub total: f64,
    /// `between_region + between_occupation + residual`.
    pub sum: f64,
    /// `|sum - total|`; zero up to rounding on balanced panels.
    pub discrepancy: f64,
    pub n: usize,
    pub balanced: bool,
    pub notes: Vec<String>,
}

impl VarianceDecomposition {
    /// Component shares of the total variance, `None` when the total is zero.
    pub fn shares(&self) -> Option<(f64, f64, f64)> {
        (self.total > 0.0).then(|| {
            (
                self.between_region / self.total,
                self.between_occupation / self.total,
                self.residual / self.total,
            )
        })
    }
}

/// Decomposes `(region, occupation, value)` observations.
///
/// Group effects are group means minus the grand mean; the residual is the
/// value minus grand mean and both effects. On balanced panels the three
/// components add up to the total exactly (up to rounding); otherwise the
/// discrepancy is reported.
pub fn variance_decomposition<R, O>(observations: &[(R, O, f64)]) -> Result<VarianceDecomposition>
where
    R: Ord + Clone,
    O: Ord + Clone,
{
    let n = observations.len();
    if n == 0 {
        return Err(Error::invalid(
            "variance decomposition needs at least one observation",
        ));
    }
    if observations.iter().any(|o| !o.2.is_finite()) {
        return Err(Error::invalid(
            "variance decomposition input contains non-finite values",
        ));
    }
    let nf = n as f64;
    // Work relative to the first value so constant input stays exactly zero.
    let shift = observations[0].2;
    let grand = observations.iter().map(|o| o.2 - shift).sum::<f64>() / nf;

    let mut by_region: BTreeMap<R, (f64, usize)> = BTreeMap::new();
    let mut by_occupation: BTreeMap<O, (f64, usize)> = BTreeMap::new();
    let mut cells: BTreeMap<(R, O), usize> = BTreeMap::new();
    for (r, o, v) in observations {
        let e = by_region.entry(r.clone()).or_default();
        e.0 += v - shift;
        e.1 += 1;
        let e = by_occupation.entry(o.clone()).or_default();
        e.0 += v - shift;
        e.1 += 1;
        *cells.entry((r.clone(), o.clone())).or_default() += 1;
    }
    let region_effect: BTreeMap<&R, f64> = by_region
        .iter()
        .map(|(k, (s, c))| (k, s / *c as f64 - grand))
        .collect();
    let occupation_effect: BTreeMap<&O, f64> = by_occupation
        .iter()
        .map(|(k, (s, c))| (k, s / *c as f64 - grand))
        .collect();

    let mut between_region = 0.0;
    let mut between_occupation = 0.0;
    let mut total = 0.0;
    let mut residuals = Vec::with_capacity(n);
    for (r, o, v) in observations {
        let a = region_effect[r];
        let b = occupation_effect[o];
        between_region += a * a;
        between_occupation += b * b;
        let x = v - shift - grand;
        total += x * x;
        residuals.push(x - a - b);
    }
    let mean_res = residuals.iter().sum::<f64>() / nf;
    let residual = residuals
        .iter()
        .map(|r| (r - mean_res) * (r - mean_res))
        .sum::<f64>()
        / nf;
    between_region /= nf;
    between_occupation /= nf;
    total /= nf;
    let sum = between_region + between_occupation + residual;

    let balanced =
        cells.len() == by_region.len() * by_occupation.len() && cells.values().all(|&c| c == 1);
    let mut notes = Vec::new();
    if by_region.len() == 1 {
        notes.push("single region: between-region component is zero".to_string());
    }
    if by_occupation.len() == 1 {
        notes.push("single occupation: between-occupation component is zero".to_string());
    }
    if !balanced {
        notes.push("unbalanced panel: components need not add up to the total".to_string());
    }
    Ok(VarianceDecomposition {
        between_region,
        between_occupation,
        residual,
        total,
        sum,
        discrepancy: (sum - total).abs(),
        n,
        balanced,
        notes,
    })
}
