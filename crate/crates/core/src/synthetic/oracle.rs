//! Brute-force reference computations for small instances.

use crate::abm::SimulationParams;
use crate::error::{Error, Result};
use crate::network::MobilityNetwork;

/// Largest instance accepted by [`mean_field_oracle`].
pub const ORACLE_MAX_NODES: usize = 5;

/// Expected employment, unemployment and open vacancies per timestep.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleTrajectory {
    pub employed: Vec<Vec<f64>>,
    pub unemployed: Vec<Vec<f64>>,
    pub vacancies: Vec<Vec<f64>>,
}

impl OracleTrajectory {
    pub fn total_workers(&self, t: usize) -> f64 {
        self.employed[t].iter().chain(&self.unemployed[t]).sum()
    }
}

/// Mean number of distinct slots hit when `applicants` applications land
/// independently and uniformly on `vacancies` slots, by enumerating all
/// `vacancies^applicants` outcomes.
pub fn expected_hires_enumeration(applicants: u32, vacancies: u32) -> f64 {
    if applicants == 0 || vacancies == 0 {
        return 0.0;
    }
    let outcomes = (vacancies as u64).pow(applicants);
    let mut hit_total = 0u64;
    let mut choice = vec![0u32; applicants as usize];
    for _ in 0..outcomes {
        let mut hit = vec![false; vacancies as usize];
        for &c in &choice {
            hit[c as usize] = true;
        }
        hit_total += hit.iter().filter(|h| **h).count() as u64;
        for c in choice.iter_mut() {
            *c += 1;
            if *c < vacancies {
                break;
            }
            *c = 0;
        }
    }
    hit_total as f64 / outcomes as f64
}

fn hires(arriving: f64, open: f64) -> f64 {
    if arriving <= 0.0 || open <= 0.0 {
        0.0
    } else if open <= 1.0 {
        arriving.min(open)
    } else {
        (open - open * ((open - 1.0) / open).powf(arriving)).min(arriving)
    }
}

/// Expected-value dynamics on a dense copy of the network. `targets[t]`
/// is target demand at timestep `t`; the result covers `0..targets.len()`.
pub fn mean_field_oracle(
    network: &MobilityNetwork,
    employed: &[f64],
    unemployed: &[f64],
    vacancies: &[f64],
    targets: &[Vec<f64>],
    params: &SimulationParams,
) -> Result<OracleTrajectory> {
    let n = network.len();
    if n > ORACLE_MAX_NODES {
        return Err(Error::invalid(format!(
            "oracle handles at most {ORACLE_MAX_NODES} nodes, got {n}"
        )));
    }
    if params.applications_per_worker != 1 {
        return Err(Error::invalid("oracle assumes one application per worker"));
    }
    if [employed.len(), unemployed.len(), vacancies.len()]
        .iter()
        .any(|&l| l != n)
        || targets.iter().any(|t| t.len() != n)
    {
        return Err(Error::invalid(
            "oracle inputs disagree on the number of nodes",
        ));
    }
    let w: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| network.weight(i, j)).collect())
        .collect();
    let (mut e, mut u, mut v) = (employed.to_vec(), unemployed.to_vec(), vacancies.to_vec());
    let mut out = OracleTrajectory {
        employed: vec![e.clone()],
        unemployed: vec![u.clone()],
        vacancies: vec![v.clone()],
    };
    for target in targets.iter().skip(1) {
        for i in 0..n {
            let excess = e[i] + v[i] - target[i];
            let sep = (params.delta_u * e[i]
                + (1.0 - params.delta_u) * params.gamma_u * excess.max(0.0))
            .min(e[i]);
            let open = params.delta_v * e[i]
                + (1.0 - params.delta_v) * params.gamma_v * (-excess).max(0.0);
            e[i] -= sep;
            u[i] += sep;
            v[i] += open;
        }
        let mut apps = vec![vec![0.0; n]; n];
        for i in 0..n {
            let denom: f64 = (0..n).map(|k| w[i][k] * v[k]).sum();
            if denom > 0.0 {
                for j in 0..n {
                    apps[i][j] = u[i] * w[i][j] * v[j] / denom;
                }
            }
        }
        let mut moved = vec![vec![0.0; n]; n];
        for j in 0..n {
            let arriving: f64 = (0..n).map(|i| apps[i][j]).sum();
            let h = hires(arriving, v[j]);
            for i in 0..n {
                if arriving > 0.0 {
                    moved[i][j] = h * apps[i][j] / arriving;
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                u[i] -= moved[i][j];
                e[j] += moved[i][j];
                v[j] -= moved[i][j];
            }
        }
        out.employed.push(e.clone());
        out.unemployed.push(u.clone());
        out.vacancies.push(v.clone());
    }
    Ok(out)
}

/// Two-way ANOVA sums of squares for a complete panel
/// `values[region][occupation]`, divided by the number of cells.
///
/// Returns `(region, occupation, residual, total)`: the first two are the
/// variance explained by one-factor least-squares fits, the residual is the
/// variance left by the additive two-factor fit.
pub fn two_way_anova(values: &[Vec<f64>]) -> Result<(f64, f64, f64, f64)> {
    let r = values.len();
    let o = values.first().map_or(0, Vec::len);
    if r == 0 || o == 0 || values.iter().any(|row| row.len() != o) {
        return Err(Error::invalid("panel must be a non-empty rectangle"));
    }
    let y: Vec<f64> = values.iter().flatten().copied().collect();
    let n = y.len() as f64;
    let mean = y.iter().sum::<f64>() / n;
    let ss = |fit: &[f64]| fit.iter().map(|f| (f - mean).powi(2)).sum::<f64>() / n;
    let row = |k: usize, with_region: bool, with_occ: bool| {
        let (ri, oi) = (k / o, k % o);
        let mut x = vec![1.0];
        if with_region {
            x.extend((1..r).map(|g| f64::from(u8::from(ri == g))));
        }
        if with_occ {
            x.extend((1..o).map(|g| f64::from(u8::from(oi == g))));
        }
        x
    };
    let fit = |with_region: bool, with_occ: bool| -> Result<Vec<f64>> {
        let design: Vec<Vec<f64>> = (0..y.len())
            .map(|k| row(k, with_region, with_occ))
            .collect();
        let beta = least_squares(&design, &y)?;
        Ok(design
            .iter()
            .map(|x| x.iter().zip(&beta).map(|(a, b)| a * b).sum())
            .collect())
    };
    let region_fit = fit(true, false)?;
    let occ_fit = fit(false, true)?;
    let full_fit = fit(true, true)?;
    let residual = y
        .iter()
        .zip(&full_fit)
        .map(|(a, f)| (a - f).powi(2))
        .sum::<f64>()
        / n;
    let total = ss(&y);
    Ok((ss(&region_fit), ss(&occ_fit), residual, total))
}

/// Solves the normal equations by Gaussian elimination with partial pivoting.
fn least_squares(design: &[Vec<f64>], y: &[f64]) -> Result<Vec<f64>> {
    let p = design[0].len();
    let mut a = vec![vec![0.0; p + 1]; p];
    for (x, &target) in design.iter().zip(y) {
        for i in 0..p {
            for j in 0..p {
                a[i][j] += x[i] * x[j];
            }
            a[i][p] += x[i] * target;
        }
    }
    for col in 0..p {
        let pivot = (col..p)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .expect("non-empty");
        if a[pivot][col].abs() < 1e-12 {
            return Err(Error::invalid("singular design matrix"));
        }
        a.swap(col, pivot);
        let pivot_row = a[col].clone();
        for (i, row) in a.iter_mut().enumerate() {
            if i != col {
                let f = row[col] / pivot_row[col];
                for (x, y) in row[col..].iter_mut().zip(&pivot_row[col..]) {
                    *x -= f * y;
                }
            }
        }
    }
    Ok((0..p).map(|i| a[i][p] / a[i][i]).collect())
}
