use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;

use super::state::FlowMatrix;
use crate::network::MobilityNetwork;

/// One job application by an unemployed worker.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Application {
    /// Worker id, unique within one step.
    pub worker: usize,
    /// Node whose unemployment pool the worker belongs to.
    pub origin: usize,
    /// Node of the vacancy applied to.
    pub target: usize,
}

/// Target weights `A[origin, j] * v[j]` over nodes with open vacancies.
fn target_weights(
    network: &MobilityNetwork,
    origin: usize,
    vacancies: &[u64],
) -> (Vec<usize>, Vec<f64>) {
    network
        .row(origin)
        .filter(|&(j, w)| w > 0.0 && vacancies[j] > 0)
        .map(|(j, w)| (j, w * vacancies[j] as f64))
        .unzip()
}

/// Each worker in `pool[i]` files `per_worker` applications, each targeting
/// node `j` with probability proportional to `A[i, j] * vacancies[j]`.
/// Workers with no admissible target stay idle this step.
pub fn applications<R: Rng + ?Sized>(
    pool: &[u64],
    vacancies: &[u64],
    network: &MobilityNetwork,
    per_worker: u32,
    rng: &mut R,
) -> Vec<Application> {
    let mut out = Vec::new();
    let mut worker = 0usize;
    // every origin shares the same distribution on the complete network
    let shared = network
        .is_complete()
        .then(|| target_weights(network, 0, vacancies));
    for (origin, &n) in pool.iter().enumerate() {
        if n == 0 {
            continue;
        }
        let owned;
        let (targets, weights) = match &shared {
            Some(tw) => tw,
            None => {
                owned = target_weights(network, origin, vacancies);
                &owned
            }
        };
        if targets.is_empty() {
            worker += n as usize;
            continue;
        }
        let dist = WeightedIndex::new(weights).expect("positive weights");
        for _ in 0..n {
            for _ in 0..per_worker {
                out.push(Application {
                    worker,
                    origin,
                    target: targets[dist.sample(rng)],
                });
            }
            worker += 1;
        }
    }
    out
}

/// Resolves applications into hires.
///
/// Every application lands on a uniformly chosen open vacancy of its target
/// node; each vacancy with applicants offers the job to one of them
/// uniformly; a worker holding several offers accepts one uniformly and the
/// declined vacancies stay open.
pub fn matching<R: Rng + ?Sized>(
    apps: &[Application],
    vacancies: &[u64],
    rng: &mut R,
) -> FlowMatrix<u64> {
    let mut offsets = Vec::with_capacity(vacancies.len() + 1);
    offsets.push(0usize);
    for &v in vacancies {
        offsets.push(offsets.last().unwrap() + v as usize);
    }
    // per slot: applicants seen so far and the current holder (reservoir sampling)
    let mut seen = vec![0u32; *offsets.last().unwrap()];
    let mut holder = vec![0usize; seen.len()];
    for (k, a) in apps.iter().enumerate() {
        let v = vacancies[a.target];
        if v == 0 {
            continue;
        }
        let slot = offsets[a.target] + rng.random_range(0..v) as usize;
        seen[slot] += 1;
        if seen[slot] == 1 || rng.random_range(0..seen[slot]) == 0 {
            holder[slot] = k;
        }
    }
    let mut offers: Vec<(usize, usize)> = seen
        .iter()
        .zip(&holder)
        .filter(|(n, _)| **n > 0)
        .map(|(_, &k)| (apps[k].worker, k))
        .collect();
    offers.sort_unstable();

    let mut flows = FlowMatrix::new();
    for group in offers.chunk_by(|x, y| x.0 == y.0) {
        let app = &apps[group[rng.random_range(0..group.len())].1];
        flows.add(app.origin, app.target, 1);
    }
    flows
}

/// Expected number of vacancies receiving at least one of `applications`
/// applications spread uniformly over `vacancies` open positions, never
/// more than the number of applications.
pub fn expected_hires(applications: f64, vacancies: f64) -> f64 {
    if applications <= 0.0 || vacancies <= 0.0 {
        return 0.0;
    }
    if vacancies <= 1.0 {
        return applications.min(vacancies);
    }
    let untouched = (1.0 - 1.0 / vacancies).powf(applications);
    (vacancies * (1.0 - untouched)).min(applications)
}

/// Expected hires between nodes when `pool[i]` workers each send one
/// application. Hires at a node are split across origins in proportion to
/// their expected applications there.
pub fn expected_matching(
    pool: &[f64],
    vacancies: &[f64],
    network: &MobilityNetwork,
) -> FlowMatrix<f64> {
    let n = pool.len();
    let mut apps: Vec<(usize, usize, f64)> = Vec::new();
    let mut arriving = vec![0.0; n];
    for (origin, &workers) in pool.iter().enumerate() {
        if workers <= 0.0 {
            continue;
        }
        let row: Vec<(usize, f64)> = network
            .row(origin)
            .filter(|&(j, w)| w > 0.0 && vacancies[j] > 0.0)
            .map(|(j, w)| (j, w * vacancies[j]))
            .collect();
        let total: f64 = row.iter().map(|x| x.1).sum();
        if total <= 0.0 {
            continue;
        }
        for (j, w) in row {
            let a = workers * w / total;
            apps.push((origin, j, a));
            arriving[j] += a;
        }
    }
    let hires: Vec<f64> = (0..n)
        .map(|j| expected_hires(arriving[j], vacancies[j]))
        .collect();
    let mut flows = FlowMatrix::new();
    for (origin, j, a) in apps {
        if arriving[j] > 0.0 {
            flows.add(origin, j, hires[j] * a / arriving[j]);
        }
    }
    flows
}
