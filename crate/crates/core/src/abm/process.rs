use rand::Rng;
use rand_distr::{Binomial, Distribution};

use super::params::SimulationParams;
use super::state::{ExpectedState, LabourState};

/// Expected separations and openings for one node given employment `e`,
/// open vacancies `v` and next-step target demand.
///
/// With gap `= e + v - target`: separations are `delta_u * e` plus
/// `(1 - delta_u) * gamma_u * max(0, gap)`, capped at `e`; openings are
/// `delta_v * e` plus `(1 - delta_v) * gamma_v * max(0, -gap)`.
pub fn expected_separations_openings(
    e: f64,
    v: f64,
    target: f64,
    params: &SimulationParams,
) -> (f64, f64) {
    let gap = e + v - target;
    let b = params.delta_u * e + (1.0 - params.delta_u) * params.gamma_u * gap.max(0.0);
    let c = params.delta_v * e + (1.0 - params.delta_v) * params.gamma_v * (-gap).max(0.0);
    (b.min(e), c)
}

fn binomial<R: Rng + ?Sized>(n: u64, p: f64, rng: &mut R) -> u64 {
    if n == 0 || p <= 0.0 {
        return 0;
    }
    if p >= 1.0 {
        return n;
    }
    Binomial::new(n, p).expect("valid binomial").sample(rng)
}

/// Random separations and openings for one node. Each employed worker
/// separates independently; openings are binomial over employed positions
/// with the matching per-position probability, or `ceil(gamma_v * gap)` when
/// the node has no employment.
pub fn draw_separations_openings<R: Rng + ?Sized>(
    e: u64,
    v: u64,
    target: f64,
    params: &SimulationParams,
    rng: &mut R,
) -> (u64, u64) {
    let gap = (e + v) as f64 - target;
    let excess = gap.max(0.0);
    let shortfall = (-gap).max(0.0);
    let b = if e > 0 {
        let p = params.delta_u + (1.0 - params.delta_u) * params.gamma_u * excess / e as f64;
        binomial(e, p.min(1.0), rng)
    } else {
        0
    };
    let c = if e > 0 {
        let p = params.delta_v + (1.0 - params.delta_v) * params.gamma_v * shortfall / e as f64;
        binomial(e, p.min(1.0), rng)
    } else {
        (params.gamma_v * shortfall).ceil() as u64
    };
    (b, c)
}

/// Separations `b` and openings `c` for every node of an agent state.
pub fn separations_and_openings<R: Rng + ?Sized>(
    state: &LabourState,
    targets: &[f64],
    params: &SimulationParams,
    rng: &mut R,
) -> (Vec<u64>, Vec<u64>) {
    (0..state.len())
        .map(|i| {
            draw_separations_openings(
                state.employed[i],
                state.open_vacancies(i),
                targets[i],
                params,
                rng,
            )
        })
        .unzip()
}

/// Expected separations and openings for every node of a mean-field state.
pub fn expected_separations_and_openings(
    state: &ExpectedState,
    targets: &[f64],
    params: &SimulationParams,
) -> (Vec<f64>, Vec<f64>) {
    (0..state.len())
        .map(|i| {
            expected_separations_openings(
                state.employed[i],
                state.open_vacancies(i),
                targets[i],
                params,
            )
        })
        .unzip()
}
