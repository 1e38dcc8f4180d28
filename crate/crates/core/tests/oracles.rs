use std::collections::BTreeMap;

use labournet_core::abm::{mean_field_step, run, step, LabourState, Mode, SimulationParams};
use labournet_core::network::{
    build_network, MobilityNetwork, Normalization, OccRegion, TransitionCounts,
};
use labournet_core::scenario::{reallocation_volume, DemandScenario};
use labournet_core::synthetic::expected_hires_enumeration;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn line() -> MobilityNetwork {
    let nodes = vec![
        OccRegion::new("11", "A"),
        OccRegion::new("12", "A"),
        OccRegion::new("13", "A"),
    ];
    let counts =
        TransitionCounts::from_dense(nodes, &[vec![2, 2, 0], vec![1, 2, 1], vec![0, 2, 2]]);
    build_network(&counts, Normalization::Source).unwrap()
}

fn frozen() -> SimulationParams {
    SimulationParams {
        delta_u: 0.0,
        delta_v: 0.0,
        gamma_u: 0.0,
        gamma_v: 0.0,
        ..SimulationParams::default()
    }
}

#[test]
fn one_step_replicas_match_expected_flows() {
    // vacancies only at the middle node, so every application lands there
    let net = line();
    let params = frozen();
    let start = LabourState::new(
        vec![50, 40, 30],
        vec![4, 3, 5],
        vec![0, 9, 0],
        params.age_cap_steps(),
    );
    let target = [50.0, 49.0, 30.0];
    let expected = mean_field_step(
        &LabourState::new(
            vec![50.0, 40.0, 30.0],
            vec![4.0, 3.0, 5.0],
            vec![0.0, 9.0, 0.0],
            params.age_cap_steps(),
        ),
        &target,
        &net,
        &params,
    )
    .unwrap()
    .0;
    let replicas = 10_000;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut sums = [[0.0f64; 3]; 3];
    let mut squares = [[0.0f64; 3]; 3];
    for _ in 0..replicas {
        let next = step(&start, &target, &net, &params, &mut rng).unwrap().0;
        for i in 0..3 {
            let values = [
                next.employed[i] as f64,
                next.unemployed[i] as f64,
                next.open_vacancies(i) as f64,
            ];
            for k in 0..3 {
                sums[i][k] += values[k];
                squares[i][k] += values[k] * values[k];
            }
        }
    }
    let n = replicas as f64;
    for i in 0..3 {
        let reference = [
            expected.employed[i],
            expected.unemployed[i],
            expected.open_vacancies(i),
        ];
        for k in 0..3 {
            let mean = sums[i][k] / n;
            let sd = (squares[i][k] / n - mean * mean).max(0.0).sqrt();
            let se = sd / n.sqrt();
            assert!(
                (mean - reference[k]).abs() <= 3.0 * se + 1e-12,
                "node {i} quantity {k}: {mean} vs {}",
                reference[k]
            );
        }
    }
    // 12 applicants on 9 slots
    let hires = 9.0 - expected.open_vacancies(1);
    assert!((hires - 9.0 * (1.0 - (8.0f64 / 9.0).powi(12))).abs() < 1e-12);
}

#[test]
fn closed_form_hires_match_enumeration() {
    for a in 1..=6 {
        for v in 1..=4 {
            let closed = labournet_core::abm::expected_hires(a as f64, v as f64);
            assert!((closed - expected_hires_enumeration(a, v)).abs() < 1e-12);
        }
    }
}

#[test]
fn reallocation_matches_enumeration() {
    let changes = [
        (0.0, 5.0),
        (3.0, 1.0),
        (10.0, 10.0),
        (7.0, 12.5),
        (4.0, 0.0),
        (2.0, 2.25),
    ];
    let mut d_star = BTreeMap::new();
    for (k, (a, b)) in changes.iter().enumerate() {
        let occ = format!("{}{}", 1 + k % 2, k);
        d_star.insert(
            OccRegion::new(occ, "A"),
            BTreeMap::from([(2018, *a), (2030, *b)]),
        );
    }
    let out = reallocation_volume(&d_star, 2018, 2030, |n| n.broad_group().to_string()).unwrap();
    for group in ["1", "2"] {
        let (mut created, mut destroyed) = (0.0, 0.0);
        for (node, years) in &d_star {
            if node.broad_group() != group {
                continue;
            }
            let diff = years[&2030] - years[&2018];
            if diff > 0.0 {
                created += diff;
            } else {
                destroyed -= diff;
            }
        }
        assert_eq!(out[group].created, created);
        assert_eq!(out[group].destroyed, destroyed);
    }
}

fn flat_scenario(net: &MobilityNetwork, values: &[f64], years: usize) -> DemandScenario {
    let targets = net
        .nodes()
        .iter()
        .zip(values)
        .map(|(n, v)| (n.clone(), vec![*v; years * 12 + 1]))
        .collect();
    DemandScenario::from_targets("baseline".into(), 2018, 12, targets).unwrap()
}

#[test]
fn runs_are_reproducible_per_seed() {
    let net = line();
    let sc = flat_scenario(&net, &[500.0, 400.0, 300.0], 2);
    let params = SimulationParams {
        seed: 5,
        ..SimulationParams::default()
    };
    let a = run(&sc, &net, &params).unwrap();
    let b = run(&sc, &net, &params).unwrap();
    assert_eq!(a, b);
    let c = run(
        &sc,
        &net,
        &SimulationParams {
            seed: 6,
            ..params.clone()
        },
    )
    .unwrap();
    assert_ne!(a.employed, c.employed);
    let mf = run(
        &sc,
        &net,
        &SimulationParams {
            mode: Mode::MeanField,
            ..params
        },
    )
    .unwrap();
    assert_eq!(mf.len(), 25);
}

#[test]
fn frozen_run_without_unemployment_is_constant() {
    let net = line();
    let sc = flat_scenario(&net, &[500.0, 400.0, 300.0], 1);
    let params = SimulationParams {
        initial_unemployment_share: 0.0,
        ..frozen()
    };
    let traj = run(&sc, &net, &params).unwrap();
    for t in 0..traj.len() {
        assert_eq!(traj.employed[t], vec![500.0, 400.0, 300.0]);
        assert_eq!(traj.unemployed[t], vec![0.0; 3]);
    }
}
