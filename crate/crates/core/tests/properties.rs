use std::collections::BTreeMap;

use labournet_core::abm::{step, LabourState, SimulationParams};
use labournet_core::metrics::{avg_unemployment_rate, avg_vacancy_rate, variance_decomposition};
use labournet_core::network::{
    assortativity, build_network, merge_occupations, read_network, write_edge_list, write_sidecar,
    Hierarchy, NetworkSidecar, Normalization, OccRegion, TransitionCounts,
};
use labournet_core::scenario::{
    interpolate_demand, map_sector_to_occupation, normalize_demand, OccupationIndustryMix,
    SectorDemandPath,
};
use labournet_core::synthetic::two_way_anova;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn nodes(n: usize) -> Vec<OccRegion> {
    (0..n)
        .map(|i| {
            OccRegion::new(
                format!("{}{}", 1 + i % 3, 1 + i / 6),
                if i % 2 == 0 { "A" } else { "B" },
            )
        })
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .collect()
}

fn dense_counts() -> impl Strategy<Value = TransitionCounts> {
    (2usize..8).prop_flat_map(|n| {
        let nodes = nodes(n);
        let k = nodes.len();
        prop::collection::vec(prop::collection::vec(0u64..20, k), k).prop_map(move |mut m| {
            m[0][0] += 1;
            TransitionCounts::from_dense(nodes.clone(), &m)
        })
    })
}

fn hierarchy() -> Hierarchy {
    let mut entries = Vec::new();
    for g in 1..=3 {
        entries.push((g.to_string(), String::new(), format!("g{g}")));
        for k in 1..=2 {
            entries.push((format!("{g}{k}"), g.to_string(), format!("o{g}{k}")));
        }
    }
    Hierarchy::from_entries(entries).unwrap()
}

proptest! {
    #[test]
    fn normalized_rows_sum_to_one(counts in dense_counts(), dest in any::<bool>()) {
        let norm = if dest { Normalization::Destination } else { Normalization::Source };
        let net = build_network(&counts, norm).unwrap();
        let n = net.len();
        let zero: Vec<usize> = net.zero_marginal_nodes().to_vec();
        for i in 0..n {
            if zero.contains(&i) {
                continue;
            }
            let s: f64 = match norm {
                Normalization::Source => (0..n).map(|j| net.weight(i, j)).sum(),
                Normalization::Destination => (0..n).map(|j| net.weight(j, i)).sum(),
            };
            prop_assert!((s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn assortativity_ignores_count_scale(counts in dense_counts(), k in 1u64..50) {
        let scaled = TransitionCounts::from_entries(
            counts.nodes().to_vec(),
            counts.iter().map(|(i, j, c)| (counts.nodes()[i].clone(), counts.nodes()[j].clone(), c * k)),
        );
        let a = build_network(&counts, Normalization::Source).unwrap();
        let b = build_network(&scaled, Normalization::Source).unwrap();
        let labels: Vec<&str> = a.nodes().iter().map(|n| n.region.as_str()).collect();
        let (ra, rb) = (assortativity(&a, &labels).unwrap(), assortativity(&b, &labels).unwrap());
        match (ra, rb) {
            (Some(x), Some(y)) => prop_assert!((x - y).abs() < 1e-12 && (-1.0 - 1e-12..=1.0 + 1e-12).contains(&x)),
            (x, y) => prop_assert_eq!(x, y),
        }
    }

    #[test]
    fn merging_preserves_volume_and_is_idempotent(counts in dense_counts(), min in 1u64..15) {
        let h = hierarchy();
        match merge_occupations(&counts, &h, min) {
            Ok((merged, map)) => {
                prop_assert_eq!(merged.total(), counts.total());
                for occ in counts.occupations() {
                    prop_assert!(h.contains(map.apply(occ)));
                }
                let (again, map2) = merge_occupations(&merged, &h, min).unwrap();
                prop_assert_eq!(&again, &merged);
                prop_assert_eq!(map2.num_merged(), 0);
            }
            Err(e) => prop_assert_eq!(e.kind(), labournet_core::ErrorKind::Constraint),
        }
    }

    #[test]
    fn edge_list_round_trips(counts in dense_counts()) {
        let net = build_network(&counts, Normalization::Source).unwrap();
        let mut edges = Vec::new();
        let mut side = Vec::new();
        write_edge_list(&net, &mut edges).unwrap();
        write_sidecar(&NetworkSidecar::for_network(&net, None), &mut side).unwrap();
        let (back, _) = read_network(&edges[..], &side[..]).unwrap();
        prop_assert_eq!(back.nodes(), net.nodes());
        prop_assert_eq!(back.edges().collect::<Vec<_>>(), net.edges().collect::<Vec<_>>());
    }

    #[test]
    fn interpolation_stays_between_anchors(
        anchors in prop::collection::vec(0.0f64..1e6, 2..6),
        spy in 1usize..60,
    ) {
        let yearly: BTreeMap<i32, f64> = anchors.iter().enumerate().map(|(k, v)| (2018 + k as i32, *v)).collect();
        let series = interpolate_demand(&yearly, spy).unwrap();
        prop_assert_eq!(series.len(), (anchors.len() - 1) * spy + 1);
        for (k, pair) in anchors.windows(2).enumerate() {
            prop_assert_eq!(series[k * spy], pair[0]);
            let (lo, hi) = (pair[0].min(pair[1]), pair[0].max(pair[1]));
            for v in &series[k * spy..=(k + 1) * spy] {
                prop_assert!(*v >= lo && *v <= hi);
            }
        }
        prop_assert_eq!(*series.last().unwrap(), *anchors.last().unwrap());
    }

    #[test]
    fn mixing_preserves_regional_totals(
        demand in prop::collection::vec(0.0f64..1e5, 6),
        raw_shares in prop::collection::vec(0.01f64..1.0, 9),
    ) {
        let mut rows = Vec::new();
        let mut mix = Vec::new();
        for (s, sector) in ["S1", "S2", "S3"].iter().enumerate() {
            let w = &raw_shares[s * 3..s * 3 + 3];
            let total: f64 = w.iter().sum();
            for (r, region) in ["A", "B"].iter().enumerate() {
                rows.push(("baseline".to_string(), sector.to_string(), region.to_string(), 2018, demand[s * 2 + r]));
                for (o, occ) in ["11", "12", "21"].iter().enumerate() {
                    mix.push((sector.to_string(), region.to_string(), occ.to_string(), w[o] / total));
                }
            }
        }
        let path = SectorDemandPath::from_rows(rows).unwrap();
        let mix = OccupationIndustryMix::from_rows(mix).unwrap();
        let out = map_sector_to_occupation(&path, &mix).unwrap();
        for (r, region) in ["A", "B"].iter().enumerate() {
            let input: f64 = (0..3).map(|s| demand[s * 2 + r]).sum();
            let output: f64 = out
                .scenario("baseline")
                .unwrap()
                .iter()
                .filter(|(n, _)| n.region == *region)
                .map(|(_, y)| y[&2018])
                .sum();
            prop_assert!((input - output).abs() <= 1e-9 * input.max(1.0));
        }
    }

    #[test]
    fn normalized_baseline_total_is_flat(growth in prop::collection::vec(-0.2f64..0.3, 2), base in 1.0f64..1e6) {
        let mut rows = Vec::new();
        for (s, g) in growth.iter().enumerate() {
            for y in 0..13 {
                rows.push(("baseline".to_string(), format!("S{s}"), "A".to_string(), 2018 + y, base * (1.0 + g).powi(y)));
            }
        }
        let path = SectorDemandPath::from_rows(rows).unwrap();
        let mix = OccupationIndustryMix::from_rows(vec![
            ("S0".to_string(), "A".to_string(), "11".to_string(), 1.0),
            ("S1".to_string(), "A".to_string(), "12".to_string(), 1.0),
        ])
        .unwrap();
        let norm = normalize_demand(&map_sector_to_occupation(&path, &mix).unwrap(), "baseline").unwrap();
        let first = norm.total("baseline", 2018);
        for y in 2018..=2030 {
            prop_assert!((norm.total("baseline", y) - first).abs() <= 1e-9 * first);
        }
    }

    #[test]
    fn balanced_decomposition_matches_anova(values in prop::collection::vec(-10.0f64..10.0, 12)) {
        let panel: Vec<Vec<f64>> = values.chunks(4).map(<[f64]>::to_vec).collect();
        let obs: Vec<(usize, usize, f64)> = panel
            .iter()
            .enumerate()
            .flat_map(|(r, row)| row.iter().enumerate().map(move |(o, v)| (r, o, *v)))
            .collect();
        let d = variance_decomposition(&obs).unwrap();
        let (a, b, res, total) = two_way_anova(&panel).unwrap();
        prop_assert!(d.balanced);
        prop_assert!((d.between_region - a).abs() < 1e-9);
        prop_assert!((d.between_occupation - b).abs() < 1e-9);
        prop_assert!((d.residual - res).abs() < 1e-9);
        prop_assert!((d.total - total).abs() < 1e-9);
        prop_assert!(d.discrepancy <= 1e-9 * d.total.max(1e-300) || d.total == 0.0);
    }

    #[test]
    fn steps_conserve_workers_and_rates_are_bounded(
        e in prop::collection::vec(0u64..300, 3),
        u in prop::collection::vec(0u64..30, 3),
        v in prop::collection::vec(0u64..30, 3),
        targets in prop::collection::vec(0.0f64..400.0, 3),
        seed in any::<u64>(),
    ) {
        let counts = TransitionCounts::from_dense(nodes(3), &[vec![5, 2, 0], vec![1, 5, 1], vec![0, 3, 5]]);
        let net = build_network(&counts, Normalization::Source).unwrap();
        let params = SimulationParams::default();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut state = LabourState::new(e, u, v, params.age_cap_steps());
        let mut traj_e = vec![state.employed.iter().map(|x| *x as f64).collect::<Vec<_>>()];
        let before = state.total_workers();
        for _ in 0..12 {
            state = step(&state, &targets, &net, &params, &mut rng).unwrap().0;
            prop_assert_eq!(state.total_workers(), before);
            traj_e.push(state.employed.iter().map(|x| *x as f64).collect());
        }
        let run = labournet_core::abm::run_from_state(
            state,
            &vec![targets.clone(); 13],
            &net,
            &params,
            &mut rng,
        )
        .unwrap();
        for rate in avg_unemployment_rate(&run, 0..13).unwrap().into_iter().chain(avg_vacancy_rate(&run, 0..13, 6).unwrap()).flatten() {
            prop_assert!((0.0..=1.0).contains(&rate));
        }
    }
}
