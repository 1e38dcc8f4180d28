//! Acceptance gate. Runs every criterion, prints one line each and exits
//! non-zero if any fails.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use labournet_core::abm::{run, Mode, Trajectory};
use labournet_core::metrics::{outcome_table, spearman, variance_decomposition, OutcomeTable};
use labournet_core::network::{assortativity, build_network, complete_network, merge_occupations};
use labournet_core::scenario::{
    map_sector_to_occupation, normalize_demand, YearlyDemand, BASELINE,
};
use labournet_core::synthetic::{two_way_anova, SyntheticData, SyntheticSpec};
use labournet_core::{
    DemandScenario, MobilityNetwork, Normalization, OccRegion, SimulationParams, TransitionCounts,
};
use tempfile::TempDir;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

struct Prepared {
    network: MobilityNetwork,
    normalized: YearlyDemand,
    baseline: DemandScenario,
    shock: DemandScenario,
}

fn prepare(spec: &SyntheticSpec) -> Prepared {
    let data = SyntheticData::generate(spec).unwrap();
    let (merged, map) = merge_occupations(&data.counts, &data.hierarchy, 1).unwrap();
    let network = build_network(&merged, Normalization::Source).unwrap();
    let regions = spec.region_ids();
    let mix = data
        .national_mix
        .broadcast_national(regions.iter().map(String::as_str))
        .unwrap()
        .remap(&map);
    let raw = map_sector_to_occupation(&data.sector_demand, &mix).unwrap();
    let normalized = normalize_demand(&raw, BASELINE).unwrap();
    let baseline = DemandScenario::prepare(&normalized, BASELINE, 12).unwrap();
    let shock = DemandScenario::prepare(&normalized, "shock", 12).unwrap();
    Prepared {
        network,
        normalized,
        baseline,
        shock,
    }
}

fn conservation() -> Outcome {
    let spec = SyntheticSpec {
        n_groups: 5,
        branching: 2,
        depth: 2,
        n_regions: 5,
        total_employment: 100_000.0,
        ..SyntheticSpec::default()
    };
    let p = prepare(&spec);
    if p.network.len() != 50 {
        return Err(format!("instance has {} nodes", p.network.len()));
    }
    let mut slowest = Duration::ZERO;
    for seed in 0..10 {
        let params = SimulationParams {
            seed,
            ..Default::default()
        };
        let start = Instant::now();
        let traj = run(&p.shock, &p.network, &params).map_err(|e| e.to_string())?;
        slowest = slowest.max(start.elapsed());
        if traj.len() != 145 {
            return Err(format!("seed {seed}: {} recorded states", traj.len()));
        }
        let l0 = traj.total_workers(0);
        if let Some(t) = (0..traj.len()).find(|&t| traj.total_workers(t) != l0) {
            return Err(format!("seed {seed}: workers changed at step {t}"));
        }
    }
    check(
        slowest < Duration::from_secs(1),
        format!("50 nodes, 144 steps, seeds 0..10 conserve workers; slowest run {slowest:.2?}"),
    )
}

fn dense(rows: &[Vec<u64>]) -> MobilityNetwork {
    let nodes = (0..rows.len())
        .map(|i| OccRegion::new(format!("1{i}"), "r"))
        .collect();
    build_network(
        &TransitionCounts::from_dense(nodes, rows),
        Normalization::Source,
    )
    .unwrap()
}

fn exactness() -> Outcome {
    let net = dense(&[vec![3, 1], vec![1, 3]]);
    let expected = [[0.75, 0.25], [0.25, 0.75]];
    let mut err: f64 = 0.0;
    for (i, row) in expected.iter().enumerate() {
        for (j, w) in row.iter().enumerate() {
            err = err.max((net.weight(i, j) - w).abs());
        }
    }
    let blocks = [
        vec![2, 1, 0, 0],
        vec![1, 2, 0, 0],
        vec![0, 0, 2, 1],
        vec![0, 0, 1, 2],
    ];
    let perfect = assortativity(&dense(&blocks), &[0, 0, 1, 1]).unwrap();
    let nodes = (0..4)
        .map(|i| OccRegion::new(format!("1{i}"), "r"))
        .collect();
    let neutral = assortativity(&complete_network(nodes).unwrap(), &[0, 0, 1, 1]).unwrap();
    let mixed = assortativity(&dense(&[vec![4, 1], vec![1, 4]]), &[0, 1]).unwrap();
    let (Some(perfect), Some(neutral), Some(mixed)) = (perfect, neutral, mixed) else {
        return Err("assortativity undefined on an analytic case".into());
    };
    err = err
        .max((perfect - 1.0).abs())
        .max(neutral.abs())
        .max((mixed - 0.6).abs());
    check(
        err < 1e-12,
        format!("weights and r = {perfect}, {neutral}, {mixed}; max error {err:.1e}"),
    )
}

fn normalization_identity() -> Outcome {
    let p = prepare(&SyntheticSpec::default());
    let years = p.normalized.years(BASELINE);
    if years.len() != 13 {
        return Err(format!("{} scenario years", years.len()));
    }
    let first = *years.first().unwrap();
    let reference = p.normalized.total(BASELINE, first);
    let mut worst: f64 = 0.0;
    for &y in &years {
        worst = worst.max(((p.normalized.total(BASELINE, y) - reference) / reference).abs());
        worst = worst.max(((p.baseline.total_at_year(y) - reference) / reference).abs());
    }
    for t in 0..p.baseline.horizon() {
        let total: f64 = p.baseline.d_target.values().map(|s| s[t]).sum();
        worst = worst.max(((total - reference) / reference).abs());
    }
    check(
        worst < 1e-9,
        format!("13 years, every step; max relative drift {worst:.1e}"),
    )
}

type Series = fn(&Trajectory) -> &Vec<Vec<f64>>;

fn mean_field_consistency() -> Outcome {
    let nodes: Vec<OccRegion> = ["11", "12", "21", "22", "31"]
        .iter()
        .map(|o| OccRegion::new(*o, "A"))
        .collect();
    let counts = [
        vec![30, 6, 2, 0, 1],
        vec![5, 40, 3, 1, 0],
        vec![2, 2, 25, 8, 1],
        vec![0, 1, 6, 35, 4],
        vec![1, 0, 2, 3, 20],
    ];
    let net = build_network(
        &TransitionCounts::from_dense(nodes.clone(), &counts),
        Normalization::Source,
    )
    .unwrap();
    let start = [10_000.0, 20_000.0, 10_000.0, 30_000.0, 10_000.0];
    let end = [13_000.0, 17_000.0, 12_000.0, 26_000.0, 12_000.0];
    let targets: BTreeMap<OccRegion, Vec<f64>> = nodes
        .iter()
        .enumerate()
        .map(|(i, n)| {
            let path = (0..=144)
                .map(|t| start[i] + (end[i] - start[i]) * t as f64 / 144.0)
                .collect();
            (n.clone(), path)
        })
        .collect();
    let scenario = DemandScenario::from_targets("ramp".into(), 2018, 12, targets).unwrap();

    let clock = Instant::now();
    let mean_field = run(
        &scenario,
        &net,
        &SimulationParams {
            mode: Mode::MeanField,
            ..Default::default()
        },
    )
    .map_err(|e| e.to_string())?;
    let runs: Vec<Trajectory> = (0..200)
        .map(|seed| {
            run(
                &scenario,
                &net,
                &SimulationParams {
                    seed,
                    ..Default::default()
                },
            )
        })
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    let elapsed = clock.elapsed();

    let quantities: [(&str, Series); 3] = [
        ("e", |t| &t.employed),
        ("u", |t| &t.unemployed),
        ("v", |t| &t.vacancies),
    ];
    let (mut worst, mut misses) = (0.0f64, Vec::new());
    for t in (0..=144).step_by(12) {
        for i in 0..nodes.len() {
            for (name, get) in &quantities {
                let xs: Vec<f64> = runs.iter().map(|r| get(r)[t][i]).collect();
                let n = xs.len() as f64;
                let mean = xs.iter().sum::<f64>() / n;
                let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
                let se = (var / n).sqrt();
                let gap = (mean - get(&mean_field)[t][i]).abs();
                if se == 0.0 {
                    if gap > 1e-9 {
                        misses.push(format!("{name}[{i}]@{t} degenerate"));
                    }
                    continue;
                }
                worst = worst.max(gap / se);
                if gap > 3.0 * se {
                    misses.push(format!("{name}[{i}]@{t} z={:.2}", gap / se));
                }
            }
        }
    }
    check(
        misses.is_empty() && elapsed < Duration::from_secs(30),
        format!(
            "200 seeds, 13 checkpoints x 5 nodes x 3 series; worst |z| {worst:.2}; {elapsed:.1?}{}",
            if misses.is_empty() {
                String::new()
            } else {
                format!("; outside 3 SE: {}", misses.join(", "))
            }
        ),
    )
}

/// Outcome tables for the 200-node shock under the frictional and the
/// complete network, on the same seeds.
struct ShockStudy {
    frictional: BTreeMap<u32, OutcomeTable>,
    complete: OutcomeTable,
}

fn shock_study() -> ShockStudy {
    let p = prepare(&SyntheticSpec::default());
    assert_eq!(p.network.len(), 200);
    let complete = complete_network(p.network.nodes().to_vec()).unwrap();
    let ensemble = |net: &MobilityNetwork, scenario: &DemandScenario| -> Vec<Trajectory> {
        (0..24)
            .map(|seed| {
                let params = SimulationParams {
                    seed,
                    initial_unemployment_share: 0.02,
                    ..Default::default()
                };
                run(scenario, net, &params).unwrap()
            })
            .collect()
    };
    let window = 0..p.shock.horizon() + 1;
    let tables = |net: &MobilityNetwork, xs: &[u32]| -> BTreeMap<u32, OutcomeTable> {
        let (b, s) = (ensemble(net, &p.baseline), ensemble(net, &p.shock));
        xs.iter()
            .map(|&x| {
                (
                    x,
                    outcome_table(&b, &s, &p.baseline, &p.shock, window.clone(), x).unwrap(),
                )
            })
            .collect()
    };
    ShockStudy {
        frictional: tables(&p.network, &[3, 6, 12]),
        complete: tables(&complete, &[6]).remove(&6).unwrap(),
    }
}

fn demand_and_unemployment(table: &OutcomeTable) -> (Vec<f64>, Vec<f64>) {
    table
        .rows
        .iter()
        .filter_map(|r| Some((r.demand_change_pct?, r.u_delta_pp?)))
        .unzip()
}

fn inverse_relationship(study: &ShockStudy) -> Outcome {
    let (dc, du) = demand_and_unemployment(&study.frictional[&6]);
    match spearman(&dc, &du) {
        Some(rho) => check(
            rho <= -0.5,
            format!("Spearman {rho:.3} over {} nodes (need <= -0.5)", dc.len()),
        ),
        None => Err("Spearman undefined".into()),
    }
}

/// Pooled within-bin standard deviation of unemployment deltas, with nodes
/// sorted by demand change and cut into bins of `size`.
fn within_bin_sd(table: &OutcomeTable, size: usize) -> f64 {
    let (dc, du) = demand_and_unemployment(table);
    let mut order: Vec<usize> = (0..dc.len()).collect();
    order.sort_by(|&a, &b| dc[a].total_cmp(&dc[b]));
    let mut ss = 0.0;
    for bin in order.chunks(size) {
        let mean = bin.iter().map(|&i| du[i]).sum::<f64>() / bin.len() as f64;
        ss += bin.iter().map(|&i| (du[i] - mean).powi(2)).sum::<f64>();
    }
    (ss / du.len() as f64).sqrt()
}

fn friction_contrast(study: &ShockStudy) -> Outcome {
    let frictional = within_bin_sd(&study.frictional[&6], 10);
    let complete = within_bin_sd(&study.complete, 10);
    check(
        complete <= 0.5 * frictional,
        format!(
            "within-bin SD complete {complete:.4} pp vs frictional {frictional:.4} pp (ratio {:.2}, need <= 0.5)",
            complete / frictional
        ),
    )
}

fn vacancy_robustness(study: &ShockStudy) -> Outcome {
    let deltas: Vec<Vec<Option<f64>>> = [3, 6, 12]
        .iter()
        .map(|x| {
            study.frictional[x]
                .rows
                .iter()
                .map(|r| r.v_delta_pp)
                .collect()
        })
        .collect();
    let mut worst = f64::INFINITY;
    let mut parts = Vec::new();
    for (a, b, label) in [(0, 1, "3/6"), (1, 2, "6/12"), (0, 2, "3/12")] {
        let (x, y): (Vec<f64>, Vec<f64>) = deltas[a]
            .iter()
            .zip(&deltas[b])
            .filter_map(|(x, y)| Some(((*x)?, (*y)?)))
            .unzip();
        let Some(rho) = spearman(&x, &y) else {
            return Err(format!("Spearman undefined for {label}"));
        };
        worst = worst.min(rho);
        parts.push(format!("{label} {rho:.3}"));
    }
    check(worst >= 0.8, format!("{} (need >= 0.8)", parts.join(", ")))
}

fn variance_decomposition_oracle() -> Outcome {
    let (regions, occupations) = (6, 7);
    let mut worst_component: f64 = 0.0;
    let mut worst_sum: f64 = 0.0;
    let mut state = 0x2545_f491_4f6c_dd1du64;
    let mut uniform = move || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state >> 11) as f64 / (1u64 << 53) as f64
    };
    for _ in 0..20 {
        let panel: Vec<Vec<f64>> = (0..regions)
            .map(|_| (0..occupations).map(|_| uniform() * 4.0 - 2.0).collect())
            .collect();
        let obs: Vec<(usize, usize, f64)> = panel
            .iter()
            .enumerate()
            .flat_map(|(r, row)| row.iter().enumerate().map(move |(o, &v)| (r, o, v)))
            .collect();
        let d = variance_decomposition(&obs).map_err(|e| e.to_string())?;
        let (reg, occ, res, tot) = two_way_anova(&panel).map_err(|e| e.to_string())?;
        for (a, b) in [
            (d.between_region, reg),
            (d.between_occupation, occ),
            (d.residual, res),
            (d.total, tot),
        ] {
            worst_component = worst_component.max((a - b).abs());
        }
        worst_sum = worst_sum.max(d.discrepancy / d.total);
    }
    let region_only: Vec<(usize, usize, f64)> = [1.0, 2.0, 3.0, 6.0]
        .iter()
        .enumerate()
        .flat_map(|(r, &v)| (0..5).map(move |o| (r, o, v)))
        .collect();
    let d = variance_decomposition(&region_only).map_err(|e| e.to_string())?;
    let region_exact = d.total > 0.0
        && d.between_region == d.total
        && d.between_occupation == 0.0
        && d.residual == 0.0;
    let constant: Vec<(usize, usize, f64)> = (0..4)
        .flat_map(|r| (0..5).map(move |o| (r, o, 0.37)))
        .collect();
    let c = variance_decomposition(&constant).map_err(|e| e.to_string())?;
    let constant_exact = (c.between_region, c.between_occupation, c.residual) == (0.0, 0.0, 0.0);
    check(
        worst_component < 1e-9 && worst_sum < 1e-9 && region_exact && constant_exact,
        format!(
            "20 random 6x7 panels: max |component - oracle| {worst_component:.1e}, max discrepancy/total {worst_sum:.1e}; region-only exact {region_exact}; constant exact {constant_exact}"
        ),
    )
}

fn cli(args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_labournet"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(format!(
            "{args:?} failed: {}",
            String::from_utf8_lossy(&out.stderr)
        ))
    }
}

fn pipeline(root: &Path) -> Result<(), String> {
    let p = |s: &str| root.join(s).to_str().unwrap().to_string();
    let (data, net, sc, runs, an) = (p("data"), p("net"), p("sc"), p("runs"), p("an"));
    let f = |dir: &str, name: &str| format!("{dir}/{name}");
    cli(&["gen-synthetic", "--seed", "7", "--out", &data])?;
    cli(&[
        "build-network",
        "--transitions",
        &f(&data, "transitions.csv"),
        "--hierarchy",
        &f(&data, "hierarchy.csv"),
        "--regions",
        &f(&data, "regions.csv"),
        "--min-presence",
        "30",
        "--out",
        &net,
    ])?;
    cli(&[
        "prepare-scenario",
        "--sector-demand",
        &f(&data, "sector_demand.csv"),
        "--mix",
        &f(&data, "mix_national.csv"),
        "--national-mix",
        "--regions",
        &f(&data, "regions.csv"),
        "--merge-map",
        &f(&net, "merge_map.csv"),
        "--out",
        &sc,
    ])?;
    cli(&[
        "simulate",
        "--network",
        &net,
        "--scenarios-dir",
        &sc,
        "--seed",
        "11",
        "--seeds",
        "2",
        "--out",
        &runs,
    ])?;
    cli(&[
        "analyze",
        "--runs",
        &runs,
        "--scenarios-dir",
        &sc,
        "--out",
        &an,
    ])
}

fn tree(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else if path.file_name().is_some_and(|n| n != "timing.json") {
                out.insert(
                    path.strip_prefix(root).unwrap().to_path_buf(),
                    fs::read(&path).unwrap(),
                );
            }
        }
    }
    out
}

fn determinism() -> Outcome {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    pipeline(a.path())?;
    pipeline(b.path())?;
    let (ta, tb) = (tree(a.path()), tree(b.path()));
    if ta.keys().ne(tb.keys()) {
        return Err("the two runs wrote different file sets".into());
    }
    let differing: Vec<String> = ta
        .iter()
        .filter(|(k, v)| tb[*k] != **v)
        .map(|(k, _)| k.display().to_string())
        .collect();
    check(
        differing.is_empty(),
        if differing.is_empty() {
            format!(
                "{} files byte-identical across two full pipeline runs (timing.json excluded)",
                ta.len()
            )
        } else {
            format!("differing files: {}", differing.join(", "))
        },
    )
}

fn main() {
    let mut failed = 0;
    let mut report = |id: u32, name: &str, outcome: Outcome| {
        let (status, detail) = match outcome {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("criterion {id:>2} {status} {name}: {detail}");
    };
    report(1, "conservation", conservation());
    report(2, "network weights and assortativity", exactness());
    report(3, "baseline normalization", normalization_identity());
    report(4, "mean-field consistency", mean_field_consistency());
    let study = shock_study();
    report(
        5,
        "inverse demand-unemployment relationship",
        inverse_relationship(&study),
    );
    report(6, "no-friction contrast", friction_contrast(&study));
    report(7, "variance decomposition", variance_decomposition_oracle());
    report(8, "vacancy-duration robustness", vacancy_robustness(&study));
    report(9, "determinism", determinism());
    println!(
        "criterion 10 NOTE reference figures: regional/occupational assortativity 0.77/0.56, variance shares 43%/46%, \
         1.4 million reallocated jobs and the 1.66/1.72 pp regional deltas need administrative microdata and \
         general-equilibrium scenario outputs; they are documented targets, covered here by criteria 1-9"
    );
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
