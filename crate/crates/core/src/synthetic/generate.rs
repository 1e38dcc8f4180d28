use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{Hierarchy, OccRegion, RegionManifest, TransitionCounts};
use crate::scenario::{OccupationIndustryMix, SectorDemandPath, BASELINE};

/// Region label used for the national occupation mix.
pub const NATIONAL: &str = "national";

/// Annual sector growth rates for one scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShockProfile {
    pub name: String,
    /// One rate per sector, e.g. `0.03` for +3% a year.
    pub sector_growth: Vec<f64>,
}

/// Parameters of a synthetic economy.
///
/// Occupations form a uniform tree: `n_groups` 1-digit codes, each level
/// below adding `branching` children, `depth` levels in total. Transition
/// propensity between two nodes is the product of a region factor and an
/// occupation-group factor (`within_*` when shared, `cross_weight` otherwise).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticSpec {
    pub n_groups: usize,
    pub branching: usize,
    pub depth: usize,
    pub n_regions: usize,
    pub within_region_weight: f64,
    pub within_occupation_weight: f64,
    pub cross_weight: f64,
    /// Expected recorded transitions leaving each node.
    pub transitions_per_node: f64,
    pub n_sectors: usize,
    /// Total first-year demand across all nodes.
    pub total_employment: f64,
    pub first_year: i32,
    pub last_year: i32,
    pub scenarios: Vec<ShockProfile>,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        let n_sectors = 4;
        SyntheticSpec {
            n_groups: 5,
            branching: 2,
            depth: 3,
            n_regions: 10,
            within_region_weight: 30.0,
            within_occupation_weight: 10.0,
            cross_weight: 1.0,
            transitions_per_node: 400.0,
            n_sectors,
            total_employment: 400_000.0,
            first_year: 2018,
            last_year: 2030,
            scenarios: vec![
                ShockProfile {
                    name: BASELINE.into(),
                    sector_growth: vec![0.01; n_sectors],
                },
                ShockProfile {
                    name: "shock".into(),
                    sector_growth: vec![0.07, -0.025, 0.01, 0.01],
                },
            ],
            seed: 1,
        }
    }
}

impl SyntheticSpec {
    pub fn n_occupations(&self) -> usize {
        self.n_groups * self.branching.pow(self.depth.saturating_sub(1) as u32)
    }

    pub fn n_nodes(&self) -> usize {
        self.n_occupations() * self.n_regions
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=9).contains(&self.n_groups) || !(1..=9).contains(&self.branching) {
            return Err(Error::invalid("n_groups and branching must lie in 1..=9"));
        }
        if self.depth == 0 || self.n_regions == 0 || self.n_sectors == 0 {
            return Err(Error::invalid(
                "depth, n_regions and n_sectors must be at least 1",
            ));
        }
        let weights = [
            self.within_region_weight,
            self.within_occupation_weight,
            self.cross_weight,
        ];
        if weights.iter().any(|w| !(*w >= 0.0 && w.is_finite())) {
            return Err(Error::invalid(
                "attachment weights must be finite and non-negative",
            ));
        }
        if self.within_region_weight.max(self.cross_weight) == 0.0
            || self.within_occupation_weight.max(self.cross_weight) == 0.0
        {
            return Err(Error::invalid(
                "attachment weights give every transition zero propensity",
            ));
        }
        if [self.transitions_per_node, self.total_employment]
            .iter()
            .any(|x| x.is_nan() || *x <= 0.0)
        {
            return Err(Error::invalid(
                "transitions_per_node and total_employment must be positive",
            ));
        }
        if self.last_year <= self.first_year {
            return Err(Error::invalid("last_year must come after first_year"));
        }
        if !self.scenarios.iter().any(|s| s.name == BASELINE) {
            return Err(Error::invalid(format!(
                "scenarios must include {BASELINE:?}"
            )));
        }
        for s in &self.scenarios {
            if s.sector_growth.len() != self.n_sectors {
                return Err(Error::invalid(format!(
                    "scenario {} has {} growth rates for {} sectors",
                    s.name,
                    s.sector_growth.len(),
                    self.n_sectors
                )));
            }
            if s.sector_growth.iter().any(|g| g.is_nan() || *g <= -1.0) {
                return Err(Error::invalid(format!(
                    "scenario {} has a growth rate at or below -100%",
                    s.name
                )));
            }
        }
        Ok(())
    }

    fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        rng
    }

    pub fn region_ids(&self) -> Vec<String> {
        (1..=self.n_regions).map(|r| format!("R{r:02}")).collect()
    }

    fn sector_ids(&self) -> Vec<String> {
        (1..=self.n_sectors).map(|s| format!("S{s:02}")).collect()
    }

    /// Leaf occupation codes in sorted order.
    pub fn occupations(&self) -> Vec<String> {
        let mut level: Vec<String> = (1..=self.n_groups).map(|g| g.to_string()).collect();
        for _ in 1..self.depth {
            level = level
                .iter()
                .flat_map(|c| (1..=self.branching).map(move |k| format!("{c}{k}")))
                .collect();
        }
        level
    }
}

/// Every input file of a synthetic economy.
#[derive(Debug, Clone)]
pub struct SyntheticData {
    pub hierarchy: Hierarchy,
    pub regions: RegionManifest,
    pub counts: TransitionCounts,
    pub sector_demand: SectorDemandPath,
    /// Shares keyed by the [`NATIONAL`] region label.
    pub national_mix: OccupationIndustryMix,
}

impl SyntheticData {
    pub fn generate(spec: &SyntheticSpec) -> Result<Self> {
        spec.validate()?;
        Ok(SyntheticData {
            hierarchy: gen_hierarchy(spec)?,
            regions: gen_regions(spec),
            counts: gen_transitions(spec)?,
            sector_demand: gen_sector_demand(spec)?,
            national_mix: gen_national_mix(spec)?,
        })
    }

    /// Writes `hierarchy.csv`, `regions.csv`, `transitions.csv`,
    /// `sector_demand.csv` and `mix_national.csv` into `dir`.
    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let open = |name: &str| -> Result<BufWriter<File>> {
            Ok(BufWriter::new(File::create(dir.join(name))?))
        };
        self.hierarchy.write_csv(open("hierarchy.csv")?)?;
        self.regions.write_csv(open("regions.csv")?)?;
        self.counts.write_csv(open("transitions.csv")?)?;
        self.sector_demand.write_csv(open("sector_demand.csv")?)?;
        self.national_mix.write_csv(open("mix_national.csv")?)?;
        Ok(())
    }
}

pub fn gen_hierarchy(spec: &SyntheticSpec) -> Result<Hierarchy> {
    spec.validate()?;
    let mut entries = Vec::new();
    let mut level: Vec<String> = (1..=spec.n_groups).map(|g| g.to_string()).collect();
    for code in &level {
        entries.push((code.clone(), String::new(), format!("Group {code}")));
    }
    for _ in 1..spec.depth {
        let mut next = Vec::new();
        for parent in &level {
            for k in 1..=spec.branching {
                let code = format!("{parent}{k}");
                entries.push((code.clone(), parent.clone(), format!("Occupation {code}")));
                next.push(code);
            }
        }
        level = next;
    }
    Hierarchy::from_entries(entries)
}

pub fn gen_regions(spec: &SyntheticSpec) -> RegionManifest {
    RegionManifest::new(
        spec.region_ids()
            .into_iter()
            .enumerate()
            .map(|(i, id)| (id, format!("Region {}", i + 1))),
    )
}

/// Poisson transition counts between leaf-occupation nodes. A ring of
/// single transitions through all nodes (in sorted order) keeps the network
/// connected and every node present.
pub fn gen_transitions(spec: &SyntheticSpec) -> Result<TransitionCounts> {
    spec.validate()?;
    let nodes: Vec<OccRegion> = spec
        .occupations()
        .iter()
        .flat_map(|o| {
            spec.region_ids()
                .into_iter()
                .map(move |r| OccRegion::new(o.clone(), r))
        })
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .collect();
    let n = nodes.len();
    let factor = |same: bool, within: f64| if same { within } else { spec.cross_weight };
    let mut rng = spec.rng(1);
    let mut matrix = vec![vec![0u64; n]; n];
    for (i, a) in nodes.iter().enumerate() {
        let kernel: Vec<f64> = nodes
            .iter()
            .map(|b| {
                factor(a.region == b.region, spec.within_region_weight)
                    * factor(
                        a.broad_group() == b.broad_group(),
                        spec.within_occupation_weight,
                    )
            })
            .collect();
        let total: f64 = kernel.iter().sum();
        for (j, k) in kernel.iter().enumerate() {
            let lambda = spec.transitions_per_node * k / total;
            if lambda > 0.0 {
                let draw: f64 = Poisson::new(lambda)
                    .map_err(|e| Error::invalid(format!("poisson rate {lambda}: {e}")))?
                    .sample(&mut rng);
                matrix[i][j] = draw as u64;
            }
        }
    }
    for (i, row) in matrix.iter_mut().enumerate() {
        let ring = &mut row[(i + 1) % n];
        *ring = (*ring).max(1);
    }
    Ok(TransitionCounts::from_dense(nodes, &matrix))
}

/// Sector demand per region and year: region and sector sizes are drawn
/// once, the first-year grid is scaled to `total_employment`, and each
/// scenario compounds its sector growth rates.
pub fn gen_sector_demand(spec: &SyntheticSpec) -> Result<SectorDemandPath> {
    spec.validate()?;
    let mut rng = spec.rng(2);
    let regions = spec.region_ids();
    let sectors = spec.sector_ids();
    let region_size: Vec<f64> = regions.iter().map(|_| rng.random_range(0.5..1.5)).collect();
    let sector_size: Vec<f64> = sectors.iter().map(|_| rng.random_range(0.5..1.5)).collect();
    let mut base = vec![vec![0.0; regions.len()]; sectors.len()];
    for (s, row) in base.iter_mut().enumerate() {
        for (r, cell) in row.iter_mut().enumerate() {
            *cell = sector_size[s] * region_size[r] * rng.random_range(0.5..1.5);
        }
    }
    let grid_total: f64 = base.iter().flatten().sum();
    let scale = spec.total_employment / grid_total;
    let mut rows = Vec::new();
    for profile in &spec.scenarios {
        for (s, sector) in sectors.iter().enumerate() {
            let growth = 1.0 + profile.sector_growth[s];
            for (r, region) in regions.iter().enumerate() {
                for year in spec.first_year..=spec.last_year {
                    let value = base[s][r] * scale * growth.powi(year - spec.first_year);
                    rows.push((
                        profile.name.clone(),
                        sector.clone(),
                        region.clone(),
                        year,
                        value,
                    ));
                }
            }
        }
    }
    SectorDemandPath::from_rows(rows)
}

/// National occupation shares per sector. Shares are skewed so that each
/// occupation leans on a few sectors.
pub fn gen_national_mix(spec: &SyntheticSpec) -> Result<OccupationIndustryMix> {
    spec.validate()?;
    let mut rng = spec.rng(3);
    let occupations = spec.occupations();
    let mut rows = Vec::new();
    for sector in spec.sector_ids() {
        let weights: Vec<f64> = occupations
            .iter()
            .map(|_| rng.random::<f64>().powi(2) + 0.05)
            .collect();
        let total: f64 = weights.iter().sum();
        for (occ, w) in occupations.iter().zip(&weights) {
            rows.push((sector.clone(), NATIONAL.to_string(), occ.clone(), w / total));
        }
    }
    OccupationIndustryMix::from_rows(rows)
}
