//! Synthetic inputs for desk-scale runs and reference computations for tests.

mod generate;
mod oracle;

pub use generate::{
    gen_hierarchy, gen_national_mix, gen_regions, gen_sector_demand, gen_transitions, ShockProfile,
    SyntheticData, SyntheticSpec, NATIONAL,
};
pub use oracle::{
    expected_hires_enumeration, mean_field_oracle, two_way_anova, OracleTrajectory,
    ORACLE_MAX_NODES,
};
