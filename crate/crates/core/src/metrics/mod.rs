//! Outcome statistics computed from trajectories.

mod outcomes;
mod rates;
mod variance;

pub use outcomes::{outcome_table, spearman, HeatmapCell, Metric, OutcomeRow, OutcomeTable};
pub use rates::{
    aggregate_series, avg_unemployment_rate, avg_vacancy_rate, year_window, AggregateSeries,
};
pub use variance::{variance_decomposition, VarianceDecomposition};
