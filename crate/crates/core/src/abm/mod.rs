//! Worker and vacancy dynamics on the mobility network.
//!
//! Each node tracks employed workers `e`, unemployed workers `u` (attributed
//! to the node they last worked in) and open vacancies `v` with their ages.
//! A step applies separations `b` and openings `c`, then hires `F` move
//! unemployed workers into vacancies:
//!
//! ```text
//! e' = e - b + sum_j F[j -> i]
//! u' = u + b - sum_j F[i -> j]
//! v' = v + c - sum_j F[j -> i]
//! ```

mod engine;
mod matching;
mod params;
mod process;
mod state;
mod trajectory;

pub use engine::{
    initial_expected_state, initial_state, mean_field_step, run, run_from_state,
    run_mean_field_from_state, scaled_targets, step, StepOutcome,
};
pub use matching::{applications, expected_hires, expected_matching, matching, Application};
pub use params::{Mode, SimulationParams};
pub use process::{
    draw_separations_openings, expected_separations_and_openings, expected_separations_openings,
    separations_and_openings,
};
pub use state::{Count, ExpectedState, FlowMatrix, LabourState, VacancyAges};
pub use trajectory::Trajectory;
