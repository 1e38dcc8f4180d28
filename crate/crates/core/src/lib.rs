//! Network-based labour-market simulation.
//!
//! The crate builds a regional occupational mobility network from job
//! transition records, turns sector-level demand scenarios into per-node
//! target demand, runs the worker/vacancy dynamics on the network, and
//! summarises the resulting trajectories.

pub mod abm;
pub mod error;
pub mod metrics;
pub mod network;
pub mod scenario;
pub mod synthetic;

pub use abm::{run, step, LabourState, Mode, SimulationParams, Trajectory};
pub use error::{Error, ErrorKind, Result};
pub use network::{MobilityNetwork, Normalization, OccRegion, TransitionCounts};
pub use scenario::DemandScenario;
