pub mod analyze;
pub mod build_network;
pub mod calibrate;
pub mod gen_synthetic;
pub mod prepare_scenario;
pub mod simulate;
