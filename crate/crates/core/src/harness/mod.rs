//! Simulation harness: FER sweeps, construction output and the CLI.

pub mod cli;
pub mod commands;
pub mod config;
pub mod sweep;

pub use commands::{cmd_construct, cmd_session_demo, construct_profile, selftest, DemoSettings, Method};
pub use config::{parse_grid, Design, SweepConfig, SweepMode};
pub use sweep::{crossing, run_descent, run_point, run_sweep, sweep_to_string, wilson_interval, FerRecord, PointResult, CSV_HEADER};
