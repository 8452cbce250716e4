//! Command-line front end for `attention-core`: reads scenario files, runs
//! checks, solves, simulations and sweeps, and writes CSV tables plus a
//! JSON run report.

pub mod commands;
pub mod error;
pub mod output;
pub mod scenario;

pub use commands::{cmd_check, cmd_simulate, cmd_solve, cmd_sweep, run, Cli, RunReport};
pub use error::CliError;
pub use scenario::{Scenario, ScenarioFile};
