//! Config-driven runs of the generalized Cini model: simulation, decoherence
//! factors, parameter sweeps and the verification suite.

pub mod commands;
pub mod config;
pub mod engine;
pub mod error;
pub mod output;
pub mod verify;

pub use error::{RunError, RunResult};
