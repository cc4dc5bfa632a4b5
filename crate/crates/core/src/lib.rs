//! Monte Carlo quantum trajectories of a continuously monitored qubit, with
//! stochastic thermodynamics bookkeeping and fluctuation-theorem analysis.
//!
//! Units: `ħ = k_B = 1`, time in µs, angular frequencies in rad/µs.

pub mod analysis;
pub mod error;
pub mod harness;
pub mod homodyne;
pub mod protocol;
pub mod qstate;
pub mod stats;
pub mod trajectory;

pub use error::{Error, Result};
