//! Portmanteau tests for time series with stable (infinite-variance)
//! innovations, with Monte-Carlo p-values.

pub mod correlation;
pub mod error;
pub mod experiments;
pub mod io;
pub mod models;
pub mod montecarlo;
pub mod portmanteau;
pub mod rng;
pub mod stable;

pub use error::{Error, Result};
