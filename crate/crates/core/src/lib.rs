//! Repeated-sampling laboratory for variance-estimator bias under systematic
//! and simple random sampling of spatially autocorrelated populations.

pub mod cli;
pub mod config;
pub mod designs;
pub mod error;
pub mod estimators;
pub mod frame;
pub mod gaussfield;
pub mod montecarlo;
pub mod output;
pub mod plot;
pub mod rng;
pub mod stemmap;
pub mod stats;
pub mod variogram;

pub use error::{Error, Result};
