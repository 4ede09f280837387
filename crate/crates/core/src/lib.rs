//! Exact simulation of voter dynamics on opinion-dependent evolving graphs,
//! with subgraph counting and Monte Carlo estimators for the fluctuations of
//! pattern counts.

pub mod counting;
pub mod dynamics;
pub mod error;
pub mod estimators;
pub mod experiment;
pub mod graph;
pub mod parallel;
pub mod patterns;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
