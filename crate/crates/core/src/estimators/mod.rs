//! Monte Carlo estimators for edge probabilities, covariance constants and
//! the fluctuation diagnostics, together with their analytic references.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub mod full;
pub mod graphon;
pub mod oracle;
pub mod quadrature;
pub mod small;
pub mod two_way;

pub use crate::stats::EstimateWithError;
pub use full::*;
pub use graphon::*;
pub use oracle::*;
pub use small::*;
pub use two_way::*;

/// Replication count, master seed and worker count of one estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct McConfig {
    pub replications: usize,
    pub seed: u64,
    pub workers: usize,
}

impl McConfig {
    pub fn check(&self) -> Result<()> {
        if self.replications < 2 {
            return Err(Error::TooFewSamples {
                needed: 2,
                got: self.replications,
            });
        }
        Ok(())
    }
}
