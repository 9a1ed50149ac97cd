use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Knobs of the selection algorithm.
///
/// `n1` may exceed `n_min`; buckets smaller than `n1` are then taken whole.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectionConfig {
    /// Minimum cosine similarity to the class centroid for a record to be kept.
    pub theta: f64,
    /// Number of equal-width similarity buckets.
    pub k: usize,
    /// Minimum records per bucket after repair.
    pub n_min: usize,
    /// Records sampled from each bucket.
    pub n1: usize,
    /// Classes with at most this many records are kept whole.
    pub small_class_max: usize,
    pub seed: u64,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        Self {
            theta: 0.7,
            k: 5,
            n_min: 200,
            n1: 200,
            small_class_max: 500,
            seed: 0,
        }
    }
}

impl SelectionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.theta > 0.0 && self.theta <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "theta must be in (0, 1], got {}",
                self.theta
            )));
        }
        for (name, value) in [("k", self.k), ("n_min", self.n_min), ("n1", self.n1)] {
            if value == 0 {
                return Err(Error::InvalidConfig(format!("{name} must be positive")));
            }
        }
        Ok(())
    }

    /// Upper bound on the records selected from a non-passthrough class.
    pub fn class_cap(&self) -> usize {
        self.k.saturating_mul(self.n1)
    }
}
