use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Fractional order s ∈ (0,1) and ambient dimension N.
///
/// The weight exponent a = 1 − 2s is always recomputed from s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FractionalParams {
    s: f64,
    dim_n: usize,
}

impl FractionalParams {
    pub fn new(s: f64, dim_n: usize) -> Result<Self> {
        if !(s > 0.0 && s < 1.0) {
            return Err(Error::InvalidParameter(format!("s = {s} must lie in (0,1)")));
        }
        if dim_n < 2 {
            return Err(Error::InvalidParameter(format!("N = {dim_n} must be at least 2")));
        }
        Ok(Self { s, dim_n })
    }

    /// Parameters for the N = 2 solver pipeline.
    pub fn planar(s: f64) -> Result<Self> {
        Self::new(s, 2)
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn a(&self) -> f64 {
        1.0 - 2.0 * self.s
    }

    pub fn dim_n(&self) -> usize {
        self.dim_n
    }
}
