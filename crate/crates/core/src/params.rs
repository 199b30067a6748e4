use serde::{Deserialize, Serialize};

use crate::error::{DropletError, Result};

/// Physical constants of the droplet model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    pub n: usize,
    pub beta: f64,
    #[serde(rename = "K")]
    pub k: f64,
    #[serde(rename = "Q")]
    pub q: f64,
}

impl PhysicalParams {
    pub fn new(n: usize, beta: f64, k: f64, q: f64) -> Result<Self> {
        let p = Self { n, beta, k, q };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 3 {
            return Err(DropletError::InvalidParams(format!("n = {} (need n >= 3)", self.n)));
        }
        if !(self.beta > 1.0) || !self.beta.is_finite() {
            return Err(DropletError::InvalidParams(format!("beta = {} (need beta > 1)", self.beta)));
        }
        if !(self.k > 0.0) || !self.k.is_finite() {
            return Err(DropletError::InvalidParams(format!("K = {} (need K > 0)", self.k)));
        }
        if !(self.q >= 0.0) || !self.q.is_finite() {
            return Err(DropletError::InvalidParams(format!("Q = {} (need Q >= 0)", self.q)));
        }
        Ok(())
    }

    pub fn with_charge(mut self, q: f64) -> Self {
        self.q = q;
        self
    }
}

impl Default for PhysicalParams {
    fn default() -> Self {
        Self { n: 3, beta: 2.0, k: 1.0, q: 0.1 }
    }
}

/// Volume of the unit ball in dimension `n`.
pub fn unit_ball_volume(n: usize) -> f64 {
    use std::f64::consts::PI;
    let mut v = if n % 2 == 0 { 1.0 } else { 2.0 };
    let mut d = if n % 2 == 0 { 0 } else { 1 };
    while d < n {
        d += 2;
        v *= 2.0 * PI / d as f64;
    }
    v
}

/// Area of the unit sphere in dimension `n` (boundary of the unit ball).
pub fn unit_sphere_area(n: usize) -> f64 {
    n as f64 * unit_ball_volume(n)
}
