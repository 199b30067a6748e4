use serde::{Deserialize, Serialize};

use crate::error::{DropletError, Result};

/// Radial nodes on `[0, R∞]`: uniform on `[0, 2]` (every multiple of 1/8 is a
/// node, in particular `ρ = 1`) and geometric on `[2, R∞]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialGrid {
    pub n_r: usize,
    pub r_inf: f64,
    /// Number of uniform cells on `[0, 2]`.
    pub n_in: usize,
    pub nodes: Vec<f64>,
}

impl RadialGrid {
    pub fn new(n_r: usize, r_inf: f64) -> Result<Self> {
        if n_r < 32 {
            return Err(DropletError::InvalidOptions(format!("N_r = {n_r} (need at least 32)")));
        }
        if !(r_inf > 4.0) || !r_inf.is_finite() {
            return Err(DropletError::InvalidOptions(format!("R_inf = {r_inf} (need R_inf > 4)")));
        }
        let n_in = (((3 * n_r) as f64 / 8.0 / 16.0).round() as usize).max(1) * 16;
        let n_out = n_r - n_in;
        let h = 2.0 / n_in as f64;
        let mut nodes: Vec<f64> = (0..=n_in).map(|i| i as f64 * h).collect();
        let ratio = r_inf / 2.0;
        for k in 1..=n_out {
            nodes.push(2.0 * ratio.powf(k as f64 / n_out as f64));
        }
        *nodes.last_mut().unwrap() = r_inf;
        Ok(Self { n_r, r_inf, n_in, nodes })
    }

    /// Uniform spacing on `[0, 2]`.
    pub fn h(&self) -> f64 {
        2.0 / self.n_in as f64
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    /// Index of the node at radius `rho ∈ [0, 2]`, which must lie on the uniform part.
    pub fn node_at(&self, rho: f64) -> Result<usize> {
        let x = rho / self.h();
        let i = x.round();
        if (x - i).abs() > 1e-9 || !(0.0..=2.0).contains(&rho) {
            return Err(DropletError::InvalidOptions(format!("radius {rho} is not a grid node")));
        }
        Ok(i as usize)
    }

    pub fn one(&self) -> usize {
        self.n_in / 2
    }

    pub fn two(&self) -> usize {
        self.n_in
    }
}

/// Map blending: identity below `inner_start`, volume-preserving polar map on
/// `[plateau_start, plateau_end]`, identity above `outer_end`.
///
/// The inner ramp is a smoothstep in `ρ³`, so the volume density
/// `ρ²(1 + S'(t) s/(ρ_p³ − ρ_i³))` keeps the factor `ρ²` and stays positive
/// near the origin; the outer ramp is a smoothstep in `ρ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Blending {
    pub inner_start: f64,
    pub plateau_start: f64,
    pub plateau_end: f64,
    pub outer_end: f64,
}

impl Blending {
    pub const STANDARD: Blending = Blending { inner_start: 0.0, plateau_start: 0.875, plateau_end: 1.125, outer_end: 2.0 };
    pub const ALTERNATE: Blending = Blending { inner_start: 0.0, plateau_start: 0.8125, plateau_end: 1.25, outer_end: 1.75 };

    pub fn validate(&self) -> Result<()> {
        let ok = 0.0 <= self.inner_start
            && self.inner_start < self.plateau_start
            && self.plateau_start < 1.0
            && 1.0 < self.plateau_end
            && self.plateau_end < self.outer_end
            && self.outer_end <= 2.0;
        if !ok {
            return Err(DropletError::InvalidOptions(format!("bad blending {self:?}")));
        }
        Ok(())
    }

    /// Weight `w(ρ)` and `w'(ρ)`.
    pub fn weight(&self, rho: f64) -> (f64, f64) {
        let smooth = |u: f64| (u * u * (3.0 - 2.0 * u), 6.0 * u * (1.0 - u));
        if rho <= self.inner_start || rho >= self.outer_end {
            (0.0, 0.0)
        } else if rho < self.plateau_start {
            let len = self.plateau_start.powi(3) - self.inner_start.powi(3);
            let (p, dp) = smooth((rho.powi(3) - self.inner_start.powi(3)) / len);
            (p, dp * 3.0 * rho * rho / len)
        } else if rho <= self.plateau_end {
            (1.0, 0.0)
        } else {
            let len = self.outer_end - self.plateau_end;
            let (p, dp) = smooth((rho - self.plateau_end) / len);
            (1.0 - p, -dp / len)
        }
    }
}

impl Default for Blending {
    fn default() -> Self {
        Self::STANDARD
    }
}

/// Discretization and solver controls.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    #[serde(rename = "N_r")]
    pub n_r: usize,
    #[serde(rename = "R_inf")]
    pub r_inf: f64,
    /// Relative residual at which conjugate gradients stop.
    pub cg_tol: f64,
    pub max_iter: usize,
    /// Harmonic degree of the field expansion; `None` means twice the shape degree (at least 2).
    pub l_solver: Option<usize>,
    /// Quadrature degree on the sphere; `None` means `l_solver`.
    pub quad_l: Option<usize>,
    pub blending: Blending,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { n_r: 128, r_inf: 20.0, cg_tol: 1e-11, max_iter: 1000, l_solver: None, quad_l: None, blending: Blending::STANDARD }
    }
}

impl SolverOptions {
    pub fn with_nr(mut self, n_r: usize) -> Self {
        self.n_r = n_r;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.cg_tol > 0.0) || self.max_iter == 0 {
            return Err(DropletError::InvalidOptions("cg_tol and max_iter must be positive".into()));
        }
        self.blending.validate()
    }

    pub fn solver_degree(&self, shape_l: usize) -> usize {
        self.l_solver.unwrap_or(2 * shape_l).max(2).max(shape_l)
    }
}
