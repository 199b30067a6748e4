use std::sync::Arc;

use super::grid::{Blending, RadialGrid};
use crate::error::{DropletError, Result};
use crate::sphere::{ShapeCoeffs, SphereBasis};

/// Radial diffeomorphism `T(ρ, ω) = R(ρ, ω) ω` of the reference ball onto `E`,
/// with `R³ = ρ³ + w(ρ)((1+φ)³ − 1)`.
///
/// Where `w ≡ 1` the map preserves volume (`R²R_ρ = ρ²`) and sends the unit
/// sphere onto `∂E`; where `w ≡ 0` it is the identity.
#[derive(Debug, Clone)]
pub struct DomainMap {
    pub shape: ShapeCoeffs,
    pub blending: Blending,
    pub basis: Arc<SphereBasis>,
    /// `φ` and its tangential gradient at the quadrature nodes.
    pub phi: Vec<f64>,
    pub dphi: [Vec<f64>; 2],
    s: Vec<f64>,
    ds: [Vec<f64>; 2],
}

/// Map quantities at one point `(ρ, ω_q)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MapPoint {
    /// `R`.
    pub r: f64,
    /// `∂_ρ R`.
    pub r_rho: f64,
    /// `∇_ω R`.
    pub grad: [f64; 2],
    /// `R² ∂_ρR`, the volume density with respect to `dρ dω`.
    pub density: f64,
}

impl MapPoint {
    pub fn identity(rho: f64) -> Self {
        Self { r: rho, r_rho: 1.0, grad: [0.0; 2], density: rho * rho }
    }
}

impl DomainMap {
    /// Build the map on the nodes of `basis` and check it on `grid`.
    pub fn new(shape: &ShapeCoeffs, basis: Arc<SphereBasis>, blending: Blending, grid: &RadialGrid) -> Result<Self> {
        blending.validate()?;
        for rho in [blending.inner_start, blending.plateau_start, blending.plateau_end, blending.outer_end] {
            grid.node_at(rho)?;
        }
        let nq = basis.num_nodes();
        let local = basis.localize(shape.coeffs());
        let mut phi = vec![0.0; nq];
        let mut gt = vec![0.0; nq];
        let mut gp = vec![0.0; nq];
        basis.synthesize(&local, &mut phi, Some((&mut gt, &mut gp)));
        let s: Vec<f64> = phi.iter().map(|p| (1.0 + p).powi(3) - 1.0).collect();
        let f: Vec<f64> = phi.iter().map(|p| 3.0 * (1.0 + p) * (1.0 + p)).collect();
        let ds = [gt.iter().zip(&f).map(|(a, b)| a * b).collect(), gp.iter().zip(&f).map(|(a, b)| a * b).collect()];
        let map = Self { shape: shape.clone(), blending, basis, phi, dphi: [gt, gp], s, ds };
        map.check(grid)?;
        Ok(map)
    }

    pub fn num_nodes(&self) -> usize {
        self.phi.len()
    }

    pub fn at(&self, rho: f64, q: usize) -> MapPoint {
        let (w, dw) = self.blending.weight(rho);
        if w == 0.0 && dw == 0.0 {
            return MapPoint::identity(rho);
        }
        let s = self.s[q];
        let r3 = rho * rho * rho + w * s;
        let r = r3.cbrt();
        let r2 = r * r;
        let density = rho * rho + dw * s / 3.0;
        MapPoint {
            r,
            r_rho: density / r2,
            grad: [w * self.ds[0][q] / (3.0 * r2), w * self.ds[1][q] / (3.0 * r2)],
            density,
        }
    }

    /// Jacobian determinant `J_T = R²R_ρ/ρ²`.
    pub fn jacobian(&self, rho: f64, q: usize) -> f64 {
        if rho == 0.0 {
            return 1.0;
        }
        self.at(rho, q).density / (rho * rho)
    }

    /// `A_T = DT⁻¹DT⁻ᵀJ_T` in the orthonormal frame `(e_ρ, e_θ, e_ϕ)`.
    pub fn metric(&self, rho: f64, q: usize) -> [[f64; 3]; 3] {
        if rho == 0.0 {
            return [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        }
        let p = self.at(rho, q);
        let g2 = p.grad[0] * p.grad[0] + p.grad[1] * p.grad[1];
        let a11 = (p.r * p.r + g2) / (p.r_rho * rho * rho);
        let a12 = -p.grad[0] / rho;
        let a13 = -p.grad[1] / rho;
        [[a11, a12, a13], [a12, p.r_rho, 0.0], [a13, 0.0, p.r_rho]]
    }

    /// `T(1, ω_q) = (1 + φ(ω_q)) ω_q`.
    pub fn boundary_point(&self, q: usize) -> [f64; 3] {
        let w = self.basis.points[q];
        let r = self.at(1.0, q).r;
        [r * w[0], r * w[1], r * w[2]]
    }

    /// Reject the map if `J_T ≤ 0` at a radial node or cell midpoint of the blending range.
    pub fn check(&self, grid: &RadialGrid) -> Result<()> {
        let h = grid.h();
        let lo = grid.node_at(self.blending.inner_start)?;
        let hi = grid.node_at(self.blending.outer_end)?;
        for i in lo..=hi {
            for rho in [i as f64 * h, (i as f64 + 0.5) * h] {
                if rho > self.blending.outer_end {
                    continue;
                }
                for q in 0..self.num_nodes() {
                    let jac = self.jacobian(rho, q);
                    if !(jac > 0.0) || (rho > 0.0 && !(rho * rho * rho + self.blending.weight(rho).0 * self.s[q] > 0.0)) {
                        return Err(DropletError::DegenerateMap { rho, node: q, jac });
                    }
                }
            }
        }
        Ok(())
    }
}
