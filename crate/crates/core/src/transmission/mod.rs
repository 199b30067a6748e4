//! Dual problem on a nearly-spherical domain `E`, pulled back to a fixed
//! reference grid.
//!
//! The minimizer of
//! `½∫a_E|∇ψ|² + |E|⁻¹∫_Eψ − (2|E|K)⁻¹(∫_Eψ)² + (2K)⁻¹∫_Eψ²` is sought as
//! `ψ̃ = ψ∘T` on `[0, R∞] × S²` with `T` from [`DomainMap`]. In angle the field
//! is a harmonic expansion; in radius it is piecewise linear inside the unit
//! ball and exactly harmonic outside, closed at `R∞` by the per-degree
//! Dirichlet-to-Neumann condition `∂_rψ_ℓ = −(ℓ+1)ψ_ℓ/R∞`.

mod field;
mod grid;
mod map;
mod pair;

pub use field::{
    g_energy, j_energy, solve_field, solve_field_from, solver_basis, BoundaryTraces, FieldEntry, FieldSolution,
    FieldSummary, GEnergies, GridSpec,
};
pub use grid::{Blending, RadialGrid, SolverOptions};
pub use map::{DomainMap, MapPoint};
pub use pair::{direct_energy, duality_residual, recover_pair, FieldPair};

/// Build the domain map of `shape` for the grid and basis implied by `opts`.
pub fn build_map(shape: &crate::sphere::ShapeCoeffs, opts: &SolverOptions) -> crate::Result<DomainMap> {
    let grid = RadialGrid::new(opts.n_r, opts.r_inf)?;
    DomainMap::new(shape, solver_basis(shape, opts)?, opts.blending, &grid)
}
