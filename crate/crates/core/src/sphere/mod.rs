//! Geometry and analysis toolkit for nearly-spherical sets `r = 1 + φ(ω)`.

mod basis;
mod geometry;
mod shape;

pub use basis::{
    eval_expansion, eval_harmonic, gauss_legendre, harmonic_degree_order, harmonic_index,
    legendre_table, num_harmonics, SphereBasis,
};
pub use geometry::{
    barycenter, barycenter_gradient, perimeter, perimeter_gradient, project_constraints,
    project_constraints_with, volume, volume_gradient, ProjectionReport,
};
pub use shape::{
    random_shape, rotate_coeffs, rotate_shape, sobolev_norm, Rotation, ShapeCoeffs, SobolevSpec,
};
