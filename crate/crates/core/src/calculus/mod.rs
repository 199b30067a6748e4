//! Shape derivatives of `P`, `J` and `F`, constrained gradient flow, and the
//! isoperimetric and Taylor property checks.
//!
//! Shapes are parametrized by their harmonic coefficients `a_k`; a perturbation
//! `δφ = Y_k` moves the boundary with normal speed weighted by `(1+φ)²`, the same
//! pairing that gives the volume gradient.

mod checks;
mod flow;
mod gradient;

pub use checks::{
    calibrate_spectrum, fd_second_variation, fuglede_check, taylor_bound, taylor_check, taylor_constant, CalibrationRow,
    CheckReport,
};
pub use flow::{h1_weights, run_flow, FlowConfig, FlowIterate, FlowTrace, StopReason};
pub use gradient::{
    energies, energy_gap, f_gradient, geometric_gradients, geometry_basis, j_gradient, project_out, Energies,
    ShapeGradient,
};
