use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::gradient::geometry_basis;
use crate::ball::BallState;
use crate::error::Result;
use crate::io::{fmt_f64, CsvRow};
use crate::modes::second_variation;
use crate::params::PhysicalParams;
use crate::sphere::{perimeter, project_constraints, sobolev_norm, ShapeCoeffs, SobolevSpec};
use crate::transmission::{j_energy, SolverOptions};

/// Measured ratio against its bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub ratio: f64,
    pub bound: f64,
    pub pass: bool,
}

/// `(P(Ω) − 4π)/‖φ‖²_{H¹}`; passes when strictly positive.
pub fn fuglede_check(shape: &ShapeCoeffs) -> Result<CheckReport> {
    let norm2 = sobolev_norm(shape, SobolevSpec::H1)?.powi(2);
    let excess = perimeter(shape, &geometry_basis(shape.l_max())?) - 4.0 * PI;
    let ratio = if norm2 == 0.0 { 0.0 } else { excess / norm2 };
    Ok(CheckReport { ratio, bound: 0.0, pass: norm2 > 0.0 && ratio > 0.0 })
}

/// Largest single-mode Taylor ratio `∂²G_half[Y_m]/(2(1 + m(m+1)))` over `m ∈ [2, l_max]`.
pub fn taylor_constant(ball: &BallState, l_max: usize) -> Result<f64> {
    let mut best = f64::NEG_INFINITY;
    for m in 2..=l_max.max(2) {
        let v = second_variation(m, ball)?.value;
        best = best.max(v / (2.0 * (1.0 + (m * (m + 1)) as f64)));
    }
    Ok(best)
}

/// Bound used by [`taylor_check`]: the fitted constant with 20% slack.
pub fn taylor_bound(c_fit: f64) -> f64 {
    c_fit + 0.2 * c_fit.abs()
}

/// `(J(B₁) − J(E))/‖φ‖²_{H¹}` with both energies on the same discretization;
/// passes when it does not exceed `taylor_bound(c_fit)`. The zero shape reports 0.
pub fn taylor_check(shape: &ShapeCoeffs, ball: &BallState, opts: &SolverOptions, c_fit: f64) -> Result<CheckReport> {
    let bound = taylor_bound(c_fit);
    let norm2 = sobolev_norm(shape, SobolevSpec::H1)?.powi(2);
    if norm2 == 0.0 {
        return Ok(CheckReport { ratio: 0.0, bound, pass: true });
    }
    let j_e = j_energy(shape, &ball.params, opts)?;
    let j_b = j_energy(&ShapeCoeffs::zero(shape.l_max()), &ball.params, opts)?;
    let ratio = (j_b - j_e) / norm2;
    Ok(CheckReport { ratio, bound, pass: ratio <= bound })
}

/// `∂²G_half[Y_{m,k}]` by the symmetric difference `(2J(B₁) − J(E₊) − J(E₋))/ε²`,
/// where `E±` are the constraint-projected shapes `φ = ±εY_{m,k}`.
pub fn fd_second_variation(m: usize, k: i64, params: &PhysicalParams, opts: &SolverOptions, eps: f64) -> Result<f64> {
    let j_b = j_energy(&ShapeCoeffs::zero(m), params, opts)?;
    let mut sum = 0.0;
    for e in [eps, -eps] {
        let shape = project_constraints(&ShapeCoeffs::single_mode(m, m, k, e)?)?;
        sum += j_b - j_energy(&shape, params, opts)?;
    }
    Ok(sum / (eps * eps))
}

/// Mode-spectrum value against its finite-difference estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationRow {
    pub m: usize,
    pub value: f64,
    pub finite_difference: f64,
    pub relative_error: f64,
}

impl CsvRow for CalibrationRow {
    fn header() -> Vec<&'static str> {
        vec!["m", "value", "finite_difference", "relative_error"]
    }

    fn record(&self) -> Vec<String> {
        vec![self.m.to_string(), fmt_f64(self.value), fmt_f64(self.finite_difference), fmt_f64(self.relative_error)]
    }
}

/// Zonal calibration of the mode spectrum for `m ∈ [2, m_max]`, solved in parallel.
pub fn calibrate_spectrum(ball: &BallState, m_max: usize, opts: &SolverOptions, eps: f64) -> Result<Vec<CalibrationRow>> {
    (2..=m_max)
        .into_par_iter()
        .map(|m| {
            let value = second_variation(m, ball)?.value;
            let fd = fd_second_variation(m, 0, &ball.params, opts, eps)?;
            Ok(CalibrationRow { m, value, finite_difference: fd, relative_error: (fd - value).abs() / value.abs() })
        })
        .collect()
}
