//! Volume, barycenter and area of radial graphs, their exact discrete
//! coefficient gradients, and projection onto the constraint set
//! `{|E| = |B₁|, x_E = 0}`.

use std::f64::consts::PI;

use super::basis::{harmonic_index, SphereBasis};
use super::shape::ShapeCoeffs;
use crate::error::{DropletError, Result};
use crate::linalg::solve_dense;

struct Samples {
    phi: Vec<f64>,
    gt: Vec<f64>,
    gp: Vec<f64>,
}

fn sample(shape: &ShapeCoeffs, basis: &SphereBasis) -> Samples {
    assert!(
        basis.l_max >= shape.l_max() && !basis.zonal,
        "basis degree {} below shape degree {}",
        basis.l_max,
        shape.l_max()
    );
    let nq = basis.num_nodes();
    let mut s = Samples { phi: vec![0.0; nq], gt: vec![0.0; nq], gp: vec![0.0; nq] };
    basis.synthesize(shape.coeffs(), &mut s.phi, Some((&mut s.gt, &mut s.gp)));
    s
}

fn project_to_shape(basis: &SphereBasis, shape: &ShapeCoeffs, f: &[f64], g: Option<(&[f64], &[f64])>) -> Vec<f64> {
    let mut out = vec![0.0; basis.num_harmonics()];
    basis.adjoint(f, g, &mut out);
    out.truncate(shape.coeffs().len());
    out
}

/// `|E| = ∫ (1+φ)³/3`.
pub fn volume(shape: &ShapeCoeffs, basis: &SphereBasis) -> f64 {
    let s = sample(shape, basis);
    s.phi.iter().zip(&basis.weights).map(|(p, w)| w * (1.0 + p).powi(3) / 3.0).sum()
}

fn first_moment(phi: &[f64], basis: &SphereBasis) -> [f64; 3] {
    let mut m = [0.0; 3];
    for ((p, w), x) in phi.iter().zip(&basis.weights).zip(&basis.points) {
        let f = w * (1.0 + p).powi(4) / 4.0;
        for c in 0..3 {
            m[c] += f * x[c];
        }
    }
    m
}

/// `x_E = |E|⁻¹ ∫ ω (1+φ)⁴/4`.
pub fn barycenter(shape: &ShapeCoeffs, basis: &SphereBasis) -> [f64; 3] {
    let s = sample(shape, basis);
    let v: f64 = s.phi.iter().zip(&basis.weights).map(|(p, w)| w * (1.0 + p).powi(3) / 3.0).sum();
    let m = first_moment(&s.phi, basis);
    [m[0] / v, m[1] / v, m[2] / v]
}

/// `P(E) = ∫ (1+φ) √((1+φ)² + |∇φ|²)`.
pub fn perimeter(shape: &ShapeCoeffs, basis: &SphereBasis) -> f64 {
    let s = sample(shape, basis);
    (0..basis.num_nodes())
        .map(|q| {
            let r = 1.0 + s.phi[q];
            basis.weights[q] * r * (r * r + s.gt[q] * s.gt[q] + s.gp[q] * s.gp[q]).sqrt()
        })
        .sum()
}

/// Gradient of [`volume`] with respect to the shape coefficients.
pub fn volume_gradient(shape: &ShapeCoeffs, basis: &SphereBasis) -> Vec<f64> {
    let s = sample(shape, basis);
    let f: Vec<f64> = s.phi.iter().zip(&basis.weights).map(|(p, w)| w * (1.0 + p).powi(2)).collect();
    project_to_shape(basis, shape, &f, None)
}

/// Gradients of the three barycenter components.
pub fn barycenter_gradient(shape: &ShapeCoeffs, basis: &SphereBasis) -> [Vec<f64>; 3] {
    let s = sample(shape, basis);
    let v: f64 = s.phi.iter().zip(&basis.weights).map(|(p, w)| w * (1.0 + p).powi(3) / 3.0).sum();
    let m = first_moment(&s.phi, basis);
    let dv = volume_gradient(shape, basis);
    let mut out: [Vec<f64>; 3] = Default::default();
    for c in 0..3 {
        let f: Vec<f64> = (0..basis.num_nodes())
            .map(|q| basis.weights[q] * basis.points[q][c] * (1.0 + s.phi[q]).powi(3))
            .collect();
        let dm = project_to_shape(basis, shape, &f, None);
        out[c] = dm.iter().zip(&dv).map(|(a, b)| a / v - m[c] / (v * v) * b).collect();
    }
    out
}

/// Gradient of [`perimeter`] with respect to the shape coefficients.
pub fn perimeter_gradient(shape: &ShapeCoeffs, basis: &SphereBasis) -> Vec<f64> {
    let s = sample(shape, basis);
    let nq = basis.num_nodes();
    let mut f = vec![0.0; nq];
    let mut gt = vec![0.0; nq];
    let mut gp = vec![0.0; nq];
    for q in 0..nq {
        let r = 1.0 + s.phi[q];
        let root = (r * r + s.gt[q] * s.gt[q] + s.gp[q] * s.gp[q]).sqrt();
        let w = basis.weights[q];
        f[q] = w * (root + r * r / root);
        gt[q] = w * r * s.gt[q] / root;
        gp[q] = w * r * s.gp[q] / root;
    }
    project_to_shape(basis, shape, &f, Some((&gt, &gp)))
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |a, b| a.max(b.abs()))
}

/// Outcome of a constraint projection.
#[derive(Debug, Clone)]
pub struct ProjectionReport {
    pub shape: ShapeCoeffs,
    pub iterations: usize,
    pub volume_error: f64,
    pub barycenter_norm: f64,
}

/// Adjust `a₀` and the `ℓ = 1` coefficients by Newton's method so that the
/// volume is `4π/3` and the barycenter vanishes.
pub fn project_constraints(shape: &ShapeCoeffs) -> Result<ShapeCoeffs> {
    let basis = SphereBasis::new(shape.l_max().max(1), 3)?;
    project_constraints_with(shape, &basis).map(|r| r.shape)
}

/// [`project_constraints`] on a caller-supplied quadrature.
pub fn project_constraints_with(shape: &ShapeCoeffs, basis: &SphereBasis) -> Result<ProjectionReport> {
    let target = 4.0 * PI / 3.0;
    // Axisymmetric shapes only need the z component, which keeps them exactly zonal.
    let comps: Vec<usize> = match (shape.l_max() >= 1, shape.is_zonal()) {
        (false, _) => vec![],
        (true, true) => vec![2],
        (true, false) => vec![0, 1, 2],
    };
    let mut unknowns = vec![0];
    unknowns.extend(comps.iter().map(|&c| harmonic_index(1, [1, -1, 0][c])));
    let nu = unknowns.len();
    let mut current = shape.clone();
    let residual = |sh: &ShapeCoeffs| -> Vec<f64> {
        let s = sample(sh, basis);
        let v: f64 = s.phi.iter().zip(&basis.weights).map(|(p, w)| w * (1.0 + p).powi(3) / 3.0).sum();
        let m = first_moment(&s.phi, basis);
        let mut r = vec![v - target];
        r.extend(comps.iter().map(|&c| m[c]));
        r
    };
    let tol = 1e-14;
    let mut r = residual(&current);
    let mut iterations = 0;
    while max_abs(&r) > tol {
        if iterations >= 50 {
            return Err(DropletError::ProjectionFailed {
                iters: iterations,
                residual: max_abs(&r),
            });
        }
        let s = sample(&current, basis);
        let mut jac = vec![vec![0.0; nu]; nu];
        for (col, &j) in unknowns.iter().enumerate() {
            for q in 0..basis.num_nodes() {
                let w = basis.weights[q] * basis.value(j, q);
                let r1 = 1.0 + s.phi[q];
                jac[0][col] += w * r1 * r1;
                for (row, &c) in comps.iter().enumerate() {
                    jac[row + 1][col] += w * basis.points[q][c] * r1 * r1 * r1;
                }
            }
        }
        let step = solve_dense(jac, r.iter().map(|x| -x).collect())?;
        let mut c = current.coeffs().to_vec();
        for (k, &j) in unknowns.iter().enumerate() {
            c[j] += step[k];
        }
        current = current.with_coeffs(c)?;
        let prev = r;
        r = residual(&current);
        iterations += 1;
        // Stop once Newton stagnates at the roundoff floor.
        let (now, before) = (max_abs(&r), max_abs(&prev));
        if now <= 1e-13 && now >= 0.5 * before {
            break;
        }
        if !r.iter().all(|x| x.is_finite()) {
            return Err(DropletError::ProjectionFailed {
                iters: iterations,
                residual: max_abs(&prev),
            });
        }
    }
    let volume_error = volume(&current, basis) - target;
    let b = barycenter(&current, basis);
    let barycenter_norm = (b[0] * b[0] + b[1] * b[1] + b[2] * b[2]).sqrt();
    if volume_error.abs() > 1e-12 || barycenter_norm > 1e-10 {
        return Err(DropletError::ProjectionFailed { iters: iterations, residual: volume_error.abs().max(barycenter_norm) });
    }
    Ok(ProjectionReport { shape: current, iterations, volume_error, barycenter_norm })
}
