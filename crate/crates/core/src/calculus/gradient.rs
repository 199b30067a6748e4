use serde::{Deserialize, Serialize};

use crate::error::{DropletError, Result};
use crate::linalg::solve_dense;
use crate::params::PhysicalParams;
use crate::sphere::{
    barycenter_gradient, perimeter, perimeter_gradient, volume, volume_gradient, ShapeCoeffs, SphereBasis,
};
use crate::transmission::{solve_field_from, FieldSolution, SolverOptions};

/// Quadrature used for perimeter, volume and barycenter of degree-`l` shapes.
pub fn geometry_basis(l: usize) -> Result<SphereBasis> {
    SphereBasis::with_quadrature(l.max(1), 3 * l.max(1) + 4, 3)
}

/// Residual norm above which boundary traces are not trusted.
const TRACE_RESIDUAL: f64 = 1e-6;

/// Coefficient gradient of `J` from the boundary traces of a solved field:
/// `∂J/∂a_k = ∫ (g + c_V) (1+φ)² Y_k`, with
/// `g = (1 − S/K)ψ/|E| + ½(β|∇ψ⁺|² − |∇ψ⁻|²) + ψ²/(2K) − ∂_νψ⁻ (∂_νψ⁺ − ∂_νψ⁻)`,
/// `S = ∫_Eψ`, and `c_V = −S/|E|² + S²/(2K|E|²)` accounting for the explicit
/// dependence of the functional on `|E|`.
pub fn j_gradient(shape: &ShapeCoeffs, field: &FieldSolution) -> Result<Vec<f64>> {
    if !(field.residual <= TRACE_RESIDUAL) {
        return Err(DropletError::NoConvergence { iters: field.iterations, residual: field.residual });
    }
    if shape != &field.shape {
        return Err(DropletError::InvalidParams("field was solved for a different shape".into()));
    }
    let (beta, k) = (field.params.beta, field.params.k);
    let (vol, s) = (field.volume, field.psi_integral);
    let c_v = -s / (vol * vol) + s * s / (2.0 * k * vol * vol);
    let t = field.traces();
    let basis = field.basis();
    let f: Vec<f64> = (0..basis.num_nodes())
        .map(|q| {
            let psi = t.psi[q];
            let g = (1.0 - s / k) * psi / vol + 0.5 * (beta * t.grad2_in[q] - t.grad2_out[q]) + psi * psi / (2.0 * k)
                - t.dnu_out[q] * (t.dnu_in[q] - t.dnu_out[q]);
            basis.weights[q] * (g + c_v) * (1.0 + field.map.phi[q]).powi(2)
        })
        .collect();
    let mut local = vec![0.0; basis.num_harmonics()];
    basis.adjoint(&f, None, &mut local);
    Ok(basis.globalize(&local, shape.l_max()))
}

/// Gradients of `P`, `J`, `F` and of the constraints, with the constrained
/// gradient of `F`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeGradient {
    #[serde(rename = "dP")]
    pub dp: Vec<f64>,
    #[serde(rename = "dJ")]
    pub dj: Vec<f64>,
    #[serde(rename = "dF")]
    pub df: Vec<f64>,
    #[serde(rename = "dV")]
    pub dv: Vec<f64>,
    #[serde(rename = "dB")]
    pub db: [Vec<f64>; 3],
    /// `dF` with its component in `span{dV, dB}` removed.
    pub projected: Vec<f64>,
}

impl ShapeGradient {
    pub fn constraints(&self) -> [&[f64]; 4] {
        [&self.dv, &self.db[0], &self.db[1], &self.db[2]]
    }

    pub fn projected_norm(&self) -> f64 {
        self.projected.iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

/// Remove from `g` its component in the span of `constraints`, in the
/// inner product `Σ x_j y_j / d_j`; returns `D⁻¹(g − Σλ_i c_i)` when
/// `weights = Some(d)` and the Euclidean projection otherwise.
pub fn project_out(g: &[f64], constraints: &[&[f64]], weights: Option<&[f64]>) -> Result<Vec<f64>> {
    let inv = |j: usize| weights.map_or(1.0, |d| 1.0 / d[j]);
    let active: Vec<&[f64]> = constraints.iter().copied().filter(|c| c.iter().any(|&x| x != 0.0)).collect();
    let m = active.len();
    let ip = |a: &[f64], b: &[f64]| -> f64 { a.iter().zip(b).enumerate().map(|(j, (x, y))| x * y * inv(j)).sum() };
    let mut out: Vec<f64> = g.to_vec();
    if m > 0 {
        let gram: Vec<Vec<f64>> = active.iter().map(|a| active.iter().map(|b| ip(a, b)).collect()).collect();
        let rhs: Vec<f64> = active.iter().map(|a| ip(a, g)).collect();
        let lambda = solve_dense(gram, rhs)?;
        for (c, l) in active.iter().zip(&lambda) {
            for (o, x) in out.iter_mut().zip(c.iter()) {
                *o -= l * x;
            }
        }
    }
    Ok(out.iter().enumerate().map(|(j, x)| x * inv(j)).collect())
}

/// Geometric part of [`ShapeGradient`]: `(P, dP, dV, dB)`.
pub fn geometric_gradients(shape: &ShapeCoeffs) -> Result<(f64, Vec<f64>, Vec<f64>, [Vec<f64>; 3])> {
    let basis = geometry_basis(shape.l_max())?;
    Ok((
        perimeter(shape, &basis),
        perimeter_gradient(shape, &basis),
        volume_gradient(shape, &basis),
        barycenter_gradient(shape, &basis),
    ))
}

/// Assemble `dF = dP + Q²(−K/|E|² dV − 2 dJ)` and project it.
pub fn f_gradient(shape: &ShapeCoeffs, params: &PhysicalParams, field: Option<&FieldSolution>) -> Result<ShapeGradient> {
    let (_, dp, dv, db) = geometric_gradients(shape)?;
    let q2 = params.q * params.q;
    let dj = match field {
        Some(f) => j_gradient(shape, f)?,
        None if q2 == 0.0 => vec![0.0; dp.len()],
        None => return Err(DropletError::InvalidParams("a solved field is required when Q > 0".into())),
    };
    let vol = match field {
        Some(f) => f.volume,
        None => volume(shape, &geometry_basis(shape.l_max())?),
    };
    let df: Vec<f64> = (0..dp.len()).map(|j| dp[j] + q2 * (-params.k / (vol * vol) * dv[j] - 2.0 * dj[j])).collect();
    let projected = project_out(&df, &[&dv, &db[0], &db[1], &db[2]], None)?;
    Ok(ShapeGradient { dp, dj, df, dv, db, projected })
}

/// `F`, its parts, and the field behind them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Energies {
    #[serde(rename = "F")]
    pub f: f64,
    #[serde(rename = "P")]
    pub p: f64,
    #[serde(rename = "J")]
    pub j: f64,
    #[serde(rename = "G_half")]
    pub g_half: f64,
    #[serde(rename = "G_paper")]
    pub g_paper: f64,
    pub volume: f64,
}

/// Evaluate `F = P + Q²G_paper` with `G_paper = K/|E| − 2J`.
pub fn energies(
    shape: &ShapeCoeffs,
    params: &PhysicalParams,
    opts: &SolverOptions,
    warm: Option<&FieldSolution>,
) -> Result<(Energies, FieldSolution)> {
    let field = solve_field_from(shape, params, opts, warm)?;
    let p = perimeter(shape, &geometry_basis(shape.l_max())?);
    let g_half = params.k / (2.0 * field.volume) - field.j_e;
    let g_paper = 2.0 * g_half;
    let e = Energies { f: p + params.q * params.q * g_paper, p, j: field.j_e, g_half, g_paper, volume: field.volume };
    Ok((e, field))
}

/// `F(E) − F(B₁)` on one discretization.
pub fn energy_gap(shape: &ShapeCoeffs, params: &PhysicalParams, opts: &SolverOptions) -> Result<f64> {
    let ball = ShapeCoeffs::zero(shape.l_max());
    let (e, _) = energies(shape, params, opts, None)?;
    let (b, _) = energies(&ball, params, opts, None)?;
    Ok((e.p - b.p) + params.q * params.q * (e.g_paper - b.g_paper))
}
