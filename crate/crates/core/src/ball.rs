//! Radial ground state of the dual problem on the unit ball.
//!
//! Inside `B₁` the minimizer solves `βΔψ = ψ/K − λ`, so
//! `ψ = Kλ + c·h(r)` with `h` the regular radial solution of
//! `h'' + (n−1)h'/r = h/(βK)`; outside it is `A r^{2−n}`. Continuity,
//! the flux condition `βψ⁺' = ψ⁻'` and the self-consistency
//! `λ = (2/K)J − 1/|B₁|` fix `(c, A, λ)`.
//!
//! Energy conventions: `J` and `G_half = K/(2|B₁|) − J` carry the ½ factors of
//! the dual formulation; `G_paper = 2·G_half` is the energy entering
//! `F = P + Q²·G_paper`, and the recovered pair satisfies `u + Kρ = G_paper`.

use serde::{Deserialize, Serialize};

use crate::error::{DropletError, Result};
use crate::linalg::solve_dense;
use crate::params::{unit_ball_volume, unit_sphere_area, PhysicalParams};
use crate::sphere::gauss_legendre;

/// Coefficients `a_{2i}` of the regular radial solution `h(r) = Σ a_{2i} r^{2i}`,
/// `a₀ = 1`, `a_k k(k+n−2) = a_{k−2}/(βK)`, truncated at relative size `tol`.
pub fn radial_series(n: usize, beta_k: f64, tol: f64) -> Vec<f64> {
    let mut a = vec![1.0];
    let mut sum = 1.0;
    let mut i = 1;
    loop {
        let k = 2 * i;
        let next = a[i - 1] / (beta_k * (k * (k + n - 2)) as f64);
        if next < tol * sum || next == 0.0 {
            break;
        }
        sum += next;
        a.push(next);
        i += 1;
    }
    a
}

fn series_eval(a: &[f64], r: f64) -> (f64, f64, f64) {
    let (mut h, mut dh, mut d2h) = (0.0, 0.0, 0.0);
    let r2 = r * r;
    let mut pow = 1.0;
    for (i, &c) in a.iter().enumerate() {
        let k = (2 * i) as f64;
        h += c * pow;
        if i > 0 {
            dh += k * c * pow / r;
            d2h += k * (k - 1.0) * c * pow / r2;
        }
        pow *= r2;
    }
    (h, dh, d2h)
}

/// Closed-form radial minimizer on `B₁`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BallState {
    pub params: PhysicalParams,
    pub kappa: f64,
    pub lambda_const: f64,
    pub interior_amp: f64,
    pub exterior_amp: f64,
    #[serde(rename = "J_ball")]
    pub j_ball: f64,
    pub trace: f64,
    pub dpsi_in: f64,
    pub dpsi_out: f64,
    pub d2psi_in: f64,
    pub d2psi_out: f64,
    pub series: Vec<f64>,
    pub residuals: [f64; 3],
}

/// Boundary values of ψ₀ and its one-sided radial derivatives at `r = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryData {
    pub trace: f64,
    pub dpsi_in: f64,
    pub dpsi_out: f64,
    pub d2psi_in: f64,
    pub d2psi_out: f64,
}

/// Energy report of the ball.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub n: usize,
    pub beta: f64,
    #[serde(rename = "K")]
    pub k: f64,
    #[serde(rename = "Q")]
    pub q: f64,
    #[serde(rename = "J_ball")]
    pub j_ball: f64,
    #[serde(rename = "G_half")]
    pub g_half: f64,
    #[serde(rename = "G_paper")]
    pub g_paper: f64,
    #[serde(rename = "F")]
    pub f: f64,
    pub trace: f64,
    pub dpsi_in: f64,
    pub dpsi_out: f64,
    pub d2psi_in: f64,
    pub d2psi_out: f64,
}

/// Solve the radial ground state; `tol` bounds the residuals of the three
/// defining conditions.
pub fn solve_ball(params: &PhysicalParams, tol: f64) -> Result<BallState> {
    params.validate()?;
    let n = params.n;
    let nf = n as f64;
    let (beta, k) = (params.beta, params.k);
    let vol = unit_ball_volume(n);
    let area = unit_sphere_area(n);
    let series = radial_series(n, beta * k, 1e-17);
    let (h1, dh1, _) = series_eval(&series, 1.0);
    let int_h: f64 = area * series.iter().enumerate().map(|(i, a)| a / ((2 * i + n) as f64)).sum::<f64>();

    // Unknowns (c, A, λ).
    let mat = vec![
        vec![h1, -1.0, k],
        vec![beta * dh1, nf - 2.0, 0.0],
        vec![int_h / (k * vol), 0.0, 0.0],
    ];
    let rhs = vec![0.0, 0.0, 1.0 / vol];
    let x = solve_dense(mat.clone(), rhs.clone())?;
    let (c, a, lambda) = (x[0], x[1], x[2]);
    let j = (k * lambda * vol + c * int_h) / (2.0 * vol);
    let residuals = [
        (k * lambda + c * h1 - a).abs(),
        (beta * c * dh1 + (nf - 2.0) * a).abs(),
        (lambda - (2.0 / k) * j + 1.0 / vol).abs(),
    ];
    if residuals.iter().any(|r| !(*r <= tol)) {
        return Err(DropletError::Singular(format!("ball system residuals {residuals:?} exceed {tol:e}")));
    }
    let trace = a;
    let dpsi_in = c * dh1;
    let dpsi_out = -(nf - 2.0) * a;
    let d2psi_in = -(nf - 1.0) * dpsi_in + (trace - k * lambda) / (beta * k);
    let d2psi_out = (nf - 2.0) * (nf - 1.0) * a;
    Ok(BallState {
        params: *params,
        kappa: 1.0 / (beta * k).sqrt(),
        lambda_const: lambda,
        interior_amp: c,
        exterior_amp: a,
        j_ball: j,
        trace,
        dpsi_in,
        dpsi_out,
        d2psi_in,
        d2psi_out,
        series,
        residuals,
    })
}

impl BallState {
    pub fn volume(&self) -> f64 {
        unit_ball_volume(self.params.n)
    }

    /// `ψ₀(r)`.
    pub fn psi(&self, r: f64) -> f64 {
        self.psi_derivs(r).0
    }

    /// `(ψ₀, ψ₀', ψ₀'')` at `r`; at `r = 1` the interior branch is used.
    pub fn psi_derivs(&self, r: f64) -> (f64, f64, f64) {
        let k = self.params.k;
        if r <= 1.0 {
            let (h, dh, d2h) = series_eval(&self.series, r);
            let c = self.interior_amp;
            (k * self.lambda_const + c * h, c * dh, c * d2h)
        } else {
            let p = self.params.n as f64 - 2.0;
            let a = self.exterior_amp;
            (a * r.powf(-p), -p * a * r.powf(-p - 1.0), p * (p + 1.0) * a * r.powf(-p - 2.0))
        }
    }

    /// `∫_{B₁} ψ₀`.
    pub fn psi_integral(&self) -> f64 {
        2.0 * self.volume() * self.j_ball
    }

    pub fn g_half(&self) -> f64 {
        self.params.k / (2.0 * self.volume()) - self.j_ball
    }

    pub fn g_paper(&self) -> f64 {
        2.0 * self.g_half()
    }

    /// Direct evaluation of `∫a|∇u|² + K∫ρ²` on the recovered pair.
    pub fn direct_energy(&self) -> f64 {
        let n = self.params.n;
        let area = unit_sphere_area(n);
        let pair = recover_pair_ball(self);
        let (x, w) = gauss_legendre(64);
        let mut inner = 0.0;
        for (xi, wi) in x.iter().zip(&w) {
            let r = 0.5 * (xi + 1.0);
            let (psi, dpsi, _) = self.psi_derivs(r);
            let rho = pair.rho_from_psi(psi);
            let rn = r.powi(n as i32 - 1);
            inner += 0.5 * wi * rn * (self.params.beta * dpsi * dpsi + self.params.k * rho * rho);
        }
        let p = n as f64 - 2.0;
        let outer = p * self.exterior_amp * self.exterior_amp;
        area * (inner + outer)
    }
}

/// Boundary data at `r = 1`.
pub fn boundary_data(state: &BallState) -> BoundaryData {
    BoundaryData {
        trace: state.trace,
        dpsi_in: state.dpsi_in,
        dpsi_out: state.dpsi_out,
        d2psi_in: state.d2psi_in,
        d2psi_out: state.d2psi_out,
    }
}

/// `J(B₁)`, `G_half`, `G_paper` and `F(B₁) = P(B₁) + Q²·G_paper`.
pub fn ball_energies(state: &BallState, q: f64) -> EnergyReport {
    let p = &state.params;
    let g_half = state.g_half();
    EnergyReport {
        n: p.n,
        beta: p.beta,
        k: p.k,
        q,
        j_ball: state.j_ball,
        g_half,
        g_paper: 2.0 * g_half,
        f: unit_sphere_area(p.n) + q * q * 2.0 * g_half,
        trace: state.trace,
        dpsi_in: state.dpsi_in,
        dpsi_out: state.dpsi_out,
        d2psi_in: state.d2psi_in,
        d2psi_out: state.d2psi_out,
    }
}

/// One sample of a recovered potential/charge pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairSample {
    pub position: [f64; 3],
    pub inside: bool,
    pub u: f64,
    pub rho: f64,
}

/// Potential `u = −ψ` and charge density `ρ` recovered from a dual minimizer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairField {
    /// `K/|E| − 2J` from the dual energy, independent of the recovered samples.
    #[serde(rename = "G_paper")]
    pub g_paper: f64,
    #[serde(rename = "K")]
    pub k: f64,
    pub volume: f64,
    pub psi_integral: f64,
    /// `∫ρ` by quadrature.
    pub charge: f64,
    pub samples: Vec<PairSample>,
}

impl PairField {
    /// `ρ = (1/K)(ψ + (1 − S/K)K/|E|)` inside, zero outside.
    pub fn rho_from_psi(&self, psi: f64) -> f64 {
        (psi + (1.0 - self.psi_integral / self.k) * self.k / self.volume) / self.k
    }

    /// Largest `|u + Kρ − G_paper|` over interior samples.
    pub fn identity_defect(&self) -> f64 {
        self.samples
            .iter()
            .filter(|s| s.inside)
            .map(|s| (s.u + self.k * s.rho - self.g_paper).abs())
            .fold(0.0, f64::max)
    }

    /// Largest violation of `0 ≤ u ≤ G_paper`, `0 ≤ Kρ ≤ G_paper` (interior) and
    /// `ρ = 0` (exterior); zero when all bounds hold.
    pub fn bound_violation(&self) -> f64 {
        let g = self.g_paper;
        self.samples
            .iter()
            .map(|s| {
                let uv = (-s.u).max(s.u - g).max(0.0);
                if s.inside {
                    let kr = self.k * s.rho;
                    uv.max((-kr).max(kr - g).max(0.0))
                } else {
                    uv.max(s.rho.abs())
                }
            })
            .fold(0.0, f64::max)
    }
}

/// Recover `(u, ρ)` from ψ₀, sampled on the positive z axis for `r ∈ [0, 3]`.
pub fn recover_pair_ball(state: &BallState) -> PairField {
    let vol = state.volume();
    let k = state.params.k;
    let s_int = state.psi_integral();
    let shift = (1.0 - s_int / k) * k / vol;
    let radii: Vec<f64> = (0..=300).map(|i| i as f64 / 100.0).collect();
    let samples = radii
        .iter()
        .map(|&r| {
            let psi = state.psi(r);
            let inside = r <= 1.0;
            PairSample {
                position: [0.0, 0.0, r],
                inside,
                u: -psi,
                rho: if inside { (psi + shift) / k } else { 0.0 },
            }
        })
        .collect();
    let n = state.params.n;
    let (x, w) = gauss_legendre(64);
    let charge: f64 = x
        .iter()
        .zip(&w)
        .map(|(xi, wi)| {
            let r = 0.5 * (xi + 1.0);
            0.5 * wi * r.powi(n as i32 - 1) * (state.psi(r) + shift) / k
        })
        .sum::<f64>()
        * unit_sphere_area(n);
    PairField { g_paper: state.g_paper(), k, volume: vol, psi_integral: s_int, charge, samples }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn series_matches_sinh_for_unit_kappa() {
        let a = radial_series(3, 1.0, 1e-17);
        assert!((a[1] - 1.0 / 6.0).abs() < 1e-16);
        assert!((a[2] - 1.0 / 120.0).abs() < 1e-17);
    }

    #[test]
    fn closed_form_exterior_amplitude() {
        let s = solve_ball(&PhysicalParams::default(), 1e-12).unwrap();
        assert!((s.exterior_amp + 1.0 / (4.0 * std::f64::consts::PI)).abs() < 1e-15);
    }
}
