//! Second variation of `G` at the ball, one spherical-harmonic degree at a time.
//!
//! For `φ = Y_{m,k}` the shape derivative `H = H(φ)` of the potential is
//! `R₁(r)Y` inside and `R₂(r)Y` outside, with
//! `R₁ = C Σ b_{m+2i} r^{m+2i}` and `R₂ = A r^{−(m+n−2)}`. The jumps
//! `R₁(1) − R₂(1) = c₁` and `βR₁'(1) − R₂'(1) = c₂` fix `(C, A)`, where
//! `c₁ = −(ψ⁺' − ψ⁻')(1)` and `c₂ = −(βψ⁺'' − ψ⁻'')(1)`.
//!
//! The interior coefficients solve `R₁'' + (n−1)R₁'/r − m(m+n−2)R₁/r² = R₁/(βK)`:
//!
//! ```text
//! b_m = 1,   b_{m+2i} = b_{m+2i−2} / (βK · 2i(2i+2m+n−2)).
//! ```
//!
//! With `p = ψ⁺'(1)`, `q₂ = ψ⁻''(1)` and the multiplier `λ` of the ground
//! state, the per-mode value of `∂²G_half(B₁)[Y, Y]` is
//!
//! ```text
//! ĉ₂ = λ − ψ(1)/K
//! ĉ₃ = −(β−1) p
//! ĉ₁ = ĉ₂ p − (β−1) p q₂
//! value = ĉ₁ + ĉ₂ · H⁺(1) + ĉ₃ · ∂_r H⁻(1)
//!       = ĉ₁ + ĉ₂ (A + c₁) − ĉ₃ A (m+n−2).
//! ```
//!
//! The interior trace is `A + c₁`, not `A`, and `∂_r H⁻(1) = −A(m+n−2)`.
//! [`value_uncorrected`] keeps the shorter assembly `ĉ₁' + ĉ₂A + ĉ₃A(m+n−2)`
//! with `ĉ₁' = ĉ₁ − p c₂` for comparison against finite differences.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ball::BallState;
use crate::error::{DropletError, Result};
use crate::io::{fmt_f64, CsvRow};

/// Coefficients `b_{m+2i}`, `i = 0, 1, …`, of the regular interior solution
/// for degree `m` (any `m ≥ 0`), truncated once a term falls below `tol`
/// relative to the partial sum.
pub fn series_coefficients(m: usize, n: usize, beta_k: f64, tol: f64) -> Vec<f64> {
    let mut b = vec![1.0];
    let mut sum = 1.0;
    let mut i = 1;
    loop {
        let next = b[i - 1] / (beta_k * (2 * i * (2 * i + 2 * m + n - 2)) as f64);
        if next < tol * sum || next == 0.0 {
            break;
        }
        sum += next;
        b.push(next);
        i += 1;
    }
    b
}

fn check_degree(m: usize) -> Result<()> {
    if m < 2 {
        return Err(DropletError::InvalidMode(m));
    }
    Ok(())
}

/// [`series_coefficients`] for the admissible degrees `m ≥ 2`.
pub fn interior_series(m: usize, params: &crate::PhysicalParams, tol: f64) -> Result<Vec<f64>> {
    check_degree(m)?;
    params.validate()?;
    if !(tol > 0.0) {
        return Err(DropletError::InvalidParams(format!("tol {tol} must be positive")));
    }
    Ok(series_coefficients(m, params.n, params.beta * params.k, tol))
}

/// Radial profiles of `H(Y_{m,k})`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeSolution {
    pub m: usize,
    pub n: usize,
    /// `b_{m+2i}`.
    pub series: Vec<f64>,
    /// Interior amplitude `C`.
    pub amplitude: f64,
    pub exterior_amp: f64,
    /// `R₂'(1) = −A(m+n−2)`.
    pub d_exterior: f64,
    pub c1: f64,
    pub c2: f64,
    /// Residuals of the two jump conditions.
    pub residuals: [f64; 2],
}

impl ModeSolution {
    /// `(R₁, R₁', R₁'')` at `r ≤ 1`.
    pub fn interior(&self, r: f64) -> (f64, f64, f64) {
        let (mut f, mut df, mut d2f) = (0.0, 0.0, 0.0);
        for (i, &b) in self.series.iter().enumerate() {
            let k = (self.m + 2 * i) as f64;
            let p = r.powf(k - 2.0);
            f += b * p * r * r;
            df += k * b * p * r;
            d2f += k * (k - 1.0) * b * p;
        }
        (self.amplitude * f, self.amplitude * df, self.amplitude * d2f)
    }

    /// `R₂(r)` for `r ≥ 1`.
    pub fn exterior(&self, r: f64) -> f64 {
        self.exterior_amp * r.powf(-((self.m + self.n - 2) as f64))
    }

    /// Interior trace `R₁(1) = A + c₁`.
    pub fn interior_trace(&self) -> f64 {
        self.amplitude * self.series.iter().sum::<f64>()
    }
}

const SERIES_TOL: f64 = 1e-17;

fn jump_data(ball: &BallState) -> (f64, f64) {
    let c1 = -(ball.dpsi_in - ball.dpsi_out);
    let c2 = -(ball.params.beta * ball.d2psi_in - ball.d2psi_out);
    (c1, c2)
}

/// Solve the `2×2` jump system for degree `m`.
pub fn solve_mode(m: usize, ball: &BallState) -> Result<ModeSolution> {
    let (c1, c2) = jump_data(ball);
    solve_mode_with(m, ball, c1, c2, SERIES_TOL)
}

/// [`solve_mode`] with explicit jump data and series tolerance.
pub fn solve_mode_with(m: usize, ball: &BallState, c1: f64, c2: f64, tol: f64) -> Result<ModeSolution> {
    let series = interior_series(m, &ball.params, tol)?;
    let n = ball.params.n;
    let beta = ball.params.beta;
    let d = (m + n - 2) as f64;
    let sb: f64 = series.iter().sum();
    let sd: f64 = series.iter().enumerate().map(|(i, b)| (m + 2 * i) as f64 * b).sum();
    // C·Σb − A = c₁,  βC·Σkb + dA = c₂.
    let den = beta * sd + d * sb;
    debug_assert!(den > 0.0);
    let c = (c2 + d * c1) / den;
    let a = c * sb - c1;
    let residuals = [(c * sb - a - c1).abs(), (beta * c * sd + d * a - c2).abs()];
    let scale = c1.abs().max(c2.abs()).max(1.0);
    if residuals.iter().any(|r| !(*r <= 1e-10 * scale)) {
        return Err(DropletError::Singular(format!("mode {m} residuals {residuals:?}")));
    }
    Ok(ModeSolution { m, n, series, amplitude: c, exterior_amp: a, d_exterior: -d * a, c1, c2, residuals })
}

/// One row of the second-variation table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SecondVariationRow {
    pub m: usize,
    /// `∂²G_half(B₁)[Y_m, Y_m]` for a unit-`L²` harmonic.
    pub value: f64,
    pub chat1: f64,
    pub chat2: f64,
    pub chat3: f64,
    pub c1: f64,
    pub c2: f64,
    #[serde(rename = "A")]
    pub a: f64,
    #[serde(rename = "C")]
    pub c: f64,
    pub d_exterior: f64,
    /// Exploratory charge threshold, present only when `value < 0`.
    #[serde(rename = "Q_c")]
    pub q_c: Option<f64>,
}

impl CsvRow for SecondVariationRow {
    fn header() -> Vec<&'static str> {
        vec!["m", "value", "chat1", "chat2", "chat3", "c1", "c2", "A", "C", "d_exterior", "Q_c"]
    }

    fn record(&self) -> Vec<String> {
        let mut r = vec![self.m.to_string()];
        for x in [self.value, self.chat1, self.chat2, self.chat3, self.c1, self.c2, self.a, self.c, self.d_exterior] {
            r.push(fmt_f64(x));
        }
        r.push(self.q_c.map(fmt_f64).unwrap_or_default());
        r
    }
}

/// The constants `(ĉ₁, ĉ₂, ĉ₃)`.
pub fn constants(ball: &BallState) -> (f64, f64, f64) {
    let beta = ball.params.beta;
    let p = ball.dpsi_in;
    let chat2 = ball.lambda_const - ball.trace / ball.params.k;
    let chat3 = -(beta - 1.0) * p;
    let chat1 = chat2 * p - (beta - 1.0) * p * ball.d2psi_out;
    (chat1, chat2, chat3)
}

/// `∂²G_half(B₁)[Y_m, Y_m]` with its ingredients.
pub fn second_variation(m: usize, ball: &BallState) -> Result<SecondVariationRow> {
    second_variation_with_tol(m, ball, SERIES_TOL)
}

/// [`second_variation`] with the interior series truncated at `tol`.
pub fn second_variation_with_tol(m: usize, ball: &BallState, tol: f64) -> Result<SecondVariationRow> {
    let (c1, c2) = jump_data(ball);
    let sol = solve_mode_with(m, ball, c1, c2, tol)?;
    let (chat1, chat2, chat3) = constants(ball);
    let value = chat1 + chat2 * (sol.exterior_amp + sol.c1) + chat3 * sol.d_exterior;
    let q_c = threshold(m, ball.params.n, value);
    Ok(SecondVariationRow {
        m,
        value,
        chat1,
        chat2,
        chat3,
        c1: sol.c1,
        c2: sol.c2,
        a: sol.exterior_amp,
        c: sol.amplitude,
        d_exterior: sol.d_exterior,
        q_c,
    })
}

/// The shorter assembly `ĉ₁' + ĉ₂A + ĉ₃A(m+n−2)`, which uses `A` for the
/// interior trace and drops the sign of `R₂'(1)`.
pub fn value_uncorrected(m: usize, ball: &BallState) -> Result<f64> {
    let sol = solve_mode(m, ball)?;
    let (chat1, chat2, chat3) = constants(ball);
    let chat1_short = chat1 - ball.dpsi_in * sol.c2;
    let d = (m + ball.params.n - 2) as f64;
    Ok(chat1_short + chat2 * sol.exterior_amp + chat3 * sol.exterior_amp * d)
}

/// Second variation of the perimeter for a unit-`L²` harmonic of degree `m`
/// on the volume-constrained sphere.
pub fn perimeter_second_variation(m: usize, n: usize) -> f64 {
    (m * (m + n - 2)) as f64 - (n - 1) as f64
}

fn threshold(m: usize, n: usize, value: f64) -> Option<f64> {
    (value < 0.0).then(|| (perimeter_second_variation(m, n) / (-2.0 * value)).sqrt())
}

/// EXPLORATORY: charge at which `∂²P + Q²∂²G_paper` changes sign for degree `m`.
pub fn stability_threshold(m: usize, ball: &BallState) -> Result<Option<f64>> {
    Ok(second_variation(m, ball)?.q_c)
}

/// Rows for `m = 2..=m_max`, computed in parallel and returned in order.
pub fn spectrum(m_max: usize, ball: &BallState) -> Result<Vec<SecondVariationRow>> {
    check_degree(m_max)?;
    (2..=m_max).into_par_iter().map(|m| second_variation(m, ball)).collect()
}

/// Large-`m` behaviour of a spectrum table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumSummary {
    pub m_min: usize,
    pub m_max: usize,
    /// Least-squares fit `|value| ≈ slope·m + intercept` on `[fit_from, m_max]`.
    pub fit_from: usize,
    pub slope: f64,
    pub intercept: f64,
    /// `(max − min)/min` of `|value|/m` on the fit window.
    pub ratio_spread: f64,
    /// `(max − min)/min` of `|R₂'(1)|/m` on the fit window.
    pub d_exterior_spread: f64,
    /// Smallest `c` with `value ≥ −c(1 + m(m+n−2))^{1/2}` over the table.
    pub h_half_constant: f64,
    /// Smallest `c` with `|value| ≤ c(1 + m)` over the table.
    pub linear_constant: f64,
}

fn spread(v: impl Iterator<Item = f64>) -> f64 {
    let (lo, hi) = v.fold((f64::INFINITY, 0.0f64), |(lo, hi), x| (lo.min(x), hi.max(x)));
    (hi - lo) / lo
}

/// Summarize `rows` (sorted by `m`); the asymptotic fit uses `m ≥ fit_from`.
pub fn summarize(rows: &[SecondVariationRow], n: usize, fit_from: usize) -> Result<SpectrumSummary> {
    let window: Vec<&SecondVariationRow> = rows.iter().filter(|r| r.m >= fit_from).collect();
    if window.len() < 2 {
        return Err(DropletError::InvalidParams(format!("need two rows with m ≥ {fit_from}")));
    }
    let k = window.len() as f64;
    let mx = window.iter().map(|r| r.m as f64).sum::<f64>() / k;
    let my = window.iter().map(|r| r.value.abs()).sum::<f64>() / k;
    let sxy: f64 = window.iter().map(|r| (r.m as f64 - mx) * (r.value.abs() - my)).sum();
    let sxx: f64 = window.iter().map(|r| (r.m as f64 - mx).powi(2)).sum();
    let slope = sxy / sxx;
    let h_half_constant = rows
        .iter()
        .map(|r| (-r.value).max(0.0) / (1.0 + (r.m * (r.m + n - 2)) as f64).sqrt())
        .fold(0.0, f64::max);
    let linear_constant = rows.iter().map(|r| r.value.abs() / (1.0 + r.m as f64)).fold(0.0, f64::max);
    Ok(SpectrumSummary {
        m_min: rows.first().map_or(0, |r| r.m),
        m_max: rows.last().map_or(0, |r| r.m),
        fit_from,
        slope,
        intercept: my - slope * mx,
        ratio_spread: spread(window.iter().map(|r| r.value.abs() / r.m as f64)),
        d_exterior_spread: spread(window.iter().map(|r| r.d_exterior.abs() / r.m as f64)),
        h_half_constant,
        linear_constant,
    })
}
