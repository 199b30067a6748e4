//! Real orthonormal spherical harmonics on S² sampled on a Gauss–Legendre ×
//! uniform-azimuth product grid, with fast separable transforms.
//!
//! Harmonics are ordered lexicographically in `(ℓ, k)`, `k = -ℓ..=ℓ`, so the
//! coefficients of a degree-`L` expansion are a prefix of any larger basis.
//! `k > 0` is the cosine branch, `k < 0` the sine branch.

use std::f64::consts::{PI, SQRT_2};

use crate::error::{DropletError, Result};

/// Position of `Y_{ℓ,k}` in the full lexicographic ordering.
pub fn harmonic_index(l: usize, k: i64) -> usize {
    debug_assert!(k.unsigned_abs() as usize <= l);
    ((l * l + l) as i64 + k) as usize
}

/// Inverse of [`harmonic_index`].
pub fn harmonic_degree_order(j: usize) -> (usize, i64) {
    let l = (j as f64).sqrt() as usize;
    let l = if (l + 1) * (l + 1) <= j { l + 1 } else if l * l > j { l - 1 } else { l };
    (l, j as i64 - (l * l + l) as i64)
}

/// Number of harmonics with degree at most `l_max`.
pub fn num_harmonics(l_max: usize) -> usize {
    (l_max + 1) * (l_max + 1)
}

fn lm_index(l: usize, m: usize) -> usize {
    l * (l + 1) / 2 + m
}

/// Gauss–Legendre nodes and weights on [-1, 1], ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..(n + 1) / 2 {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 0 { 1.0 } else if n == 1 { z } else { p1 };
            let pm1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * p - pm1) / (z * z - 1.0);
            let dz = p / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// Normalized associated Legendre functions `Λ_ℓ^m(cos θ)` and their
/// θ-derivatives for `0 ≤ m ≤ ℓ ≤ l_max`, such that `Λ_ℓ^0` and
/// `√2 Λ_ℓ^m cos(mφ)` are unit-norm on S². Requires `sin θ > 0`.
pub fn legendre_table(l_max: usize, x: f64, s: f64) -> (Vec<f64>, Vec<f64>) {
    let size = lm_index(l_max, l_max) + 1;
    let mut p = vec![0.0; size];
    let mut dp = vec![0.0; size];
    let mut pmm = 1.0 / (4.0 * PI).sqrt();
    for m in 0..=l_max {
        if m > 0 {
            pmm *= ((2 * m + 1) as f64 / (2 * m) as f64).sqrt() * s;
        }
        p[lm_index(m, m)] = pmm;
        if m < l_max {
            p[lm_index(m + 1, m)] = ((2 * m + 3) as f64).sqrt() * x * pmm;
        }
        for l in m + 2..=l_max {
            let (lf, mf) = (l as f64, m as f64);
            let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
            let b = (((lf - 1.0).powi(2) - mf * mf) / (4.0 * (lf - 1.0).powi(2) - 1.0)).sqrt();
            p[lm_index(l, m)] = a * (x * p[lm_index(l - 1, m)] - b * p[lm_index(l - 2, m)]);
        }
    }
    for l in 0..=l_max {
        for m in 0..=l {
            let (lf, mf) = (l as f64, m as f64);
            let lower = if l > m {
                ((2.0 * lf + 1.0) / (2.0 * lf - 1.0) * (lf * lf - mf * mf)).sqrt() * p[lm_index(l - 1, m)]
            } else {
                0.0
            };
            dp[lm_index(l, m)] = (lf * x * p[lm_index(l, m)] - lower) / s;
        }
    }
    (p, dp)
}

fn trig(m: i64, phi: f64) -> (f64, f64) {
    let mf = m.unsigned_abs() as f64;
    match m.cmp(&0) {
        std::cmp::Ordering::Equal => (1.0, 0.0),
        std::cmp::Ordering::Greater => (SQRT_2 * (mf * phi).cos(), -mf * SQRT_2 * (mf * phi).sin()),
        std::cmp::Ordering::Less => (SQRT_2 * (mf * phi).sin(), mf * SQRT_2 * (mf * phi).cos()),
    }
}

/// Value and tangential gradient `(∂_θ, (1/sin θ) ∂_φ)` of `Y_{ℓ,k}` at `(θ, φ)`.
pub fn eval_harmonic(l: usize, k: i64, theta: f64, phi: f64) -> (f64, [f64; 2]) {
    let (p, dp) = legendre_table(l, theta.cos(), theta.sin());
    let m = k.unsigned_abs() as usize;
    let (t, dt) = trig(k, phi);
    let lam = p[lm_index(l, m)];
    (lam * t, [dp[lm_index(l, m)] * t, lam * dt / theta.sin()])
}

/// Sampled harmonic basis with product quadrature.
///
/// Node `q = i * n_phi + j` sits at polar index `i`, azimuth index `j`.
#[derive(Debug, Clone)]
pub struct SphereBasis {
    pub l_max: usize,
    pub quad_l: usize,
    pub zonal: bool,
    pub n_theta: usize,
    pub n_phi: usize,
    pub cos_theta: Vec<f64>,
    pub sin_theta: Vec<f64>,
    pub phi: Vec<f64>,
    pub weights: Vec<f64>,
    pub points: Vec<[f64; 3]>,
    /// `(ℓ, k)` of each local harmonic.
    pub harmonics: Vec<(usize, i64)>,
    /// Row-major `[harmonic][node]` values of `Y`.
    pub values: Vec<f64>,
    pub grad_theta: Vec<f64>,
    pub grad_phi: Vec<f64>,
    leg: Vec<f64>,
    dleg: Vec<f64>,
    trig: Vec<f64>,
    dtrig: Vec<f64>,
}

impl SphereBasis {
    /// Full basis up to `l_max` with quadrature sized for `l_max`.
    pub fn new(l_max: usize, n: usize) -> Result<Self> {
        Self::with_quadrature(l_max, l_max, n)
    }

    /// Full basis up to `l_max` with quadrature sized for `quad_l ≥ l_max`.
    pub fn with_quadrature(l_max: usize, quad_l: usize, n: usize) -> Result<Self> {
        if n != 3 {
            return Err(DropletError::UnsupportedDimension(n));
        }
        let quad_l = quad_l.max(l_max);
        Ok(Self::build(l_max, 2 * (quad_l + 1), 4 * (quad_l + 1), false, quad_l, true))
    }

    /// Axisymmetric basis: only `k = 0` harmonics, one azimuth node carrying weight 2π.
    pub fn zonal(l_max: usize, quad_l: usize) -> Self {
        let quad_l = quad_l.max(l_max);
        Self::build(l_max, 2 * (quad_l + 1), 1, true, quad_l, true)
    }

    /// Dense sampling grid used for sup-norm checks (no quadrature role, no
    /// dense per-harmonic tables).
    pub fn oversampled(l_max: usize) -> Self {
        let q = 10 * (l_max + 1);
        Self::build(l_max, q, 2 * q, false, 0, false)
    }

    fn build(l_max: usize, n_theta: usize, n_phi: usize, zonal: bool, quad_l: usize, dense: bool) -> Self {
        let (x, w) = gauss_legendre(n_theta);
        let sin_theta: Vec<f64> = x.iter().map(|c| (1.0 - c * c).sqrt()).collect();
        let phi: Vec<f64> = (0..n_phi).map(|j| 2.0 * PI * j as f64 / n_phi as f64).collect();
        let wphi = 2.0 * PI / n_phi as f64;
        let harmonics: Vec<(usize, i64)> = if zonal {
            (0..=l_max).map(|l| (l, 0)).collect()
        } else {
            (0..num_harmonics(l_max)).map(harmonic_degree_order).collect()
        };
        let nlm = lm_index(l_max, l_max) + 1;
        let mut leg = vec![0.0; n_theta * nlm];
        let mut dleg = vec![0.0; n_theta * nlm];
        for i in 0..n_theta {
            let (p, dp) = legendre_table(l_max, x[i], sin_theta[i]);
            leg[i * nlm..(i + 1) * nlm].copy_from_slice(&p);
            dleg[i * nlm..(i + 1) * nlm].copy_from_slice(&dp);
        }
        let nm = 2 * l_max + 1;
        let mut trig_t = vec![0.0; nm * n_phi];
        let mut dtrig_t = vec![0.0; nm * n_phi];
        for mi in 0..nm {
            let m = mi as i64 - l_max as i64;
            for j in 0..n_phi {
                let (t, dt) = trig(m, phi[j]);
                trig_t[mi * n_phi + j] = t;
                dtrig_t[mi * n_phi + j] = dt;
            }
        }
        let nq = n_theta * n_phi;
        let mut weights = vec![0.0; nq];
        let mut points = vec![[0.0; 3]; nq];
        for i in 0..n_theta {
            for j in 0..n_phi {
                let q = i * n_phi + j;
                weights[q] = w[i] * wphi;
                points[q] = [sin_theta[i] * phi[j].cos(), sin_theta[i] * phi[j].sin(), x[i]];
            }
        }
        let nb = if dense { harmonics.len() } else { 0 };
        let mut values = vec![0.0; nb * nq];
        let mut grad_theta = vec![0.0; nb * nq];
        let mut grad_phi = vec![0.0; nb * nq];
        for (b, &(l, k)) in harmonics.iter().enumerate().take(nb) {
            let m = k.unsigned_abs() as usize;
            let mi = (k + l_max as i64) as usize;
            for i in 0..n_theta {
                let lam = leg[i * nlm + lm_index(l, m)];
                let dlam = dleg[i * nlm + lm_index(l, m)];
                for j in 0..n_phi {
                    let q = i * n_phi + j;
                    let t = trig_t[mi * n_phi + j];
                    values[b * nq + q] = lam * t;
                    grad_theta[b * nq + q] = dlam * t;
                    grad_phi[b * nq + q] = lam * dtrig_t[mi * n_phi + j] / sin_theta[i];
                }
            }
        }
        Self {
            l_max,
            quad_l,
            zonal,
            n_theta,
            n_phi,
            cos_theta: x,
            sin_theta,
            phi,
            weights,
            points,
            harmonics,
            values,
            grad_theta,
            grad_phi,
            leg,
            dleg,
            trig: trig_t,
            dtrig: dtrig_t,
        }
    }

    pub fn num_harmonics(&self) -> usize {
        self.harmonics.len()
    }

    pub fn num_nodes(&self) -> usize {
        self.n_theta * self.n_phi
    }

    /// Value of local harmonic `b` at node `q`.
    pub fn value(&self, b: usize, q: usize) -> f64 {
        self.values[b * self.num_nodes() + q]
    }

    /// Local index of harmonic `(ℓ, k)`, if present.
    pub fn local_index(&self, l: usize, k: i64) -> Option<usize> {
        if l > self.l_max {
            return None;
        }
        if self.zonal {
            (k == 0).then_some(l)
        } else {
            Some(harmonic_index(l, k))
        }
    }

    /// Convert full-ordering coefficients to this basis' local ordering (truncating).
    pub fn localize(&self, full: &[f64]) -> Vec<f64> {
        self.harmonics
            .iter()
            .map(|&(l, k)| full.get(harmonic_index(l, k)).copied().unwrap_or(0.0))
            .collect()
    }

    /// Expand local coefficients into the full ordering with `num_harmonics(l_max)` entries.
    pub fn globalize(&self, local: &[f64], l_max: usize) -> Vec<f64> {
        let mut out = vec![0.0; num_harmonics(l_max)];
        for (b, &(l, k)) in self.harmonics.iter().enumerate() {
            if l <= l_max {
                out[harmonic_index(l, k)] = local[b];
            }
        }
        out
    }

    /// Synthesize nodal values (and optionally tangential gradients) from local coefficients.
    /// Coefficient slices shorter than the basis are treated as zero-padded.
    pub fn synthesize(
        &self,
        coeffs: &[f64],
        values: &mut [f64],
        mut grad: Option<(&mut [f64], &mut [f64])>,
    ) {
        let nlm = lm_index(self.l_max, self.l_max) + 1;
        let nm = 2 * self.l_max + 1;
        let lm = self.l_max as i64;
        let mut f = vec![0.0; nm];
        let mut d = vec![0.0; nm];
        let want_grad = grad.is_some();
        for i in 0..self.n_theta {
            f.iter_mut().for_each(|v| *v = 0.0);
            d.iter_mut().for_each(|v| *v = 0.0);
            let leg = &self.leg[i * nlm..(i + 1) * nlm];
            let dleg = &self.dleg[i * nlm..(i + 1) * nlm];
            for (b, &c) in coeffs.iter().enumerate().take(self.harmonics.len()) {
                if c == 0.0 {
                    continue;
                }
                let (l, k) = self.harmonics[b];
                let li = lm_index(l, k.unsigned_abs() as usize);
                let mi = (k + lm) as usize;
                f[mi] += c * leg[li];
                if want_grad {
                    d[mi] += c * dleg[li];
                }
            }
            let row = i * self.n_phi..(i + 1) * self.n_phi;
            let vrow = &mut values[row.clone()];
            vrow.iter_mut().for_each(|v| *v = 0.0);
            for mi in 0..nm {
                if f[mi] == 0.0 {
                    continue;
                }
                let t = &self.trig[mi * self.n_phi..(mi + 1) * self.n_phi];
                for (v, tv) in vrow.iter_mut().zip(t) {
                    *v += f[mi] * tv;
                }
            }
            if let Some((gt, gp)) = grad.as_mut() {
                let inv_s = 1.0 / self.sin_theta[i];
                let gtrow = &mut gt[row.clone()];
                let gprow = &mut gp[row.clone()];
                gtrow.iter_mut().for_each(|v| *v = 0.0);
                gprow.iter_mut().for_each(|v| *v = 0.0);
                for mi in 0..nm {
                    let t = &self.trig[mi * self.n_phi..(mi + 1) * self.n_phi];
                    let dt = &self.dtrig[mi * self.n_phi..(mi + 1) * self.n_phi];
                    if d[mi] != 0.0 {
                        for (g, tv) in gtrow.iter_mut().zip(t) {
                            *g += d[mi] * tv;
                        }
                    }
                    if f[mi] != 0.0 && mi as i64 != lm {
                        let fm = f[mi] * inv_s;
                        for (g, dv) in gprow.iter_mut().zip(dt) {
                            *g += fm * dv;
                        }
                    }
                }
            }
        }
    }

    /// Adjoint of [`synthesize`]: `out_b += Σ_q f_q Y_b(q) + gθ_q ∂_θY_b(q) + gφ_q ∂_φY_b(q)/sin θ`.
    /// No quadrature weights are applied.
    pub fn adjoint(&self, f: &[f64], grad: Option<(&[f64], &[f64])>, out: &mut [f64]) {
        let nlm = lm_index(self.l_max, self.l_max) + 1;
        let nm = 2 * self.l_max + 1;
        let lm = self.l_max as i64;
        let mut fm = vec![0.0; nm];
        let mut dm = vec![0.0; nm];
        for i in 0..self.n_theta {
            let row = i * self.n_phi..(i + 1) * self.n_phi;
            let frow = &f[row.clone()];
            let inv_s = 1.0 / self.sin_theta[i];
            for mi in 0..nm {
                let t = &self.trig[mi * self.n_phi..(mi + 1) * self.n_phi];
                let mut acc: f64 = frow.iter().zip(t).map(|(a, b)| a * b).sum();
                let mut dacc = 0.0;
                if let Some((gt, gp)) = grad {
                    let dt = &self.dtrig[mi * self.n_phi..(mi + 1) * self.n_phi];
                    dacc = gt[row.clone()].iter().zip(t).map(|(a, b)| a * b).sum();
                    if mi as i64 != lm {
                        let s: f64 = gp[row.clone()].iter().zip(dt).map(|(a, b)| a * b).sum();
                        acc += s * inv_s;
                    }
                }
                fm[mi] = acc;
                dm[mi] = dacc;
            }
            let leg = &self.leg[i * nlm..(i + 1) * nlm];
            let dleg = &self.dleg[i * nlm..(i + 1) * nlm];
            for (b, &(l, k)) in self.harmonics.iter().enumerate() {
                let li = lm_index(l, k.unsigned_abs() as usize);
                let mi = (k + lm) as usize;
                out[b] += fm[mi] * leg[li] + dm[mi] * dleg[li];
            }
        }
    }

    /// Quadrature projection of nodal values onto the local harmonics.
    pub fn analyze(&self, values: &[f64]) -> Vec<f64> {
        let weighted: Vec<f64> = values.iter().zip(&self.weights).map(|(v, w)| v * w).collect();
        let mut out = vec![0.0; self.num_harmonics()];
        self.adjoint(&weighted, None, &mut out);
        out
    }

    /// Quadrature integral of nodal values.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        values.iter().zip(&self.weights).map(|(v, w)| v * w).sum()
    }
}

/// Evaluate a full-ordering expansion at an arbitrary unit vector.
pub fn eval_expansion(coeffs: &[f64], point: [f64; 3]) -> f64 {
    if coeffs.is_empty() {
        return 0.0;
    }
    let l_max = (coeffs.len() as f64).sqrt() as usize - 1;
    let z = point[2].clamp(-1.0, 1.0);
    let s = (point[0] * point[0] + point[1] * point[1]).sqrt();
    let phi = point[1].atan2(point[0]);
    let (p, _) = legendre_table(l_max, z, s.max(1e-300));
    let mut v = 0.0;
    for (j, &c) in coeffs.iter().enumerate() {
        if c == 0.0 {
            continue;
        }
        let (l, k) = harmonic_degree_order(j);
        v += c * p[lm_index(l, k.unsigned_abs() as usize)] * trig(k, phi).0;
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_roundtrip() {
        for j in 0..400 {
            let (l, k) = harmonic_degree_order(j);
            assert_eq!(harmonic_index(l, k), j);
        }
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(7);
        for d in 0..14 {
            let num: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(d)).sum();
            let exact = if d % 2 == 1 { 0.0 } else { 2.0 / (d as f64 + 1.0) };
            assert!((num - exact).abs() < 1e-14, "degree {d}");
        }
    }

    #[test]
    fn synthesize_matches_dense_values() {
        let b = SphereBasis::new(5, 3).unwrap();
        let nb = b.num_harmonics();
        let nq = b.num_nodes();
        let c: Vec<f64> = (0..nb).map(|j| ((j * 7 + 3) % 11) as f64 / 11.0 - 0.5).collect();
        let mut v = vec![0.0; nq];
        let mut gt = vec![0.0; nq];
        let mut gp = vec![0.0; nq];
        b.synthesize(&c, &mut v, Some((&mut gt, &mut gp)));
        for q in 0..nq {
            let dv: f64 = (0..nb).map(|j| c[j] * b.values[j * nq + q]).sum();
            let dt: f64 = (0..nb).map(|j| c[j] * b.grad_theta[j * nq + q]).sum();
            let dp: f64 = (0..nb).map(|j| c[j] * b.grad_phi[j * nq + q]).sum();
            assert!((v[q] - dv).abs() < 1e-13);
            assert!((gt[q] - dt).abs() < 1e-12);
            assert!((gp[q] - dp).abs() < 1e-12);
        }
        let back = b.analyze(&v);
        for j in 0..nb {
            assert!((back[j] - c[j]).abs() < 1e-13);
        }
    }

    #[test]
    fn arbitrary_point_evaluation_matches_grid() {
        let b = SphereBasis::new(4, 3).unwrap();
        let nb = b.num_harmonics();
        let c: Vec<f64> = (0..nb).map(|j| (j as f64 * 0.37).sin()).collect();
        let mut v = vec![0.0; b.num_nodes()];
        b.synthesize(&c, &mut v, None);
        for q in (0..b.num_nodes()).step_by(13) {
            assert!((eval_expansion(&c, b.points[q]) - v[q]).abs() < 1e-13);
        }
    }
}
