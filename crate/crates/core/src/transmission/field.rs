use std::f64::consts::PI;
use std::io::Write;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::grid::{Blending, RadialGrid, SolverOptions};
use super::map::DomainMap;
use crate::error::{DropletError, Result};
use crate::io::{fmt_f64, CsvRow};
use crate::params::PhysicalParams;
use crate::sphere::{ShapeCoeffs, SphereBasis};

const GAUSS2: [(f64, f64); 2] = [(-0.577_350_269_189_625_8, 1.0), (0.577_350_269_189_625_8, 1.0)];

/// Radial shape functions: linear inside the unit ball, and per degree `ℓ`
/// spanned by `ρ^ℓ` and `ρ^{−ℓ−1}` outside it, so that exterior harmonic
/// profiles are represented exactly.
#[derive(Debug, Clone)]
pub(crate) struct Elements {
    pub nodes: Vec<f64>,
    pub one: usize,
}

impl Elements {
    /// `[N_a, N_b, N_a', N_b']` on element `e` at radius `r`.
    pub fn eval(&self, e: usize, r: f64, l: usize) -> [f64; 4] {
        let (a, b) = (self.nodes[e], self.nodes[e + 1]);
        if e < self.one {
            let h = b - a;
            return [(b - r) / h, (r - a) / h, -1.0 / h, 1.0 / h];
        }
        let lf = l as f64;
        let ub = b / a;
        let u = r / a;
        let (f1, f2) = (u.powf(lf), u.powf(-lf - 1.0));
        let (d1, d2) = (lf * u.powf(lf - 1.0) / a, -(lf + 1.0) * u.powf(-lf - 2.0) / a);
        let (p, m) = (ub.powf(lf), ub.powf(-lf - 1.0));
        let det = m - p;
        let (a1, a2) = (m / det, -p / det);
        let (b1, b2) = (1.0 / (p - m), -1.0 / (p - m));
        [a1 * f1 + a2 * f2, b1 * f1 + b2 * f2, a1 * d1 + a2 * d2, b1 * d1 + b2 * d2]
    }

    /// Exact `∫(r²N_i'N_k' + ℓ(ℓ+1)N_iN_k)` on an exterior element, from the
    /// boundary terms of harmonic shape functions.
    pub fn exterior_stiffness(&self, e: usize, l: usize) -> [f64; 3] {
        let (a, b) = (self.nodes[e], self.nodes[e + 1]);
        let fa = self.eval(e, a, l);
        let fb = self.eval(e, b, l);
        let kaa = -a * a * fa[2];
        let kbb = b * b * fb[3];
        let kab = 0.5 * (-a * a * fa[3] + b * b * fb[2]);
        [kaa, kab, kbb]
    }
}

/// Factored tridiagonal matrix.
#[derive(Debug, Clone)]
struct Tridiag {
    first: usize,
    sub: Vec<f64>,
    cp: Vec<f64>,
    inv: Vec<f64>,
}

impl Tridiag {
    fn new(diag: &[f64], off: &[f64], first: usize) -> Self {
        let n = diag.len();
        let mut cp = vec![0.0; n];
        let mut inv = vec![0.0; n];
        for i in first..n {
            let m = if i > first { diag[i] - off[i - 1] * cp[i - 1] } else { diag[i] };
            inv[i] = 1.0 / m;
            if i + 1 < n {
                cp[i] = off[i] * inv[i];
            }
        }
        Self { first, sub: off.to_vec(), cp, inv }
    }

    fn solve(&self, x: &mut [f64]) {
        let n = x.len();
        for v in x.iter_mut().take(self.first) {
            *v = 0.0;
        }
        for i in self.first..n {
            let prev = if i > self.first { self.sub[i - 1] * x[i - 1] } else { 0.0 };
            x[i] = (x[i] - prev) * self.inv[i];
        }
        for i in (self.first..n.saturating_sub(1)).rev() {
            x[i] -= self.cp[i] * x[i + 1];
        }
    }
}

/// Radial quadrature point in the blended region of the map.
#[derive(Debug, Clone)]
struct Point {
    e: usize,
    inside: bool,
    fns: Vec<[f64; 4]>,
}

/// Discrete pulled-back functional
/// `½cᵀMc + |E|⁻¹wᵀc − (2|E|K)⁻¹(wᵀc)²` on a fixed grid and basis.
pub(crate) struct Operator {
    pub grid: RadialGrid,
    pub map: DomainMap,
    pub params: PhysicalParams,
    pub elements: Elements,
    pub ell: Vec<usize>,
    pub volume: f64,
    pub w: Vec<f64>,
    nh: usize,
    nn: usize,
    diag: Vec<Vec<f64>>,
    off: Vec<Vec<f64>>,
    fac: Vec<Tridiag>,
    sm_z: Vec<f64>,
    sm_w: Vec<f64>,
    sm_gamma: f64,
    points: Vec<Point>,
    coef: Vec<f64>,
}

/// Harmonic basis used for the field of `shape`.
pub fn solver_basis(shape: &ShapeCoeffs, opts: &SolverOptions) -> Result<Arc<SphereBasis>> {
    let l = opts.solver_degree(shape.l_max());
    let quad = opts.quad_l.unwrap_or(l).max(l);
    Ok(Arc::new(if shape.is_zonal() { SphereBasis::zonal(l, quad) } else { SphereBasis::with_quadrature(l, quad, 3)? }))
}

impl Operator {
    pub fn new(shape: &ShapeCoeffs, params: &PhysicalParams, opts: &SolverOptions) -> Result<Self> {
        params.validate()?;
        opts.validate()?;
        if params.n != 3 {
            return Err(DropletError::UnsupportedDimension(params.n));
        }
        let basis = solver_basis(shape, opts)?;
        Self::with_basis(shape, params, opts, basis)
    }

    pub fn with_basis(
        shape: &ShapeCoeffs,
        params: &PhysicalParams,
        opts: &SolverOptions,
        basis: Arc<SphereBasis>,
    ) -> Result<Self> {
        let grid = RadialGrid::new(opts.n_r, opts.r_inf)?;
        let map = DomainMap::new(shape, basis.clone(), opts.blending, &grid)?;
        let elements = Elements { nodes: grid.nodes.clone(), one: grid.one() };
        let nh = basis.num_harmonics();
        let nn = grid.num_nodes();
        let nq = basis.num_nodes();
        let l_max = basis.l_max;
        let ell: Vec<usize> = basis.harmonics.iter().map(|h| h.0).collect();
        let (beta, k) = (params.beta, params.k);
        let vol: f64 = map.phi.iter().zip(&basis.weights).map(|(p, w)| w * (1.0 + p).powi(3) / 3.0).sum();

        let mut diag = vec![vec![0.0; nn]; l_max + 1];
        let mut off = vec![vec![0.0; nn - 1]; l_max + 1];
        let mut w = vec![0.0; nn * nh];
        let y00 = (4.0 * PI).sqrt();
        for e in 0..nn - 1 {
            let (a, b) = (grid.nodes[e], grid.nodes[e + 1]);
            let h = b - a;
            for l in 0..=l_max {
                let ll = (l * (l + 1)) as f64;
                let m = if e < grid.one() {
                    let mut m = [0.0; 3];
                    for (x, gw) in GAUSS2 {
                        let r = a + 0.5 * h * (x + 1.0);
                        let wt = 0.5 * h * gw;
                        let f = elements.eval(e, r, l);
                        let stiff = |i: usize, j: usize| {
                            beta * (r * r * f[2 + i] * f[2 + j] + ll * f[i] * f[j]) + r * r * f[i] * f[j] / k
                        };
                        m[0] += wt * stiff(0, 0);
                        m[1] += wt * stiff(0, 1);
                        m[2] += wt * stiff(1, 1);
                    }
                    m
                } else {
                    elements.exterior_stiffness(e, l)
                };
                diag[l][e] += m[0];
                off[l][e] += m[1];
                diag[l][e + 1] += m[2];
            }
            if e < grid.one() {
                for (x, gw) in GAUSS2 {
                    let r = a + 0.5 * h * (x + 1.0);
                    let wt = 0.5 * h * gw * r * r * y00;
                    w[e * nh] += wt * (b - r) / h;
                    w[(e + 1) * nh] += wt * (r - a) / h;
                }
            }
        }
        for l in 0..=l_max {
            diag[l][nn - 1] += (l + 1) as f64 * opts.r_inf;
        }
        let fac: Vec<Tridiag> =
            (0..=l_max).map(|l| Tridiag::new(&diag[l], &off[l], if l == 0 { 0 } else { 1 })).collect();
        let sigma = 1.0 / (vol * k);
        let sm_w: Vec<f64> = (0..nn).map(|i| w[i * nh]).collect();
        let mut sm_z = sm_w.clone();
        fac[0].solve(&mut sm_z);
        let sm_gamma = 1.0 - sigma * sm_w.iter().zip(&sm_z).map(|(a, b)| a * b).sum::<f64>();

        let mut op = Self {
            grid,
            map,
            params: *params,
            elements,
            ell,
            volume: vol,
            w,
            nh,
            nn,
            diag,
            off,
            fac,
            sm_z,
            sm_w,
            sm_gamma,
            points: Vec::new(),
            coef: Vec::new(),
        };
        if shape.coeffs().iter().any(|&c| c != 0.0) {
            op.build_perturbation(nq)?;
        }
        Ok(op)
    }

    fn build_perturbation(&mut self, nq: usize) -> Result<()> {
        let bl = self.map.blending;
        let lo = self.grid.node_at(bl.inner_start)?;
        let hi = self.grid.node_at(bl.outer_end)?;
        let basis = self.map.basis.clone();
        let (beta, l_max) = (self.params.beta, basis.l_max);
        for e in lo..hi {
            let (a, b) = (self.grid.nodes[e], self.grid.nodes[e + 1]);
            let h = b - a;
            let inside = e < self.grid.one();
            let coeff = if inside { beta } else { 1.0 };
            for (x, gw) in GAUSS2 {
                let r = a + 0.5 * h * (x + 1.0);
                let wt = 0.5 * h * gw;
                let fns = (0..=l_max).map(|l| self.elements.eval(e, r, l)).collect();
                let base = self.coef.len();
                self.coef.resize(base + 5 * nq, 0.0);
                let c = &mut self.coef[base..];
                for q in 0..nq {
                    let p = self.map.at(r, q);
                    if !(p.density > 0.0) || !(p.r_rho > 0.0) {
                        return Err(DropletError::DegenerateMap { rho: r, node: q, jac: p.density / (r * r) });
                    }
                    let g2 = p.grad[0] * p.grad[0] + p.grad[1] * p.grad[1];
                    let f = wt * basis.weights[q];
                    c[q] = f * coeff * ((p.r * p.r + g2) / p.r_rho - r * r);
                    c[nq + q] = -f * coeff * p.grad[0];
                    c[2 * nq + q] = -f * coeff * p.grad[1];
                    c[3 * nq + q] = f * coeff * (p.r_rho - 1.0);
                    c[4 * nq + q] = if inside { f * (p.density - r * r) } else { 0.0 };
                }
                self.points.push(Point { e, inside, fns });
            }
        }
        // Volume-density perturbation of the linear term.
        let mut ow = vec![0.0; self.nh];
        for (pi, pt) in self.points.iter().enumerate() {
            if !pt.inside {
                continue;
            }
            let cj = &self.coef[pi * 5 * nq + 4 * nq..(pi + 1) * 5 * nq];
            ow.iter_mut().for_each(|v| *v = 0.0);
            basis.adjoint(cj, None, &mut ow);
            for b in 0..self.nh {
                let f = pt.fns[self.ell[b]];
                self.w[pt.e * self.nh + b] += ow[b] * f[0];
                self.w[(pt.e + 1) * self.nh + b] += ow[b] * f[1];
            }
        }
        // Degrees ℓ ≥ 1 vanish at the origin.
        for b in 0..self.nh {
            if self.ell[b] > 0 {
                self.w[b] = 0.0;
            }
        }
        Ok(())
    }

    pub fn num_unknowns(&self) -> usize {
        self.nn * self.nh
    }

    pub fn sigma(&self) -> f64 {
        1.0 / (self.volume * self.params.k)
    }

    /// `y = Mc` (without the rank-one term).
    fn apply_m(&self, c: &[f64], y: &mut [f64]) {
        let (nh, nn) = (self.nh, self.nn);
        for b in 0..nh {
            let l = self.ell[b];
            let (d, o) = (&self.diag[l], &self.off[l]);
            for i in 0..nn {
                let mut s = d[i] * c[i * nh + b];
                if i > 0 {
                    s += o[i - 1] * c[(i - 1) * nh + b];
                }
                if i + 1 < nn {
                    s += o[i] * c[(i + 1) * nh + b];
                }
                y[i * nh + b] = s;
            }
        }
        if !self.points.is_empty() {
            self.apply_perturbation(c, y);
        }
        for b in 0..nh {
            if self.ell[b] > 0 {
                y[b] = 0.0;
            }
        }
    }

    fn apply_perturbation(&self, c: &[f64], y: &mut [f64]) {
        let basis = &self.map.basis;
        let nq = basis.num_nodes();
        let nh = self.nh;
        let inv_k = 1.0 / self.params.k;
        let mut v = vec![0.0; nh];
        let mut d = vec![0.0; nh];
        let mut psi = vec![0.0; nq];
        let mut gt = vec![0.0; nq];
        let mut gp = vec![0.0; nq];
        let mut pr = vec![0.0; nq];
        let mut f0 = vec![0.0; nq];
        let mut ft = vec![0.0; nq];
        let mut fp = vec![0.0; nq];
        let mut fr = vec![0.0; nq];
        let mut ov = vec![0.0; nh];
        let mut od = vec![0.0; nh];
        for (pi, pt) in self.points.iter().enumerate() {
            let (c0, c1) = (&c[pt.e * nh..(pt.e + 1) * nh], &c[(pt.e + 1) * nh..(pt.e + 2) * nh]);
            for b in 0..nh {
                let f = pt.fns[self.ell[b]];
                v[b] = c0[b] * f[0] + c1[b] * f[1];
                d[b] = c0[b] * f[2] + c1[b] * f[3];
            }
            basis.synthesize(&v, &mut psi, Some((&mut gt, &mut gp)));
            basis.synthesize(&d, &mut pr, None);
            let k = &self.coef[pi * 5 * nq..(pi + 1) * 5 * nq];
            let (crr, cgt, cgp, ctt, cj) =
                (&k[..nq], &k[nq..2 * nq], &k[2 * nq..3 * nq], &k[3 * nq..4 * nq], &k[4 * nq..]);
            for q in 0..nq {
                fr[q] = crr[q] * pr[q] + cgt[q] * gt[q] + cgp[q] * gp[q];
                ft[q] = cgt[q] * pr[q] + ctt[q] * gt[q];
                fp[q] = cgp[q] * pr[q] + ctt[q] * gp[q];
                f0[q] = if pt.inside { cj[q] * inv_k * psi[q] } else { 0.0 };
            }
            ov.iter_mut().for_each(|x| *x = 0.0);
            od.iter_mut().for_each(|x| *x = 0.0);
            basis.adjoint(&f0, Some((&ft, &fp)), &mut ov);
            basis.adjoint(&fr, None, &mut od);
            for b in 0..nh {
                let f = pt.fns[self.ell[b]];
                y[pt.e * nh + b] += ov[b] * f[0] + od[b] * f[2];
                y[(pt.e + 1) * nh + b] += ov[b] * f[1] + od[b] * f[3];
            }
        }
    }

    /// `y = (M − σwwᵀ)c`.
    pub fn apply(&self, c: &[f64], y: &mut [f64]) {
        self.apply_m(c, y);
        let s = self.sigma() * dot(&self.w, c);
        for (yi, wi) in y.iter_mut().zip(&self.w) {
            *yi -= s * wi;
        }
    }

    /// Block-tridiagonal preconditioner built from the undeformed operator.
    fn precondition(&self, r: &[f64], z: &mut [f64]) {
        let (nh, nn) = (self.nh, self.nn);
        let mut col = vec![0.0; nn];
        for b in 0..nh {
            for i in 0..nn {
                col[i] = r[i * nh + b];
            }
            let l = self.ell[b];
            self.fac[l].solve(&mut col);
            if l == 0 {
                let s = self.sigma() * dot(&self.sm_w, &col) / self.sm_gamma;
                for (ci, zi) in col.iter_mut().zip(&self.sm_z) {
                    *ci += s * zi;
                }
            }
            for i in 0..nn {
                z[i * nh + b] = col[i];
            }
        }
    }

    /// Right-hand side `b = −w/|E|`.
    pub fn rhs(&self) -> Vec<f64> {
        self.w.iter().map(|x| -x / self.volume).collect()
    }

    /// Minimize by preconditioned conjugate gradients from `x0`.
    pub fn solve(&self, x0: Option<&[f64]>, tol: f64, max_iter: usize) -> Result<CgOutcome> {
        let n = self.num_unknowns();
        let b = self.rhs();
        let mut x = match x0 {
            Some(v) if v.len() == n => v.to_vec(),
            _ => vec![0.0; n],
        };
        for bi in 0..self.nh {
            if self.ell[bi] > 0 {
                x[bi] = 0.0;
            }
        }
        let mut ax = vec![0.0; n];
        self.apply(&x, &mut ax);
        let mut r: Vec<f64> = b.iter().zip(&ax).map(|(a, c)| a - c).collect();
        let bnorm = norm(&b).max(f64::MIN_POSITIVE);
        let mut z = vec![0.0; n];
        self.precondition(&r, &mut z);
        let mut p = z.clone();
        let mut rz = dot(&r, &z);
        let energy = |x: &[f64], r: &[f64]| -0.5 * dot(&b, x) - 0.5 * dot(x, r);
        let mut f = energy(&x, &r);
        let mut history = vec![f];
        let mut ap = vec![0.0; n];
        let mut iters = 0;
        while norm(&r) > tol * bnorm {
            if iters >= max_iter {
                return Err(DropletError::NoConvergence { iters, residual: norm(&r) });
            }
            self.apply(&p, &mut ap);
            let pap = dot(&p, &ap);
            if !(pap > 0.0) {
                return Err(DropletError::Singular(format!("non-positive curvature {pap:e}")));
            }
            let alpha = rz / pap;
            for i in 0..n {
                x[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
            }
            iters += 1;
            let f_new = energy(&x, &r);
            if f_new > f + 1e-13 * f.abs().max(1e-300) {
                return Err(DropletError::NonMonotone { iter: iters });
            }
            f = f_new;
            history.push(f);
            self.precondition(&r, &mut z);
            let rz_new = dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            for i in 0..n {
                p[i] = z[i] + beta * p[i];
            }
        }
        self.apply(&x, &mut ax);
        let r: Vec<f64> = b.iter().zip(&ax).map(|(a, c)| a - c).collect();
        let value = energy(&x, &r);
        Ok(CgOutcome { x, value, residual: norm(&r), iterations: iters, history })
    }
}

pub(crate) struct CgOutcome {
    pub x: Vec<f64>,
    pub value: f64,
    pub residual: f64,
    pub iterations: usize,
    pub history: Vec<f64>,
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Minimizer of the pulled-back dual functional on a fixed grid.
#[derive(Debug, Clone)]
pub struct FieldSolution {
    pub shape: ShapeCoeffs,
    pub params: PhysicalParams,
    pub options: SolverOptions,
    pub grid: RadialGrid,
    pub map: DomainMap,
    /// `(ℓ, k)` of each field harmonic.
    pub harmonics: Vec<(usize, i64)>,
    /// Node-major coefficients: entry `i * harmonics.len() + b`.
    pub coeffs: Vec<f64>,
    pub j_e: f64,
    /// Norm of the discrete gradient of the functional at `coeffs`.
    pub residual: f64,
    pub iterations: usize,
    /// Functional value after each conjugate-gradient iteration.
    pub history: Vec<f64>,
    /// `|E|`.
    pub volume: f64,
    /// `∫_E ψ`.
    pub psi_integral: f64,
}

/// Solve the field problem for `shape`.
pub fn solve_field(shape: &ShapeCoeffs, params: &PhysicalParams, opts: &SolverOptions) -> Result<FieldSolution> {
    solve_field_from(shape, params, opts, None)
}

/// [`solve_field`] warm-started from a previous solution on the same discretization.
pub fn solve_field_from(
    shape: &ShapeCoeffs,
    params: &PhysicalParams,
    opts: &SolverOptions,
    warm: Option<&FieldSolution>,
) -> Result<FieldSolution> {
    let op = Operator::new(shape, params, opts)?;
    let init = warm.filter(|w| w.harmonics == op.map.basis.harmonics && w.grid == op.grid).map(|w| &w.coeffs[..]);
    let out = op.solve(init, opts.cg_tol, opts.max_iter)?;
    let psi_integral = dot(&op.w, &out.x);
    Ok(FieldSolution {
        shape: shape.clone(),
        params: *params,
        options: opts.clone(),
        harmonics: op.map.basis.harmonics.clone(),
        grid: op.grid,
        coeffs: out.x,
        j_e: out.value,
        residual: out.residual,
        iterations: out.iterations,
        history: out.history,
        volume: op.volume,
        psi_integral,
        map: op.map,
    })
}

/// `J(E)`.
pub fn j_energy(shape: &ShapeCoeffs, params: &PhysicalParams, opts: &SolverOptions) -> Result<f64> {
    Ok(solve_field(shape, params, opts)?.j_e)
}

/// `G_half = K/(2|E|) − J(E)` and `G_paper = 2 G_half`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GEnergies {
    #[serde(rename = "J_E")]
    pub j_e: f64,
    pub volume: f64,
    #[serde(rename = "G_half")]
    pub g_half: f64,
    #[serde(rename = "G_paper")]
    pub g_paper: f64,
}

impl GEnergies {
    pub fn from_field(field: &FieldSolution) -> Self {
        let g_half = field.params.k / (2.0 * field.volume) - field.j_e;
        Self { j_e: field.j_e, volume: field.volume, g_half, g_paper: 2.0 * g_half }
    }
}

pub fn g_energy(shape: &ShapeCoeffs, params: &PhysicalParams, opts: &SolverOptions) -> Result<GEnergies> {
    Ok(GEnergies::from_field(&solve_field(shape, params, opts)?))
}

/// One `(r, ℓ, k, coefficient)` entry of an exported field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldEntry {
    pub r: f64,
    pub l: usize,
    pub k: i64,
    pub coefficient: f64,
}

impl CsvRow for FieldEntry {
    fn header() -> Vec<&'static str> {
        vec!["r", "l", "k", "coefficient"]
    }

    fn record(&self) -> Vec<String> {
        vec![fmt_f64(self.r), self.l.to_string(), self.k.to_string(), fmt_f64(self.coefficient)]
    }
}

/// JSON summary of a field solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldSummary {
    #[serde(rename = "J_E")]
    pub j_e: f64,
    pub residual: f64,
    pub iterations: usize,
    pub volume: f64,
    pub grid: GridSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    #[serde(rename = "N_r")]
    pub n_r: usize,
    #[serde(rename = "R_inf")]
    pub r_inf: f64,
    pub uniform_cells: usize,
    pub l_solver: usize,
    pub quad_l: usize,
    pub zonal: bool,
    pub blending: Blending,
}

/// `ψ̃` and its radial derivative from both sides of `ρ = 1`, with the
/// physical quantities entering the first variation of `J`.
#[derive(Debug, Clone)]
pub struct BoundaryTraces {
    pub psi: Vec<f64>,
    /// `∂_ν ψ` from inside and outside.
    pub dnu_in: Vec<f64>,
    pub dnu_out: Vec<f64>,
    /// `|∇ψ|²` from inside and outside.
    pub grad2_in: Vec<f64>,
    pub grad2_out: Vec<f64>,
}

impl FieldSolution {
    pub fn basis(&self) -> &SphereBasis {
        &self.map.basis
    }

    pub fn node_coeffs(&self, i: usize) -> &[f64] {
        let nh = self.harmonics.len();
        &self.coeffs[i * nh..(i + 1) * nh]
    }

    /// Radial profile `ψ_{ℓ,k}(ρ_i)` of one harmonic.
    pub fn profile(&self, l: usize, k: i64) -> Option<Vec<f64>> {
        let b = self.basis().local_index(l, k)?;
        Some((0..self.grid.num_nodes()).map(|i| self.node_coeffs(i)[b]).collect())
    }

    /// Coefficient of `Y_{ℓ,k}` at radius `r ∈ [0, R∞]`, interpolated with the solver's elements.
    pub fn coefficient_at(&self, l: usize, k: i64, r: f64) -> Option<f64> {
        let prof = self.profile(l, k)?;
        let nodes = &self.grid.nodes;
        if !(0.0..=self.grid.r_inf).contains(&r) {
            return None;
        }
        let e = nodes.partition_point(|&x| x <= r).clamp(1, nodes.len() - 1) - 1;
        let el = Elements { nodes: nodes.clone(), one: self.grid.one() };
        let n = el.eval(e, r, l);
        Some(prof[e] * n[0] + prof[e + 1] * n[1])
    }

    /// `ψ̃` at the quadrature nodes of radial node `i`, with its tangential gradient.
    pub fn sphere_values(&self, i: usize) -> (Vec<f64>, [Vec<f64>; 2]) {
        let nq = self.basis().num_nodes();
        let (mut v, mut gt, mut gp) = (vec![0.0; nq], vec![0.0; nq], vec![0.0; nq]);
        self.basis().synthesize(self.node_coeffs(i), &mut v, Some((&mut gt, &mut gp)));
        (v, [gt, gp])
    }

    pub fn traces(&self) -> BoundaryTraces {
        let i1 = self.grid.one();
        let h = self.grid.h();
        let (psi, grad) = self.sphere_values(i1);
        let at = |i: usize| self.sphere_values(i).0;
        let (m1, m2, p1, p2) = (at(i1 - 1), at(i1 - 2), at(i1 + 1), at(i1 + 2));
        let nq = psi.len();
        let mut t = BoundaryTraces {
            psi: psi.clone(),
            dnu_in: vec![0.0; nq],
            dnu_out: vec![0.0; nq],
            grad2_in: vec![0.0; nq],
            grad2_out: vec![0.0; nq],
        };
        for q in 0..nq {
            let mp = self.map.at(1.0, q);
            let d_in = (3.0 * psi[q] - 4.0 * m1[q] + m2[q]) / (2.0 * h);
            let d_out = (-3.0 * psi[q] + 4.0 * p1[q] - p2[q]) / (2.0 * h);
            let norm = (mp.r * mp.r + mp.grad[0] * mp.grad[0] + mp.grad[1] * mp.grad[1]).sqrt();
            let side = |d: f64| {
                let pr = d / mp.r_rho;
                let tt = [(grad[0][q] - mp.grad[0] * pr) / mp.r, (grad[1][q] - mp.grad[1] * pr) / mp.r];
                let dnu = (mp.r * pr - mp.grad[0] * tt[0] - mp.grad[1] * tt[1]) / norm;
                (dnu, pr * pr + tt[0] * tt[0] + tt[1] * tt[1])
            };
            let (a, b) = side(d_in);
            let (c, d) = side(d_out);
            t.dnu_in[q] = a;
            t.grad2_in[q] = b;
            t.dnu_out[q] = c;
            t.grad2_out[q] = d;
        }
        t
    }

    pub fn entries(&self) -> Vec<FieldEntry> {
        let nh = self.harmonics.len();
        let mut out = Vec::with_capacity(self.coeffs.len());
        for (i, &r) in self.grid.nodes.iter().enumerate() {
            for (b, &(l, k)) in self.harmonics.iter().enumerate() {
                out.push(FieldEntry { r, l, k, coefficient: self.coeffs[i * nh + b] });
            }
        }
        out
    }

    pub fn summary(&self) -> FieldSummary {
        let basis = self.basis();
        FieldSummary {
            j_e: self.j_e,
            residual: self.residual,
            iterations: self.iterations,
            volume: self.volume,
            grid: GridSpec {
                n_r: self.grid.n_r,
                r_inf: self.grid.r_inf,
                uniform_cells: self.grid.n_in,
                l_solver: basis.l_max,
                quad_l: basis.quad_l,
                zonal: basis.zonal,
                blending: self.map.blending,
            },
        }
    }

    /// Write the coefficients as CSV and the summary as JSON.
    pub fn export<W1: Write, W2: Write>(&self, csv_out: W1, mut json_out: W2) -> Result<()> {
        crate::io::write_csv(&self.entries(), csv_out, &[])?;
        serde_json::to_writer_pretty(&mut json_out, &self.summary())?;
        writeln!(json_out)?;
        Ok(())
    }
}
