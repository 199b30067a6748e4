use serde::{Deserialize, Serialize};

use super::field::{Elements, FieldSolution};
use crate::ball::{PairField, PairSample};
use crate::sphere::ShapeCoeffs;

const GAUSS3: [(f64, f64); 3] = [
    (-0.774_596_669_241_483_4, 5.0 / 9.0),
    (0.0, 8.0 / 9.0),
    (0.774_596_669_241_483_4, 5.0 / 9.0),
];

struct Sample {
    psi: Vec<f64>,
    gt: Vec<f64>,
    gp: Vec<f64>,
    pr: Vec<f64>,
}

/// Three-point Gauss sweep over the uniform part of the grid, calling `f` with
/// the element index, radius, weight and sampled field.
fn sweep(field: &FieldSolution, mut f: impl FnMut(usize, f64, f64, &Sample)) {
    let basis = field.basis();
    let nq = basis.num_nodes();
    let nh = field.harmonics.len();
    let el = Elements { nodes: field.grid.nodes.clone(), one: field.grid.one() };
    let mut s = Sample { psi: vec![0.0; nq], gt: vec![0.0; nq], gp: vec![0.0; nq], pr: vec![0.0; nq] };
    let mut v = vec![0.0; nh];
    let mut d = vec![0.0; nh];
    for e in 0..field.grid.two() {
        let (a, b) = (field.grid.nodes[e], field.grid.nodes[e + 1]);
        let h = b - a;
        let (c0, c1) = (field.node_coeffs(e), field.node_coeffs(e + 1));
        for (x, gw) in GAUSS3 {
            let r = a + 0.5 * h * (x + 1.0);
            for (bi, &(l, _)) in field.harmonics.iter().enumerate() {
                let n = el.eval(e, r, l);
                v[bi] = c0[bi] * n[0] + c1[bi] * n[1];
                d[bi] = c0[bi] * n[2] + c1[bi] * n[3];
            }
            basis.synthesize(&v, &mut s.psi, Some((&mut s.gt, &mut s.gp)));
            basis.synthesize(&d, &mut s.pr, None);
            f(e, r, 0.5 * h * gw, &s);
        }
    }
}

fn shift(field: &FieldSolution, psi_integral: f64) -> f64 {
    let k = field.params.k;
    (1.0 - psi_integral / k) * k / field.volume
}

fn interior_integral(field: &FieldSolution, g: impl Fn(f64) -> f64) -> f64 {
    let basis = field.basis();
    let one = field.grid.one();
    let mut total = 0.0;
    sweep(field, |e, r, wt, s| {
        if e >= one {
            return;
        }
        for q in 0..s.psi.len() {
            total += wt * basis.weights[q] * field.map.at(r, q).density * g(s.psi[q]);
        }
    });
    total
}

/// `∫a_E|∇u|² + K∫ρ²` for the pair recovered from `field`, by three-point
/// Gauss quadrature in radius (the solve itself uses two points).
pub fn direct_energy(field: &FieldSolution) -> f64 {
    let basis = field.basis();
    let (beta, k) = (field.params.beta, field.params.k);
    let one = field.grid.one();
    let s_int = interior_integral(field, |p| p);
    let c0 = shift(field, s_int);
    let mut total = 0.0;
    sweep(field, |e, r, wt, s| {
        let inside = e < one;
        let a = if inside { beta } else { 1.0 };
        for q in 0..s.psi.len() {
            let p = field.map.at(r, q);
            let g2 = p.grad[0] * p.grad[0] + p.grad[1] * p.grad[1];
            let cross = p.grad[0] * s.gt[q] + p.grad[1] * s.gp[q];
            let tan = s.gt[q] * s.gt[q] + s.gp[q] * s.gp[q];
            let mut dens = a * ((p.r * p.r + g2) / p.r_rho * s.pr[q] * s.pr[q] - 2.0 * cross * s.pr[q] + p.r_rho * tan);
            if inside {
                dens += (s.psi[q] + c0).powi(2) / k * p.density;
            }
            total += wt * basis.weights[q] * dens;
        }
    });
    // Exact exterior energy beyond ρ = 2 and the tail past R∞.
    let el = Elements { nodes: field.grid.nodes.clone(), one };
    let nn = field.grid.num_nodes();
    for (b, &(l, _)) in field.harmonics.iter().enumerate() {
        for e in field.grid.two()..nn - 1 {
            let m = el.exterior_stiffness(e, l);
            let (x, y) = (field.node_coeffs(e)[b], field.node_coeffs(e + 1)[b]);
            total += m[0] * x * x + 2.0 * m[1] * x * y + m[2] * y * y;
        }
        let last = field.node_coeffs(nn - 1)[b];
        total += (l + 1) as f64 * field.grid.r_inf * last * last;
    }
    total
}

/// Recovered pair with its directly evaluated energy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldPair {
    pub pair: PairField,
    pub direct_energy: f64,
}

/// Recover `u = −ψ` and `ρ = 1_E(ψ + (1 − K⁻¹∫_Eψ)K/|E|)/K` at every grid
/// node with `ρ ≤ 2`, in physical coordinates.
pub fn recover_pair(shape: &ShapeCoeffs, field: &FieldSolution) -> FieldPair {
    debug_assert_eq!(shape, &field.shape);
    let k = field.params.k;
    let s_int = interior_integral(field, |p| p);
    let c0 = shift(field, s_int);
    let charge = interior_integral(field, |p| (p + c0) / k);
    let basis = field.basis();
    let mut samples = Vec::new();
    for i in 0..=field.grid.two() {
        let rho = field.grid.nodes[i];
        let (psi, _) = field.sphere_values(i);
        let inside = i <= field.grid.one();
        for (q, &p) in psi.iter().enumerate() {
            let r = field.map.at(rho, q).r;
            let w = basis.points[q];
            samples.push(PairSample {
                position: [r * w[0], r * w[1], r * w[2]],
                inside,
                u: -p,
                rho: if inside { (p + c0) / k } else { 0.0 },
            });
        }
    }
    let g_paper = k / field.volume - 2.0 * field.j_e;
    let pair = PairField { g_paper, k, volume: field.volume, psi_integral: s_int, charge, samples };
    FieldPair { pair, direct_energy: direct_energy(field) }
}

/// `|(∫a|∇u|² + K∫ρ²) − (K/|E| − 2J)| / |K/|E| − 2J|`.
pub fn duality_residual(shape: &ShapeCoeffs, pair: &FieldPair, j_value: f64) -> f64 {
    let vol = crate::sphere::volume(shape, &crate::sphere::SphereBasis::new(shape.l_max().max(1), 3).expect("n = 3"));
    let target = pair.pair.k / vol - 2.0 * j_value;
    (pair.direct_energy - target).abs() / target.abs()
}
