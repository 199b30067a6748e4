use std::f64::consts::PI;

use droplet_core::ball::{solve_ball, BallState};
use droplet_core::sphere::{project_constraints, random_shape, rotate_shape, Rotation, ShapeCoeffs};
use droplet_core::transmission::{
    build_map, duality_residual, g_energy, j_energy, recover_pair, solve_field, Blending, SolverOptions,
};
use droplet_core::{DropletError, PhysicalParams};

fn params() -> PhysicalParams {
    PhysicalParams::new(3, 2.0, 1.0, 0.0).unwrap()
}

fn ball() -> BallState {
    solve_ball(&params(), 1e-13).unwrap()
}

fn opts(n_r: usize) -> SolverOptions {
    SolverOptions::default().with_nr(n_r)
}

fn projected(seed: u64) -> ShapeCoeffs {
    project_constraints(&random_shape(seed, 4, 0.1).unwrap()).unwrap()
}

fn y20(eps: f64) -> ShapeCoeffs {
    project_constraints(&ShapeCoeffs::single_mode(2, 2, 0, eps).unwrap()).unwrap()
}

#[test]
fn ball_energy_matches_closed_form() {
    let j = j_energy(&ShapeCoeffs::zero(2), &params(), &opts(512)).unwrap();
    let exact = ball().j_ball;
    assert!(j <= 0.0);
    assert!((j - exact).abs() <= 1e-6, "J={j} exact={exact}");
    let g = g_energy(&ShapeCoeffs::zero(2), &params(), &opts(512)).unwrap();
    assert!((g.g_half - ball().g_half()).abs() <= 1e-6);
    assert_eq!(g.g_paper, 2.0 * g.g_half);
}

#[test]
fn refinement_is_at_least_order_log2_3() {
    let exact = ball().j_ball;
    let e: Vec<f64> = [128, 256, 512]
        .iter()
        .map(|&n| j_energy(&ShapeCoeffs::zero(2), &params(), &opts(n)).unwrap())
        .collect();
    assert!((e[0] - e[1]).abs() >= 3.0 * (e[1] - e[2]).abs(), "{e:?}");
    assert!((e[2] - exact).abs() < (e[1] - exact).abs());
    let s = y20(0.1);
    let e: Vec<f64> = [128, 256, 512].iter().map(|&n| j_energy(&s, &params(), &opts(n)).unwrap()).collect();
    assert!((e[0] - e[1]).abs() >= 3.0 * (e[1] - e[2]).abs(), "{e:?}");
}

#[test]
fn dual_minimum_is_nonpositive() {
    for seed in 0..4 {
        let s = project_constraints(&random_shape(seed, 3, 0.2).unwrap()).unwrap();
        for p in [params(), PhysicalParams::new(3, 5.0, 0.3, 0.0).unwrap()] {
            let f = solve_field(&s, &p, &opts(64)).unwrap();
            assert!(f.j_e <= 0.0);
            assert!(f.residual <= f.options.cg_tol * 10.0);
        }
    }
}

#[test]
fn zero_shape_gives_identity_map() {
    let map = build_map(&ShapeCoeffs::zero(3), &opts(128)).unwrap();
    for rho in [0.0, 0.3, 0.9, 1.0, 1.1, 1.7, 2.0] {
        for q in (0..map.num_nodes()).step_by(7) {
            assert_eq!(map.jacobian(rho, q), 1.0);
            let a = map.metric(rho, q);
            for (i, row) in a.iter().enumerate() {
                for (j, &v) in row.iter().enumerate() {
                    assert!((v - if i == j { 1.0 } else { 0.0 }).abs() < 1e-15);
                }
            }
        }
    }
}

#[test]
fn map_matches_boundary_and_preserves_volume_on_plateau() {
    let s = y20(0.1);
    let o = opts(128);
    let map = build_map(&s, &o).unwrap();
    for q in 0..map.num_nodes() {
        let x = map.boundary_point(q);
        let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
        let w = map.basis.points[q];
        assert!((r - (1.0 + s.eval(w))).abs() <= 1e-12);
        for rho in [0.875, 0.95, 1.0, 1.05, 1.125] {
            assert!((map.jacobian(rho, q) - 1.0).abs() <= 1e-12);
        }
    }
    let h = 2.0 / 48.0;
    for i in 1..=48 {
        let rho = i as f64 * h;
        for q in 0..map.num_nodes() {
            assert!(map.jacobian(rho, q) > 0.0);
            let a = map.metric(rho, q);
            // Sylvester's criterion on the symmetric metric.
            let m2 = a[0][0] * a[1][1] - a[0][1] * a[1][0];
            let det = a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) - a[0][1] * (a[1][0] * a[2][2])
                + a[0][2] * (-a[1][1] * a[2][0]);
            assert!(a[0][1] == a[1][0] && a[0][2] == a[2][0] && a[1][2] == a[2][1]);
            assert!(a[0][0] > 0.0 && m2 > 0.0 && det > 0.0, "rho={rho} q={q}");
        }
    }
}

#[test]
fn degenerate_map_is_rejected() {
    let s = ShapeCoeffs::single_mode(0, 0, 0, -0.45 * (4.0 * PI).sqrt()).unwrap();
    match build_map(&s, &opts(128)) {
        Err(DropletError::DegenerateMap { rho, jac, .. }) => {
            assert!(rho > 0.0 && rho < 0.875);
            assert!(jac <= 0.0);
        }
        other => panic!("expected a degenerate map, got {other:?}"),
    }
    assert!(matches!(solve_field(&s, &params(), &opts(128)), Err(DropletError::DegenerateMap { .. })));
}

#[test]
fn energy_does_not_depend_on_blending() {
    let s = projected(3);
    let standard = j_energy(&s, &params(), &opts(256)).unwrap();
    let coarse = j_energy(&s, &params(), &opts(128)).unwrap();
    let alt = SolverOptions { blending: Blending::ALTERNATE, ..opts(256) };
    let alternate = j_energy(&s, &params(), &alt).unwrap();
    let discretization = (standard - coarse).abs();
    assert!((standard - alternate).abs() <= discretization, "{standard} {alternate} {coarse}");
}

#[test]
fn energy_is_rotation_invariant() {
    let s = projected(5);
    let j = j_energy(&s, &params(), &opts(128)).unwrap();
    for rot in [Rotation::swap_xy(), Rotation::cyclic(), Rotation::swap_xz()] {
        let r = rotate_shape(&s, &rot).unwrap();
        let jr = j_energy(&r, &params(), &opts(128)).unwrap();
        assert!((j - jr).abs() <= 1e-8, "{j} {jr}");
    }
}

#[test]
fn exterior_is_exactly_harmonic() {
    let f = solve_field(&ShapeCoeffs::zero(2), &params(), &opts(256)).unwrap();
    let at_one = f.coefficient_at(0, 0, 1.0).unwrap();
    let r = f.grid.r_inf / 2.0;
    let mid = f.coefficient_at(0, 0, r).unwrap() * r;
    assert!((mid - at_one).abs() <= 1e-8 * at_one.abs(), "{mid} {at_one}");
    let tail = f.coefficient_at(0, 0, f.grid.r_inf).unwrap() * f.grid.r_inf;
    assert!((tail - at_one).abs() <= 1e-8 * at_one.abs());
}

#[test]
fn conjugate_gradient_is_monotone() {
    let f = solve_field(&projected(2), &params(), &opts(128)).unwrap();
    assert!(f.history.len() == f.iterations + 1 && f.iterations > 2);
    for w in f.history.windows(2) {
        assert!(w[1] <= w[0] + 1e-13 * w[0].abs());
    }
    assert!((f.history.last().unwrap() - f.j_e).abs() <= 1e-12 * f.j_e.abs());
}

#[test]
fn recovered_pair_identities() {
    for s in [ShapeCoeffs::zero(2), y20(0.1), projected(1)] {
        let fine = solve_field(&s, &params(), &opts(256)).unwrap();
        let coarse = j_energy(&s, &params(), &opts(128)).unwrap();
        let pair = recover_pair(&s, &fine);
        let p = &pair.pair;
        assert!((p.charge - 1.0).abs() <= 1e-8);
        assert!(p.identity_defect() <= 2.0 * (fine.j_e - coarse).abs());
        assert_eq!(p.bound_violation(), 0.0);
        assert!(p.samples.iter().filter(|x| !x.inside).all(|x| x.rho == 0.0));
        assert!(p.samples.iter().any(|x| !x.inside));
        let g = 2.0 * (params().k / (2.0 * fine.volume) - fine.j_e);
        assert!((p.g_paper - g).abs() <= 1e-12 * g);
        assert!((p.k * p.rho_from_psi(0.0) - g).abs() <= 1e-6 * g);
    }
}

#[test]
fn duality_residual_is_small_and_decreasing() {
    let b = ShapeCoeffs::zero(2);
    let f = solve_field(&b, &params(), &opts(256)).unwrap();
    assert!(duality_residual(&b, &recover_pair(&b, &f), f.j_e) <= 1e-6);
    let s = y20(0.1);
    let res: Vec<f64> = [128, 256, 512]
        .iter()
        .map(|&n| {
            let f = solve_field(&s, &params(), &opts(n)).unwrap();
            duality_residual(&s, &recover_pair(&s, &f), f.j_e)
        })
        .collect();
    assert!(res[2] <= 1e-3, "{res:?}");
    assert!(res[0] > res[1] && res[1] > res[2], "{res:?}");
}

#[test]
fn export_format() {
    let f = solve_field(&y20(0.05), &params(), &opts(64)).unwrap();
    let (mut csv, mut json) = (Vec::new(), Vec::new());
    f.export(&mut csv, &mut json).unwrap();
    let text = String::from_utf8(csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("r,l,k,coefficient"));
    assert_eq!(lines.count(), f.coeffs.len());
    assert!(!text.contains('\r'));
    let v: serde_json::Value = serde_json::from_slice(&json).unwrap();
    assert_eq!(v["J_E"].as_f64(), Some(f.j_e));
    assert_eq!(v["grid"]["N_r"], 64);
    assert!(v["residual"].as_f64().unwrap() <= 1e-9);
}

#[test]
fn options_are_validated() {
    assert!(solve_field(&ShapeCoeffs::zero(2), &params(), &opts(16)).is_err());
    let bad = SolverOptions { r_inf: 3.0, ..opts(64) };
    assert!(matches!(solve_field(&ShapeCoeffs::zero(2), &params(), &bad), Err(DropletError::InvalidOptions(_))));
    let bad = SolverOptions { blending: Blending { inner_start: 0.3, plateau_start: 0.2, ..Blending::STANDARD }, ..opts(64) };
    assert!(solve_field(&ShapeCoeffs::zero(2), &params(), &bad).is_err());
}
