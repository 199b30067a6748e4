use std::f64::consts::PI;

use droplet_core::ball::{
    ball_energies, boundary_data, radial_series, recover_pair_ball, solve_ball, BallState,
};
use droplet_core::PhysicalParams;
use proptest::prelude::*;

mod common;
use common::radial_fd_minimum;

fn default_ball() -> BallState {
    solve_ball(&PhysicalParams::new(3, 2.0, 1.0, 0.0).unwrap(), 1e-12).unwrap()
}

#[test]
fn ball_matches_radial_finite_difference_oracle() {
    let ball = default_ball();
    let fd = radial_fd_minimum(2.0, 1.0, 20.0, 10_001);
    let rel = (ball.j_ball - fd).abs() / fd.abs();
    assert!(rel <= 1e-5, "J={} fd={} rel={rel:e}", ball.j_ball, fd);
}

#[test]
fn series_matches_sinh_coefficients() {
    let a = radial_series(3, 1.0, 1e-17);
    let mut fact = 1.0;
    for (i, &ai) in a.iter().enumerate() {
        if i > 0 {
            fact *= ((2 * i) * (2 * i + 1)) as f64;
        }
        assert!((ai * fact - 1.0).abs() <= 1e-15, "i={i}");
    }
    // sinh(κr)/(κr) with κ² = 1/(βK).
    let (beta, k) = (2.0f64, 1.5f64);
    let a = radial_series(3, beta * k, 1e-17);
    let kappa = 1.0 / (beta * k).sqrt();
    for &r in &[0.3f64, 0.7, 1.0] {
        let h: f64 = a.iter().enumerate().map(|(i, c)| c * r.powi(2 * i as i32)).sum();
        assert!((h - (kappa * r).sinh() / (kappa * r)).abs() < 1e-15);
    }
}

#[test]
fn transmission_and_continuity() {
    let b = default_ball();
    assert!(b.j_ball <= 0.0);
    assert!((b.params.beta * b.dpsi_in - b.dpsi_out).abs() < 1e-15);
    let inside = b.psi_derivs(1.0).0;
    let outside = b.psi_derivs(1.0 + 1e-15).0;
    assert!((inside - outside).abs() < 1e-12);
    assert!(b.residuals.iter().all(|&r| r <= 1e-12));
    assert!((b.dpsi_out + b.exterior_amp).abs() < 1e-16);
}

#[test]
fn boundary_data_matches_profile_differences() {
    let b = default_ball();
    let bd = boundary_data(&b);
    let h = 1e-3;
    let f = |r: f64| b.psi(r);
    // Fourth-order one-sided stencils on each branch.
    let d1_in = (25.0 * f(1.0) - 48.0 * f(1.0 - h) + 36.0 * f(1.0 - 2.0 * h) - 16.0 * f(1.0 - 3.0 * h)
        + 3.0 * f(1.0 - 4.0 * h))
        / (12.0 * h);
    let d2_in = (45.0 * f(1.0) - 154.0 * f(1.0 - h) + 214.0 * f(1.0 - 2.0 * h) - 156.0 * f(1.0 - 3.0 * h)
        + 61.0 * f(1.0 - 4.0 * h)
        - 10.0 * f(1.0 - 5.0 * h))
        / (12.0 * h * h);
    let d1_out = -(25.0 * f(1.0) - 48.0 * f(1.0 + h) + 36.0 * f(1.0 + 2.0 * h) - 16.0 * f(1.0 + 3.0 * h)
        + 3.0 * f(1.0 + 4.0 * h))
        / (12.0 * h);
    let d2_out = (45.0 * f(1.0) - 154.0 * f(1.0 + h) + 214.0 * f(1.0 + 2.0 * h) - 156.0 * f(1.0 + 3.0 * h)
        + 61.0 * f(1.0 + 4.0 * h)
        - 10.0 * f(1.0 + 5.0 * h))
        / (12.0 * h * h);
    assert!((bd.trace - f(1.0)).abs() < 1e-15);
    assert!((bd.dpsi_in - d1_in).abs() < 1e-7, "{} {}", bd.dpsi_in, d1_in);
    assert!((bd.dpsi_out - d1_out).abs() < 1e-7, "{} {}", bd.dpsi_out, d1_out);
    assert!((bd.d2psi_in - d2_in).abs() < 1e-7, "{} {}", bd.d2psi_in, d2_in);
    assert!((bd.d2psi_out - d2_out).abs() < 1e-7, "{} {}", bd.d2psi_out, d2_out);
    assert!((bd.d2psi_out - 2.0 * b.exterior_amp).abs() < 1e-16);
}

#[test]
fn potential_is_negative_and_decays() {
    let b = default_ball();
    for i in 0..=5000 {
        let r = i as f64 * 0.01;
        assert!(b.psi(r) <= 0.0, "r={r}");
    }
    assert!(b.psi(50.0).abs() < 2e-3);
    assert!(b.psi(50.0).abs() < b.psi(5.0).abs() / 9.0);
}

#[test]
fn tolerance_scaling() {
    let p = PhysicalParams::new(3, 2.0, 1.0, 0.0).unwrap();
    for tol in [1e-8, 1e-10, 1e-12] {
        let a = solve_ball(&p, tol).unwrap();
        let b = solve_ball(&p, tol / 10.0).unwrap();
        assert!((a.j_ball - b.j_ball).abs() <= tol);
        assert!(a.residuals.iter().all(|&r| r <= tol));
    }
}

#[test]
fn recovered_pair_identities() {
    let b = default_ball();
    let pair = recover_pair_ball(&b);
    assert!((pair.charge - 1.0).abs() < 1e-10, "{}", pair.charge);
    let vol = 4.0 * PI / 3.0;
    let expected = 1.0 / vol - b.psi_integral() / vol;
    assert!((pair.g_paper - expected).abs() < 1e-12);
    assert!(pair.identity_defect() < 1e-10);
    assert_eq!(pair.bound_violation(), 0.0);
    assert!(pair.samples.iter().filter(|s| !s.inside).all(|s| s.rho == 0.0));
    // u + Kρ lands on the unhalved energy, twice the half-convention value.
    let s = pair.samples.iter().find(|s| s.inside).unwrap();
    assert!((s.u + s.rho - b.g_half()).abs() > 0.1 * b.g_half());
}

#[test]
fn energy_report() {
    let b = default_ball();
    let r0 = ball_energies(&b, 0.0);
    assert!((r0.f - 4.0 * PI).abs() < 1e-15);
    assert!(r0.g_half >= 1.0 / (2.0 * 4.0 * PI / 3.0));
    assert!((r0.g_paper - 2.0 * r0.g_half).abs() < 1e-15);
    let direct = b.direct_energy();
    assert!((direct - r0.g_paper).abs() / r0.g_paper < 1e-6, "direct={direct} G={}", r0.g_paper);
    let r = ball_energies(&b, 0.1);
    assert!((r.f - 4.0 * PI - 0.01 * r.g_paper).abs() < 1e-14);
    let json = serde_json::to_value(&r).unwrap();
    for key in [
        "n", "beta", "K", "Q", "J_ball", "G_half", "G_paper", "F", "trace", "dpsi_in", "dpsi_out", "d2psi_in",
        "d2psi_out",
    ] {
        assert!(json.get(key).is_some(), "missing {key}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dual_minimum_is_nonpositive(beta in 1.0001f64..20.0, k in 0.01f64..50.0, n in 3usize..7) {
        let b = solve_ball(&PhysicalParams::new(n, beta, k, 0.0).unwrap(), 1e-9).unwrap();
        prop_assert!(b.j_ball <= 0.0);
        prop_assert!((beta * b.dpsi_in - b.dpsi_out).abs() <= 1e-12 * b.dpsi_out.abs().max(1.0));
        let pair = recover_pair_ball(&b);
        prop_assert!((pair.charge - 1.0).abs() < 1e-9);
        prop_assert!(pair.bound_violation() <= 1e-12);
    }
}
