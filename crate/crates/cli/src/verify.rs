use droplet_core::calculus::{
    energies, energy_gap, f_gradient, fuglede_check, geometric_gradients, geometry_basis, j_gradient, project_out,
    taylor_check, taylor_constant,
};
use droplet_core::io::{fmt_f64, CsvRow};
use droplet_core::sphere::{perimeter, project_constraints, random_shape, ShapeCoeffs};
use droplet_core::transmission::{duality_residual, j_energy, recover_pair, solve_field, SolverOptions};
use droplet_core::{DropletError, PhysicalParams};
use rayon::prelude::*;

use crate::commands::{ball_state, calibration, initial_shape, CALIBRATION_TOL};
use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::output::Output;

/// Resolution of the refined solves used by the duality and gradient checks.
pub const FINE_NR: usize = 512;
/// Seeds of the random shapes used by the gradient checks.
const GRADIENT_SEEDS: [u64; 2] = [1, 8];
const FUGLEDE_SAMPLES: u64 = 100;

/// One row of the verification manifest.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckRow {
    pub check: String,
    pub measured: f64,
    pub bound: f64,
    pub pass: bool,
}

impl CheckRow {
    fn at_most(check: impl Into<String>, measured: f64, bound: f64) -> Self {
        Self { check: check.into(), measured, bound, pass: measured <= bound }
    }

    fn above(check: impl Into<String>, measured: f64, bound: f64) -> Self {
        Self { check: check.into(), measured, bound, pass: measured > bound }
    }
}

impl CsvRow for CheckRow {
    fn header() -> Vec<&'static str> {
        vec!["check", "measured", "bound", "pass"]
    }

    fn record(&self) -> Vec<String> {
        vec![self.check.clone(), fmt_f64(self.measured), fmt_f64(self.bound), self.pass.to_string()]
    }
}

type Rows = Result<Vec<CheckRow>, CliError>;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn shifted(s: &ShapeCoeffs, v: &[f64], t: f64) -> Result<ShapeCoeffs, DropletError> {
    s.with_coeffs(s.coeffs().iter().zip(v).map(|(a, b)| a + t * b).collect())
}

/// Central difference with one Richardson step.
fn richardson(f: impl Fn(f64) -> Result<f64, DropletError>, h: f64) -> Result<f64, DropletError> {
    let d1 = (f(h)? - f(-h)?) / (2.0 * h);
    let d2 = (f(h / 2.0)? - f(-h / 2.0)?) / h;
    Ok((4.0 * d2 - d1) / 3.0)
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn duality(cfg: &ExperimentConfig) -> Rows {
    let p = cfg.params.with_charge(0.0);
    let opts = cfg.solver_options();
    let ball = ShapeCoeffs::zero(cfg.solver.l_max);
    let f = solve_field(&ball, &p, &opts)?;
    let mut rows = vec![CheckRow::at_most("duality_ball", duality_residual(&ball, &recover_pair(&ball, &f), f.j_e), 1e-6)];
    for &seed in &cfg.sweep.seeds {
        let s = initial_shape(cfg, seed)?;
        let mut res = [0.0; 2];
        for (r, n_r) in res.iter_mut().zip([FINE_NR / 2, FINE_NR]) {
            let f = solve_field(&s, &p, &SolverOptions { n_r, ..opts.clone() })?;
            *r = duality_residual(&s, &recover_pair(&s, &f), f.j_e);
        }
        rows.push(CheckRow::at_most(format!("duality_seed{seed}"), res[1], 1e-3));
        rows.push(CheckRow::at_most(format!("duality_refinement_seed{seed}"), res[1] / res[0], 1.0));
    }
    Ok(rows)
}

fn pair_identities(cfg: &ExperimentConfig) -> Rows {
    let p = cfg.params.with_charge(0.0);
    let coarse = cfg.solver_options();
    let fine = SolverOptions { n_r: 2 * coarse.n_r, ..coarse.clone() };
    let mut rows = Vec::new();
    for (name, s) in [("ball", ShapeCoeffs::zero(cfg.solver.l_max)), ("seed", initial_shape(cfg, cfg.primary_seed())?)] {
        let f = solve_field(&s, &p, &fine)?;
        let discretization = (f.j_e - j_energy(&s, &p, &coarse)?).abs();
        let pair = recover_pair(&s, &f).pair;
        rows.push(CheckRow::at_most(format!("pair_charge_{name}"), (pair.charge - 1.0).abs(), 1e-8));
        rows.push(CheckRow::at_most(format!("pair_identity_{name}"), pair.identity_defect(), 2.0 * discretization));
        rows.push(CheckRow::at_most(format!("pair_bounds_{name}"), pair.bound_violation(), 0.0));
    }
    Ok(rows)
}

fn gradients(cfg: &ExperimentConfig) -> Rows {
    let l = cfg.solver.l_max;
    let q = cfg.sweep.q.iter().copied().fold(0.0, f64::max);
    let p = cfg.params.with_charge(q);
    let fine = SolverOptions { n_r: FINE_NR, ..cfg.solver_options() };
    let mut rows = Vec::new();

    let ball = ShapeCoeffs::zero(l);
    let f = solve_field(&ball, &p, &cfg.solver_options())?;
    let g = f_gradient(&ball, &p, Some(&f))?;
    let dp = project_out(&g.dp, &g.constraints(), None)?;
    let dj = project_out(&g.dj, &g.constraints(), None)?;
    rows.push(CheckRow::at_most("gradient_ball_P", norm(&dp), 1e-6));
    rows.push(CheckRow::at_most("gradient_ball_J", norm(&dj), 1e-6));
    rows.push(CheckRow::at_most("gradient_ball_F", g.projected_norm(), 1e-6));

    let basis = geometry_basis(l)?;
    for seed in GRADIENT_SEEDS {
        let s = project_constraints(&random_shape(seed, l, cfg.sweep.amplitude)?)?;
        let v = random_shape(seed + 50, l, 0.3)?;
        let v = v.coeffs();

        let (_, dp, _, _) = geometric_gradients(&s)?;
        let eps = 1e-6;
        let per = |t: f64| -> Result<f64, DropletError> { Ok(perimeter(&shifted(&s, v, t)?, &basis)) };
        let fd = (per(eps)? - per(-eps)?) / (2.0 * eps);
        rows.push(CheckRow::at_most(format!("gradient_fd_P_seed{seed}"), rel(dot(&dp, v), fd), 1e-8));

        let f = solve_field(&s, &p, &fine)?;
        let fd = richardson(|t| j_energy(&shifted(&s, v, t)?, &p, &fine), 1e-3)?;
        rows.push(CheckRow::at_most(format!("gradient_fd_J_seed{seed}"), rel(dot(&j_gradient(&s, &f)?, v), fd), 1e-3));
        let fd = richardson(|t| Ok(energies(&shifted(&s, v, t)?, &p, &fine, None)?.0.f), 1e-3)?;
        let df = f_gradient(&s, &p, Some(&f))?.df;
        rows.push(CheckRow::at_most(format!("gradient_fd_F_seed{seed}"), rel(dot(&df, v), fd), 1e-3));
    }
    Ok(rows)
}

fn spectrum_calibration(cfg: &ExperimentConfig) -> Rows {
    let cal = calibration(cfg, &ball_state(cfg)?)?;
    let worst = cal.iter().map(|r| r.relative_error).fold(0.0, f64::max);
    Ok(vec![CheckRow::at_most("spectrum_calibration", worst, CALIBRATION_TOL)])
}

fn fuglede(cfg: &ExperimentConfig) -> Rows {
    let mut rows = Vec::new();
    let mut worst: f64 = 0.0;
    for l in 2..=10 {
        let s = project_constraints(&ShapeCoeffs::single_mode(l, l, 0, 1e-3)?)?;
        let lf = (l * (l + 1)) as f64;
        worst = worst.max(rel(fuglede_check(&s)?.ratio, (lf - 2.0) / (2.0 * (1.0 + lf))));
    }
    rows.push(CheckRow::at_most("fuglede_single_mode", worst, 0.02));
    let mut smallest = f64::INFINITY;
    for seed in 0..FUGLEDE_SAMPLES {
        let amp = cfg.sweep.amplitude * (1 + seed % 10) as f64 / 10.0;
        let s = project_constraints(&random_shape(seed, cfg.solver.l_max, amp)?)?;
        smallest = smallest.min(fuglede_check(&s)?.ratio);
    }
    rows.push(CheckRow::above("fuglede_random", smallest, 0.0));
    Ok(rows)
}

fn taylor(cfg: &ExperimentConfig) -> Rows {
    let ball = ball_state(cfg)?;
    let c_fit = taylor_constant(&ball, cfg.solver.l_max)?;
    let opts = cfg.solver_options();
    let mut worst = f64::NEG_INFINITY;
    let mut bound = 0.0;
    for &seed in &cfg.sweep.seeds {
        let rep = taylor_check(&initial_shape(cfg, seed)?, &ball, &opts, c_fit)?;
        worst = worst.max(rep.ratio);
        bound = rep.bound;
    }
    Ok(vec![CheckRow::at_most("taylor_random", worst, bound)])
}

fn gaps(cfg: &ExperimentConfig) -> Rows {
    let opts = cfg.solver_options();
    let mut rows = Vec::new();
    for &q in &cfg.sweep.q {
        let p: PhysicalParams = cfg.params.with_charge(q);
        let mut smallest = f64::INFINITY;
        for &seed in &cfg.sweep.seeds {
            smallest = smallest.min(energy_gap(&initial_shape(cfg, seed)?, &p, &opts)?);
        }
        rows.push(CheckRow::above(format!("energy_gap_Q{}", fmt_f64(q)), smallest, 0.0));
    }
    Ok(rows)
}

/// Run the property suite; rows come back in a fixed order.
pub fn run_checks(cfg: &ExperimentConfig) -> Result<Vec<CheckRow>, CliError> {
    let suites: [fn(&ExperimentConfig) -> Rows; 7] =
        [duality, pair_identities, gradients, spectrum_calibration, fuglede, taylor, gaps];
    let results: Vec<Rows> = suites.par_iter().map(|s| s(cfg)).collect();
    let mut rows = Vec::new();
    for r in results {
        rows.extend(r?);
    }
    Ok(rows)
}

pub fn cmd_verify(cfg: &ExperimentConfig) -> Result<(), CliError> {
    let rows = run_checks(cfg)?;
    Output::new(cfg)?.csv("verify.csv", &rows, cfg.primary_seed())?;
    let failed = rows.iter().filter(|r| !r.pass).count();
    for r in &rows {
        println!("{} {:<32} {:>14.6e} (bound {:.3e})", if r.pass { "PASS" } else { "FAIL" }, r.check, r.measured, r.bound);
    }
    if failed > 0 {
        return Err(CliError::Verify(failed));
    }
    Ok(())
}
