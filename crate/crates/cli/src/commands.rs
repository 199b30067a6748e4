use droplet_core::ball::{ball_energies, boundary_data, solve_ball, BallState};
use droplet_core::calculus::{calibrate_spectrum, energies, run_flow, CalibrationRow, FlowTrace};
use droplet_core::io::{fmt_f64, CsvRow};
use droplet_core::modes::{spectrum, summarize, SpectrumSummary};
use droplet_core::sphere::{project_constraints, random_shape, ShapeCoeffs};
use droplet_core::transmission::SolverOptions;
use droplet_core::{DropletError, PhysicalParams};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::output::Output;

/// Radial ground state at the configured parameters.
pub fn ball_state(cfg: &ExperimentConfig) -> Result<BallState, CliError> {
    Ok(solve_ball(&cfg.params, 1e-13)?)
}

pub fn cmd_ball(cfg: &ExperimentConfig) -> Result<(), CliError> {
    let ball = ball_state(cfg)?;
    let report = ball_energies(&ball, cfg.params.q);
    #[derive(Serialize)]
    struct Body<'a> {
        #[serde(flatten)]
        report: &'a droplet_core::ball::EnergyReport,
        boundary: droplet_core::ball::BoundaryData,
    }
    let out = Output::new(cfg)?;
    out.json("ball.json", &Body { report: &report, boundary: boundary_data(&ball) }, cfg.primary_seed())?;
    println!("J(B1) = {:.12}  G_paper = {:.12}  F = {:.12}", report.j_ball, report.g_paper, report.f);
    Ok(())
}

/// Settings of the finite-difference calibration of the spectrum.
pub const CALIBRATION_NR: usize = 256;
pub const CALIBRATION_EPS: f64 = 1e-2;
pub const CALIBRATION_TOL: f64 = 0.02;
/// Start of the asymptotic fit window.
pub const FIT_FROM: usize = 20;

pub fn calibration(cfg: &ExperimentConfig, ball: &BallState) -> Result<Vec<CalibrationRow>, CliError> {
    let opts = SolverOptions { n_r: CALIBRATION_NR, ..cfg.solver_options() };
    Ok(calibrate_spectrum(ball, cfg.sweep.calibration_m_max, &opts, CALIBRATION_EPS)?)
}

pub fn cmd_spectrum(cfg: &ExperimentConfig) -> Result<(), CliError> {
    let ball = ball_state(cfg)?;
    let rows = spectrum(cfg.sweep.m_max, &ball)?;
    let summary = summarize(&rows, cfg.params.n, FIT_FROM.min(cfg.sweep.m_max))?;
    let cal = calibration(cfg, &ball)?;
    let max_err = cal.iter().map(|r| r.relative_error).fold(0.0, f64::max);
    #[derive(Serialize)]
    struct Calibration<'a> {
        #[serde(rename = "N_r")]
        n_r: usize,
        eps: f64,
        tolerance: f64,
        max_relative_error: f64,
        pass: bool,
        rows: &'a [CalibrationRow],
    }
    #[derive(Serialize)]
    struct Body<'a> {
        rows: usize,
        asymptotics: &'a SpectrumSummary,
        calibration: Calibration<'a>,
        #[serde(rename = "Q_c_note")]
        q_c_note: &'static str,
    }
    let body = Body {
        rows: rows.len(),
        asymptotics: &summary,
        calibration: Calibration {
            n_r: CALIBRATION_NR,
            eps: CALIBRATION_EPS,
            tolerance: CALIBRATION_TOL,
            max_relative_error: max_err,
            pass: max_err <= CALIBRATION_TOL,
            rows: &cal,
        },
        q_c_note: "EXPLORATORY: per-mode charge at which the ball loses stability in that mode alone",
    };
    let out = Output::new(cfg)?;
    let seed = cfg.primary_seed();
    out.csv("spectrum.csv", &rows, seed)?;
    out.csv("spectrum_calibration.csv", &cal, seed)?;
    out.json("spectrum_summary.json", &body, seed)?;
    println!(
        "{} modes; slope {:.6e}; |value|/m spread on [{}, {}] {:.4}; H^1/2 constant {:.6e}; calibration max error {:.3e}",
        rows.len(),
        summary.slope,
        summary.fit_from,
        summary.m_max,
        summary.ratio_spread,
        summary.h_half_constant,
        max_err
    );
    Ok(())
}

/// Summary of one flow run.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowRow {
    pub q: f64,
    pub seed: u64,
    pub status: String,
    pub iterations: usize,
    pub converged: bool,
    pub h1_initial: f64,
    pub h1_final: f64,
    pub gap_initial: f64,
    pub gap_final: f64,
    pub f_initial: f64,
    pub f_final: f64,
    pub grad_norm_final: f64,
}

impl CsvRow for FlowRow {
    fn header() -> Vec<&'static str> {
        vec![
            "Q",
            "seed",
            "status",
            "iterations",
            "converged",
            "h1_initial",
            "h1_final",
            "gap_initial",
            "gap_final",
            "F_initial",
            "F_final",
            "grad_norm_final",
        ]
    }

    fn record(&self) -> Vec<String> {
        let mut r = vec![fmt_f64(self.q), self.seed.to_string(), self.status.clone(), self.iterations.to_string()];
        r.push(self.converged.to_string());
        r.extend(
            [
                self.h1_initial,
                self.h1_final,
                self.gap_initial,
                self.gap_final,
                self.f_initial,
                self.f_final,
                self.grad_norm_final,
            ]
            .map(fmt_f64),
        );
        r
    }
}

pub fn initial_shape(cfg: &ExperimentConfig, seed: u64) -> Result<ShapeCoeffs, DropletError> {
    project_constraints(&random_shape(seed, cfg.solver.l_max, cfg.sweep.amplitude)?)
}

/// `F(B₁)` on the discretization used by the flows.
fn ball_energy(cfg: &ExperimentConfig, params: &PhysicalParams) -> Result<f64, DropletError> {
    Ok(energies(&ShapeCoeffs::zero(cfg.solver.l_max), params, &cfg.solver_options(), None)?.0.f)
}

struct FlowRun {
    row: FlowRow,
    trace: Option<FlowTrace>,
    aborted: bool,
}

fn flow_one(cfg: &ExperimentConfig, q: f64, seed: u64, f_ball: f64) -> FlowRun {
    let params = cfg.params.with_charge(q);
    let mut row = FlowRow {
        q,
        seed,
        status: String::new(),
        iterations: 0,
        converged: false,
        h1_initial: f64::NAN,
        h1_final: f64::NAN,
        gap_initial: f64::NAN,
        gap_final: f64::NAN,
        f_initial: f64::NAN,
        f_final: f64::NAN,
        grad_norm_final: f64::NAN,
    };
    let result = initial_shape(cfg, seed).and_then(|s| run_flow(&s, &params, &cfg.flow_config()));
    let (trace, aborted) = match result {
        Ok(t) => {
            row.status = format!("{:?}", t.stop).to_lowercase();
            (Some(t), false)
        }
        Err(DropletError::StepUnderflow { trace, .. }) => {
            row.status = "step_underflow".into();
            (Some(*trace), true)
        }
        Err(e) => {
            row.status = format!("error: {e}");
            (None, true)
        }
    };
    if let Some(t) = &trace {
        let (first, last) = (&t.iterates[0], t.last());
        row.iterations = last.step;
        row.converged = t.converged();
        row.h1_initial = first.h1_norm;
        row.h1_final = last.h1_norm;
        row.f_initial = first.f;
        row.f_final = last.f;
        row.gap_initial = first.f - f_ball;
        row.gap_final = last.f - f_ball;
        row.grad_norm_final = last.grad_norm;
    }
    FlowRun { row, trace, aborted }
}

/// Run every `(Q, seed)` flow on the worker pool; rows come back sorted by `(Q, seed)`.
fn run_flows(cfg: &ExperimentConfig, charges: &[f64]) -> Result<Vec<FlowRun>, CliError> {
    let mut charges = charges.to_vec();
    charges.sort_by(f64::total_cmp);
    charges.dedup();
    let mut seeds = cfg.sweep.seeds.clone();
    seeds.sort_unstable();
    seeds.dedup();
    let balls: Vec<f64> =
        charges.iter().map(|&q| ball_energy(cfg, &cfg.params.with_charge(q))).collect::<Result<_, _>>()?;
    let jobs: Vec<(f64, u64, f64)> =
        charges.iter().zip(&balls).flat_map(|(&q, &fb)| seeds.iter().map(move |&s| (q, s, fb))).collect();
    Ok(jobs.par_iter().map(|&(q, seed, fb)| flow_one(cfg, q, seed, fb)).collect())
}

fn write_flows(cfg: &ExperimentConfig, runs: &[FlowRun], summary: &str) -> Result<(), CliError> {
    let out = Output::new(cfg)?;
    for run in runs {
        if let Some(t) = &run.trace {
            let stem = format!("traces/flow_Q{}_seed{}", fmt_f64(run.row.q), run.row.seed);
            out.trace(&stem, t, run.row.seed)?;
        }
    }
    let rows: Vec<FlowRow> = runs.iter().map(|r| r.row.clone()).collect();
    out.csv_hashed(summary, &rows)?;
    let converged = rows.iter().filter(|r| r.converged).count();
    let worst = rows.iter().map(|r| r.h1_final).fold(0.0, f64::max);
    println!("{converged}/{} flows converged; largest final H1 norm {worst:.3e}", rows.len());
    let aborted = runs.iter().filter(|r| r.aborted).count();
    if aborted > 0 {
        return Err(CliError::Solver(DropletError::InvalidOptions(format!("{aborted} flow(s) aborted"))));
    }
    Ok(())
}

pub fn cmd_flow(cfg: &ExperimentConfig) -> Result<(), CliError> {
    let runs = run_flows(cfg, &[cfg.params.q])?;
    write_flows(cfg, &runs, "flow_summary.csv")
}

pub fn cmd_sweep(cfg: &ExperimentConfig) -> Result<(), CliError> {
    let runs = run_flows(cfg, &cfg.sweep.q)?;
    write_flows(cfg, &runs, "sweep_summary.csv")
}
