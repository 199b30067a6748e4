use std::io::Write;

use serde::{Deserialize, Serialize};

use super::gradient::{energies, f_gradient, geometry_basis, project_out, Energies};
use crate::error::{DropletError, Result};
use crate::io::{fmt_f64, CsvRow};
use crate::params::PhysicalParams;
use crate::sphere::{harmonic_degree_order, perimeter, project_constraints_with, sobolev_norm, ShapeCoeffs, SobolevSpec};
use crate::transmission::{FieldSolution, SolverOptions};

/// Line-search gradient flow settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FlowConfig {
    /// Initial trial step of every line search.
    pub step: f64,
    pub shrink: f64,
    /// Armijo sufficient-decrease constant.
    pub armijo: f64,
    pub min_step: f64,
    pub max_steps: usize,
    /// Stop once the constrained gradient norm drops below this.
    pub tol_g: f64,
    pub solver: SolverOptions,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self {
            step: 1.0,
            shrink: 0.5,
            armijo: 1e-4,
            min_step: 1e-10,
            max_steps: 500,
            tol_g: 1e-4,
            solver: SolverOptions::default(),
        }
    }
}

impl FlowConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.step > 0.0
            && 0.0 < self.shrink
            && self.shrink < 1.0
            && 0.0 < self.armijo
            && self.armijo < 1.0
            && self.min_step > 0.0
            && self.tol_g > 0.0;
        if !ok {
            return Err(DropletError::InvalidOptions(format!("bad flow config {self:?}")));
        }
        self.solver.validate()
    }
}

/// One accepted flow iterate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowIterate {
    pub step: usize,
    pub shape: ShapeCoeffs,
    #[serde(rename = "F")]
    pub f: f64,
    #[serde(rename = "P")]
    pub p: f64,
    #[serde(rename = "J")]
    pub j: f64,
    pub h1_norm: f64,
    pub grad_norm: f64,
    /// Step length that produced this iterate (0 for the initial shape).
    pub step_size: f64,
    pub volume_drift: f64,
    pub barycenter_drift: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Converged,
    MaxSteps,
    StepUnderflow,
}

/// Accepted iterates of [`run_flow`] with the settings that produced them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowTrace {
    pub params: PhysicalParams,
    pub config: FlowConfig,
    pub iterates: Vec<FlowIterate>,
    pub stop: StopReason,
}

impl FlowTrace {
    pub fn last(&self) -> &FlowIterate {
        self.iterates.last().expect("trace holds the initial iterate")
    }

    pub fn converged(&self) -> bool {
        self.stop == StopReason::Converged
    }

    /// One JSON object per iterate, each extended with `extra`.
    pub fn write_jsonl<W: Write>(&self, mut out: W, extra: &serde_json::Map<String, serde_json::Value>) -> Result<()> {
        for it in &self.iterates {
            let mut obj = match serde_json::to_value(it)? {
                serde_json::Value::Object(m) => m,
                _ => unreachable!(),
            };
            obj.extend(extra.clone());
            serde_json::to_writer(&mut out, &obj)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }
}

impl CsvRow for FlowIterate {
    fn header() -> Vec<&'static str> {
        vec!["step", "F", "P", "J", "h1_norm", "grad_norm", "step_size", "volume_drift", "barycenter_drift"]
    }

    fn record(&self) -> Vec<String> {
        let mut r = vec![self.step.to_string()];
        r.extend(
            [self.f, self.p, self.j, self.h1_norm, self.grad_norm, self.step_size, self.volume_drift, self.barycenter_drift]
                .map(fmt_f64),
        );
        r
    }
}

/// `1 + ℓ(ℓ+1)` for every coefficient of a degree-`l` shape.
pub fn h1_weights(l: usize) -> Vec<f64> {
    (0..crate::sphere::num_harmonics(l))
        .map(|j| {
            let l = harmonic_degree_order(j).0 as f64;
            1.0 + l * (l + 1.0)
        })
        .collect()
}

struct State {
    shape: ShapeCoeffs,
    energies: Energies,
    field: Option<FieldSolution>,
}

fn evaluate(
    shape: ShapeCoeffs,
    params: &PhysicalParams,
    opts: &SolverOptions,
    warm: Option<&FieldSolution>,
    need_field: bool,
) -> Result<State> {
    if need_field {
        let (energies, field) = energies(&shape, params, opts, warm)?;
        return Ok(State { shape, energies, field: Some(field) });
    }
    let p = perimeter(&shape, &geometry_basis(shape.l_max())?);
    let energies = Energies { f: p, p, j: f64::NAN, g_half: f64::NAN, g_paper: f64::NAN, volume: f64::NAN };
    Ok(State { shape, energies, field: None })
}

fn project(shape: &ShapeCoeffs) -> Result<(ShapeCoeffs, f64, f64)> {
    let r = project_constraints_with(shape, &geometry_basis(shape.l_max())?)?;
    Ok((r.shape, r.volume_error.abs(), r.barycenter_norm))
}

/// Whether a trial shape failed for geometric reasons, so the step should shrink.
fn is_geometric_failure(e: &DropletError) -> bool {
    matches!(
        e,
        DropletError::ShapeTooLarge { .. } | DropletError::DegenerateMap { .. } | DropletError::ProjectionFailed { .. }
    )
}

/// Projected gradient descent on `F` in the `H¹` metric with Armijo backtracking.
///
/// Each trial point is re-projected onto the volume and barycenter constraints;
/// accepted iterates therefore have non-increasing `F`. When `Q = 0` the field is
/// solved only at accepted iterates, to report `J`.
pub fn run_flow(shape0: &ShapeCoeffs, params: &PhysicalParams, config: &FlowConfig) -> Result<FlowTrace> {
    config.validate()?;
    params.validate()?;
    let opts = &config.solver;
    let charged = params.q != 0.0;
    let weights = h1_weights(shape0.l_max());
    let (start, vd, bd) = project(shape0)?;
    let mut state = evaluate(start, params, opts, None, true)?;
    let mut trace = FlowTrace { params: *params, config: config.clone(), iterates: Vec::new(), stop: StopReason::MaxSteps };
    let mut step_size = 0.0;
    let (mut vol_drift, mut bar_drift) = (vd, bd);
    for k in 0..=config.max_steps {
        let grad = f_gradient(&state.shape, params, state.field.as_ref().filter(|_| charged))?;
        let grad_norm = grad.projected_norm();
        trace.iterates.push(FlowIterate {
            step: k,
            shape: state.shape.clone(),
            f: state.energies.f,
            p: state.energies.p,
            j: state.field.as_ref().map_or(f64::NAN, |f| f.j_e),
            h1_norm: sobolev_norm(&state.shape, SobolevSpec::H1)?,
            grad_norm,
            step_size,
            volume_drift: vol_drift,
            barycenter_drift: bar_drift,
        });
        if grad_norm < config.tol_g {
            trace.stop = StopReason::Converged;
            return Ok(trace);
        }
        if k == config.max_steps {
            break;
        }
        let dir: Vec<f64> = project_out(&grad.df, &grad.constraints(), Some(&weights))?.iter().map(|x| -x).collect();
        let slope: f64 = grad.df.iter().zip(&dir).map(|(g, d)| g * d).sum();
        let mut t = config.step;
        let accepted = loop {
            if t < config.min_step {
                break None;
            }
            let coeffs: Vec<f64> = state.shape.coeffs().iter().zip(&dir).map(|(a, d)| a + t * d).collect();
            let trial = state
                .shape
                .with_coeffs(coeffs)
                .and_then(|s| project(&s))
                .and_then(|(s, vd, bd)| Ok((evaluate(s, params, opts, state.field.as_ref(), charged)?, vd, bd)));
            match trial {
                Ok((next, vd, bd)) if next.energies.f <= state.energies.f + config.armijo * t * slope => {
                    break Some((next, vd, bd));
                }
                Ok(_) => {}
                Err(e) if is_geometric_failure(&e) => {}
                Err(e) => return Err(e),
            }
            t *= config.shrink;
        };
        match accepted {
            Some((next, vd, bd)) => {
                state = if charged { next } else { evaluate(next.shape, params, opts, state.field.as_ref(), true)? };
                step_size = t;
                vol_drift = vd;
                bar_drift = bd;
            }
            None => {
                trace.stop = StopReason::StepUnderflow;
                let step = trace.iterates.len() - 1;
                return Err(DropletError::StepUnderflow { step, trace: Box::new(trace) });
            }
        }
    }
    Ok(trace)
}
