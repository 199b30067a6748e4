use std::path::PathBuf;

use droplet_core::calculus::FlowConfig;
use droplet_core::transmission::SolverOptions;
use droplet_core::PhysicalParams;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSettings {
    /// Degree of the random initial shapes.
    #[serde(rename = "L_max")]
    pub l_max: usize,
    #[serde(rename = "N_r")]
    pub n_r: usize,
    #[serde(rename = "R_inf")]
    pub r_inf: f64,
    pub cg_tol: f64,
    pub max_iter: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        let o = SolverOptions::default();
        Self { l_max: 4, n_r: o.n_r, r_inf: o.r_inf, cg_tol: o.cg_tol, max_iter: o.max_iter }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FlowSettings {
    pub step: f64,
    pub tol_g: f64,
    pub max_steps: usize,
}

impl Default for FlowSettings {
    fn default() -> Self {
        let f = FlowConfig::default();
        Self { step: f.step, tol_g: f.tol_g, max_steps: f.max_steps }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSettings {
    #[serde(rename = "Q")]
    pub q: Vec<f64>,
    pub seeds: Vec<u64>,
    /// Sup norm of the random initial shapes.
    pub amplitude: f64,
    /// Largest degree of the spectrum table.
    pub m_max: usize,
    /// Largest degree checked against finite differences of the field solver.
    pub calibration_m_max: usize,
}

impl Default for SweepSettings {
    fn default() -> Self {
        Self { q: vec![0.0, 0.05, 0.1], seeds: (0..10).collect(), amplitude: 0.1, m_max: 60, calibration_m_max: 8 }
    }
}

/// One experiment, read from a single JSON document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub params: PhysicalParams,
    pub solver: SolverSettings,
    pub flow: FlowSettings,
    pub sweep: SweepSettings,
    pub output: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            params: PhysicalParams::default(),
            solver: SolverSettings::default(),
            flow: FlowSettings::default(),
            sweep: SweepSettings::default(),
            output: PathBuf::from("out"),
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, String> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| e.to_string())?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), String> {
        self.params.validate().map_err(|e| e.to_string())?;
        if self.params.n != 3 {
            return Err(format!("n = {} (experiments need n = 3)", self.params.n));
        }
        let s = &self.solver;
        if s.l_max == 0 {
            return Err("solver.L_max must be at least 1".into());
        }
        if s.n_r < 32 || !(s.r_inf > 4.0) || !(s.cg_tol > 0.0) || s.max_iter == 0 {
            return Err("solver needs N_r >= 32, R_inf > 4, cg_tol > 0, max_iter > 0".into());
        }
        let f = &self.flow;
        if !(f.step > 0.0) || !(f.tol_g > 0.0) || f.max_steps == 0 {
            return Err("flow needs step > 0, tol_g > 0, max_steps > 0".into());
        }
        let w = &self.sweep;
        if w.q.is_empty() || w.seeds.is_empty() {
            return Err("sweep lists must be non-empty".into());
        }
        if w.q.iter().any(|q| !(*q >= 0.0) || !q.is_finite()) {
            return Err("sweep charges must be finite and non-negative".into());
        }
        if !(0.0..0.5).contains(&w.amplitude) {
            return Err(format!("sweep.amplitude = {} (need 0 <= amplitude < 1/2)", w.amplitude));
        }
        if w.m_max < 2 || w.calibration_m_max < 2 {
            return Err("sweep.m_max and sweep.calibration_m_max must be at least 2".into());
        }
        Ok(())
    }

    pub fn solver_options(&self) -> SolverOptions {
        SolverOptions {
            n_r: self.solver.n_r,
            r_inf: self.solver.r_inf,
            cg_tol: self.solver.cg_tol,
            max_iter: self.solver.max_iter,
            ..SolverOptions::default()
        }
    }

    pub fn flow_config(&self) -> FlowConfig {
        FlowConfig {
            step: self.flow.step,
            tol_g: self.flow.tol_g,
            max_steps: self.flow.max_steps,
            solver: self.solver_options(),
            ..FlowConfig::default()
        }
    }

    /// The configuration as embedded in outputs: everything except the output directory.
    pub fn echo(&self) -> serde_json::Value {
        let mut v = serde_json::to_value(self).expect("config serializes");
        v.as_object_mut().expect("object").remove("output");
        v
    }

    /// SHA-256 of the compact JSON of [`Self::echo`].
    pub fn hash(&self) -> String {
        let text = serde_json::to_string(&self.echo()).expect("config serializes");
        format!("{:x}", Sha256::digest(text.as_bytes()))
    }

    /// Seed recorded in outputs that are not tied to one flow.
    pub fn primary_seed(&self) -> u64 {
        self.sweep.seeds[0]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips_exactly() {
        let mut cfg = ExperimentConfig::default();
        cfg.params.beta = 1.0 + 1e-15;
        cfg.sweep.q = vec![0.1, 1.0 / 3.0];
        let text = serde_json::to_string(&cfg).unwrap();
        let back = ExperimentConfig::from_json(&text).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(serde_json::to_string(&back).unwrap(), text);
        assert_eq!(back.hash(), cfg.hash());
    }

    #[test]
    fn hash_ignores_the_output_directory() {
        let a = ExperimentConfig::default();
        let b = ExperimentConfig { output: "elsewhere".into(), ..a.clone() };
        assert_eq!(a.hash(), b.hash());
        let c = ExperimentConfig { params: a.params.with_charge(0.2), ..a.clone() };
        assert_ne!(a.hash(), c.hash());
    }

    #[test]
    fn defaults_fill_missing_fields() {
        let cfg = ExperimentConfig::from_json(r#"{"solver": {"N_r": 256}}"#).unwrap();
        assert_eq!(cfg.solver.n_r, 256);
        assert_eq!(cfg.solver.l_max, 4);
        assert_eq!(cfg.sweep.seeds.len(), 10);
    }

    #[test]
    fn rejects_invalid_values() {
        assert!(ExperimentConfig::from_json(r#"{"params": {"n": 3, "beta": 1.0, "K": 1.0, "Q": 0.0}}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"flow": {"tol_g": -1.0}}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"sweep": {"amplitude": 0.5}}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"solver": {"typo": 1}}"#).is_err());
    }
}
