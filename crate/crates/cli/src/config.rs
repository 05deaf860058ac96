//! Run configuration: one JSON document, every key optional, unknown keys
//! rejected. Command-line flags override individual keys.

use std::path::Path;

use serde::{Deserialize, Serialize};
use shockdetect_core::{ModelParams, SimConfig, SolverOptions};

use crate::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    pub mu: f64,
    pub lambda: f64,
    pub p: f64,
    pub c: f64,
    pub pi0: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        let m = ModelParams::figure1();
        Self {
            mu: m.mu,
            lambda: m.lambda,
            p: m.p,
            c: m.c,
            pi0: m.pi0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub grid_size: usize,
    pub quadrature_tol: f64,
    pub bisect_tol: f64,
    pub epsilon: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let o = SolverOptions::default();
        Self {
            grid_size: o.grid_size,
            quadrature_tol: o.quadrature_tol,
            bisect_tol: o.bisect_tol,
            epsilon: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimSettings {
    pub dt: f64,
    pub horizon: Option<f64>,
    pub n_paths: usize,
    pub seed: u64,
    pub antithetic: bool,
    /// Number of leading paths written as CSV by `simulate`.
    pub dump_paths: usize,
}

impl Default for SimSettings {
    fn default() -> Self {
        let s = SimConfig::default();
        Self {
            dt: s.dt,
            horizon: s.horizon,
            n_paths: s.n_paths,
            seed: s.seed,
            antithetic: s.antithetic,
            dump_paths: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub solver: SolverConfig,
    pub sim: SimSettings,
    /// False-alarm budget for `variational`.
    pub alpha: Option<f64>,
    /// Threshold for `simulate`; the optimal one when absent.
    pub r: Option<f64>,
    /// Iterates `v_n` written by `solve` besides the final one.
    pub iterates: Vec<usize>,
}

/// Flag values that replace configuration keys.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub mu: Option<f64>,
    pub lambda: Option<f64>,
    pub p: Option<f64>,
    pub c: Option<f64>,
    pub pi0: Option<f64>,
    pub alpha: Option<f64>,
    pub r: Option<f64>,
    pub grid_size: Option<usize>,
    pub epsilon: Option<f64>,
    pub dt: Option<f64>,
    pub n_paths: Option<usize>,
    pub seed: Option<u64>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn apply(&mut self, o: &Overrides) {
        fn set<T: Copy>(dst: &mut T, src: Option<T>) {
            if let Some(v) = src {
                *dst = v;
            }
        }
        set(&mut self.model.mu, o.mu);
        set(&mut self.model.lambda, o.lambda);
        set(&mut self.model.p, o.p);
        set(&mut self.model.c, o.c);
        set(&mut self.model.pi0, o.pi0);
        set(&mut self.solver.grid_size, o.grid_size);
        set(&mut self.solver.epsilon, o.epsilon);
        set(&mut self.sim.dt, o.dt);
        set(&mut self.sim.n_paths, o.n_paths);
        set(&mut self.sim.seed, o.seed);
        if o.alpha.is_some() {
            self.alpha = o.alpha;
        }
        if o.r.is_some() {
            self.r = o.r;
        }
    }

    pub fn model_params(&self) -> Result<ModelParams> {
        let m = &self.model;
        ModelParams::new(m.mu, m.lambda, m.p, m.c, m.pi0).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn solver_options(&self) -> Result<SolverOptions> {
        let o = SolverOptions {
            grid_size: self.solver.grid_size,
            quadrature_tol: self.solver.quadrature_tol,
            bisect_tol: self.solver.bisect_tol,
            ..SolverOptions::default()
        };
        o.validate().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(o)
    }

    pub fn epsilon(&self) -> Result<f64> {
        let e = self.solver.epsilon;
        if e > 0.0 && e < 1.0 {
            Ok(e)
        } else {
            Err(CliError::Config(format!("epsilon = {e} must lie in (0, 1)")))
        }
    }

    pub fn sim_config(&self) -> Result<SimConfig> {
        let s = &self.sim;
        let c = SimConfig {
            dt: s.dt,
            horizon: s.horizon,
            n_paths: s.n_paths,
            seed: s.seed,
            antithetic: s.antithetic,
        };
        c.validate().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(c)
    }

    /// Checks every sub-configuration.
    pub fn validate(&self) -> Result<()> {
        self.model_params()?;
        self.solver_options()?;
        self.epsilon()?;
        self.sim_config()?;
        if let Some(a) = self.alpha {
            if !(a > 0.0 && a < 1.0) {
                return Err(CliError::Config(format!("alpha = {a} must lie in (0, 1)")));
            }
        }
        if let Some(r) = self.r {
            if !(r > 0.0 && r < 1.0) {
                return Err(CliError::Config(format!("r = {r} must lie in (0, 1)")));
            }
        }
        Ok(())
    }
}
