use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::benchmarks::{BaseFunction, Shift};
use crate::cmaes::CmaHyperParams;
use crate::contextual::{SIGMA_MAX, SIGMA_MIN, WS_ALPHA, WS_GAMMA};
use crate::mogpr::FitConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "cws")]
    Cws,
    #[serde(rename = "cold")]
    Cold,
    #[serde(rename = "wscma")]
    Wscma,
    #[serde(rename = "ccmaes-approx")]
    CcmaesApprox,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Cws, Method::Cold, Method::Wscma, Method::CcmaesApprox];

    pub fn name(self) -> &'static str {
        match self {
            Method::Cws => "cws",
            Method::Cold => "cold",
            Method::Wscma => "wscma",
            Method::CcmaesApprox => "ccmaes-approx",
        }
    }

    pub fn needs_dataset(self) -> bool {
        self != Method::Cold
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = HarnessError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| HarnessError::Usage(format!("unknown method `{s}`")))
    }
}

/// Everything that defines one benchmark experiment. Optional fields fall
/// back to the protocol defaults of the chosen base function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub base: BaseFunction,
    pub shift: Shift,
    pub dim: Option<usize>,
    pub context_dim: usize,
    pub m_prev: usize,
    /// Per pre-optimization run.
    pub preopt_budget: Option<usize>,
    /// Per target-context run.
    pub target_budget: Option<usize>,
    pub target: f64,
    pub trials: usize,
    pub seed: u64,
    pub sigma0: f64,
    /// Cold-start means are uniform in `[-init_range, init_range]^N`.
    pub init_range: f64,
    /// Contexts are uniform in `[-context_range, context_range]^{N_α}`.
    pub context_range: f64,
    pub sigma_min: f64,
    pub sigma_max: f64,
    pub ws_gamma: f64,
    pub ws_alpha: f64,
    /// Source solutions for WS-CMA-ES are uniform in `[-ws_range, ws_range]^N`.
    pub ws_range: f64,
    pub ws_source_count: Option<usize>,
    /// Restart target-context runs on collapse, as pre-optimization runs do.
    pub restart_target_runs: bool,
    /// Fit the GP only on pairs whose pre-optimization reached the target.
    pub fit_solved_only: bool,
    /// Defaults to `m_prev` times the pre-optimization budget.
    pub ccmaes_budget: Option<usize>,
    pub fit: FitConfig,
    pub methods: Vec<Method>,
    pub checkpoints: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            base: BaseFunction::Sphere,
            shift: Shift::Linear,
            dim: None,
            context_dim: 2,
            m_prev: 10,
            preopt_budget: None,
            target_budget: None,
            target: 1e-8,
            trials: 20,
            seed: 0,
            sigma0: 2.0,
            init_range: 1.0,
            context_range: 2.0,
            sigma_min: SIGMA_MIN,
            sigma_max: SIGMA_MAX,
            ws_gamma: WS_GAMMA,
            ws_alpha: WS_ALPHA,
            ws_range: 2.0,
            ws_source_count: None,
            restart_target_runs: false,
            fit_solved_only: true,
            ccmaes_budget: None,
            fit: FitConfig::default(),
            methods: Method::ALL.to_vec(),
            checkpoints: 100,
        }
    }
}

impl ExperimentConfig {
    pub fn new(base: BaseFunction, shift: Shift) -> Self {
        ExperimentConfig {
            base,
            shift,
            ..Default::default()
        }
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = fs::read_to_string(path)?;
        let cfg: ExperimentConfig = serde_json::from_str(&text)
            .map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn dim(&self) -> usize {
        self.dim.unwrap_or_else(|| self.base.default_dim())
    }

    pub fn preopt_budget(&self) -> usize {
        self.preopt_budget.unwrap_or_else(|| self.base.default_budget())
    }

    pub fn target_budget(&self) -> usize {
        self.target_budget.unwrap_or_else(|| self.base.default_budget())
    }

    pub fn ws_source_count(&self) -> usize {
        self.ws_source_count.unwrap_or_else(|| self.base.default_budget())
    }

    pub fn ccmaes_budget(&self) -> usize {
        self.ccmaes_budget
            .unwrap_or_else(|| self.m_prev * self.preopt_budget())
    }

    pub fn lambda(&self) -> usize {
        CmaHyperParams::default_for(self.dim()).lambda
    }

    pub fn context_ranges(&self) -> Vec<(f64, f64)> {
        vec![(-self.context_range, self.context_range); self.context_dim]
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::Config(m));
        let n = self.dim();
        if self.base == BaseFunction::Easom && n != 2 {
            return bad(format!("easom is two-dimensional, got dim {n}"));
        }
        if n < 1 || self.context_dim < 1 {
            return bad("dimensions must be positive".into());
        }
        let lambda = self.lambda();
        for (name, b) in [("preopt_budget", self.preopt_budget()), ("target_budget", self.target_budget())] {
            if b < lambda {
                return bad(format!("{name} = {b} is below the population size {lambda}"));
            }
        }
        if self.trials < 1 {
            return bad("need at least one trial".into());
        }
        if !(self.sigma0 > 0.0) || !(self.sigma_min > 0.0) || self.sigma_min > self.sigma_max {
            return bad("step sizes must be positive with sigma_min <= sigma_max".into());
        }
        if self.checkpoints < 1 {
            return bad("need at least one checkpoint".into());
        }
        Ok(())
    }
}
