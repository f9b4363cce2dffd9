//! CMA-ES with cumulative step-size adaptation, rank-one and rank-μ
//! covariance updates, and eigenvalue-triggered restarts.

use std::cmp::Ordering;
use std::error::Error as StdError;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::linalg::{max_eigenvalue, sym_sqrt, LinalgError, SymMatrix};

/// Restart threshold on the largest eigenvalue of `σ²C`.
pub const RESTART_EIGENVALUE: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum CmaesError {
    #[error("update needs at least {needed} ranked candidates, got {got}")]
    InsufficientCandidates { needed: usize, got: usize },
    #[error("budget {budget} is smaller than the population size {lambda}")]
    BudgetTooSmall { budget: usize, lambda: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid hyperparameters: {0}")]
    InvalidHyperParams(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("objective evaluation failed: {0}")]
    Objective(#[source] Box<dyn StdError + Send + Sync>),
}

/// Strategy parameters. Use [`CmaHyperParams::default_for`] for the standard
/// recommended values.
#[derive(Debug, Clone, PartialEq)]
pub struct CmaHyperParams {
    pub lambda: usize,
    pub mu: usize,
    pub weights: Vec<f64>,
    pub mu_eff: f64,
    pub c_sigma: f64,
    pub d_sigma: f64,
    pub c_c: f64,
    pub c_1: f64,
    pub c_mu: f64,
    pub c_m: f64,
    pub chi_n: f64,
    dim: usize,
}

impl CmaHyperParams {
    pub fn default_for(n: usize) -> Self {
        assert!(n >= 1, "dimension must be at least 1");
        let lambda = 4 + (3.0 * (n as f64).ln()).floor() as usize;
        Self::with_population(n, lambda)
    }

    /// Recommended settings for an explicit population size `lambda ≥ 2`.
    pub fn with_population(n: usize, lambda: usize) -> Self {
        assert!(n >= 1, "dimension must be at least 1");
        assert!(lambda >= 2, "population size must be at least 2");
        let nf = n as f64;
        let mu = lambda / 2;
        let raw: Vec<f64> = (1..=mu)
            .map(|i| ((lambda as f64 + 1.0) / 2.0).ln() - (i as f64).ln())
            .collect();
        let total: f64 = raw.iter().sum();
        let weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
        let mu_eff = 1.0 / weights.iter().map(|w| w * w).sum::<f64>();

        let c_sigma = (mu_eff + 2.0) / (nf + mu_eff + 5.0);
        let d_sigma = 1.0 + 2.0 * (((mu_eff - 1.0) / (nf + 1.0)).sqrt() - 1.0).max(0.0) + c_sigma;
        let c_c = (4.0 + mu_eff / nf) / (nf + 4.0 + 2.0 * mu_eff / nf);
        let c_1 = 2.0 / ((nf + 1.3).powi(2) + mu_eff);
        let c_mu = (1.0 - c_1)
            .min(2.0 * (mu_eff - 2.0 + 1.0 / mu_eff) / ((nf + 2.0).powi(2) + mu_eff));

        CmaHyperParams {
            lambda,
            mu,
            weights,
            mu_eff,
            c_sigma,
            d_sigma,
            c_c,
            c_1,
            c_mu,
            c_m: 1.0,
            chi_n: chi_n(n),
            dim: n,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Checks the documented invariants; useful after hand edits.
    pub fn validate(&self) -> Result<(), CmaesError> {
        let bad = |m: &str| Err(CmaesError::InvalidHyperParams(m.to_string()));
        if self.lambda < 2 || self.mu < 1 || self.mu > self.lambda {
            return bad("need lambda >= 2 and 1 <= mu <= lambda");
        }
        if self.weights.len() != self.mu {
            return bad("weight count must equal mu");
        }
        if self.weights.iter().any(|w| !(*w > 0.0)) {
            return bad("weights must be positive");
        }
        if self.weights.windows(2).any(|w| w[1] > w[0]) {
            return bad("weights must be non-increasing");
        }
        if (self.weights.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
            return bad("weights must sum to one");
        }
        let rates = [self.c_sigma, self.c_c, self.c_1, self.c_mu, self.c_m];
        if rates.iter().any(|r| !(*r > 0.0 && *r <= 1.0)) {
            return bad("learning rates must lie in (0, 1]");
        }
        if self.c_1 + self.c_mu > 1.0 + 1e-15 {
            return bad("c_1 + c_mu must not exceed 1");
        }
        if !(self.d_sigma > 0.0) {
            return bad("d_sigma must be positive");
        }
        Ok(())
    }
}

/// Approximation of `E‖N(0, I_N)‖`.
pub fn chi_n(n: usize) -> f64 {
    let nf = n as f64;
    nf.sqrt() * (1.0 - 1.0 / (4.0 * nf) + 1.0 / (21.0 * nf * nf))
}

/// Mean, covariance and step size plus the evolution paths.
#[derive(Debug, Clone, PartialEq)]
pub struct DistributionState {
    pub mean: DVector<f64>,
    pub cov: SymMatrix,
    pub sigma: f64,
    pub p_sigma: DVector<f64>,
    pub p_c: DVector<f64>,
    pub t: usize,
    pub eval_count: usize,
}

impl DistributionState {
    /// Fresh state with zero evolution paths.
    pub fn new(mean: DVector<f64>, sigma: f64, cov: SymMatrix) -> Self {
        assert!(sigma > 0.0 && sigma.is_finite(), "sigma must be positive");
        assert_eq!(mean.len(), cov.dim(), "mean/covariance dimension mismatch");
        let n = mean.len();
        DistributionState {
            mean,
            cov,
            sigma,
            p_sigma: DVector::zeros(n),
            p_c: DVector::zeros(n),
            t: 0,
            eval_count: 0,
        }
    }

    pub fn isotropic(mean: DVector<f64>, sigma: f64) -> Self {
        let n = mean.len();
        Self::new(mean, sigma, SymMatrix::identity(n))
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub z: DVector<f64>,
    pub y: DVector<f64>,
    pub x: DVector<f64>,
    /// `NaN` until evaluated.
    pub fitness: f64,
}

/// Draws `count` candidates `x = m + σ √C z` with `z ~ N(0, I)`.
pub fn sample_candidates<R: Rng + ?Sized>(
    state: &DistributionState,
    count: usize,
    rng: &mut R,
) -> Result<Vec<Candidate>, CmaesError> {
    let n = state.dim();
    let root = sym_sqrt(&state.cov)?;
    Ok((0..count)
        .map(|_| {
            let z = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
            let y = root.as_matrix() * &z;
            let x = &state.mean + &y * state.sigma;
            Candidate {
                z,
                y,
                x,
                fitness: f64::NAN,
            }
        })
        .collect())
}

/// One full population of `λ` candidates.
pub fn sample_population<R: Rng + ?Sized>(
    state: &DistributionState,
    hp: &CmaHyperParams,
    rng: &mut R,
) -> Result<Vec<Candidate>, CmaesError> {
    sample_candidates(state, hp.lambda, rng)
}

/// Total order used for ranking: finite values ascending, non-finite last.
pub fn fitness_order(a: f64, b: f64) -> Ordering {
    match (a.is_finite(), b.is_finite()) {
        (true, true) => a.total_cmp(&b),
        (true, false) => Ordering::Less,
        (false, true) => Ordering::Greater,
        (false, false) => Ordering::Equal,
    }
}

/// Stable sort by fitness, so ties keep candidate order.
pub fn rank_candidates(candidates: &mut [Candidate]) {
    candidates.sort_by(|a, b| fitness_order(a.fitness, b.fitness));
}

/// Weighted recombination of the `μ` best `z` and `y` vectors.
fn weighted_steps(hp: &CmaHyperParams, ranked: &[Candidate]) -> (DVector<f64>, DVector<f64>) {
    let n = ranked[0].z.len();
    let mut dz = DVector::zeros(n);
    let mut dy = DVector::zeros(n);
    for (w, c) in hp.weights.iter().zip(ranked) {
        dz.axpy(*w, &c.z, 1.0);
        dy.axpy(*w, &c.y, 1.0);
    }
    (dz, dy)
}

/// Adapts paths, covariance and step size from already-computed steps. The
/// mean is left to the caller. Returns the Heaviside indicator.
pub(crate) fn adapt_from_steps(
    state: &mut DistributionState,
    hp: &CmaHyperParams,
    dz: &DVector<f64>,
    dy: &DVector<f64>,
    selected_y: &[&DVector<f64>],
) -> bool {
    let n = state.dim() as f64;
    let t_next = (state.t + 1) as f64;

    state.p_sigma = &state.p_sigma * (1.0 - hp.c_sigma)
        + dz * (hp.c_sigma * (2.0 - hp.c_sigma) * hp.mu_eff).sqrt();
    let ps_norm = state.p_sigma.norm();
    let normalizer = (1.0 - (1.0 - hp.c_sigma).powf(2.0 * t_next)).sqrt();
    let h_sigma = ps_norm / normalizer < (1.4 + 2.0 / (n + 1.0)) * hp.chi_n;
    let h = if h_sigma { 1.0 } else { 0.0 };

    state.p_c =
        &state.p_c * (1.0 - hp.c_c) + dy * (h * (hp.c_c * (2.0 - hp.c_c) * hp.mu_eff).sqrt());

    let c_old = state.cov.as_matrix();
    let mut rank_mu = DMatrix::zeros(c_old.nrows(), c_old.ncols());
    for (w, y) in hp.weights.iter().zip(selected_y) {
        rank_mu.ger(*w, y, y, 1.0);
    }
    rank_mu -= c_old;
    let rank_one = &state.p_c * state.p_c.transpose() - c_old;
    let stall = 1.0 + (1.0 - h) * hp.c_1 * hp.c_c * (2.0 - hp.c_c);
    let c_new = c_old * stall + rank_mu * hp.c_mu + rank_one * hp.c_1;
    state.cov = SymMatrix::symmetrized(c_new);

    state.sigma *= ((hp.c_sigma / hp.d_sigma) * (ps_norm / hp.chi_n - 1.0)).exp();
    state.t += 1;
    h_sigma
}

/// One generation update from candidates ranked best-first.
pub fn update(
    state: &DistributionState,
    hp: &CmaHyperParams,
    ranked: &[Candidate],
) -> Result<DistributionState, CmaesError> {
    if ranked.len() < hp.mu {
        return Err(CmaesError::InsufficientCandidates {
            needed: hp.mu,
            got: ranked.len(),
        });
    }
    if ranked[0].z.len() != state.dim() {
        return Err(CmaesError::DimensionMismatch {
            expected: state.dim(),
            got: ranked[0].z.len(),
        });
    }
    let (dz, dy) = weighted_steps(hp, ranked);
    let mut next = state.clone();
    next.mean = &state.mean + &dy * (hp.c_m * state.sigma);
    let ys: Vec<&DVector<f64>> = ranked[..hp.mu].iter().map(|c| &c.y).collect();
    adapt_from_steps(&mut next, hp, &dz, &dy, &ys);
    Ok(next)
}

/// True iff the largest eigenvalue of `σ²C` fell below [`RESTART_EIGENVALUE`].
pub fn should_restart(state: &DistributionState) -> bool {
    state.sigma * state.sigma * max_eigenvalue(&state.cov) < RESTART_EIGENVALUE
}

/// What to do when [`should_restart`] fires.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RestartPolicy {
    /// Keep running the degenerate distribution until the budget runs out.
    Never,
    /// Redraw the mean uniformly in `[low, high]^N`, reset `σ` to the run's
    /// initial value, `C = I` and zero paths.
    UniformMean { low: f64, high: f64 },
}

impl Default for RestartPolicy {
    fn default() -> Self {
        RestartPolicy::UniformMean {
            low: -1.0,
            high: 1.0,
        }
    }
}

/// Something CMA-ES can minimize.
pub trait Objective {
    type Error: StdError + Send + Sync + 'static;
    fn evaluate(&mut self, x: &[f64]) -> Result<f64, Self::Error>;
}

impl<F> Objective for F
where
    F: FnMut(&[f64]) -> f64,
{
    type Error = std::convert::Infallible;
    fn evaluate(&mut self, x: &[f64]) -> Result<f64, Self::Error> {
        Ok(self(x))
    }
}

/// Budget and stopping rule for [`optimize`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunLimits {
    pub budget: usize,
    /// Success means `best_f < target`; the run stops as soon as that happens.
    pub target: f64,
    pub restart: RestartPolicy,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub best_x: DVector<f64>,
    pub best_f: f64,
    pub evals_used: usize,
    /// `(eval_count, best_f)` after each generation.
    pub history: Vec<(usize, f64)>,
    pub restarts: usize,
    pub success: bool,
    /// Evaluation index at which `best_f` first dropped below the target.
    pub evals_to_target: Option<usize>,
    pub final_state: DistributionState,
}

/// Sample, evaluate, rank and update until the target is hit or the budget is
/// spent. The best-so-far solution and evaluation counter survive restarts.
pub fn optimize<O, R>(
    objective: &mut O,
    init: DistributionState,
    hp: &CmaHyperParams,
    limits: RunLimits,
    rng: &mut R,
) -> Result<RunResult, CmaesError>
where
    O: Objective + ?Sized,
    R: Rng + ?Sized,
{
    if limits.budget < hp.lambda {
        return Err(CmaesError::BudgetTooSmall {
            budget: limits.budget,
            lambda: hp.lambda,
        });
    }
    if init.dim() != hp.dim() {
        return Err(CmaesError::DimensionMismatch {
            expected: hp.dim(),
            got: init.dim(),
        });
    }
    let n = init.dim();
    let sigma0 = init.sigma;
    let mut evals = init.eval_count;
    let mut state = init;
    let mut best_x = state.mean.clone();
    let mut best_f = f64::INFINITY;
    let mut history = Vec::new();
    let mut restarts = 0;
    let mut evals_to_target = None;

    'outer: while evals < limits.budget {
        let count = hp.lambda.min(limits.budget - evals);
        let mut pop = sample_candidates(&state, count, rng)?;
        for cand in pop.iter_mut() {
            let f = objective
                .evaluate(cand.x.as_slice())
                .map_err(|e| CmaesError::Objective(Box::new(e)))?;
            cand.fitness = f;
            evals += 1;
            if fitness_order(f, best_f) == Ordering::Less {
                best_f = f;
                best_x = cand.x.clone();
            }
            if best_f < limits.target {
                evals_to_target = Some(evals);
                history.push((evals, best_f));
                break 'outer;
            }
        }
        history.push((evals, best_f));
        if count < hp.lambda {
            break;
        }
        rank_candidates(&mut pop);
        state = update(&state, hp, &pop)?;
        state.eval_count = evals;

        let degenerate = !state.sigma.is_finite()
            || state.cov.as_matrix().iter().any(|v| !v.is_finite());
        if degenerate || should_restart(&state) {
            if let RestartPolicy::UniformMean { low, high } = limits.restart {
                let mean = DVector::from_fn(n, |_, _| rng.random_range(low..=high));
                state = DistributionState::isotropic(mean, sigma0);
                state.eval_count = evals;
                restarts += 1;
                log::debug!("restart {restarts} at {evals} evaluations");
            } else if degenerate {
                break;
            }
        }
    }
    state.eval_count = evals;

    Ok(RunResult {
        success: best_f < limits.target,
        best_x,
        best_f,
        evals_used: evals,
        history,
        restarts,
        evals_to_target,
        final_state: state,
    })
}
