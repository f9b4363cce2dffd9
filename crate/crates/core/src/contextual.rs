//! Warm-start initializers for CMA-ES and the linear-policy contextual
//! baseline.
//!
//! * [`cws_init`] starts from the GP posterior at the new context.
//! * [`ws_cmaes_init`] fits a Gaussian to the best solutions of one similar
//!   task and ignores contexts.
//! * [`ccmaes_baseline_train`] learns `x ≈ A φ(α)` with CMA-ES-style updates.
//!   It approximates contextual CMA-ES and is reported as `ccmaes-approx`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use thiserror::Error;

use crate::cmaes::{self, adapt_from_steps, fitness_order, CmaHyperParams, DistributionState};
use crate::linalg::{Cholesky, LinalgError, SymMatrix};
use crate::mogpr::{ContextDataset, MogprError, MogprModel};

pub const SIGMA_MIN: f64 = 1e-2;
pub const SIGMA_MAX: f64 = 2.0;
pub const WS_GAMMA: f64 = 0.1;
pub const WS_ALPHA: f64 = 0.1;

#[derive(Debug, Error)]
pub enum ContextualError {
    #[error("need at least one selected solution, got floor({gamma} * {count}) = 0")]
    TooFewSolutions { count: usize, gamma: f64 },
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("weighted feature Gram matrix is singular")]
    DegenerateFeatures,
    #[error("budget {budget} is smaller than the population size {lambda}")]
    BudgetTooSmall { budget: usize, lambda: usize },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error(transparent)]
    Model(#[from] MogprError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Cmaes(#[from] cmaes::CmaesError),
}

/// Initial `m⁽⁰⁾`, `σ⁽⁰⁾`, `C⁽⁰⁾` for a CMA-ES run.
#[derive(Debug, Clone, PartialEq)]
pub struct DistributionInit {
    pub mean: DVector<f64>,
    pub sigma: f64,
    pub cov: SymMatrix,
}

impl DistributionInit {
    pub fn into_state(self) -> DistributionState {
        DistributionState::new(self.mean, self.sigma, self.cov)
    }
}

pub fn clip(v: f64, lo: f64, hi: f64) -> f64 {
    v.max(lo).min(hi)
}

/// `σ⁽⁰⁾ = clip(√(Tr Σ / N), σ_min, σ_max)`.
pub fn cws_sigma(trace: f64, n: usize, sigma_min: f64, sigma_max: f64) -> f64 {
    clip((trace.max(0.0) / n as f64).sqrt(), sigma_min, sigma_max)
}

/// Mean from the GP posterior at `alpha_new`, step size from its trace, and
/// an identity covariance.
pub fn cws_init(
    model: &MogprModel,
    alpha_new: &[f64],
    sigma_min: f64,
    sigma_max: f64,
) -> Result<DistributionInit, ContextualError> {
    let post = model.predict(alpha_new)?;
    let n = post.dim();
    Ok(DistributionInit {
        sigma: cws_sigma(post.cov.trace(), n, sigma_min, sigma_max),
        mean: post.mean,
        cov: SymMatrix::identity(n),
    })
}

/// Gaussian closest in KL to the mixture of `N(x_i, α² I)` over the
/// `⌊γK⌋` best solutions; `C⁽⁰⁾` is scaled to unit determinant.
pub fn ws_cmaes_init(
    solutions: &[(Vec<f64>, f64)],
    gamma: f64,
    alpha: f64,
) -> Result<DistributionInit, ContextualError> {
    let k = solutions.len();
    // the small slack keeps products like 0.1 * 30 from flooring to 2
    let k_gamma = (gamma * k as f64 + 1e-9).floor() as usize;
    if k_gamma < 1 {
        return Err(ContextualError::TooFewSolutions { count: k, gamma });
    }
    let n = solutions[0].0.len();
    if solutions.iter().any(|(x, _)| x.len() != n) {
        return Err(ContextualError::Dimension("solutions of unequal length".into()));
    }
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| fitness_order(solutions[a].1, solutions[b].1));
    let best: Vec<DVector<f64>> = order[..k_gamma]
        .iter()
        .map(|&i| DVector::from_column_slice(&solutions[i].0))
        .collect();

    let mean = best.iter().fold(DVector::zeros(n), |acc, x| acc + x) / k_gamma as f64;
    let mut scatter = DMatrix::identity(n, n) * (alpha * alpha);
    for x in &best {
        let d = x - &mean;
        scatter.ger(1.0 / k_gamma as f64, &d, &d, 1.0);
    }
    let sigma_star = SymMatrix::symmetrized(scatter);
    let log_det = Cholesky::factor_exact(&sigma_star)?.log_det();
    let sigma = (log_det / (2.0 * n as f64)).exp();
    Ok(DistributionInit {
        mean,
        sigma,
        cov: sigma_star.scaled(1.0 / (sigma * sigma)),
    })
}

/// Index of the training context nearest to `alpha_new`; ties go to the
/// smaller index.
pub fn select_similar_task(dataset: &ContextDataset, alpha_new: &[f64]) -> Result<usize, ContextualError> {
    if dataset.is_empty() {
        return Err(ContextualError::EmptyDataset);
    }
    let dist = |c: &[f64]| c.iter().zip(alpha_new).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
    let mut best = 0;
    let mut best_d = dist(&dataset.contexts[0]);
    for (i, c) in dataset.contexts.iter().enumerate().skip(1) {
        let d = dist(c);
        if d < best_d {
            best = i;
            best_d = d;
        }
    }
    Ok(best)
}

/// `φ(α) = (αᵀ, 1)ᵀ`.
pub fn features(alpha: &[f64]) -> DVector<f64> {
    let mut v = Vec::with_capacity(alpha.len() + 1);
    v.extend_from_slice(alpha);
    v.push(1.0);
    DVector::from_vec(v)
}

/// Linear context-to-solution policy `m(α) = A φ(α)` with its search
/// distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearPolicy {
    /// `N × (N_α + 1)`, last column is the bias.
    pub a: DMatrix<f64>,
    pub sigma: f64,
    pub cov: SymMatrix,
}

impl LinearPolicy {
    pub fn new(a: DMatrix<f64>, sigma: f64, cov: SymMatrix) -> Self {
        assert_eq!(a.nrows(), cov.dim(), "policy rows must match covariance");
        LinearPolicy { a, sigma, cov }
    }

    pub fn context_dim(&self) -> usize {
        self.a.ncols() - 1
    }
}

pub fn policy_predict(policy: &LinearPolicy, alpha: &[f64]) -> DVector<f64> {
    assert_eq!(alpha.len(), policy.context_dim(), "context dimension mismatch");
    &policy.a * features(alpha)
}

/// Settings for [`ccmaes_baseline_train`].
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyTrainConfig {
    pub dim: usize,
    pub context_dim: usize,
    pub budget: usize,
    pub sigma0: f64,
    /// Initial bias column is drawn uniformly from `[-init_range, init_range]^N`.
    pub init_range: f64,
}

/// Number of quadratic context features used by the value baseline.
fn baseline_features(context_dim: usize) -> usize {
    1 + context_dim + context_dim * (context_dim + 1) / 2
}

/// Population size of the policy search: the CMA-ES default for the
/// `N (N_α + 1)` policy parameters, but at least three samples per value
/// baseline coefficient. With the plain `N`-dimensional default both
/// per-generation regressions are close to interpolation and the search
/// diverges.
pub fn policy_population(dim: usize, context_dim: usize) -> usize {
    let params = dim * (context_dim + 1);
    let default = 4 + (3.0 * (params as f64).ln()).floor() as usize;
    default.max(3 * baseline_features(context_dim))
}

/// `f_i - V(α_i)`, where `V` is the least-squares fit of the values over
/// quadratic context features. Falls back to the raw values if the fit fails.
fn advantages(samples: &[(&[f64], f64)]) -> Vec<f64> {
    let quad = |a: &[f64]| {
        let mut v = vec![1.0];
        v.extend_from_slice(a);
        for j in 0..a.len() {
            for k in j..a.len() {
                v.push(a[j] * a[k]);
            }
        }
        DVector::from_vec(v)
    };
    let raw: Vec<f64> = samples.iter().map(|s| s.1).collect();
    if raw.iter().any(|f| !f.is_finite()) {
        return raw;
    }
    let psi: Vec<DVector<f64>> = samples.iter().map(|s| quad(s.0)).collect();
    let p = psi[0].len();
    let mut gram = DMatrix::identity(p, p) * 1e-8;
    let mut rhs = DVector::zeros(p);
    for (v, f) in psi.iter().zip(&raw) {
        gram.ger(1.0, v, v, 1.0);
        rhs.axpy(*f, v, 1.0);
    }
    match Cholesky::factor_exact(&SymMatrix::symmetrized(gram)) {
        Ok(chol) => {
            let beta = chol.solve_vec(&rhs);
            psi.iter().zip(&raw).map(|(v, f)| f - beta.dot(v)).collect()
        }
        Err(_) => raw,
    }
}

/// Trains a linear policy on contexts drawn per candidate.
///
/// Each generation samples `α_i`, draws `x_i ~ N(A φ(α_i), σ²C)` and ranks by
/// the advantage `f(x_i; α_i) - V(α_i)`, with `V` a quadratic value baseline
/// fitted to the generation, so that easy contexts do not crowd the elite.
/// `A` is refit by weighted least squares on the `μ` best and `C`, `σ` and
/// the paths follow the standard CMA-ES rules applied to the residuals
/// `(x_i - A φ(α_i)) / σ`. The population size is [`policy_population`].
pub fn ccmaes_baseline_train<F, S, R>(
    mut objective: F,
    mut context_sampler: S,
    cfg: &PolicyTrainConfig,
    rng: &mut R,
) -> Result<LinearPolicy, ContextualError>
where
    F: FnMut(&[f64], &[f64]) -> f64,
    S: FnMut(&mut R) -> Vec<f64>,
    R: Rng + ?Sized,
{
    let n = cfg.dim;
    let hp = CmaHyperParams::with_population(n, policy_population(n, cfg.context_dim));
    if cfg.budget < hp.lambda {
        return Err(ContextualError::BudgetTooSmall {
            budget: cfg.budget,
            lambda: hp.lambda,
        });
    }
    let n_phi = cfg.context_dim + 1;
    let mut a = DMatrix::zeros(n, n_phi);
    for i in 0..n {
        a[(i, n_phi - 1)] = rng.random_range(-cfg.init_range..=cfg.init_range);
    }
    let mut state = DistributionState::isotropic(DVector::zeros(n), cfg.sigma0);

    struct Sample {
        alpha: Vec<f64>,
        phi: DVector<f64>,
        z: DVector<f64>,
        y: DVector<f64>,
        x: DVector<f64>,
        f: f64,
    }

    let mut evals = 0;
    while evals + hp.lambda <= cfg.budget {
        let draws = cmaes::sample_candidates(&state, hp.lambda, rng)?;
        let mut pop: Vec<Sample> = Vec::with_capacity(hp.lambda);
        for c in draws {
            let alpha = context_sampler(rng);
            if alpha.len() != cfg.context_dim {
                return Err(ContextualError::Dimension(format!(
                    "sampled context has length {}, expected {}",
                    alpha.len(),
                    cfg.context_dim
                )));
            }
            let phi = features(&alpha);
            let x = &a * &phi + &c.y * state.sigma;
            let f = objective(x.as_slice(), &alpha);
            pop.push(Sample {
                alpha,
                phi,
                z: c.z,
                y: c.y,
                x,
                f,
            });
        }
        evals += hp.lambda;
        let adv = advantages(&pop.iter().map(|s| (&s.alpha[..], s.f)).collect::<Vec<_>>());
        let mut order: Vec<usize> = (0..pop.len()).collect();
        order.sort_by(|&i, &j| fitness_order(adv[i], adv[j]));
        let pop: Vec<Sample> = {
            let mut slots: Vec<Option<Sample>> = pop.into_iter().map(Some).collect();
            order.iter().map(|&i| slots[i].take().unwrap()).collect()
        };
        let elite = &pop[..hp.mu];

        // weighted least squares: A = (Σ w x φᵀ)(Σ w φ φᵀ + εI)⁻¹
        let mut xphi = DMatrix::zeros(n, n_phi);
        let mut phiphi = DMatrix::identity(n_phi, n_phi) * 1e-8;
        for (w, s) in hp.weights.iter().zip(elite) {
            xphi.ger(*w, &s.x, &s.phi, 1.0);
            phiphi.ger(*w, &s.phi, &s.phi, 1.0);
        }
        let chol = Cholesky::factor_exact(&SymMatrix::symmetrized(phiphi))
            .map_err(|_| ContextualError::DegenerateFeatures)?;
        a = chol.solve(&xphi.transpose()).transpose();

        let mut dz = DVector::zeros(n);
        let mut dy = DVector::zeros(n);
        for (w, s) in hp.weights.iter().zip(elite) {
            dz.axpy(*w, &s.z, 1.0);
            dy.axpy(*w, &s.y, 1.0);
        }
        let ys: Vec<&DVector<f64>> = elite.iter().map(|s| &s.y).collect();
        adapt_from_steps(&mut state, &hp, &dz, &dy, &ys);
        if !state.sigma.is_finite() || cmaes::should_restart(&state) {
            // the policy has collapsed; further updates only add round-off
            break;
        }
    }
    Ok(LinearPolicy::new(a, state.sigma, state.cov))
}
