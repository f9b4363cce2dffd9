//! Multi-output Gaussian process regression with a linear model of
//! coregionalization (LMC).
//!
//! The Gram matrix over `M` training contexts and `L` outputs is
//! `Σ_q K(D; k_q) ⊗ B_q`, with rank-one-plus-diagonal coregionalization
//! matrices `B_q = a_q a_qᵀ + κ_q I`. Outputs are stacked point by point,
//! so row `i * L + d` holds output `d` of training pair `i`.

use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cmaes::{self, CmaHyperParams, DistributionState, RestartPolicy, RunLimits};
use crate::linalg::{dot2, Cholesky, GaussianParams, LinalgError, SymMatrix};

#[derive(Debug, Error)]
pub enum MogprError {
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("inconsistent dimensions: {0}")]
    Dimension(String),
    #[error("Gram matrix could not be factorized: {0}")]
    SingularGram(#[source] LinalgError),
    #[error("hyperparameter fit diverged: every restart gave a non-finite likelihood")]
    FitDiverged,
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Cmaes(#[from] cmaes::CmaesError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed model file: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, MogprError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelKind {
    Linear,
    Rbf,
    Matern52,
}

/// A scalar kernel over context vectors. `length_scales` is empty for the
/// linear kernel and has one (ARD) entry per context coordinate otherwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelParams {
    pub kind: KernelKind,
    pub variance: f64,
    pub length_scales: Vec<f64>,
}

impl KernelParams {
    pub fn linear(variance: f64) -> Self {
        KernelParams {
            kind: KernelKind::Linear,
            variance,
            length_scales: Vec::new(),
        }
    }

    pub fn rbf(variance: f64, length_scales: Vec<f64>) -> Self {
        KernelParams {
            kind: KernelKind::Rbf,
            variance,
            length_scales,
        }
    }

    pub fn matern52(variance: f64, length_scales: Vec<f64>) -> Self {
        KernelParams {
            kind: KernelKind::Matern52,
            variance,
            length_scales,
        }
    }

    fn scaled_distance(&self, x: &[f64], xp: &[f64]) -> f64 {
        x.iter()
            .zip(xp)
            .zip(&self.length_scales)
            .map(|((a, b), l)| ((a - b) / l).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    pub fn eval(&self, x: &[f64], xp: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), xp.len());
        match self.kind {
            KernelKind::Linear => self.variance * x.iter().zip(xp).map(|(a, b)| a * b).sum::<f64>(),
            KernelKind::Rbf => {
                let r = self.scaled_distance(x, xp);
                self.variance * (-0.5 * r * r).exp()
            }
            KernelKind::Matern52 => {
                let r = self.scaled_distance(x, xp);
                let s5r = 5f64.sqrt() * r;
                self.variance * (1.0 + s5r + 5.0 / 3.0 * r * r) * (-s5r).exp()
            }
        }
    }

    fn check(&self, n_alpha: usize) -> Result<()> {
        let want = if self.kind == KernelKind::Linear { 0 } else { n_alpha };
        if self.length_scales.len() != want {
            return Err(MogprError::Dimension(format!(
                "{:?} kernel needs {want} length scales, has {}",
                self.kind,
                self.length_scales.len()
            )));
        }
        if !(self.variance > 0.0) || self.length_scales.iter().any(|l| !(*l > 0.0)) {
            return Err(MogprError::Dimension(
                "kernel variance and length scales must be positive".into(),
            ));
        }
        Ok(())
    }
}

pub fn kernel_eval(k: &KernelParams, x: &[f64], xp: &[f64]) -> f64 {
    k.eval(x, xp)
}

/// `B = a aᵀ + κ I`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coregionalization {
    pub a: Vec<f64>,
    pub kappa: f64,
}

impl Coregionalization {
    pub fn matrix(&self) -> DMatrix<f64> {
        let l = self.a.len();
        DMatrix::from_fn(l, l, |i, j| {
            self.a[i] * self.a[j] + if i == j { self.kappa } else { 0.0 }
        })
    }
}

/// Kernels paired one-to-one with coregionalization matrices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LmcParams {
    pub kernels: Vec<KernelParams>,
    pub coreg: Vec<Coregionalization>,
}

impl LmcParams {
    /// Linear, RBF and Matern 5/2 kernels with unit variances and length
    /// scales, `a_q = 0` and `κ_q = 0.1`. Used as the prior when there is
    /// nothing to fit and as the centre of the hyperparameter search.
    pub fn standard(n_alpha: usize, l: usize) -> Self {
        let ls = vec![1.0; n_alpha];
        LmcParams {
            kernels: vec![
                KernelParams::linear(1.0),
                KernelParams::rbf(1.0, ls.clone()),
                KernelParams::matern52(1.0, ls),
            ],
            coreg: (0..3)
                .map(|_| Coregionalization {
                    a: vec![0.0; l],
                    kappa: 0.1,
                })
                .collect(),
        }
    }

    pub fn output_dim(&self) -> usize {
        self.coreg.first().map_or(0, |c| c.a.len())
    }

    fn check(&self, n_alpha: usize, l: usize) -> Result<()> {
        if self.kernels.is_empty() || self.kernels.len() != self.coreg.len() {
            return Err(MogprError::Dimension(
                "need one coregionalization matrix per kernel".into(),
            ));
        }
        for k in &self.kernels {
            k.check(n_alpha)?;
        }
        for c in &self.coreg {
            if c.a.len() != l {
                return Err(MogprError::Dimension(format!(
                    "coregionalization vector has length {}, outputs have {l}",
                    c.a.len()
                )));
            }
            if !(c.kappa > 0.0) {
                return Err(MogprError::Dimension("kappa must be positive".into()));
            }
        }
        Ok(())
    }

    /// Output covariance between contexts `x` and `xp`: `Σ_q k_q(x, xp) B_q`.
    fn cross_block(&self, bs: &[DMatrix<f64>], x: &[f64], xp: &[f64]) -> DMatrix<f64> {
        let l = bs[0].nrows();
        let mut out = DMatrix::zeros(l, l);
        for (k, b) in self.kernels.iter().zip(bs) {
            out += b * k.eval(x, xp);
        }
        out
    }
}

/// Bookkeeping attached to each (context, best solution) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairMeta {
    /// NaN when unknown; stored as `null`.
    #[serde(with = "finite_or_null")]
    pub best_f: f64,
    pub evals_used: usize,
}

/// JSON has no NaN or infinities: non-finite values are written as `null`
/// and read back as NaN.
mod finite_or_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
    }
}

/// Previously solved tasks: contexts and the best solution found for each.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ContextDataset {
    pub contexts: Vec<Vec<f64>>,
    pub solutions: Vec<Vec<f64>>,
    pub metadata: Vec<PairMeta>,
}

impl ContextDataset {
    pub fn new(contexts: Vec<Vec<f64>>, solutions: Vec<Vec<f64>>, metadata: Vec<PairMeta>) -> Result<Self> {
        let d = ContextDataset {
            contexts,
            solutions,
            metadata,
        };
        d.validate()?;
        Ok(d)
    }

    /// Dataset without metadata (filled with NaN / 0).
    pub fn from_pairs(contexts: Vec<Vec<f64>>, solutions: Vec<Vec<f64>>) -> Result<Self> {
        let meta = vec![
            PairMeta {
                best_f: f64::NAN,
                evals_used: 0
            };
            contexts.len()
        ];
        Self::new(contexts, solutions, meta)
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.contexts.len();
        if self.solutions.len() != m || self.metadata.len() != m {
            return Err(MogprError::Dimension(format!(
                "{m} contexts, {} solutions, {} metadata rows",
                self.solutions.len(),
                self.metadata.len()
            )));
        }
        if let (Some(c0), Some(s0)) = (self.contexts.first(), self.solutions.first()) {
            if self.contexts.iter().any(|c| c.len() != c0.len())
                || self.solutions.iter().any(|s| s.len() != s0.len())
            {
                return Err(MogprError::Dimension("ragged contexts or solutions".into()));
            }
            if c0.is_empty() || s0.is_empty() {
                return Err(MogprError::Dimension("zero-length vectors".into()));
            }
        }
        Ok(())
    }

    pub fn push(&mut self, context: Vec<f64>, solution: Vec<f64>, meta: PairMeta) {
        self.contexts.push(context);
        self.solutions.push(solution);
        self.metadata.push(meta);
    }

    pub fn len(&self) -> usize {
        self.contexts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.contexts.is_empty()
    }

    pub fn context_dim(&self) -> usize {
        self.contexts.first().map_or(0, Vec::len)
    }

    pub fn output_dim(&self) -> usize {
        self.solutions.first().map_or(0, Vec::len)
    }

    /// Pairs whose recorded best value is below `target`, or whose value is
    /// unknown. Returns every pair when none qualifies.
    pub fn solved(&self, target: f64) -> Self {
        let keep: Vec<usize> = (0..self.len()).filter(|&i| !(self.metadata[i].best_f >= target)).collect();
        if keep.is_empty() {
            return self.clone();
        }
        ContextDataset {
            contexts: keep.iter().map(|&i| self.contexts[i].clone()).collect(),
            solutions: keep.iter().map(|&i| self.solutions[i].clone()).collect(),
            metadata: keep.iter().map(|&i| self.metadata[i].clone()).collect(),
        }
    }

    /// First `m` pairs.
    pub fn truncated(&self, m: usize) -> Self {
        let m = m.min(self.len());
        ContextDataset {
            contexts: self.contexts[..m].to_vec(),
            solutions: self.solutions[..m].to_vec(),
            metadata: self.metadata[..m].to_vec(),
        }
    }
}

/// `Σ_q K(D; k_q) ⊗ B_q`, of size `L·M`.
pub fn build_gram(data: &ContextDataset, params: &LmcParams) -> Result<SymMatrix> {
    if data.is_empty() {
        return Err(MogprError::EmptyDataset);
    }
    data.validate()?;
    params.check(data.context_dim(), data.output_dim())?;
    let (m, l) = (data.len(), data.output_dim());
    let bs: Vec<DMatrix<f64>> = params.coreg.iter().map(Coregionalization::matrix).collect();
    let mut gram = DMatrix::zeros(m * l, m * l);
    for i in 0..m {
        for j in 0..=i {
            let block = params.cross_block(&bs, &data.contexts[i], &data.contexts[j]);
            gram.view_mut((i * l, j * l), (l, l)).copy_from(&block);
            if i != j {
                gram.view_mut((j * l, i * l), (l, l)).copy_from(&block.transpose());
            }
        }
    }
    Ok(SymMatrix::symmetrized(gram))
}

fn output_mean(data: &ContextDataset) -> DVector<f64> {
    let l = data.output_dim();
    let mut c = DVector::zeros(l);
    for s in &data.solutions {
        c += DVector::from_column_slice(s);
    }
    c / data.len() as f64
}

fn centered_stack(data: &ContextDataset, center: &DVector<f64>) -> DVector<f64> {
    let l = data.output_dim();
    DVector::from_fn(data.len() * l, |r, _| data.solutions[r / l][r % l] - center[r % l])
}

/// Fitted model with the Gram factor cached for prediction.
#[derive(Debug, Clone)]
pub struct MogprModel {
    dataset: ContextDataset,
    params: LmcParams,
    output_center: DVector<f64>,
    gram_factor: Cholesky,
    /// `K⁻¹ (g - center)` as an unevaluated sum `hi + lo`, solved against
    /// the Gram matrix without jitter.
    weights: (DVector<f64>, DVector<f64>),
    log_marginal_likelihood: f64,
    seed: Option<u64>,
}

/// Cap on refinement rounds for the prediction weights. Jittered Grams
/// converge geometrically at rate `jitter / (λ + jitter)` per round.
const REFINE_STEPS: usize = 40;

struct Factorized {
    gram: SymMatrix,
    factor: Cholesky,
    center: DVector<f64>,
    centered: DVector<f64>,
}

fn factorize(data: &ContextDataset, params: &LmcParams) -> Result<Factorized> {
    let gram = build_gram(data, params)?;
    let factor = Cholesky::factor(&gram, 0.0).map_err(MogprError::SingularGram)?;
    let center = output_mean(data);
    let centered = centered_stack(data, &center);
    Ok(Factorized {
        gram,
        factor,
        center,
        centered,
    })
}

impl Factorized {
    /// Log density of the centred outputs under the (jittered) Gram matrix.
    fn log_marginal_likelihood(&self) -> f64 {
        let n = self.centered.len() as f64;
        -0.5 * self.factor.whiten_vec(&self.centered).norm_squared()
            - 0.5 * self.factor.log_det()
            - 0.5 * n * (2.0 * std::f64::consts::PI).ln()
    }
}

impl MogprModel {
    /// Assembles and factorizes the Gram matrix for fixed hyperparameters.
    pub fn new(dataset: ContextDataset, params: LmcParams) -> Result<Self> {
        let f = factorize(&dataset, &params)?;
        let weights = f.factor.solve_refined(&f.gram, &f.centered, REFINE_STEPS);
        let log_marginal_likelihood = f.log_marginal_likelihood();
        Ok(MogprModel {
            dataset,
            params,
            output_center: f.center,
            gram_factor: f.factor,
            weights,
            log_marginal_likelihood,
            seed: None,
        })
    }

    pub fn dataset(&self) -> &ContextDataset {
        &self.dataset
    }

    pub fn params(&self) -> &LmcParams {
        &self.params
    }

    pub fn output_center(&self) -> &DVector<f64> {
        &self.output_center
    }

    pub fn output_dim(&self) -> usize {
        self.dataset.output_dim()
    }

    pub fn context_dim(&self) -> usize {
        self.dataset.context_dim()
    }

    pub fn gram_jitter(&self) -> f64 {
        self.gram_factor.jitter()
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    /// Cross-covariance `K_*` between the training outputs and the outputs
    /// at `x`, of shape `(L·M) × L`, plus the prior block `K_**`.
    fn cross_covariances(&self, x: &[f64]) -> (DMatrix<f64>, DMatrix<f64>) {
        let l = self.output_dim();
        let bs: Vec<DMatrix<f64>> = self.params.coreg.iter().map(Coregionalization::matrix).collect();
        let mut k_star = DMatrix::zeros(self.dataset.len() * l, l);
        for (i, ctx) in self.dataset.contexts.iter().enumerate() {
            let block = self.params.cross_block(&bs, ctx, x);
            k_star.view_mut((i * l, 0), (l, l)).copy_from(&block);
        }
        let k_ss = self.params.cross_block(&bs, x, x);
        (k_star, k_ss)
    }

    /// Posterior mean and covariance of the outputs at context `x`.
    pub fn predict(&self, x: &[f64]) -> Result<GaussianParams> {
        if x.len() != self.context_dim() {
            return Err(MogprError::Dimension(format!(
                "context has length {}, model expects {}",
                x.len(),
                self.context_dim()
            )));
        }
        let (k_star, k_ss) = self.cross_covariances(x);
        let (hi, lo) = &self.weights;
        let mean = DVector::from_fn(k_star.ncols(), |d, _| {
            let col = k_star.column(d);
            self.output_center[d] + dot2(col.as_slice(), hi.as_slice()) + col.dot(lo)
        });
        let v = self.gram_factor.whiten(&k_star);
        let cov = SymMatrix::symmetrized(k_ss - v.transpose() * v);
        Ok(GaussianParams::new(mean, cov)?)
    }

    /// Gaussian log density of the centred stacked outputs under the prior.
    pub fn log_marginal_likelihood(&self) -> f64 {
        self.log_marginal_likelihood
    }

    pub fn to_file(&self) -> ModelFile {
        ModelFile {
            seed: self.seed,
            dataset_path: None,
            params: self.params.clone(),
            output_center: self.output_center.iter().copied().collect(),
            log_marginal_likelihood: self.log_marginal_likelihood(),
            dataset: self.dataset.clone(),
        }
    }

    pub fn save(&self, path: &Path, dataset_path: Option<&Path>) -> Result<()> {
        let mut file = self.to_file();
        file.dataset_path = dataset_path.map(|p| p.display().to_string());
        fs::write(path, serde_json::to_string_pretty(&file)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(&fs::read_to_string(path)?)?;
        file.into_model()
    }
}

/// On-disk form of a fitted model. The Gram factor is rebuilt on load.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub seed: Option<u64>,
    pub dataset_path: Option<String>,
    pub params: LmcParams,
    pub output_center: Vec<f64>,
    pub log_marginal_likelihood: f64,
    pub dataset: ContextDataset,
}

impl ModelFile {
    pub fn into_model(self) -> Result<MogprModel> {
        let mut model = MogprModel::new(self.dataset, self.params)?;
        model.seed = self.seed;
        Ok(model)
    }
}

/// `log_marginal_likelihood` computed without keeping the model around.
pub fn log_marginal_likelihood(data: &ContextDataset, params: &LmcParams) -> Result<f64> {
    Ok(factorize(data, params)?.log_marginal_likelihood())
}

/// Hyperparameter search settings. Bounds are applied in log space except for
/// the coregionalization vectors, which are bounded in absolute value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitConfig {
    pub restarts: usize,
    pub generations: usize,
    pub sigma_bounds: (f64, f64),
    pub length_scale_bounds: (f64, f64),
    pub a_bound: f64,
    pub kappa_bounds: (f64, f64),
    /// Initial CMA-ES step size in the transformed parameter space.
    pub search_sigma: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            restarts: 3,
            generations: 200,
            sigma_bounds: (1e-3, 1e2),
            length_scale_bounds: (1e-2, 1e2),
            a_bound: 10.0,
            kappa_bounds: (1e-6, 1.0),
            search_sigma: 1.0,
        }
    }
}

/// Maps an unconstrained search vector onto LMC hyperparameters.
struct Encoding {
    template: LmcParams,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl Encoding {
    fn new(template: LmcParams, cfg: &FitConfig) -> Self {
        let mut lower = Vec::new();
        let mut upper = Vec::new();
        for (k, c) in template.kernels.iter().zip(&template.coreg) {
            lower.push(cfg.sigma_bounds.0.ln());
            upper.push(cfg.sigma_bounds.1.ln());
            for _ in &k.length_scales {
                lower.push(cfg.length_scale_bounds.0.ln());
                upper.push(cfg.length_scale_bounds.1.ln());
            }
            for _ in &c.a {
                lower.push(-cfg.a_bound);
                upper.push(cfg.a_bound);
            }
            lower.push(cfg.kappa_bounds.0.ln());
            upper.push(cfg.kappa_bounds.1.ln());
        }
        Encoding {
            template,
            lower,
            upper,
        }
    }

    fn dim(&self) -> usize {
        self.lower.len()
    }

    fn encode(&self, p: &LmcParams) -> Vec<f64> {
        let mut u = Vec::with_capacity(self.dim());
        for (k, c) in p.kernels.iter().zip(&p.coreg) {
            u.push(k.variance.sqrt().ln());
            u.extend(k.length_scales.iter().map(|l| l.ln()));
            u.extend(&c.a);
            u.push(c.kappa.ln());
        }
        u
    }

    /// Decodes the clamped vector and returns the squared distance clamped away.
    fn decode(&self, u: &[f64]) -> (LmcParams, f64) {
        let mut penalty = 0.0;
        let mut it = u.iter().zip(self.lower.iter().zip(&self.upper)).map(|(v, (lo, hi))| {
            let c = v.clamp(*lo, *hi);
            penalty += (v - c).powi(2);
            c
        });
        let mut p = self.template.clone();
        for (k, c) in p.kernels.iter_mut().zip(p.coreg.iter_mut()) {
            let log_sigma = it.next().unwrap();
            k.variance = (2.0 * log_sigma).exp();
            for l in k.length_scales.iter_mut() {
                *l = it.next().unwrap().exp();
            }
            for a in c.a.iter_mut() {
                *a = it.next().unwrap();
            }
            c.kappa = it.next().unwrap().exp();
        }
        drop(it);
        (p, penalty)
    }
}

/// Maximizes the log marginal likelihood with multi-restart CMA-ES over the
/// transformed hyperparameters. A single pair is not fitted; the standard
/// prior is used instead.
pub fn fit<R: Rng + ?Sized>(data: &ContextDataset, cfg: &FitConfig, rng: &mut R) -> Result<MogprModel> {
    if data.is_empty() {
        return Err(MogprError::EmptyDataset);
    }
    data.validate()?;
    let seed = rng.next_u64();
    let template = LmcParams::standard(data.context_dim(), data.output_dim());
    if data.len() == 1 || cfg.restarts == 0 || cfg.generations == 0 {
        let mut model = MogprModel::new(data.clone(), template)?;
        model.seed = Some(seed);
        return Ok(model);
    }

    let enc = Encoding::new(template.clone(), cfg);
    let base = enc.encode(&template);
    let hp = CmaHyperParams::default_for(enc.dim());
    let budget = cfg.generations * hp.lambda;

    let mut seeder = ChaCha8Rng::seed_from_u64(seed);
    let restart_seeds: Vec<u64> = (0..cfg.restarts).map(|_| seeder.next_u64()).collect();

    let runs: Vec<Option<(f64, Vec<f64>)>> = restart_seeds
        .par_iter()
        .enumerate()
        .map(|(r, &s)| {
            let mut rng = ChaCha8Rng::seed_from_u64(s);
            let start: Vec<f64> = if r == 0 {
                base.clone()
            } else {
                base.iter().map(|v| v + rng.random_range(-1.0..1.0)).collect()
            };
            let mut objective = |u: &[f64]| {
                let (p, penalty) = enc.decode(u);
                match log_marginal_likelihood(data, &p) {
                    Ok(v) if v.is_finite() => -v + 1e3 * penalty,
                    _ => f64::INFINITY,
                }
            };
            let init = DistributionState::isotropic(DVector::from_vec(start), cfg.search_sigma);
            let limits = RunLimits {
                budget,
                target: f64::NEG_INFINITY,
                restart: RestartPolicy::Never,
            };
            let res = cmaes::optimize(&mut objective, init, &hp, limits, &mut rng).ok()?;
            res.best_f
                .is_finite()
                .then(|| (res.best_f, res.best_x.iter().copied().collect()))
        })
        .collect();

    let (best_f, best_u) = runs
        .into_iter()
        .flatten()
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .ok_or(MogprError::FitDiverged)?;
    let (params, _) = enc.decode(&best_u);
    log::debug!("gp fit: -log ML = {best_f:.6}");
    let mut model = MogprModel::new(data.clone(), params)?;
    model.seed = Some(seed);
    Ok(model)
}
