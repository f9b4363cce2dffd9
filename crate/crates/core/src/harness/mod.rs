//! Experiment engine: pre-optimization, warm-started and baseline runs,
//! seeded trial batches and CSV emission.

mod config;
pub mod stats;
pub mod streams;

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use config::{ExperimentConfig, Method};
use stats::{best_at, checkpoint_grid, Quartiles};
use streams::stream;

use crate::benchmarks::{sample_context, sample_shift_matrix, BaseFunction, BenchmarkError, ContextualObjective, Shift};
use crate::cmaes::{self, CmaHyperParams, CmaesError, DistributionState, RestartPolicy, RunLimits, RunResult};
use crate::contextual::{
    cws_init, policy_population, policy_predict, select_similar_task, ws_cmaes_init, ContextualError, LinearPolicy, PolicyTrainConfig,
};
use crate::linalg::SymMatrix;
use crate::mogpr::{self, ContextDataset, MogprError, MogprModel, PairMeta};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("usage error: {0}")]
    Usage(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("method `{0}` needs a pre-optimization dataset with at least one pair")]
    MissingDataset(Method),
    #[error("method `ccmaes-approx` needs a trained policy")]
    MissingPolicy,
    #[error("dataset does not match the configuration: {0}")]
    DatasetMismatch(String),
    #[error(transparent)]
    Cmaes(#[from] CmaesError),
    #[error(transparent)]
    Model(#[from] MogprError),
    #[error(transparent)]
    Contextual(#[from] ContextualError),
    #[error(transparent)]
    Benchmark(#[from] BenchmarkError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("thread pool error: {0}")]
    ThreadPool(#[from] rayon::ThreadPoolBuildError),
}

pub type Result<T> = std::result::Result<T, HarnessError>;

fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn from_rows(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(HarnessError::DatasetMismatch("ragged matrix".into()));
    }
    Ok(DMatrix::from_row_iterator(nrows, ncols, rows.iter().flatten().copied()))
}

/// The pre-optimization output written to `dataset.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreoptArtifact {
    pub base: BaseFunction,
    pub shift: Shift,
    pub dim: usize,
    pub context_dim: usize,
    pub seed: u64,
    /// Shift matrix `G` shared by every task of the experiment, row by row.
    pub shift_matrix: Vec<Vec<f64>>,
    /// Evaluations spent on pre-optimization, all tasks together.
    pub preopt_evals: usize,
    pub dataset: ContextDataset,
}

impl PreoptArtifact {
    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let artifact: PreoptArtifact = serde_json::from_str(&fs::read_to_string(path)?)?;
        artifact.dataset.validate()?;
        Ok(artifact)
    }

    pub fn shift_matrix(&self) -> Result<DMatrix<f64>> {
        from_rows(&self.shift_matrix)
    }
}

/// On-disk form of the linear policy baseline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyFile {
    pub method: String,
    pub a: Vec<Vec<f64>>,
    pub sigma: f64,
    pub cov: Vec<Vec<f64>>,
    pub train_evals: usize,
}

impl PolicyFile {
    pub fn from_policy(p: &LinearPolicy, train_evals: usize) -> Self {
        PolicyFile {
            method: Method::CcmaesApprox.name().to_string(),
            a: to_rows(&p.a),
            sigma: p.sigma,
            cov: to_rows(p.cov.as_matrix()),
            train_evals,
        }
    }

    pub fn into_policy(self) -> Result<LinearPolicy> {
        let a = from_rows(&self.a)?;
        let cov = SymMatrix::new(from_rows(&self.cov)?).map_err(|e| HarnessError::Config(e.to_string()))?;
        Ok(LinearPolicy::new(a, self.sigma, cov))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
    }
}

/// Outcome of one method on one target context.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub trial: usize,
    pub method: Method,
    /// Name written to CSV files; differs from the method name in ablations.
    pub label: String,
    /// Evaluations until `best_f < target`, or the budget if never reached.
    pub evals: usize,
    pub success: bool,
    pub best_f: f64,
    /// `(eval_count, best_f)` per generation.
    pub trace: Vec<(usize, f64)>,
    /// Evaluations spent outside the target run (WS-CMA-ES source set).
    pub aux_evals: usize,
    pub restarts: usize,
}

/// Models and data shared by every trial of an experiment.
#[derive(Debug, Clone, Default)]
pub struct Resources {
    pub dataset: Option<ContextDataset>,
    pub model: Option<MogprModel>,
    pub policy: Option<LinearPolicy>,
}

/// A configured experiment with its shift matrix drawn.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub cfg: ExperimentConfig,
    g: DMatrix<f64>,
}

impl Experiment {
    pub fn new(cfg: ExperimentConfig) -> Result<Self> {
        cfg.validate()?;
        let g = sample_shift_matrix(&mut stream(cfg.seed, "shift-matrix"), cfg.dim(), cfg.context_dim);
        Ok(Experiment { cfg, g })
    }

    /// Experiment whose shift matrix comes from a saved dataset.
    pub fn from_artifact(mut cfg: ExperimentConfig, artifact: &PreoptArtifact) -> Result<Self> {
        if artifact.base != cfg.base || artifact.shift != cfg.shift {
            return Err(HarnessError::DatasetMismatch(format!(
                "dataset is {}/{}, config is {}/{}",
                artifact.base, artifact.shift, cfg.base, cfg.shift
            )));
        }
        if artifact.dim != cfg.dim() || artifact.context_dim != cfg.context_dim {
            return Err(HarnessError::DatasetMismatch("dimensions differ".into()));
        }
        cfg.seed = artifact.seed;
        cfg.validate()?;
        let g = artifact.shift_matrix()?;
        Ok(Experiment { cfg, g })
    }

    pub fn shift_matrix(&self) -> &DMatrix<f64> {
        &self.g
    }

    fn seed(&self) -> u64 {
        self.cfg.seed
    }

    fn hp(&self) -> CmaHyperParams {
        CmaHyperParams::default_for(self.cfg.dim())
    }

    /// Task objective for context `alpha`; the noise (if any) comes from the
    /// stream `noise_label`.
    pub fn objective(&self, alpha: Vec<f64>, noise_label: &str) -> Result<ContextualObjective> {
        Ok(ContextualObjective::new(
            self.cfg.base,
            self.cfg.shift,
            self.g.clone(),
            alpha,
            &mut stream(self.seed(), noise_label),
        )?)
    }

    pub fn preopt_context(&self, i: usize) -> Vec<f64> {
        sample_context(&mut stream(self.seed(), &format!("preopt/{i}/context")), &self.cfg.context_ranges())
    }

    pub fn preopt_objective(&self, i: usize) -> Result<ContextualObjective> {
        self.objective(self.preopt_context(i), &format!("preopt/{i}/noise"))
    }

    pub fn target_context(&self, trial: usize) -> Vec<f64> {
        sample_context(&mut stream(self.seed(), &format!("trial/{trial}/context")), &self.cfg.context_ranges())
    }

    /// The objective every method sees in `trial`.
    pub fn target_objective(&self, trial: usize) -> Result<ContextualObjective> {
        self.objective(self.target_context(trial), &format!("trial/{trial}/noise"))
    }

    fn cold_state<R: Rng>(&self, rng: &mut R) -> DistributionState {
        let r = self.cfg.init_range;
        let mean = DVector::from_fn(self.cfg.dim(), |_, _| rng.random_range(-r..=r));
        DistributionState::isotropic(mean, self.cfg.sigma0)
    }

    fn limits(&self, budget: usize, restart: bool) -> RunLimits {
        RunLimits {
            budget,
            target: self.cfg.target,
            restart: if restart {
                RestartPolicy::UniformMean {
                    low: -self.cfg.init_range,
                    high: self.cfg.init_range,
                }
            } else {
                RestartPolicy::Never
            },
        }
    }

    /// Solves the first `m` pre-optimization tasks. Task `i` depends only on
    /// the seed and `i`, so smaller datasets are prefixes of larger ones.
    pub fn preoptimize_first(&self, m: usize) -> Result<PreoptArtifact> {
        let hp = self.hp();
        let runs: Vec<(Vec<f64>, RunResult)> = (0..m)
            .into_par_iter()
            .map(|i| {
                let mut obj = self.preopt_objective(i)?;
                let mut rng = stream(self.seed(), &format!("preopt/{i}/run"));
                let init = self.cold_state(&mut rng);
                let res = cmaes::optimize(&mut obj, init, &hp, self.limits(self.cfg.preopt_budget(), true), &mut rng)?;
                Ok((obj.context().to_vec(), res))
            })
            .collect::<Result<_>>()?;
        let mut dataset = ContextDataset::default();
        let mut total = 0;
        for (alpha, res) in runs {
            total += res.evals_used;
            dataset.push(
                alpha,
                res.best_x.iter().copied().collect(),
                PairMeta {
                    best_f: res.best_f,
                    evals_used: res.evals_used,
                },
            );
        }
        Ok(PreoptArtifact {
            base: self.cfg.base,
            shift: self.cfg.shift,
            dim: self.cfg.dim(),
            context_dim: self.cfg.context_dim,
            seed: self.seed(),
            shift_matrix: to_rows(&self.g),
            preopt_evals: total,
            dataset,
        })
    }

    pub fn preoptimize(&self) -> Result<PreoptArtifact> {
        self.preoptimize_first(self.cfg.m_prev)
    }

    /// Fits the GP once per dataset from the `gp-fit` stream, on the pairs
    /// whose pre-optimization reached the target.
    pub fn fit_model(&self, dataset: &ContextDataset) -> Result<MogprModel> {
        if dataset.is_empty() {
            return Err(HarnessError::MissingDataset(Method::Cws));
        }
        let solved = if self.cfg.fit_solved_only {
            dataset.solved(self.cfg.target)
        } else {
            dataset.clone()
        };
        if solved.len() < dataset.len() {
            log::warn!(
                "fitting the GP on {} of {} pairs; the rest missed the target",
                solved.len(),
                dataset.len()
            );
        }
        Ok(mogpr::fit(&solved, &self.cfg.fit, &mut stream(self.seed(), "gp-fit"))?)
    }

    /// Trains the linear-policy baseline on contexts drawn per candidate.
    pub fn train_policy(&self) -> Result<LinearPolicy> {
        let budget = self.cfg.ccmaes_budget();
        if self.cfg.m_prev == 0 || budget < policy_population(self.cfg.dim(), self.cfg.context_dim) {
            return Err(HarnessError::MissingPolicy);
        }
        let ranges = self.cfg.context_ranges();
        let mut noise_rng = stream(self.seed(), "ccmaes/noise");
        let (base, shift, g) = (self.cfg.base, self.cfg.shift, &self.g);
        let objective = |x: &[f64], alpha: &[f64]| {
            ContextualObjective::new(base, shift, g.clone(), alpha.to_vec(), &mut noise_rng)
                .and_then(|mut o| o.eval(x))
                .unwrap_or(f64::INFINITY)
        };
        let cfg = PolicyTrainConfig {
            dim: self.cfg.dim(),
            context_dim: self.cfg.context_dim,
            budget,
            sigma0: self.cfg.sigma0,
            init_range: self.cfg.init_range,
        };
        let mut rng = stream(self.seed(), "ccmaes/train");
        Ok(crate::contextual::ccmaes_baseline_train(
            objective,
            |r: &mut rand_chacha::ChaCha8Rng| sample_context(r, &ranges),
            &cfg,
            &mut rng,
        )?)
    }

    /// Uniform source set for WS-CMA-ES, evaluated on pre-optimization task `idx`.
    pub fn ws_source_set(&self, idx: usize) -> Result<Vec<(Vec<f64>, f64)>> {
        let mut obj = self.preopt_objective(idx)?;
        let mut rng = stream(self.seed(), &format!("wscma/source/{idx}"));
        let r = self.cfg.ws_range;
        (0..self.cfg.ws_source_count())
            .map(|_| {
                let x: Vec<f64> = (0..self.cfg.dim()).map(|_| rng.random_range(-r..=r)).collect();
                let f = obj.eval(&x)?;
                Ok((x, f))
            })
            .collect()
    }

    fn record(&self, trial: usize, method: Method, res: RunResult, aux_evals: usize) -> TrialRecord {
        TrialRecord {
            trial,
            method,
            label: method.name().to_string(),
            evals: res.evals_to_target.unwrap_or(self.cfg.target_budget()),
            success: res.success,
            best_f: res.best_f,
            trace: res.history,
            aux_evals,
            restarts: res.restarts,
        }
    }

    /// Runs one method on the target context of `trial`.
    pub fn run_method(&self, method: Method, trial: usize, res: &Resources) -> Result<TrialRecord> {
        let hp = self.hp();
        let budget = self.cfg.target_budget();
        let mut obj = self.target_objective(trial)?;
        let alpha = obj.context().to_vec();
        let mut rng = stream(self.seed(), &format!("trial/{trial}/{}", method.name()));
        let dataset = res.dataset.as_ref().filter(|d| !d.is_empty());
        match method {
            Method::Cold => {
                let init = self.cold_state(&mut rng);
                let run = cmaes::optimize(&mut obj, init, &hp, self.limits(budget, self.cfg.restart_target_runs), &mut rng)?;
                Ok(self.record(trial, method, run, 0))
            }
            Method::Cws => {
                let model = res.model.as_ref().ok_or(HarnessError::MissingDataset(method))?;
                let init = cws_init(model, &alpha, self.cfg.sigma_min, self.cfg.sigma_max)?;
                let run = cmaes::optimize(&mut obj, init.into_state(), &hp, self.limits(budget, self.cfg.restart_target_runs), &mut rng)?;
                Ok(self.record(trial, method, run, 0))
            }
            Method::Wscma => {
                let dataset = dataset.ok_or(HarnessError::MissingDataset(method))?;
                let idx = select_similar_task(dataset, &alpha)?;
                let source = self.ws_source_set(idx)?;
                let init = ws_cmaes_init(&source, self.cfg.ws_gamma, self.cfg.ws_alpha)?;
                let run = cmaes::optimize(&mut obj, init.into_state(), &hp, self.limits(budget, self.cfg.restart_target_runs), &mut rng)?;
                Ok(self.record(trial, method, run, source.len()))
            }
            Method::CcmaesApprox => {
                let policy = res.policy.as_ref().ok_or(HarnessError::MissingPolicy)?;
                let x = policy_predict(policy, &alpha);
                let f = obj.eval(x.as_slice())?;
                let success = f < self.cfg.target;
                Ok(TrialRecord {
                    trial,
                    method,
                    label: method.name().to_string(),
                    evals: if success { 1 } else { budget },
                    success,
                    best_f: f,
                    trace: vec![(1, f)],
                    aux_evals: 0,
                    restarts: 0,
                })
            }
        }
    }

    /// Every `(trial, method)` pair, run on up to `parallel` threads and
    /// returned sorted by trial, then by method order in `methods`.
    pub fn run_trials(&self, methods: &[Method], res: &Resources, parallel: usize) -> Result<Vec<TrialRecord>> {
        let jobs: Vec<(usize, usize)> = (0..self.cfg.trials)
            .flat_map(|t| (0..methods.len()).map(move |m| (t, m)))
            .collect();
        let run = || {
            jobs.par_iter()
                .map(|&(t, m)| self.run_method(methods[m], t, res))
                .collect::<Result<Vec<_>>>()
        };
        with_pool(parallel, run)?
    }

    /// Builds whatever the requested methods need from a dataset.
    pub fn prepare(&self, methods: &[Method], dataset: &ContextDataset) -> Result<Resources> {
        for m in methods {
            if m.needs_dataset() && dataset.is_empty() {
                return Err(HarnessError::MissingDataset(*m));
            }
        }
        let model = if methods.contains(&Method::Cws) {
            Some(self.fit_model(dataset)?)
        } else {
            None
        };
        let policy = if methods.contains(&Method::CcmaesApprox) {
            Some(self.train_policy()?)
        } else {
            None
        };
        Ok(Resources {
            dataset: Some(dataset.clone()),
            model,
            policy,
        })
    }
}

/// Runs `f` on a dedicated pool of `threads` workers (0 means rayon's default).
pub fn with_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build()?;
    Ok(pool.install(f))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodSummary {
    pub method: String,
    pub trials: usize,
    pub successes: usize,
    pub median_evals: f64,
    pub q1_evals: f64,
    pub q3_evals: f64,
    pub median_best_f: f64,
    /// Evaluations outside the target runs, summed over trials.
    pub aux_evals: usize,
}

/// Per-label statistics, in order of first appearance.
pub fn summarize(records: &[TrialRecord]) -> Vec<MethodSummary> {
    let mut labels: Vec<&str> = Vec::new();
    for r in records {
        if !labels.contains(&r.label.as_str()) {
            labels.push(&r.label);
        }
    }
    labels
        .into_iter()
        .map(|label| {
            let rs: Vec<&TrialRecord> = records.iter().filter(|r| r.label == label).collect();
            let evals: Vec<f64> = rs.iter().map(|r| r.evals as f64).collect();
            let best: Vec<f64> = rs.iter().map(|r| r.best_f).collect();
            let q = Quartiles::of(&evals);
            MethodSummary {
                method: label.to_string(),
                trials: rs.len(),
                successes: rs.iter().filter(|r| r.success).count(),
                median_evals: q.median,
                q1_evals: q.q1,
                q3_evals: q.q3,
                median_best_f: stats::median(&best),
                aux_evals: rs.iter().map(|r| r.aux_evals).sum(),
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvePoint {
    pub method: String,
    pub evals: usize,
    pub median_f: f64,
    pub q1_f: f64,
    pub q3_f: f64,
}

/// Median and quartiles of the best value at each checkpoint, per label.
pub fn curves(records: &[TrialRecord], grid: &[usize]) -> Vec<CurvePoint> {
    let mut out = Vec::new();
    for s in summarize(records) {
        let rs: Vec<&TrialRecord> = records.iter().filter(|r| r.label == s.method).collect();
        for &e in grid {
            let vals: Vec<f64> = rs.iter().map(|r| best_at(&r.trace, e)).collect();
            let q = Quartiles::of(&vals);
            out.push(CurvePoint {
                method: s.method.clone(),
                evals: e,
                median_f: q.median,
                q1_f: q.q1,
                q3_f: q.q3,
            });
        }
    }
    out
}

#[derive(Serialize)]
struct ResultRow<'a> {
    trial: usize,
    method: &'a str,
    evals: usize,
    best_f: f64,
}

/// `trial,method,evals,best_f`, one row per record.
pub fn write_results(path: &Path, records: &[TrialRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in records {
        w.serialize(ResultRow {
            trial: r.trial,
            method: &r.label,
            evals: r.evals,
            best_f: r.best_f,
        })?;
    }
    w.flush()?;
    Ok(())
}

/// Per-generation trace of one trial, same columns as `results.csv`.
pub fn write_trace(path: &Path, records: &[&TrialRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in records {
        for &(evals, best_f) in &r.trace {
            w.serialize(ResultRow {
                trial: r.trial,
                method: &r.label,
                evals,
                best_f,
            })?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_curves(path: &Path, points: &[CurvePoint]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for p in points {
        w.serialize(p)?;
    }
    w.flush()?;
    Ok(())
}

/// Paths written by [`compare`] and [`ablate_mprev`].
#[derive(Debug, Clone)]
pub struct Outputs {
    pub results: PathBuf,
    pub curves: PathBuf,
    pub summary: PathBuf,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub base: BaseFunction,
    pub shift: Shift,
    pub seed: u64,
    pub preopt_evals: usize,
    pub methods: Vec<MethodSummary>,
}

pub struct CompareOutcome {
    pub records: Vec<TrialRecord>,
    pub summary: RunSummary,
    pub outputs: Outputs,
}

/// Full pipeline: pre-optimize, fit the GP, train the policy, run every
/// method on every trial and write `dataset.json`, `model.json`,
/// `results.csv`, `curves.csv` and `summary.json` into `out`.
pub fn compare(cfg: &ExperimentConfig, out: &Path, parallel: usize) -> Result<CompareOutcome> {
    fs::create_dir_all(out)?;
    let exp = Experiment::new(cfg.clone())?;
    let methods = cfg.methods.clone();
    let artifact = with_pool(parallel, || exp.preoptimize())??;
    artifact.save(&out.join("dataset.json"))?;
    let res = with_pool(parallel, || exp.prepare(&methods, &artifact.dataset))??;
    if let Some(model) = &res.model {
        model.save(&out.join("model.json"), Some(Path::new("dataset.json")))?;
    }
    let records = exp.run_trials(&methods, &res, parallel)?;
    let outputs = emit(&exp, out, "", &records)?;
    let summary = RunSummary {
        base: cfg.base,
        shift: cfg.shift,
        seed: cfg.seed,
        preopt_evals: artifact.preopt_evals,
        methods: summarize(&records),
    };
    fs::write(&outputs.summary, serde_json::to_string_pretty(&summary)?)?;
    Ok(CompareOutcome {
        records,
        summary,
        outputs,
    })
}

fn emit(exp: &Experiment, out: &Path, prefix: &str, records: &[TrialRecord]) -> Result<Outputs> {
    let outputs = Outputs {
        results: out.join(format!("{prefix}results.csv")),
        curves: out.join(format!("{prefix}curves.csv")),
        summary: out.join(format!("{prefix}summary.json")),
    };
    write_results(&outputs.results, records)?;
    let grid = checkpoint_grid(exp.cfg.lambda(), exp.cfg.target_budget(), exp.cfg.checkpoints);
    write_curves(&outputs.curves, &curves(records, &grid))?;
    Ok(outputs)
}

/// Re-runs pre-optimization and CMA-ES-CWS for each dataset size in
/// `m_values`, next to a cold-start baseline. Curves are labeled `cws-m<M>`
/// and `cold`. Datasets are nested prefixes of one pre-optimization pass.
pub fn ablate_mprev(cfg: &ExperimentConfig, m_values: &[usize], out: &Path, parallel: usize) -> Result<CompareOutcome> {
    if m_values.is_empty() {
        return Err(HarnessError::Usage("need at least one M_prev value".into()));
    }
    fs::create_dir_all(out)?;
    let exp = Experiment::new(cfg.clone())?;
    let m_max = *m_values.iter().max().unwrap();
    let artifact = with_pool(parallel, || exp.preoptimize_first(m_max))??;

    let mut records = exp.run_trials(&[Method::Cold], &Resources::default(), parallel)?;
    for &m in m_values {
        if m == 0 {
            log::warn!("M_prev = 0 has no pre-optimization data; only the cold baseline covers it");
            continue;
        }
        let dataset = artifact.dataset.truncated(m);
        let model = with_pool(parallel, || exp.fit_model(&dataset))??;
        let res = Resources {
            dataset: Some(dataset),
            model: Some(model),
            policy: None,
        };
        let mut rs = exp.run_trials(&[Method::Cws], &res, parallel)?;
        for r in rs.iter_mut() {
            r.label = format!("cws-m{m}");
        }
        records.extend(rs);
    }
    let outputs = emit(&exp, out, "ablation_", &records)?;
    let summary = RunSummary {
        base: cfg.base,
        shift: cfg.shift,
        seed: cfg.seed,
        preopt_evals: artifact.preopt_evals,
        methods: summarize(&records),
    };
    fs::write(&outputs.summary, serde_json::to_string_pretty(&summary)?)?;
    Ok(CompareOutcome {
        records,
        summary,
        outputs,
    })
}
