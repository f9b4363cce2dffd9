//! Independent oracles and invariant checks shared by the integration tests
//! and the acceptance target.
#![allow(dead_code)]

use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use proptest::test_runner::TestCaseError;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use ctxopt::benchmarks::{BaseFunction, Shift};
use ctxopt::contextual::{cws_init, ws_cmaes_init, SIGMA_MAX, SIGMA_MIN, WS_ALPHA, WS_GAMMA};
use ctxopt::harness::{compare, ExperimentConfig, Method};
use ctxopt::linalg::{cholesky, gaussian_condition, GaussianParams, SymMatrix};
use ctxopt::mogpr::{Coregionalization, ContextDataset, FitConfig, KernelKind, KernelParams, LmcParams, MogprModel};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal_matrix<R: Rng>(rng: &mut R, r: usize, c: usize) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| rng.sample(StandardNormal))
}

/// `B Bᵀ + shift·I` for a standard normal `B`.
pub fn random_spd<R: Rng>(rng: &mut R, n: usize, shift: f64) -> DMatrix<f64> {
    let b = normal_matrix(rng, n, n);
    &b * b.transpose() + DMatrix::identity(n, n) * shift
}

/// Largest entry of `|a - b|` divided by the largest entry of `|b|`.
pub fn rel_err(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let scale = b.amax().max(f64::MIN_POSITIVE);
    (a - b).amax() / scale
}

// ---------------------------------------------------------------- GP oracle

fn oracle_kernel(k: &KernelParams, x: &[f64], y: &[f64]) -> f64 {
    match k.kind {
        KernelKind::Linear => k.variance * x.iter().zip(y).map(|(a, b)| a * b).sum::<f64>(),
        KernelKind::Rbf => {
            let r2: f64 = x.iter().zip(y).zip(&k.length_scales).map(|((a, b), l)| ((a - b) / l).powi(2)).sum();
            k.variance * (-0.5 * r2).exp()
        }
        KernelKind::Matern52 => {
            let r2: f64 = x.iter().zip(y).zip(&k.length_scales).map(|((a, b), l)| ((a - b) / l).powi(2)).sum();
            let s = (5.0 * r2).sqrt();
            k.variance * (1.0 + s + 5.0 * r2 / 3.0) * (-s).exp()
        }
    }
}

/// Posterior at `x` from the full joint Gaussian of the training outputs and
/// the outputs at `x`, conditioned with `gaussian_condition`.
pub fn brute_force_posterior(data: &ContextDataset, params: &LmcParams, x: &[f64]) -> GaussianParams {
    let m = data.len();
    let l = data.output_dim();
    let mut points: Vec<&[f64]> = data.contexts.iter().map(Vec::as_slice).collect();
    points.push(x);
    let bs: Vec<DMatrix<f64>> = params
        .coreg
        .iter()
        .map(|c| {
            let a = DVector::from_column_slice(&c.a);
            &a * a.transpose() + DMatrix::identity(l, l) * c.kappa
        })
        .collect();
    let n = (m + 1) * l;
    let mut cov = DMatrix::zeros(n, n);
    for (i, xi) in points.iter().enumerate() {
        for (j, xj) in points.iter().enumerate() {
            for (k, b) in params.kernels.iter().zip(&bs) {
                let kv = oracle_kernel(k, xi, xj);
                for d in 0..l {
                    for e in 0..l {
                        cov[(i * l + d, j * l + e)] += kv * b[(d, e)];
                    }
                }
            }
        }
    }
    let mut center = DVector::zeros(l);
    for s in &data.solutions {
        center += DVector::from_column_slice(s);
    }
    center /= m as f64;
    let mean = DVector::from_fn(n, |r, _| center[r % l]);
    let joint = GaussianParams::new(mean, SymMatrix::symmetrized(cov)).unwrap();
    let idx: Vec<usize> = (0..m * l).collect();
    let vals = DVector::from_iterator(m * l, data.solutions.iter().flatten().copied());
    gaussian_condition(&joint, &idx, &vals).unwrap()
}

pub fn random_lmc<R: Rng>(rng: &mut R, n_alpha: usize, l: usize, kappa: Option<f64>) -> LmcParams {
    let ls = |rng: &mut R| (0..n_alpha).map(|_| rng.random_range(0.5..2.0)).collect::<Vec<f64>>();
    LmcParams {
        kernels: vec![
            KernelParams::linear(rng.random_range(0.2..2.0)),
            KernelParams::rbf(rng.random_range(0.2..2.0), ls(rng)),
            KernelParams::matern52(rng.random_range(0.2..2.0), ls(rng)),
        ],
        coreg: (0..3)
            .map(|_| Coregionalization {
                a: (0..l).map(|_| rng.random_range(-1.0..1.0)).collect(),
                kappa: kappa.unwrap_or_else(|| rng.random_range(0.05..1.0)),
            })
            .collect(),
    }
}

pub fn random_dataset<R: Rng>(rng: &mut R, m: usize, n_alpha: usize, l: usize) -> ContextDataset {
    ContextDataset::from_pairs(
        (0..m).map(|_| (0..n_alpha).map(|_| rng.random_range(-2.0..2.0)).collect()).collect(),
        (0..m).map(|_| (0..l).map(|_| rng.random_range(-3.0..3.0)).collect()).collect(),
    )
    .unwrap()
}

/// Worst relative disagreement between `predict` and the brute-force route
/// over a batch of random small problems (`M ≤ 3`, `L ≤ 2`).
pub fn gp_oracle_disagreement(seed: u64, cases: usize) -> f64 {
    let mut r = rng(seed);
    let mut worst = 0.0f64;
    for c in 0..cases {
        let m = 1 + c % 3;
        let l = 1 + (c / 3) % 2;
        let data = random_dataset(&mut r, m, 2, l);
        let params = random_lmc(&mut r, 2, l, None);
        let model = MogprModel::new(data.clone(), params.clone()).unwrap();
        for _ in 0..3 {
            let x: Vec<f64> = (0..2).map(|_| r.random_range(-2.5..2.5)).collect();
            let got = model.predict(&x).unwrap();
            let want = brute_force_posterior(&data, &params, &x);
            let gm = DMatrix::from_column_slice(l, 1, got.mean.as_slice());
            let wm = DMatrix::from_column_slice(l, 1, want.mean.as_slice());
            worst = worst.max(rel_err(&gm, &wm));
            worst = worst.max(rel_err(got.cov.as_matrix(), want.cov.as_matrix()));
        }
    }
    worst
}

/// Largest coordinate error of the posterior mean at the training contexts
/// with `κ_q = 1e-8`.
pub fn interpolation_error(seed: u64) -> f64 {
    let mut r = rng(seed);
    let (m, l) = (10, 20);
    let data = random_dataset(&mut r, m, 2, l);
    let params = random_lmc(&mut r, 2, l, Some(1e-8));
    let model = MogprModel::new(data.clone(), params).unwrap();
    let mut worst = 0.0f64;
    for (c, s) in data.contexts.iter().zip(&data.solutions) {
        let mu = model.predict(c).unwrap().mean;
        for (a, b) in mu.iter().zip(s) {
            worst = worst.max((a - b).abs());
        }
    }
    worst
}

// ---------------------------------------------------------- CMA-ES oracle

/// Plain-array state for the two-dimensional step oracle.
#[derive(Debug, Clone)]
pub struct Step2 {
    pub m: [f64; 2],
    pub sigma: f64,
    pub c: [[f64; 2]; 2],
    pub ps: [f64; 2],
    pub pc: [f64; 2],
    pub t: usize,
}

/// Square root of a 2×2 SPD matrix: `(C + √det I) / √(tr C + 2√det)`.
pub fn sqrt2(c: [[f64; 2]; 2]) -> [[f64; 2]; 2] {
    let s = (c[0][0] * c[1][1] - c[0][1] * c[1][0]).sqrt();
    let t = (c[0][0] + c[1][1] + 2.0 * s).sqrt();
    [[(c[0][0] + s) / t, c[0][1] / t], [c[1][0] / t, (c[1][1] + s) / t]]
}

/// One generation for `N = 2`, `λ = 4`, written out term by term. Returns
/// the new state and the `y` vectors in the input order.
pub fn step2(s: &Step2, z: &[[f64; 2]; 4], f: &[f64; 4]) -> (Step2, [[f64; 2]; 4]) {
    let n = 2.0f64;
    let lambda = 4usize;
    let mu = 2usize;
    let raw: Vec<f64> = (1..=mu).map(|i| ((lambda as f64 + 1.0) / 2.0).ln() - (i as f64).ln()).collect();
    let total: f64 = raw.iter().sum();
    let w: Vec<f64> = raw.iter().map(|v| v / total).collect();
    let mu_eff = 1.0 / w.iter().map(|v| v * v).sum::<f64>();
    let c_sigma = (mu_eff + 2.0) / (n + mu_eff + 5.0);
    let d_sigma = 1.0 + 2.0 * f64::max(0.0, ((mu_eff - 1.0) / (n + 1.0)).sqrt() - 1.0) + c_sigma;
    let c_c = (4.0 + mu_eff / n) / (n + 4.0 + 2.0 * mu_eff / n);
    let c_1 = 2.0 / ((n + 1.3) * (n + 1.3) + mu_eff);
    let c_mu = f64::min(1.0 - c_1, 2.0 * (mu_eff - 2.0 + 1.0 / mu_eff) / ((n + 2.0) * (n + 2.0) + mu_eff));
    let c_m = 1.0;
    let chi = n.sqrt() * (1.0 - 1.0 / (4.0 * n) + 1.0 / (21.0 * n * n));

    let r = sqrt2(s.c);
    let mut y = [[0.0; 2]; 4];
    for k in 0..4 {
        y[k][0] = r[0][0] * z[k][0] + r[0][1] * z[k][1];
        y[k][1] = r[1][0] * z[k][0] + r[1][1] * z[k][1];
    }
    let mut order = [0usize, 1, 2, 3];
    order.sort_by(|&a, &b| f[a].partial_cmp(&f[b]).unwrap());

    let mut dz = [0.0; 2];
    let mut dy = [0.0; 2];
    for i in 0..mu {
        let k = order[i];
        dz[0] += w[i] * z[k][0];
        dz[1] += w[i] * z[k][1];
        dy[0] += w[i] * y[k][0];
        dy[1] += w[i] * y[k][1];
    }

    let a = (c_sigma * (2.0 - c_sigma) * mu_eff).sqrt();
    let ps = [(1.0 - c_sigma) * s.ps[0] + a * dz[0], (1.0 - c_sigma) * s.ps[1] + a * dz[1]];
    let ps_norm = (ps[0] * ps[0] + ps[1] * ps[1]).sqrt();
    let lhs = ps_norm / (1.0 - (1.0 - c_sigma).powi(2 * (s.t as i32 + 1))).sqrt();
    let h = if lhs < (1.4 + 2.0 / (n + 1.0)) * chi { 1.0 } else { 0.0 };
    let b = h * (c_c * (2.0 - c_c) * mu_eff).sqrt();
    let pc = [(1.0 - c_c) * s.pc[0] + b * dy[0], (1.0 - c_c) * s.pc[1] + b * dy[1]];

    let m = [s.m[0] + c_m * s.sigma * dy[0], s.m[1] + c_m * s.sigma * dy[1]];

    let mut c = [[0.0; 2]; 2];
    for p in 0..2 {
        for q in 0..2 {
            let mut rank_mu = 0.0;
            for i in 0..mu {
                let k = order[i];
                rank_mu += w[i] * (y[k][p] * y[k][q] - s.c[p][q]);
            }
            let rank_one = pc[p] * pc[q] - s.c[p][q];
            c[p][q] = (1.0 + (1.0 - h) * c_1 * c_c * (2.0 - c_c)) * s.c[p][q] + c_mu * rank_mu + c_1 * rank_one;
        }
    }
    let off = 0.5 * (c[0][1] + c[1][0]);
    c[0][1] = off;
    c[1][0] = off;

    let sigma = s.sigma * ((c_sigma / d_sigma) * (ps_norm / chi - 1.0)).exp();
    (
        Step2 {
            m,
            sigma,
            c,
            ps,
            pc,
            t: s.t + 1,
        },
        y,
    )
}

/// The fixed scenario used by the single-step checks: a correlated
/// covariance, non-zero paths and a tie-free fitness vector.
pub fn step2_scenario() -> (Step2, [[f64; 2]; 4], [f64; 4]) {
    let s = Step2 {
        m: [0.3, -1.2],
        sigma: 0.7,
        c: [[1.5, 0.4], [0.4, 0.8]],
        ps: [0.2, -0.5],
        pc: [-0.1, 0.3],
        t: 3,
    };
    let z = [[0.5, -1.1], [1.7, 0.2], [-0.3, 0.9], [-1.4, -0.6]];
    let f = [2.5, 0.7, 1.9, 3.1];
    (s, z, f)
}

/// Monte-Carlo estimate of `E‖N(0, I_n)‖`.
pub fn mc_chi(n: usize, draws: usize, seed: u64) -> f64 {
    let mut r = rng(seed);
    let mut total = 0.0;
    for _ in 0..draws {
        let s: f64 = (0..n).map(|_| r.sample::<f64, _>(StandardNormal).powi(2)).sum();
        total += s.sqrt();
    }
    total / draws as f64
}

// --------------------------------------------------------- invariant checks

/// Cholesky factor reproduces the matrix and its solve inverts it.
pub fn check_cholesky_round_trip(n: usize, seed: u64) -> Result<(), TestCaseError> {
    let mut r = rng(seed);
    let a = random_spd(&mut r, n, 0.1 * n as f64);
    let l = cholesky(&SymMatrix::new(a.clone()).unwrap(), 0.0).map_err(|e| TestCaseError::fail(e.to_string()))?;
    for i in 0..n {
        for j in i + 1..n {
            prop_assert_eq!(l[(i, j)], 0.0);
        }
    }
    let err = rel_err(&(&l * l.transpose()), &a);
    prop_assert!(err < 1e-12, "L Lᵀ error {err}");
    let b = normal_matrix(&mut r, n, 2);
    let x = ctxopt::linalg::Cholesky::factor_exact(&SymMatrix::new(a.clone()).unwrap()).unwrap().solve(&b);
    let res = rel_err(&(&a * &x), &b);
    prop_assert!(res < 1e-9, "solve residual {res}");
    Ok(())
}

/// Symmetrized products stay PSD and `sym_sqrt` squares back.
pub fn check_psd_sqrt(n: usize, seed: u64) -> Result<(), TestCaseError> {
    let mut r = rng(seed);
    let b = normal_matrix(&mut r, n, n.max(2) / 2);
    let c = SymMatrix::symmetrized(&b * b.transpose() + DMatrix::identity(n, n) * 1e-3);
    prop_assert!(c.min_eigenvalue() > 0.0);
    let s = ctxopt::linalg::sym_sqrt(&c).map_err(|e| TestCaseError::fail(e.to_string()))?;
    let err = rel_err(&(s.as_matrix() * s.as_matrix()), c.as_matrix());
    prop_assert!(err < 1e-10, "sqrt error {err}");
    Ok(())
}

/// CWS step size stays in the clip range and the covariance is exactly `I`.
pub fn check_cws_clipping(m: usize, l: usize, scale: f64, seed: u64) -> Result<(), TestCaseError> {
    let mut r = rng(seed);
    let mut data = random_dataset(&mut r, m, 2, l);
    for s in data.solutions.iter_mut() {
        for v in s.iter_mut() {
            *v *= scale;
        }
    }
    let mut params = random_lmc(&mut r, 2, l, None);
    for (k, c) in params.kernels.iter_mut().zip(params.coreg.iter_mut()) {
        k.variance *= scale * scale;
        c.kappa = c.kappa.max(1e-6);
    }
    let model = MogprModel::new(data, params).map_err(|e| TestCaseError::fail(e.to_string()))?;
    let alpha: Vec<f64> = (0..2).map(|_| r.random_range(-4.0..4.0)).collect();
    let init = cws_init(&model, &alpha, SIGMA_MIN, SIGMA_MAX).map_err(|e| TestCaseError::fail(e.to_string()))?;
    prop_assert!((SIGMA_MIN..=SIGMA_MAX).contains(&init.sigma), "sigma {}", init.sigma);
    prop_assert_eq!(init.cov.as_matrix(), &DMatrix::identity(l, l));
    Ok(())
}

/// `σ²C` equals the scatter of the best fraction plus `α² I`.
pub fn check_ws_product(k: usize, n: usize, seed: u64) -> Result<(), TestCaseError> {
    let mut r = rng(seed);
    let sols: Vec<(Vec<f64>, f64)> = (0..k)
        .map(|_| {
            let x: Vec<f64> = (0..n).map(|_| r.random_range(-2.0..2.0)).collect();
            let f = x.iter().map(|v| (v - 0.5).powi(2)).sum();
            (x, f)
        })
        .collect();
    let init = ws_cmaes_init(&sols, WS_GAMMA, WS_ALPHA).map_err(|e| TestCaseError::fail(e.to_string()))?;

    let kg = ((WS_GAMMA * k as f64) + 1e-9).floor() as usize;
    let mut sorted = sols.clone();
    sorted.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
    let best: Vec<DVector<f64>> = sorted[..kg].iter().map(|s| DVector::from_column_slice(&s.0)).collect();
    let mean = best.iter().fold(DVector::zeros(n), |a, x| a + x) / kg as f64;
    let mut star = DMatrix::identity(n, n) * WS_ALPHA * WS_ALPHA;
    for x in &best {
        star += (x - &mean) * (x - &mean).transpose() / kg as f64;
    }
    let prod = init.cov.as_matrix() * init.sigma * init.sigma;
    let err = (&prod - &star).norm() / star.norm();
    prop_assert!(err < 1e-10, "product error {err}");
    let min_eig = SymMatrix::symmetrized(star).min_eigenvalue();
    prop_assert!(min_eig >= WS_ALPHA * WS_ALPHA - 1e-12);
    let det = init.cov.as_matrix().determinant();
    prop_assert!((det - 1.0).abs() < 1e-8, "det C0 = {det}");
    Ok(())
}

/// Small configuration that exercises every method in a few seconds.
pub fn tiny_config(seed: u64) -> ExperimentConfig {
    ExperimentConfig {
        dim: Some(4),
        m_prev: 3,
        trials: 3,
        seed,
        preopt_budget: Some(1500),
        target_budget: Some(1500),
        ws_source_count: Some(200),
        ccmaes_budget: Some(600),
        fit: FitConfig {
            restarts: 2,
            generations: 20,
            ..Default::default()
        },
        methods: Method::ALL.to_vec(),
        checkpoints: 20,
        ..ExperimentConfig::new(BaseFunction::Sphere, Shift::Noisy)
    }
}

/// Runs the full pipeline twice into fresh directories and compares every
/// output file byte for byte.
pub fn check_determinism(seed: u64) -> Result<(), TestCaseError> {
    let cfg = tiny_config(seed);
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    compare(&cfg, a.path(), 1).map_err(|e| TestCaseError::fail(e.to_string()))?;
    compare(&cfg, b.path(), 2).map_err(|e| TestCaseError::fail(e.to_string()))?;
    for name in ["dataset.json", "model.json", "results.csv", "curves.csv", "summary.json"] {
        let fa = read(a.path(), name);
        prop_assert!(!fa.is_empty(), "{} is empty", name);
        prop_assert!(fa == read(b.path(), name), "{} differs", name);
    }
    Ok(())
}

fn read(dir: &Path, name: &str) -> Vec<u8> {
    fs::read(dir.join(name)).unwrap_or_default()
}
