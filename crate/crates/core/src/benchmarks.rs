//! Benchmark functions composed with context-dependent shifts of the
//! search space, `f(x; α) = f_base(φ(x; α))`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cmaes::Objective;

/// Default noise scale of the noisy shift.
pub const EPSILON: f64 = 0.25;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BenchmarkError {
    #[error("{base} expects dimension {expected}, got {got}")]
    DimensionMismatch {
        base: BaseFunction,
        expected: usize,
        got: usize,
    },
    #[error("context dimension mismatch: shift matrix has {expected} columns, context has {got}")]
    ContextMismatch { expected: usize, got: usize },
    #[error("unknown {kind} `{name}`")]
    Unknown { kind: &'static str, name: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BaseFunction {
    Sphere,
    Rosenbrock,
    Easom,
}

impl BaseFunction {
    /// Dimension used in the benchmark protocol.
    pub fn default_dim(self) -> usize {
        match self {
            BaseFunction::Easom => 2,
            _ => 20,
        }
    }

    /// Per-run evaluation budget used in the benchmark protocol.
    pub fn default_budget(self) -> usize {
        match self {
            BaseFunction::Rosenbrock => 40_000,
            _ => 10_000,
        }
    }

    /// Minimizer of the unshifted function.
    pub fn optimum(self, n: usize) -> DVector<f64> {
        match self {
            BaseFunction::Sphere => DVector::zeros(n),
            BaseFunction::Rosenbrock => DVector::from_element(n, 1.0),
            BaseFunction::Easom => DVector::from_element(n, PI),
        }
    }

    fn check_dim(self, n: usize) -> Result<(), BenchmarkError> {
        let ok = match self {
            BaseFunction::Sphere => n >= 1,
            BaseFunction::Rosenbrock => n >= 2,
            BaseFunction::Easom => n == 2,
        };
        if ok {
            Ok(())
        } else {
            Err(BenchmarkError::DimensionMismatch {
                base: self,
                expected: if self == BaseFunction::Sphere { 1 } else { 2 },
                got: n,
            })
        }
    }
}

impl fmt::Display for BaseFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BaseFunction::Sphere => "sphere",
            BaseFunction::Rosenbrock => "rosenbrock",
            BaseFunction::Easom => "easom",
        })
    }
}

impl FromStr for BaseFunction {
    type Err = BenchmarkError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "sphere" => Ok(BaseFunction::Sphere),
            "rosenbrock" => Ok(BaseFunction::Rosenbrock),
            "easom" => Ok(BaseFunction::Easom),
            _ => Err(BenchmarkError::Unknown {
                kind: "base function",
                name: s.to_string(),
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Shift {
    /// `x - Gα`
    Linear,
    /// `x - G(α∘α)`
    Nonlinear,
    /// `x - Gα + ε²n` with a frozen standard-normal `n`
    Noisy,
}

impl fmt::Display for Shift {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Shift::Linear => "linear",
            Shift::Nonlinear => "nonlinear",
            Shift::Noisy => "noisy",
        })
    }
}

impl FromStr for Shift {
    type Err = BenchmarkError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "linear" => Ok(Shift::Linear),
            "nonlinear" => Ok(Shift::Nonlinear),
            "noisy" => Ok(Shift::Noisy),
            _ => Err(BenchmarkError::Unknown {
                kind: "shift",
                name: s.to_string(),
            }),
        }
    }
}

pub fn sphere(y: &[f64]) -> f64 {
    y.iter().map(|v| v * v).sum()
}

pub fn rosenbrock(y: &[f64]) -> f64 {
    y.windows(2)
        .map(|w| 100.0 * (w[1] - w[0] * w[0]).powi(2) + (1.0 - w[0]).powi(2))
        .sum()
}

/// Easom with a `+1` offset so the global minimum value is zero.
pub fn easom(y: &[f64]) -> f64 {
    let (a, b) = (y[0], y[1]);
    -a.cos() * b.cos() * (-((a - PI).powi(2) + (b - PI).powi(2))).exp() + 1.0
}

pub fn base_eval(base: BaseFunction, y: &[f64]) -> Result<f64, BenchmarkError> {
    base.check_dim(y.len())?;
    Ok(match base {
        BaseFunction::Sphere => sphere(y),
        BaseFunction::Rosenbrock => rosenbrock(y),
        BaseFunction::Easom => easom(y),
    })
}

/// Context-dependent offset `d(α)` such that `φ(x; α) = x - d(α)`.
fn shift_offset(shift: Shift, alpha: &[f64], g: &DMatrix<f64>, noise: &[f64], epsilon: f64) -> DVector<f64> {
    let a = DVector::from_column_slice(alpha);
    match shift {
        Shift::Linear => g * a,
        Shift::Nonlinear => g * a.component_mul(&a),
        Shift::Noisy => g * a - DVector::from_column_slice(noise) * (epsilon * epsilon),
    }
}

/// `y = φ(x; α)`.
pub fn apply_shift(
    shift: Shift,
    x: &[f64],
    alpha: &[f64],
    g: &DMatrix<f64>,
    noise: &[f64],
    epsilon: f64,
) -> Result<DVector<f64>, BenchmarkError> {
    if g.ncols() != alpha.len() {
        return Err(BenchmarkError::ContextMismatch {
            expected: g.ncols(),
            got: alpha.len(),
        });
    }
    if g.nrows() != x.len() || (shift == Shift::Noisy && noise.len() != x.len()) {
        return Err(BenchmarkError::ContextMismatch {
            expected: g.nrows(),
            got: x.len(),
        });
    }
    Ok(DVector::from_column_slice(x) - shift_offset(shift, alpha, g, noise, epsilon))
}

/// Uniform draw per coordinate; a degenerate range `[a, a]` yields `a`.
pub fn sample_context<R: Rng + ?Sized>(rng: &mut R, ranges: &[(f64, f64)]) -> Vec<f64> {
    ranges
        .iter()
        .map(|&(lo, hi)| {
            assert!(lo <= hi, "invalid range [{lo}, {hi}]");
            if lo == hi {
                lo
            } else {
                rng.random_range(lo..=hi)
            }
        })
        .collect()
}

/// Shift matrix `G` with i.i.d. standard-normal entries.
pub fn sample_shift_matrix<R: Rng + ?Sized>(rng: &mut R, n: usize, n_alpha: usize) -> DMatrix<f64> {
    // Row-major fill so the draw order does not depend on storage layout.
    let vals: Vec<f64> = (0..n * n_alpha)
        .map(|_| rng.sample(StandardNormal))
        .collect();
    DMatrix::from_row_slice(n, n_alpha, &vals)
}

/// One task instance: a base function, a shift, the shared `G` and a context.
#[derive(Debug, Clone, PartialEq)]
pub struct ContextualObjective {
    pub base: BaseFunction,
    pub shift: Shift,
    g: DMatrix<f64>,
    alpha: Vec<f64>,
    noise: Vec<f64>,
    epsilon: f64,
    eval_count: usize,
}

impl ContextualObjective {
    /// Builds the task. For the noisy shift a noise vector is drawn from `rng`
    /// once and frozen; other shifts do not touch `rng`.
    pub fn new<R: Rng + ?Sized>(
        base: BaseFunction,
        shift: Shift,
        g: DMatrix<f64>,
        alpha: Vec<f64>,
        rng: &mut R,
    ) -> Result<Self, BenchmarkError> {
        let n = g.nrows();
        let noise = if shift == Shift::Noisy {
            (0..n).map(|_| rng.sample(StandardNormal)).collect()
        } else {
            vec![0.0; n]
        };
        Self::with_noise(base, shift, g, alpha, noise, EPSILON)
    }

    pub fn with_noise(
        base: BaseFunction,
        shift: Shift,
        g: DMatrix<f64>,
        alpha: Vec<f64>,
        noise: Vec<f64>,
        epsilon: f64,
    ) -> Result<Self, BenchmarkError> {
        base.check_dim(g.nrows())?;
        if g.ncols() != alpha.len() {
            return Err(BenchmarkError::ContextMismatch {
                expected: g.ncols(),
                got: alpha.len(),
            });
        }
        if noise.len() != g.nrows() {
            return Err(BenchmarkError::DimensionMismatch {
                base,
                expected: g.nrows(),
                got: noise.len(),
            });
        }
        Ok(ContextualObjective {
            base,
            shift,
            g,
            alpha,
            noise,
            epsilon,
            eval_count: 0,
        })
    }

    pub fn dim(&self) -> usize {
        self.g.nrows()
    }

    pub fn context(&self) -> &[f64] {
        &self.alpha
    }

    pub fn noise(&self) -> &[f64] {
        &self.noise
    }

    pub fn eval_count(&self) -> usize {
        self.eval_count
    }

    /// Evaluates `f(x; α)` and counts the call.
    pub fn eval(&mut self, x: &[f64]) -> Result<f64, BenchmarkError> {
        let y = apply_shift(self.shift, x, &self.alpha, &self.g, &self.noise, self.epsilon)?;
        self.eval_count += 1;
        base_eval(self.base, y.as_slice())
    }

    /// `x*` with `φ(x*; α)` equal to the base optimum. Needs the frozen noise,
    /// so this is oracle access meant for tests and diagnostics.
    pub fn optimum_location(&self) -> DVector<f64> {
        self.base.optimum(self.dim())
            + shift_offset(self.shift, &self.alpha, &self.g, &self.noise, self.epsilon)
    }
}

impl Objective for ContextualObjective {
    type Error = BenchmarkError;
    fn evaluate(&mut self, x: &[f64]) -> Result<f64, BenchmarkError> {
        self.eval(x)
    }
}
