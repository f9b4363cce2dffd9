//! Contextual warm starting for CMA-ES.
//!
//! Previously solved `(context, best solution)` pairs train a multi-output
//! Gaussian process; its posterior at a new context initializes CMA-ES.
//! The crate also ships the baselines and the benchmark harness used to
//! compare them.

pub mod benchmarks;
pub mod cmaes;
pub mod contextual;
pub mod harness;
pub mod linalg;
pub mod mogpr;
