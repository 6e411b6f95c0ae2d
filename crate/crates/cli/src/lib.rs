//! Benchmark runner, dataset IO and self-check diagnostics for the
//! stochastic proximal solvers.

pub mod bench;
pub mod config;
pub mod dataset;
pub mod diagnostics;

pub use nsprox_core::{Algorithm, CompositeProblem, OutputMode, RunReport, SolverConfig};
