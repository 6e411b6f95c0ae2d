//! Stochastic proximal gradient methods for minimizing
//! `Phi(w) = f(w) + g(w) + h(w)`, where `f` is smooth and possibly
//! non-convex, `g` is a non-smooth non-convex sparsity penalty (MCP, SCAD)
//! and `h` is the indicator of a convex set.

pub mod applications;
pub mod error;
pub mod problem;
pub mod projections;
pub mod regularizers;
pub mod solvers;

pub use applications::{
    build_fair_classification, build_pca, build_portfolio, generate_synthetic_pca, SampleMatrix, SyntheticPca,
};
pub use error::{Error, Result};
pub use problem::{
    evaluate_phi, gradient_fd_error, smoothness_ratio, CompositeProblem, Evaluator, OpCounters, SampleSpace,
    SmoothOracle, SmoothnessInfo,
};
pub use projections::{Constraint, ConstraintKind, HalfspacePair};
pub use regularizers::{Block, McpParams, Penalty, ProxResult, Regularizer, RegularizerKind, ScadParams};
pub use solvers::{
    gradient_mapping, solve, stationarity_measure, Algorithm, IterationTrace, MajorizerState, OutputMode, RunReport,
    SolverConfig,
};
