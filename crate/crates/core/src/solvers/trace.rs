use std::time::Instant;

use ndarray::ArrayView1;
use serde::{Deserialize, Serialize};

use super::mapping::stationarity_measure;
use crate::error::Result;
use crate::problem::{CompositeProblem, OpCounters};

/// One row of a convergence trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationTrace {
    pub iteration: u64,
    pub gradient_calls: u64,
    pub prox_calls: u64,
    pub phi: f64,
    pub stationarity: Option<f64>,
    pub elapsed_seconds: f64,
}

/// Records trace rows every `every` iterations. Objective and stationarity
/// evaluations here bypass the counters.
pub(crate) struct Tracer<'a> {
    problem: &'a CompositeProblem,
    every: u64,
    enabled: bool,
    lambda: f64,
    gamma_bar: f64,
    start: Instant,
    rows: Vec<IterationTrace>,
}

impl<'a> Tracer<'a> {
    pub fn new(problem: &'a CompositeProblem, every: u64, enabled: bool, lambda: f64, gamma_bar: f64) -> Self {
        Tracer { problem, every, enabled, lambda, gamma_bar, start: Instant::now(), rows: Vec::new() }
    }

    pub fn record(&mut self, iteration: u64, w: ArrayView1<f64>, counters: &OpCounters) -> Result<()> {
        if !self.enabled {
            return Ok(());
        }
        let phi = self.problem.evaluate_phi(w)?;
        let stationarity = stationarity_measure(self.problem, w, self.lambda, self.gamma_bar)?;
        self.rows.push(IterationTrace {
            iteration,
            gradient_calls: counters.gradient_calls,
            prox_calls: counters.prox_calls(),
            phi,
            stationarity: Some(stationarity),
            elapsed_seconds: self.start.elapsed().as_secs_f64(),
        });
        Ok(())
    }

    /// Records at multiples of `every` and at `last`.
    pub fn step(&mut self, iteration: u64, last: u64, w: ArrayView1<f64>, counters: &OpCounters) -> Result<()> {
        if iteration.is_multiple_of(self.every) || iteration == last {
            self.record(iteration, w, counters)?;
        }
        Ok(())
    }

    pub fn finish(self) -> Vec<IterationTrace> {
        self.rows
    }
}
