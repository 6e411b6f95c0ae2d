use ndarray::{Array1, Zip};

use super::mapping::{check_step_identity, stationarity_measure};
use super::trace::Tracer;
use super::{check_algorithm, initial_point, Algorithm, OutputIndex, OutputMode, RunReport, SolverConfig};
use crate::error::Result;
use crate::problem::{CompositeProblem, Evaluator};

/// Deterministic comparator: full-gradient projected steps on the majorizer
/// with the minibatch method's `lambda` and `gamma`, for `N` iterations.
///
/// The reported output is the proximal point of the last iterate.
pub fn run_baseline(
    problem: &CompositeProblem,
    config: &SolverConfig,
    start: Option<&Array1<f64>>,
) -> Result<RunReport> {
    check_algorithm(config, &[Algorithm::Baseline], "run_baseline")?;
    let sched = config.minibatch_schedule(problem.lipschitz())?;
    let (lambda, gamma) = (sched.lambda, sched.gamma);
    let mut w = initial_point(problem, start)?;

    let mut ev = Evaluator::new(problem);
    let mut tracer =
        Tracer::new(problem, config.trace_every, config.mode == OutputMode::Trace, lambda, sched.gamma_bar);
    tracer.record(0, w.view(), &ev.counters())?;

    for k in 1..=config.budget {
        let zeta = ev.prox_g(lambda, w.view())?.zeta;
        let mut direction = ev.full_gradient(w.view())?;
        Zip::from(&mut direction).and(&w).and(&zeta).for_each(|d, &wi, &z| *d += (wi - z) / lambda);
        let mut step = w.clone();
        step.scaled_add(-gamma, &direction);
        let next = ev.project(step.view())?;
        if config.check_mapping_identity {
            check_step_identity(problem.constraint(), gamma, w.view(), direction.view(), next.view())?;
        }
        w = next;
        tracer.step(k, config.budget, w.view(), &ev.counters())?;
    }

    let theory_output = ev.prox_g(lambda, w.view())?.zeta;
    let stationarity = stationarity_measure(problem, w.view(), lambda, sched.gamma_bar)?;
    Ok(RunReport {
        algorithm: Algorithm::Baseline,
        theory_output,
        theory_anchor: w.clone(),
        output_index: OutputIndex { epoch: config.budget + 1, inner: None },
        final_iterate: w,
        counters: ev.counters(),
        trace: tracer.finish(),
        stationarity,
        lambda,
        gamma,
        gamma_bar: sched.gamma_bar,
    })
}
