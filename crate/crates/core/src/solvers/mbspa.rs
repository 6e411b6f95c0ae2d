use ndarray::{Array1, Zip};
use rand::{Rng, RngCore};

use super::mapping::{check_step_identity, stationarity_measure};
use super::trace::Tracer;
use super::{check_algorithm, initial_point, Algorithm, OutputIndex, OutputMode, RunReport, SolverConfig};
use crate::error::Result;
use crate::problem::{CompositeProblem, Evaluator};

/// Minibatch stochastic proximal algorithm.
///
/// Each iteration computes `zeta = prox_{lambda g}(w)`, draws `M` stochastic
/// gradients, and steps
/// `w <- proj(w - gamma * (mean grad + (w - zeta) / lambda))`.
/// The output index `R ~ U{1..N}` is drawn before anything else.
pub fn run_mbspa<R: RngCore>(
    problem: &CompositeProblem,
    config: &SolverConfig,
    start: Option<&Array1<f64>>,
    rng: &mut R,
) -> Result<RunReport> {
    check_algorithm(config, &[Algorithm::Mbspa], "run_mbspa")?;
    let sched = config.minibatch_schedule(problem.lipschitz())?;
    let (lambda, gamma) = (sched.lambda, sched.gamma);
    let mut w = initial_point(problem, start)?;

    let r = rng.random_range(1..=config.budget);
    let iterations = match config.mode {
        OutputMode::Theory => r - 1,
        OutputMode::Trace => config.budget,
    };

    let mut ev = Evaluator::new(problem);
    let mut tracer =
        Tracer::new(problem, config.trace_every, config.mode == OutputMode::Trace, lambda, sched.gamma_bar);
    tracer.record(0, w.view(), &ev.counters())?;

    let mut output = None;
    for k in 1..=iterations {
        let zeta = ev.prox_g(lambda, w.view())?.zeta;
        let mut direction = ev.minibatch_gradient(rng, w.view(), sched.batch as usize)?;
        Zip::from(&mut direction).and(&w).and(&zeta).for_each(|d, &wi, &z| *d += (wi - z) / lambda);
        let mut step = w.clone();
        step.scaled_add(-gamma, &direction);
        let next = ev.project(step.view())?;
        if config.check_mapping_identity {
            check_step_identity(problem.constraint(), gamma, w.view(), direction.view(), next.view())?;
        }
        if k == r {
            output = Some((w.clone(), zeta));
        }
        w = next;
        tracer.step(k, iterations, w.view(), &ev.counters())?;
    }

    let (anchor, theory_output) = match output {
        Some(found) => found,
        None => {
            let zeta = ev.prox_g(lambda, w.view())?.zeta;
            (w.clone(), zeta)
        }
    };
    let stationarity = stationarity_measure(problem, anchor.view(), lambda, sched.gamma_bar)?;
    Ok(RunReport {
        algorithm: Algorithm::Mbspa,
        theory_output,
        theory_anchor: anchor,
        output_index: OutputIndex { epoch: r, inner: None },
        final_iterate: w,
        counters: ev.counters(),
        trace: tracer.finish(),
        stationarity,
        lambda,
        gamma,
        gamma_bar: sched.gamma_bar,
    })
}
