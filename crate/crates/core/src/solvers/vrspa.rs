use ndarray::{Array1, Array2, Zip};
use rand::{Rng, RngCore};

use super::mapping::{check_step_identity, stationarity_measure};
use super::trace::Tracer;
use super::{check_algorithm, initial_point, Algorithm, OutputIndex, OutputMode, RunReport, SolverConfig};
use crate::error::{Error, Result};
use crate::problem::{CompositeProblem, Evaluator, SampleSpace};

/// Variance-reduced stochastic proximal algorithm for finite sums.
///
/// Epoch `k` takes the snapshot gradient `G = grad f(w~)` and runs `m`
/// inner steps with direction
///
/// ```text
/// V = (1/b) sum_{j in I} (grad f_j(w) - grad f_j(w~)) + G + (w - zeta(w)) / lambda
/// ```
///
/// over `b` indices drawn with replacement. Both output indices `R` (epoch)
/// and `T` (inner step) are drawn up front.
///
/// Snapshot component gradients are cached for the epoch when `n * d` fits
/// `snapshot_cache_limit`. Either way a sampled difference counts as one
/// gradient call; `raw_gradient_evals` records what was actually evaluated.
pub fn run_vrspa<R: RngCore>(
    problem: &CompositeProblem,
    config: &SolverConfig,
    start: Option<&Array1<f64>>,
    rng: &mut R,
) -> Result<RunReport> {
    check_algorithm(config, &[Algorithm::Vrspa, Algorithm::Vrspa2], "run_vrspa")?;
    let n = match problem.sample_space() {
        SampleSpace::FiniteSum(n) => n,
        SampleSpace::General => {
            return Err(Error::UnsupportedAlgorithm {
                algorithm: config.algorithm.to_string(),
                reason: "variance reduction needs a finite-sum oracle".to_string(),
            })
        }
    };
    let sched = config.variance_reduced_schedule(problem.lipschitz(), n)?;
    let (lambda, gamma) = (sched.lambda, sched.gamma);
    let (m, b) = (sched.inner, sched.batch);
    let d = problem.dim();
    let oracle = problem.smooth();

    let r = rng.random_range(1..=sched.epochs);
    let t_out = rng.random_range(1..=m);
    let epochs = match config.mode {
        OutputMode::Theory => r,
        OutputMode::Trace => sched.epochs,
    };
    let last_step = epochs * m;

    let mut ev = Evaluator::new(problem);
    let mut tracer =
        Tracer::new(problem, config.trace_every, config.mode == OutputMode::Trace, lambda, sched.gamma_bar);
    let mut snapshot = initial_point(problem, start)?;
    tracer.record(0, snapshot.view(), &ev.counters())?;

    let mut cache = (n.saturating_mul(d) <= config.snapshot_cache_limit).then(|| Array2::<f64>::zeros((n, d)));
    let inv_b = 1.0 / b as f64;
    let mut output = None;

    for k in 1..=epochs {
        let full = match cache.as_mut() {
            Some(rows) => {
                rows.fill(0.0);
                let mut full = Array1::zeros(d);
                for (j, row) in rows.outer_iter_mut().enumerate() {
                    oracle.add_component_gradient(j, snapshot.view(), 1.0, row);
                }
                for row in rows.outer_iter() {
                    full += &row;
                }
                full /= n as f64;
                ev.record_gradients(n as u64, n as u64);
                full
            }
            None => ev.full_gradient(snapshot.view())?,
        };

        let mut w = snapshot.clone();
        for t in 1..=m {
            let zeta = ev.prox_g(lambda, w.view())?.zeta;
            if k == r && t == t_out {
                output = Some((w.clone(), zeta.clone()));
            }
            let mut direction = Array1::zeros(d);
            for _ in 0..b {
                let j = rng.random_range(0..n);
                oracle.add_component_gradient(j, w.view(), inv_b, direction.view_mut());
                match cache.as_ref() {
                    Some(rows) => direction.scaled_add(-inv_b, &rows.row(j)),
                    None => oracle.add_component_gradient(j, snapshot.view(), -inv_b, direction.view_mut()),
                }
            }
            ev.record_gradients(b, if cache.is_some() { b } else { 2 * b });
            Zip::from(&mut direction)
                .and(&full)
                .and(&w)
                .and(&zeta)
                .for_each(|v, &g, &wi, &z| *v += g + (wi - z) / lambda);

            let mut step = w.clone();
            step.scaled_add(-gamma, &direction);
            let next = ev.project(step.view())?;
            if config.check_mapping_identity {
                check_step_identity(problem.constraint(), gamma, w.view(), direction.view(), next.view())?;
            }
            w = next;
            tracer.step((k - 1) * m + t, last_step, w.view(), &ev.counters())?;
        }
        snapshot = w;
    }

    let (anchor, theory_output) = output.expect("output step lies inside the executed epochs");
    let stationarity = stationarity_measure(problem, anchor.view(), lambda, sched.gamma_bar)?;
    Ok(RunReport {
        algorithm: config.algorithm,
        theory_output,
        theory_anchor: anchor,
        output_index: OutputIndex { epoch: r, inner: Some(t_out) },
        final_iterate: snapshot,
        counters: ev.counters(),
        trace: tracer.finish(),
        stationarity,
        lambda,
        gamma,
        gamma_bar: sched.gamma_bar,
    })
}
