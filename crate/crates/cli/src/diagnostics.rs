//! Self-check suites over the operators and oracles, reported as a
//! pass/fail table.

use std::fmt;
use std::sync::Arc;
use std::time::Instant;

use ndarray::{Array1, Array2};
use nsprox_core::applications::{build_fair_classification, build_portfolio, SyntheticPca};
use nsprox_core::problem::{NoisyGradient, ScaledQuadratic};
use nsprox_core::{
    build_pca, gradient_fd_error, smoothness_ratio, Block, CompositeProblem, Constraint, Evaluator, HalfspacePair,
    MajorizerState, McpParams, Penalty, Regularizer, ScadParams, SmoothnessInfo,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Scalar proximal map `(penalty, lambda, w) -> zeta` under test.
pub type ScalarProx = dyn Fn(&Penalty, f64, f64) -> f64 + Sync;

/// The library prox.
pub fn library_prox(p: &Penalty, lambda: f64, w: f64) -> f64 {
    p.prox(lambda, w)
}

/// Deliberately wrong prox that uses stepsize `2 lambda`, for checking that
/// the prox suite catches errors.
pub fn off_by_lambda_prox(p: &Penalty, lambda: f64, w: f64) -> f64 {
    p.prox(lambda + lambda, w)
}

pub struct DiagnosticOptions {
    pub seed: u64,
    /// Smaller grids and sample counts.
    pub quick: bool,
    pub prox: Box<ScalarProx>,
}

impl Default for DiagnosticOptions {
    fn default() -> Self {
        DiagnosticOptions { seed: 0, quick: false, prox: Box::new(library_prox) }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteResult {
    pub name: &'static str,
    pub passed: bool,
    pub checks: usize,
    /// Largest amount by which a checked inequality was exceeded (negative
    /// when every check held with room to spare).
    pub worst: f64,
    pub tolerance: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsReport {
    pub suites: Vec<SuiteResult>,
}

impl DiagnosticsReport {
    pub fn passed(&self) -> bool {
        self.suites.iter().all(|s| s.passed)
    }
}

impl fmt::Display for DiagnosticsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:<14} {:<6} {:>8} {:>12} {:>10} {:>8}",
            "suite", "status", "checks", "max excess", "tolerance", "time"
        )?;
        for s in &self.suites {
            writeln!(
                f,
                "{:<14} {:<6} {:>8} {:>12.3e} {:>10.0e} {:>7.2}s",
                s.name,
                if s.passed { "PASS" } else { "FAIL" },
                s.checks,
                s.worst,
                s.tolerance,
                s.seconds
            )?;
        }
        Ok(())
    }
}

/// Tracks the largest excess over a set of checks.
struct Tally {
    checks: usize,
    worst: f64,
}

impl Tally {
    fn new() -> Self {
        Tally { checks: 0, worst: f64::NEG_INFINITY }
    }

    fn add(&mut self, excess: f64) {
        self.checks += 1;
        // NaN counts as a failure
        self.worst = if excess.is_nan() { f64::INFINITY } else { self.worst.max(excess) };
    }
}

pub fn run_diagnostics(options: &DiagnosticOptions) -> DiagnosticsReport {
    type Suite = fn(&DiagnosticOptions, &mut ChaCha8Rng) -> (Tally, f64);
    let suites: [(&'static str, Suite); 7] = [
        ("prox", prox_suite),
        ("projection", projection_suite),
        ("majorizer", majorizer_suite),
        ("moreau", moreau_suite),
        ("gradient-fd", gradient_suite),
        ("smoothness", smoothness_suite),
        ("unbiasedness", unbiasedness_suite),
    ];
    let mut results = Vec::new();
    for (i, (name, suite)) in suites.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(options.seed.wrapping_add(i as u64));
        let start = Instant::now();
        let (tally, tolerance) = suite(options, &mut rng);
        results.push(SuiteResult {
            name,
            passed: tally.checks > 0 && tally.worst <= tolerance,
            checks: tally.checks,
            worst: tally.worst,
            tolerance,
            seconds: start.elapsed().as_secs_f64(),
        });
    }
    DiagnosticsReport { suites: results }
}

fn gaussian(rng: &mut ChaCha8Rng, d: usize, scale: f64) -> Array1<f64> {
    Array1::from_shape_fn(d, |_| {
        let z: f64 = StandardNormal.sample(rng);
        scale * z
    })
}

fn norm(a: &Array1<f64>) -> f64 {
    a.dot(a).sqrt()
}

fn penalty_grid() -> Vec<Penalty> {
    let mut out = Vec::new();
    for kappa in [0.1, 1.0, 3.0] {
        for nu in [1.0, 2.0, 4.0] {
            out.push(Penalty::Mcp(McpParams::new(kappa, nu).expect("valid")));
        }
        for nu in [2.5, 3.7, 5.0] {
            out.push(Penalty::Scad(ScadParams::new(kappa, nu).expect("valid")));
        }
    }
    out
}

/// Closed-form prox objective against the minimum over a uniform grid.
fn prox_suite(options: &DiagnosticOptions, rng: &mut ChaCha8Rng) -> (Tally, f64) {
    let (points, inputs) = if options.quick { (100_001, 20) } else { (1_000_001, 200) };
    let mut tally = Tally::new();
    let mut grid = vec![0.0; points];
    let mut values = vec![0.0; points];
    for p in penalty_grid() {
        let (kappa, nu) = match p {
            Penalty::Mcp(m) => (m.kappa(), m.nu()),
            Penalty::Scad(s) => (s.kappa(), s.nu()),
            Penalty::Zero => continue,
        };
        for lambda in [0.05, 0.5, 2.0] {
            let radius = 5.0 * nu * kappa + 5.0 * lambda * kappa;
            let h = 2.0 * radius / (points - 1) as f64;
            for i in 0..points {
                grid[i] = -radius + i as f64 * h;
                values[i] = p.value(grid[i]);
            }
            let inv = 0.5 / lambda;
            for _ in 0..inputs {
                let w = rng.random_range(-radius..=radius);
                let z = (options.prox)(&p, lambda, w);
                let closed = (z - w) * (z - w) * inv + p.value(z);
                let brute =
                    grid.iter().zip(&values).map(|(&x, &g)| (x - w) * (x - w) * inv + g).fold(f64::INFINITY, f64::min);
                tally.add(closed - brute);
            }
        }
    }
    (tally, 1e-6)
}

fn subsets(d: usize) -> impl Iterator<Item = Vec<usize>> {
    (0..(1u32 << d)).map(move |mask| (0..d).filter(|i| mask & (1 << i) != 0).collect())
}

/// Projection onto the simplex by enumerating supports.
fn simplex_by_enumeration(v: &Array1<f64>) -> Array1<f64> {
    let d = v.len();
    let mut best: Option<(f64, Array1<f64>)> = None;
    for s in subsets(d).filter(|s| !s.is_empty()) {
        let t = (s.iter().map(|&i| v[i]).sum::<f64>() - 1.0) / s.len() as f64;
        let mut w = Array1::zeros(d);
        for &i in &s {
            w[i] = v[i] - t;
        }
        if w.iter().any(|&x| x < 0.0) {
            continue;
        }
        let dist = norm(&(&w - v));
        if best.as_ref().is_none_or(|(b, _)| dist < *b) {
            best = Some((dist, w));
        }
    }
    best.expect("the simplex is non-empty").1
}

fn projection_suite(options: &DiagnosticOptions, rng: &mut ChaCha8Rng) -> (Tally, f64) {
    let count = if options.quick { 200 } else { 1000 };
    let mut tally = Tally::new();
    for _ in 0..count {
        let d = rng.random_range(1..=6);
        let v = gaussian(rng, d, 1.5);
        let p = Constraint::Simplex { augmented: false }.project(v.view()).expect("dimension");
        let q = simplex_by_enumeration(&v);
        tally.add((&p - &q).iter().fold(0.0f64, |m, x| m.max(x.abs())) - 1e-10);

        let y = &v + &gaussian(rng, d, 0.5);
        let a = gaussian(rng, d, 1.0);
        let constraints = [
            Constraint::Free,
            Constraint::Simplex { augmented: false },
            Constraint::Simplex { augmented: true },
            Constraint::NonnegBall,
            Constraint::HalfspacePair(HalfspacePair::new(a, rng.random_range(0.05..2.0)).expect("non-zero normal")),
        ];
        for c in &constraints {
            let px = c.project(v.view()).expect("dimension");
            let py = c.project(y.view()).expect("dimension");
            let ppx = c.project(px.view()).expect("dimension");
            tally.add((&ppx - &px).iter().fold(0.0f64, |m, x| m.max(x.abs())) - 1e-12);
            tally.add(norm(&(&px - &py)) - norm(&(&v - &y)) - 1e-12);
            tally.add(if c.is_feasible(px.view(), 1e-10) { -1.0 } else { 1.0 });
        }
    }
    // each check is pre-shifted by its own tolerance
    (tally, 0.0)
}

fn pca_problem(d: usize, n: usize, seed: u64, penalty: Penalty) -> CompositeProblem {
    let data = SyntheticPca { dim: d, samples: n, sparsity: 0.2, signal: 2.0, noise: 0.3, seed }
        .generate()
        .expect("valid generator settings");
    build_pca(data.samples, penalty).expect("valid PCA data")
}

fn majorizer_suite(options: &DiagnosticOptions, rng: &mut ChaCha8Rng) -> (Tally, f64) {
    let d = 20;
    let (anchors, points) = if options.quick { (20, 20) } else { (100, 100) };
    let problem = pca_problem(d, 200, 11, Penalty::Mcp(McpParams::new(1.0 / d as f64, 1.0).expect("valid")));
    let oracle = problem.smooth();
    let mut tally = Tally::new();
    for a in 0..anchors {
        let lambda = [0.01, 0.1, 1.0][a % 3];
        let anchor = problem.constraint().project(gaussian(rng, d, 0.5).view()).expect("dimension");
        let state = MajorizerState::new(problem.regularizer(), lambda, anchor.view()).expect("valid lambda");
        let at = state.evaluate(oracle.value(anchor.view()), anchor.view()).expect("dimension");
        let smoothed = problem.evaluate_smoothed_phi(lambda, anchor.view()).expect("dimension");
        tally.add((at - smoothed).abs() - 1e-9);
        let bound = problem.lipschitz() + 1.0 / lambda;
        let mut prev: Option<(Array1<f64>, Array1<f64>)> = None;
        for j in 0..points {
            let scale = if j % 2 == 0 { 0.5 } else { 1e-2 };
            let base = if j % 2 == 0 { Array1::zeros(d) } else { anchor.clone() };
            let w = problem.constraint().project((&base + &gaussian(rng, d, scale)).view()).expect("dimension");
            let e = state.evaluate(oracle.value(w.view()), w.view()).expect("dimension");
            let phi = problem.evaluate_smoothed_phi(lambda, w.view()).expect("dimension");
            tally.add(phi - e - 1e-9);
            let grad = state.gradient(oracle.full_gradient(w.view()).view(), w.view()).expect("dimension");
            if let Some((pw, pg)) = &prev {
                let dist = norm(&(&w - pw));
                if dist > 0.0 {
                    tally.add(norm(&(&grad - pg)) / (bound * dist) - (1.0 + 1e-6));
                }
            }
            prev = Some((w, grad));
        }
    }
    (tally, 0.0)
}

fn moreau_suite(options: &DiagnosticOptions, rng: &mut ChaCha8Rng) -> (Tally, f64) {
    let d = 12;
    let count = if options.quick { 200 } else { 1000 };
    let regularizers = [
        Regularizer::mcp(McpParams::new(0.5, 2.0).expect("valid"), d),
        Regularizer::scad(ScadParams::new(0.3, 3.7).expect("valid"), d),
        Regularizer::block_composite(
            d,
            vec![
                Block { offset: 0, len: 5, penalty: Penalty::Mcp(McpParams::new(1.0, 1.0).expect("valid")) },
                Block { offset: 5, len: 7, penalty: Penalty::Scad(ScadParams::new(2.0, 2.5).expect("valid")) },
            ],
        )
        .expect("disjoint blocks"),
    ];
    let mut tally = Tally::new();
    for reg in &regularizers {
        let l = reg.lipschitz();
        for lambda in [0.01, 0.1, 1.0] {
            for _ in 0..count {
                let scale = rng.random_range(0.05..6.0);
                let w = gaussian(rng, d, scale);
                let r = reg.prox(lambda, w.view()).expect("valid lambda");
                let g = reg.value(w.view()).expect("dimension");
                tally.add(r.envelope_value - g);
                tally.add(norm(&(&w - &r.zeta)) - 2.0 * l * lambda);
                tally.add(g - r.envelope_value - l * l * lambda / 2.0);
            }
        }
    }
    (tally, 1e-10)
}

fn application_problems(rng: &mut ChaCha8Rng) -> Vec<CompositeProblem> {
    let pca = pca_problem(15, 80, 21, Penalty::Zero);
    let n = 40;
    let features = Array2::from_shape_fn((n, 6), |(_, j)| {
        if j == 0 {
            f64::from(u8::from(rng.random_bool(0.4)))
        } else {
            rng.random_range(-1.0..1.0)
        }
    });
    let labels = Array1::from_shape_fn(n, |_| if rng.random_bool(0.5) { 1.0 } else { -1.0 });
    let fair = build_fair_classification(
        features.view(),
        labels.view(),
        0,
        0.05,
        McpParams::new(0.1, 2.0).expect("valid"),
        ScadParams::new(0.05, 3.7).expect("valid"),
    )
    .expect("valid classification data");
    let returns = Array2::from_shape_fn((50, 8), |_| rng.random_range(-0.5..0.5));
    let portfolio = build_portfolio(returns, 2.0, 1.0, Penalty::Zero).expect("valid returns");
    vec![pca, fair, portfolio]
}

fn gradient_suite(options: &DiagnosticOptions, rng: &mut ChaCha8Rng) -> (Tally, f64) {
    let count = if options.quick { 10 } else { 50 };
    let mut tally = Tally::new();
    for problem in application_problems(rng) {
        for _ in 0..count {
            let w = problem.constraint().project(gaussian(rng, problem.dim(), 0.5).view()).expect("dimension");
            tally.add(gradient_fd_error(problem.smooth(), w.view(), 1e-6));
        }
    }
    (tally, 1e-5)
}

fn smoothness_suite(options: &DiagnosticOptions, rng: &mut ChaCha8Rng) -> (Tally, f64) {
    let pairs = if options.quick { 200 } else { 1000 };
    let mut tally = Tally::new();
    for problem in application_problems(rng) {
        tally.add(smoothness_ratio(&problem, rng, pairs, 1.0) - 1.0);
    }
    (tally, 1e-9)
}

/// Empirical mean of minibatch gradients against the full gradient, in
/// units of the standard error, and the declared variance bound of a noisy
/// oracle.
fn unbiasedness_suite(options: &DiagnosticOptions, rng: &mut ChaCha8Rng) -> (Tally, f64) {
    let draws = if options.quick { 10_000 } else { 100_000 };
    let d = 10;
    let problem = pca_problem(d, 300, 31, Penalty::Zero);
    let mut tally = Tally::new();
    for _ in 0..10 {
        let w = problem.constraint().project(gaussian(rng, d, 0.5).view()).expect("dimension");
        let full = problem.smooth().full_gradient(w.view());
        let mut ev = Evaluator::new(&problem);
        let mut sum = Array1::<f64>::zeros(d);
        let mut sum_sq = Array1::<f64>::zeros(d);
        for _ in 0..draws {
            let g = ev.minibatch_gradient(rng, w.view(), 4).expect("positive batch");
            sum += &g;
            sum_sq += &(&g * &g);
        }
        let mean = &sum / draws as f64;
        for i in 0..d {
            let se = ((sum_sq[i] / draws as f64 - mean[i] * mean[i]).max(0.0) / draws as f64).sqrt();
            let z =
                if se > 0.0 { (mean[i] - full[i]).abs() / se } else { f64::from(u8::from(mean[i] != full[i])) * 1e9 };
            // 4 standard errors
            tally.add((z - 4.0) / 4.0);
        }
    }

    let noisy = NoisyGradient::new(ScaledQuadratic::new(vec![2.0], 6).expect("valid"), 0.5).expect("valid");
    let sigma_sq = noisy.variance_bound();
    let general = CompositeProblem::new(
        Arc::new(noisy),
        Regularizer::zero(6),
        Constraint::Free,
        SmoothnessInfo::new(2.0).expect("positive").with_variance_bound(sigma_sq).expect("non-negative"),
    )
    .expect("consistent dimensions");
    let w = gaussian(rng, 6, 1.0);
    let exact = general.smooth().full_gradient(w.view());
    let mut second = 0.0;
    for _ in 0..draws {
        let e = general.smooth().sample_gradient(rng, w.view()) - &exact;
        second += e.dot(&e);
    }
    tally.add((second / draws as f64) / (1.1 * sigma_sq) - 1.0);
    (tally, 0.0)
}
