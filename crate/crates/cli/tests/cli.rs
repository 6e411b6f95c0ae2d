use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use ndarray::array;
use nsprox_cli::bench::{run_benchmark, SUMMARY_FILE, TRACE_HEADER};
use nsprox_cli::config::BenchmarkConfig;
use nsprox_cli::dataset::{read_dense_csv, read_sparse_dataset, write_dense_csv, Dataset};
use nsprox_core::SampleMatrix;

const CONFIG: &str = r#"
output_dir = "out"
seeds = [3, 4]

[problem]
kind = "pca"

[problem.data]
synthetic = { dim = 8, samples = 100, sparsity = 0.25, seed = 5 }

[[solvers]]
algorithm = "mbspa"
budget = 30
alpha = 0.5
trace_every = 5

[[solvers]]
algorithm = "vrspa"
budget = 40
alpha = 0.5
trace_every = 5

[[solvers]]
algorithm = "vrspa2"
budget = 40
alpha = 0.5
trace_every = 5

[[solvers]]
algorithm = "baseline"
budget = 30
alpha = 0.5
trace_every = 5
"#;

fn nsprox(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nsprox")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path) -> std::path::PathBuf {
    let path = dir.join("bench.toml");
    fs::write(&path, CONFIG).unwrap();
    path
}

/// Trace rows with the timing column removed.
fn without_elapsed(text: &str) -> Vec<String> {
    text.lines().map(|l| l.rsplit_once(',').map_or(l, |(head, _)| head).to_string()).collect()
}

#[test]
fn bench_writes_one_trace_per_solver_and_seed() {
    let dir = tempfile::tempdir().unwrap();
    let config = BenchmarkConfig::load(&write_config(dir.path())).unwrap();
    assert_eq!(config.output_dir, dir.path().join("out"));
    let runs = run_benchmark(&config).unwrap();
    assert_eq!(runs.len(), 8);

    let traces: Vec<_> = fs::read_dir(dir.path().join("out"))
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|name| name != SUMMARY_FILE)
        .collect();
    assert_eq!(traces.len(), 8);
    for run in &runs {
        let text = fs::read_to_string(&run.trace_file).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some(TRACE_HEADER));
        let rows: Vec<_> = lines.collect();
        assert!(rows.len() >= 2, "{}", run.trace_file.display());
        for row in rows {
            let phi: f64 = row.split(',').nth(3).unwrap().parse().unwrap();
            assert!(phi.is_finite());
        }
        assert!(run.final_phi.is_finite());
    }
    let summary = fs::read_to_string(dir.path().join("out").join(SUMMARY_FILE)).unwrap();
    assert_eq!(summary.lines().count(), 9);
}

#[test]
fn summary_counters_follow_the_schedules() {
    let dir = tempfile::tempdir().unwrap();
    let config = BenchmarkConfig::load(&write_config(dir.path())).unwrap();
    let runs = run_benchmark(&config).unwrap();
    for run in &runs {
        let (grad, prox) = match run.algorithm.as_str() {
            // N = 30, M = ceil(sqrt 30) = 6
            "MBSPA" => (180, 30),
            // n = 100, m = 10, b = 100, S = 4: S n + S m b
            "VRSPA" | "VRSPA2" => (400 + 4000, 40),
            // N full gradients of n components
            "Baseline" => (3000, 31),
            other => panic!("unexpected algorithm {other}"),
        };
        assert_eq!(run.gradient_calls, grad, "{} seed {}", run.solver, run.seed);
        assert_eq!(run.prox_g_calls, prox, "{} seed {}", run.solver, run.seed);
    }
}

#[test]
fn repeated_runs_are_identical_apart_from_timing() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(dir.path());
    let first = dir.path().join("first");
    let second = dir.path().join("second");
    for out in [&first, &second] {
        let o = nsprox(&["bench", path.to_str().unwrap(), "--output-dir", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let mut names: Vec<_> = fs::read_dir(&first).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert_eq!(names.len(), 9);
    for name in names {
        let a = fs::read_to_string(first.join(&name)).unwrap();
        let b = fs::read_to_string(second.join(&name)).unwrap();
        if name == SUMMARY_FILE {
            assert_eq!(a, b);
        } else {
            assert_eq!(without_elapsed(&a), without_elapsed(&b), "{name:?}");
        }
    }
}

#[test]
fn bench_rejects_a_broken_config() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    fs::write(&path, "seeds = []\n").unwrap();
    let o = nsprox(&["bench", path.to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("error"));
}

#[test]
fn dense_dataset_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("data.csv");
    let data = Dataset {
        samples: SampleMatrix::Dense(array![[0.1, -2.5e-7, 3.0], [1.0 / 3.0, 0.0, -4.75], [1e12, 2.0, -0.0]]),
        labels: Some(vec![1.0, -1.0, 1.0]),
        feature_names: Some(vec!["a".into(), "b".into(), "c".into()]),
    };
    write_dense_csv(&path, &data).unwrap();
    let back = read_dense_csv(&path, None, None).unwrap();
    assert_eq!(back.labels, data.labels);
    assert_eq!(back.feature_names, data.feature_names);
    let (x, y) = (data.samples.to_dense(), back.samples.to_dense());
    assert_eq!(x.dim(), y.dim());
    for (a, b) in x.iter().zip(&y) {
        assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
    }
}

#[test]
fn sparse_file_matches_dense_layout() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("data.svm");
    fs::write(&path, "# comment\n+1 1:0.5 3:-2\n-1 2:1.25\n").unwrap();
    let data = read_sparse_dataset(&path, None, Some(4)).unwrap();
    assert_eq!(data.labels, Some(vec![1.0, -1.0]));
    assert_eq!(data.samples.to_dense(), array![[0.5, 0.0, -2.0, 0.0], [0.0, 1.25, 0.0, 0.0]]);
}

#[test]
fn diag_quick_passes() {
    let o = nsprox(&["diag", "--quick"]);
    let out = String::from_utf8_lossy(&o.stdout);
    assert!(o.status.success(), "{out}");
    assert_eq!(out.lines().filter(|l| l.contains("PASS")).count(), 7, "{out}");
}

#[test]
fn diag_catches_a_corrupted_prox() {
    let o = nsprox(&["diag", "--quick", "--corrupt-prox"]);
    let out = String::from_utf8_lossy(&o.stdout);
    assert!(!o.status.success(), "{out}");
    let prox_line = out.lines().find(|l| l.starts_with("prox ")).unwrap();
    assert!(prox_line.contains("FAIL"), "{out}");
}

fn prox_output(args: &[&str]) -> Vec<f64> {
    let mut full = vec!["prox"];
    full.extend_from_slice(args);
    let o = nsprox(&full);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout).unwrap().split_whitespace().map(|t| t.parse().unwrap()).collect()
}

#[test]
fn prox_subcommand() {
    // MCP kappa = 1, nu = 2, lambda = 1: zero below kappa lambda, identity above nu kappa,
    // (|w| - lambda kappa) / (1 - lambda / nu) in between
    let z = prox_output(&["--kind", "mcp", "--kappa", "1", "--nu", "2", "--lambda", "1", "0.5", "-1.5", "3"]);
    assert_eq!(z.len(), 3);
    assert_eq!(z[0], 0.0);
    assert!((z[1] + 1.0).abs() < 1e-12);
    assert_eq!(z[2], 3.0);

    let s = prox_output(&["--kind", "simplex", "0.5", "0.5", "1"]);
    let expected = [1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0];
    assert!(s.iter().zip(expected).all(|(a, b)| (a - b).abs() < 1e-12), "{s:?}");

    let h = prox_output(&["--kind", "halfspace", "--normal", "1,0", "--bound", "1", "3", "-2"]);
    assert_eq!(h, vec![1.0, -2.0]);

    let n = prox_output(&["--kind", "nonneg-ball", "-1", "3", "4"]);
    assert!((n[0]).abs() < 1e-15 && (n[1] - 0.6).abs() < 1e-12 && (n[2] - 0.8).abs() < 1e-12);
}

#[test]
fn prox_subcommand_rejects_bad_arguments() {
    assert!(!nsprox(&["prox", "--kind", "mcp", "--kappa", "-1", "1"]).status.success());
    assert!(!nsprox(&["prox", "--kind", "halfspace", "--normal", "1", "1", "2"]).status.success());
    assert!(!nsprox(&["prox", "--kind", "mcp", "--lambda", "0", "1"]).status.success());
}
