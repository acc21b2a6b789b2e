use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use nalgebra::{DMatrix, DVector};
use tempfile::TempDir;

const SMALL: &str = r#"
name = "small"
measurement_factor = 4
kinds = ["shifted-entropy", "euclidean"]
seeds = [1, 2]

signal.type = "random-sparse"
signal.n = 24
signal.sparsity = 2
signal.amplitude_min = 1.0
signal.amplitude_max = 5.0

baselines.pseudo_inverse = true
baselines.l0_oracle = false

solver.max_sweeps = 200
"#;

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bregman-cs")).args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn small_config(dir: &Path) -> String {
    let file = dir.join("small.toml");
    fs::write(&file, SMALL).unwrap();
    file.to_str().unwrap().to_string()
}

fn lines(file: &Path) -> Vec<String> {
    fs::read_to_string(file).unwrap().lines().map(str::to_string).collect()
}

fn vector(file: &Path) -> Vec<f64> {
    lines(file).iter().map(|l| l.parse().unwrap()).collect()
}

fn write_problem(dir: &Path, rows: usize, cols: usize, theta: &[f64], y: &[f64]) {
    fs::create_dir_all(dir).unwrap();
    let mut text = format!("{rows} {cols}\n");
    for r in 0..rows {
        let row: Vec<String> = theta[r * cols..(r + 1) * cols].iter().map(|v| format!("{v:.17e}")).collect();
        text.push_str(&row.join(" "));
        text.push('\n');
    }
    fs::write(dir.join("theta.txt"), text).unwrap();
    let y: String = y.iter().map(|v| format!("{v:.17e}\n")).collect();
    fs::write(dir.join("y.txt"), y).unwrap();
}

#[test]
fn generate_writes_the_instance_files() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("gen");
    let run = bin(&["generate", "--preset", "rand-6s", "--seed", "3", "--out", path(&out)]);
    assert_eq!(code(&run), 0, "{}", String::from_utf8_lossy(&run.stderr));
    for name in ["x.txt", "s_star.txt", "y.txt", "phi.txt", "psi.txt", "theta.txt", "manifest.json"] {
        assert!(out.join(name).exists(), "{name}");
    }
    assert_eq!(vector(&out.join("y.txt")).len(), 24);
    assert_eq!(vector(&out.join("s_star.txt")).len(), 128);
    assert_eq!(lines(&out.join("theta.txt"))[0], "24 128");
    assert_eq!(vector(&out.join("s_star.txt")).iter().filter(|v| **v != 0.0).count(), 4);

    let again = tmp.path().join("again");
    assert_eq!(code(&bin(&["generate", "--preset", "rand-6s", "--seed", "3", "--out", path(&again)])), 0);
    for name in ["x.txt", "s_star.txt", "y.txt", "theta.txt"] {
        assert_eq!(fs::read(out.join(name)).unwrap(), fs::read(again.join(name)).unwrap(), "{name}");
    }
}

#[test]
fn vectors_carry_seventeen_significant_digits() {
    let tmp = TempDir::new().unwrap();
    let config = small_config(tmp.path());
    let out = tmp.path().join("gen");
    assert_eq!(code(&bin(&["generate", "--config", &config, "--out", path(&out)])), 0);
    for line in lines(&out.join("y.txt")) {
        let mantissa = line.trim_start_matches('-').split('e').next().unwrap().replace('.', "");
        assert_eq!(mantissa.len(), 17, "{line}");
    }
}

#[test]
fn solve_trace_has_one_row_per_sweep() {
    let tmp = TempDir::new().unwrap();
    let config = small_config(tmp.path());
    let input = tmp.path().join("gen");
    let out = tmp.path().join("solve");
    assert_eq!(code(&bin(&["generate", "--config", &config, "--out", path(&input)])), 0);
    let run = bin(&["solve", "--config", &config, "--input", path(&input), "--out", path(&out)]);
    assert_eq!(code(&run), 0, "{}", String::from_utf8_lossy(&run.stderr));

    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    let sweeps = manifest["sweeps_run"].as_u64().unwrap() as usize;
    let trace = lines(&out.join("trace.csv"));
    assert_eq!(trace[0], "sweep,max_residual,iterate_delta,lambda_max_abs");
    assert_eq!(trace.len() - 1, sweeps);
    assert_eq!(vector(&out.join("s_hat.txt")).len(), 24);
}

#[test]
fn euclidean_solve_of_a_square_system_matches_a_direct_solve() {
    let tmp = TempDir::new().unwrap();
    let input = tmp.path().join("square");
    let theta = [4.0, 1.0, 0.5, 1.0, 3.0, -1.0, 0.5, -1.0, 5.0];
    let x = [1.0, -2.0, 0.25];
    let y: Vec<f64> = (0..3).map(|r| (0..3).map(|c| theta[3 * r + c] * x[c]).sum()).collect();
    write_problem(&input, 3, 3, &theta, &y);
    let out = tmp.path().join("solve");
    let run = bin(&["solve", "--kind", "euclidean", "--input", path(&input), "--out", path(&out)]);
    assert_eq!(code(&run), 0, "{}", String::from_utf8_lossy(&run.stderr));

    let direct = DMatrix::from_row_slice(3, 3, &theta).lu().solve(&DVector::from_column_slice(&y)).unwrap();
    for (a, b) in vector(&out.join("s_hat.txt")).iter().zip(direct.iter()) {
        assert!((a - b).abs() < 1e-6, "{a} vs {b}");
    }
}

#[test]
fn experiment_summary_and_verify() {
    let tmp = TempDir::new().unwrap();
    let config = small_config(tmp.path());
    let out = tmp.path().join("exp");
    let run = bin(&["experiment", "--config", &config, "--out", path(&out)]);
    assert_eq!(code(&run), 0, "{}", String::from_utf8_lossy(&run.stderr));

    // 2 seeds x (2 kinds + pseudo-inverse)
    let summary = lines(&out.join("summary.csv"));
    assert_eq!(summary.len() - 1, 6);
    assert_eq!(lines(&out.join("aggregate.csv")).len() - 1, 3);
    for method in ["shifted-entropy", "euclidean", "pseudo-inverse"] {
        assert!(out.join("seed-1").join(method).join("s_hat.txt").exists(), "{method}");
    }

    let ok = bin(&["verify", path(&out)]);
    assert_eq!(code(&ok), 0, "{}", String::from_utf8_lossy(&ok.stderr));

    let s_hat = out.join("seed-2/shifted-entropy/s_hat.txt");
    let mut values = vector(&s_hat);
    values[0] += 0.5;
    fs::write(&s_hat, values.iter().map(|v| format!("{v:.16e}\n")).collect::<String>()).unwrap();
    assert_eq!(code(&bin(&["verify", path(&out)])), 1);
}

#[test]
fn manifest_alone_reproduces_the_run() {
    let tmp = TempDir::new().unwrap();
    let config = small_config(tmp.path());
    let first = tmp.path().join("first");
    let second = tmp.path().join("second");
    assert_eq!(code(&bin(&["experiment", "--config", &config, "--out", path(&first)])), 0);
    let manifest = first.join("manifest.json");
    assert_eq!(code(&bin(&["experiment", "--config", path(&manifest), "--out", path(&second)])), 0);
    for file in ["seed-1/y.txt", "seed-2/s_star.txt", "seed-1/shifted-entropy/s_hat.txt", "seed-2/euclidean/trace.csv"] {
        assert_eq!(fs::read(first.join(file)).unwrap(), fs::read(second.join(file)).unwrap(), "{file}");
    }
}

#[test]
fn online_without_refresh_projects_once_per_row() {
    let tmp = TempDir::new().unwrap();
    let config = small_config(tmp.path());
    let out = tmp.path().join("online");
    let run = bin(&["online", "--config", &config, "--refresh-sweeps", "0", "--out", path(&out)]);
    assert_eq!(code(&run), 0, "{}", String::from_utf8_lossy(&run.stderr));
    let curve = lines(&out.join("curve.csv"));
    assert_eq!(curve[0], "measurements,rel_l2_error,max_residual");
    assert_eq!(curve.len() - 1, 8);
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    // one projection per appended row, then full sweeps while settling
    let settle_sweeps = manifest["sweeps_run"].as_u64().unwrap();
    assert_eq!(manifest["projections"].as_u64(), Some(8 * (1 + settle_sweeps)), "{manifest}");
}

#[test]
fn exit_codes() {
    let tmp = TempDir::new().unwrap();

    let bad = tmp.path().join("bad.toml");
    fs::write(&bad, SMALL.replace("signal.sparsity = 2", "signal.sparsity = 0")).unwrap();
    assert_eq!(code(&bin(&["experiment", "--config", path(&bad), "--out", path(&tmp.path().join("x"))])), 2);
    assert_eq!(code(&bin(&["experiment", "--preset", "no-such-preset"])), 2);
    assert_eq!(code(&bin(&["experiment"])), 2);

    let missing = tmp.path().join("missing");
    assert_eq!(code(&bin(&["solve", "--input", path(&missing), "--out", path(&tmp.path().join("s"))])), 4);
    assert_eq!(code(&bin(&["experiment", "--config", path(&tmp.path().join("nope.toml"))])), 4);

    // a positive point cannot meet a negative measurement through a positive row
    let infeasible = tmp.path().join("infeasible");
    write_problem(&infeasible, 1, 2, &[1.0, 1.0], &[-1.0]);
    let run = bin(&["solve", "--kind", "positive-entropy", "--input", path(&infeasible), "--out", path(&tmp.path().join("f"))]);
    assert_eq!(code(&run), 3, "{}", String::from_utf8_lossy(&run.stderr));
}
