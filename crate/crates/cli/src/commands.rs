//! Subcommand bodies: file layout, manifests, summaries.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use bregman_cs::{hyperplanes_from, solve, FunctionalKind, Matrix, ReconReport, SensingEnsemble, SolverTrace, Transform};
use serde::{Deserialize, Serialize};

use crate::config::{ensemble_seed, ExperimentConfig, SolverSection};
use crate::error::CliError;
use crate::io::{format_value, read_matrix, read_vector, write_matrix, write_vector};
use crate::run::{prepare, run_method, run_online, Instance, Method, OnlineOutcome, RunOutcome};

pub const TOOL: &str = "bregman-cs";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub const ENSEMBLE_SEED_RULE: &str = "seed ^ 0x9e3779b97f4a7c15";

pub const SUMMARY_HEADER: &str =
    "seed,method,status,termination,sweeps_run,rel_l2_error,support_precision,support_recall,residual_inf,wall_time";
const TRACE_HEADER: &str = "sweep,max_residual,iterate_delta,lambda_max_abs";
const CURVE_HEADER: &str = "measurements,rel_l2_error,max_residual";

fn timestamp() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

fn create_dir(path: &Path) -> Result<(), CliError> {
    fs::create_dir_all(path).map_err(|e| CliError::io(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("manifest types serialize");
    text.push('\n');
    write_text(path, &text)
}

fn files(entries: &[(&str, &str)]) -> BTreeMap<String, String> {
    entries.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Resolved {
    pub n: usize,
    pub m: usize,
    pub sparsity: usize,
    pub transform: String,
}

impl Resolved {
    fn of(config: &ExperimentConfig) -> Self {
        Resolved {
            n: config.signal.n(),
            m: config.measurements(),
            sparsity: config.signal.sparsity(),
            transform: config.signal.transform().name().into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRecord {
    pub rel_l2_error: f64,
    pub relative: bool,
    pub support_precision: f64,
    pub support_recall: f64,
    pub residual_inf: f64,
    pub wall_time: f64,
}

impl From<&ReconReport> for ReportRecord {
    fn from(r: &ReconReport) -> Self {
        ReportRecord {
            rel_l2_error: r.rel_l2_error,
            relative: r.relative,
            support_precision: r.support_precision,
            support_recall: r.support_recall,
            residual_inf: r.residual_inf,
            wall_time: r.wall_time,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub seed: u64,
    pub method: String,
    pub status: String,
    pub error: Option<String>,
    pub termination: Option<String>,
    pub sweeps_run: Option<usize>,
    pub returned_sweep: Option<usize>,
    pub report: Option<ReportRecord>,
    /// Paths relative to the experiment directory.
    pub files: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedRecord {
    pub seed: u64,
    pub ensemble_seed: u64,
    pub files: BTreeMap<String, String>,
    pub runs: Vec<RunRecord>,
}

/// Everything needed to rerun an experiment: pass the file to `--config`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub timestamp: u64,
    pub config: ExperimentConfig,
    pub resolved: Resolved,
    pub ensemble_seed_rule: String,
    pub failures: usize,
    pub seeds: Vec<SeedRecord>,
}

/// Per-run directory manifest.
#[derive(Debug, Clone, Serialize)]
struct RunDirManifest<'a> {
    tool: &'a str,
    version: &'a str,
    command: &'a str,
    timestamp: u64,
    config: &'a ExperimentConfig,
    run: &'a RunRecord,
}

pub fn trace_csv(trace: &SolverTrace) -> String {
    let mut out = String::from(TRACE_HEADER);
    out.push('\n');
    for (i, s) in trace.per_sweep.iter().enumerate() {
        out.push_str(&format!(
            "{},{},{},{}\n",
            i + 1,
            format_value(s.max_residual),
            format_value(s.iterate_delta),
            format_value(s.lambda_max_abs)
        ));
    }
    out
}

fn summary_row(record: &RunRecord) -> String {
    let opt = |v: Option<String>| v.unwrap_or_default();
    let r = record.report.as_ref();
    [
        record.seed.to_string(),
        record.method.clone(),
        record.status.clone(),
        opt(record.termination.clone()),
        opt(record.sweeps_run.map(|s| s.to_string())),
        opt(r.map(|r| format_value(r.rel_l2_error))),
        opt(r.map(|r| format_value(r.support_precision))),
        opt(r.map(|r| format_value(r.support_recall))),
        opt(r.map(|r| format_value(r.residual_inf))),
        opt(r.map(|r| format_value(r.wall_time))),
    ]
    .join(",")
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.iter().sum::<f64>() / v.len() as f64
}

fn median(v: &[f64]) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    let mut sorted = v.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mid = sorted.len() / 2;
    if sorted.len() % 2 == 1 {
        sorted[mid]
    } else {
        0.5 * (sorted[mid - 1] + sorted[mid])
    }
}

const METRICS: [&str; 5] = ["rel_l2_error", "support_precision", "support_recall", "residual_inf", "wall_time"];

/// Mean and median of every metric per method, over successful runs.
pub fn aggregate_csv(methods: &[String], records: &[RunRecord]) -> String {
    let mut header = vec!["method".to_string(), "runs".into(), "failures".into()];
    for m in METRICS {
        header.push(format!("mean_{m}"));
        header.push(format!("median_{m}"));
    }
    let mut out = header.join(",");
    out.push('\n');
    for method in methods {
        let rows: Vec<&RunRecord> = records.iter().filter(|r| &r.method == method).collect();
        let reports: Vec<&ReportRecord> = rows.iter().filter_map(|r| r.report.as_ref()).collect();
        let columns: [Vec<f64>; 5] = [
            reports.iter().map(|r| r.rel_l2_error).collect(),
            reports.iter().map(|r| r.support_precision).collect(),
            reports.iter().map(|r| r.support_recall).collect(),
            reports.iter().map(|r| r.residual_inf).collect(),
            reports.iter().map(|r| r.wall_time).collect(),
        ];
        let mut line = vec![method.clone(), rows.len().to_string(), (rows.len() - reports.len()).to_string()];
        for c in &columns {
            line.push(format_value(mean(c)));
            line.push(format_value(median(c)));
        }
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

fn record_of(seed: u64, outcome: &RunOutcome, dir: &str) -> RunRecord {
    let mut entries = Vec::new();
    if outcome.s_hat.is_some() {
        entries.push(("s_hat", format!("{dir}/s_hat.txt")));
        entries.push(("x_hat", format!("{dir}/x_hat.txt")));
    }
    if outcome.trace.is_some() {
        entries.push(("trace", format!("{dir}/trace.csv")));
    }
    RunRecord {
        seed,
        method: outcome.method.name().into(),
        status: if outcome.is_ok() { "ok" } else { "failed" }.into(),
        error: outcome.error.clone(),
        termination: outcome.trace.as_ref().map(|t| t.termination.name().into()),
        sweeps_run: outcome.trace.as_ref().map(|t| t.sweeps_run),
        returned_sweep: outcome.trace.as_ref().map(|t| t.returned_sweep),
        report: outcome.report.as_ref().map(ReportRecord::from),
        files: entries.into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
    }
}

fn write_instance(dir: &Path, inst: &Instance) -> Result<(), CliError> {
    write_vector(&dir.join("s_star.txt"), &inst.s_star)?;
    write_vector(&dir.join("x.txt"), &inst.x)?;
    write_vector(&dir.join("y.txt"), &inst.y)
}

fn write_outcome(dir: &Path, psi: &Matrix, outcome: &RunOutcome) -> Result<(), CliError> {
    if let Some(s_hat) = &outcome.s_hat {
        write_vector(&dir.join("s_hat.txt"), s_hat)?;
        write_vector(&dir.join("x_hat.txt"), &psi.matvec(s_hat)?)?;
    }
    if let Some(trace) = &outcome.trace {
        write_text(&dir.join("trace.csv"), &trace_csv(trace))?;
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub manifest: RunManifest,
    /// Outcomes per seed, in seed then method order.
    pub outcomes: Vec<(u64, Vec<RunOutcome>)>,
}

impl ExperimentResult {
    /// Report of `method` for every seed; `None` where the run failed.
    pub fn reports(&self, method: Method) -> Vec<Option<&ReconReport>> {
        self.outcomes
            .iter()
            .map(|(_, runs)| runs.iter().find(|o| o.method == method).and_then(|o| o.report.as_ref()))
            .collect()
    }
}

/// Runs every seed and method of `config`, writing into `out`.
///
/// Layout: `manifest.json`, `config.toml`, `summary.csv` (one row per seed
/// and method), `aggregate.csv`, and `seed-<k>/` holding the instance
/// vectors plus one subdirectory per method.
pub fn experiment(config: &ExperimentConfig, out: &Path) -> Result<ExperimentResult, CliError> {
    config.validate()?;
    let methods = Method::all_for(config)?;
    create_dir(out)?;
    write_text(&out.join("config.toml"), &config.to_toml())?;

    let mut seeds = Vec::new();
    let mut outcomes = Vec::new();
    for seed in config.seeds.to_vec() {
        let seed_dir = format!("seed-{seed}");
        create_dir(&out.join(&seed_dir))?;
        let inst = prepare(config, seed)?;
        write_instance(&out.join(&seed_dir), &inst)?;
        let mut runs = Vec::new();
        let mut records = Vec::new();
        for &method in &methods {
            let outcome = run_method(&inst, method, config);
            let dir = format!("{seed_dir}/{}", method.name());
            create_dir(&out.join(&dir))?;
            write_outcome(&out.join(&dir), &inst.ensemble.psi, &outcome)?;
            let record = record_of(seed, &outcome, &dir);
            write_json(
                &out.join(&dir).join("manifest.json"),
                &RunDirManifest { tool: TOOL, version: VERSION, command: "experiment", timestamp: timestamp(), config, run: &record },
            )?;
            records.push(record);
            runs.push(outcome);
        }
        seeds.push(SeedRecord {
            seed,
            ensemble_seed: ensemble_seed(seed),
            files: files(&[
                ("s_star", &format!("{seed_dir}/s_star.txt")),
                ("x", &format!("{seed_dir}/x.txt")),
                ("y", &format!("{seed_dir}/y.txt")),
            ]),
            runs: records,
        });
        outcomes.push((seed, runs));
    }

    let all: Vec<RunRecord> = seeds.iter().flat_map(|s| s.runs.iter().cloned()).collect();
    let mut summary = String::from(SUMMARY_HEADER);
    summary.push('\n');
    for r in &all {
        summary.push_str(&summary_row(r));
        summary.push('\n');
    }
    write_text(&out.join("summary.csv"), &summary)?;
    let names: Vec<String> = methods.iter().map(|m| m.name().to_string()).collect();
    write_text(&out.join("aggregate.csv"), &aggregate_csv(&names, &all))?;

    let manifest = RunManifest {
        tool: TOOL.into(),
        version: VERSION.into(),
        command: "experiment".into(),
        timestamp: timestamp(),
        config: config.clone(),
        resolved: Resolved::of(config),
        ensemble_seed_rule: ENSEMBLE_SEED_RULE.into(),
        failures: all.iter().filter(|r| r.status != "ok").count(),
        seeds,
    };
    write_json(&out.join("manifest.json"), &manifest)?;
    Ok(ExperimentResult { manifest, outcomes })
}

/// Writes one seeded instance: `x`, `s_star`, `phi`, `psi`, `theta`, `y`.
pub fn generate(config: &ExperimentConfig, seed: u64, out: &Path) -> Result<Instance, CliError> {
    config.validate()?;
    create_dir(out)?;
    let inst = prepare(config, seed)?;
    write_instance(out, &inst)?;
    write_matrix(&out.join("phi.txt"), &inst.ensemble.phi)?;
    write_matrix(&out.join("psi.txt"), &inst.ensemble.psi)?;
    write_matrix(&out.join("theta.txt"), &inst.ensemble.theta)?;
    #[derive(Serialize)]
    struct GenerateManifest<'a> {
        tool: &'a str,
        version: &'a str,
        command: &'a str,
        timestamp: u64,
        config: &'a ExperimentConfig,
        resolved: Resolved,
        seed: u64,
        ensemble_seed: u64,
        ensemble_seed_rule: &'a str,
        files: BTreeMap<String, String>,
    }
    write_json(
        &out.join("manifest.json"),
        &GenerateManifest {
            tool: TOOL,
            version: VERSION,
            command: "generate",
            timestamp: timestamp(),
            config,
            resolved: Resolved::of(config),
            seed,
            ensemble_seed: ensemble_seed(seed),
            ensemble_seed_rule: ENSEMBLE_SEED_RULE,
            files: files(&[
                ("x", "x.txt"),
                ("s_star", "s_star.txt"),
                ("phi", "phi.txt"),
                ("psi", "psi.txt"),
                ("theta", "theta.txt"),
                ("y", "y.txt"),
            ]),
        },
    )?;
    Ok(inst)
}

/// Problem read back from a `generate` directory. `psi` defaults to the
/// identity and `s_star` is optional.
#[derive(Debug, Clone)]
pub struct Inputs {
    pub ensemble: SensingEnsemble,
    pub y: Vec<f64>,
    pub s_star: Option<Vec<f64>>,
}

pub fn read_inputs(dir: &Path) -> Result<Inputs, CliError> {
    let theta = read_matrix(&dir.join("theta.txt"))?;
    let y = read_vector(&dir.join("y.txt"))?;
    let psi_path = dir.join("psi.txt");
    let psi = if psi_path.exists() { read_matrix(&psi_path)? } else { Matrix::identity(theta.ncols()) };
    let star_path = dir.join("s_star.txt");
    let s_star = if star_path.exists() { Some(read_vector(&star_path)?) } else { None };
    let mismatch = |what: &str, expected: usize, actual: usize| {
        Err(CliError::Config(format!("{}: {what} has length {actual}, expected {expected}", dir.display())))
    };
    if y.len() != theta.nrows() {
        return mismatch("y.txt", theta.nrows(), y.len());
    }
    if psi.nrows() != theta.ncols() || psi.ncols() != theta.ncols() {
        return mismatch("psi.txt", theta.ncols(), psi.nrows());
    }
    if let Some(s) = &s_star {
        if s.len() != theta.ncols() {
            return mismatch("s_star.txt", theta.ncols(), s.len());
        }
    }
    let phi_path = dir.join("phi.txt");
    let phi = if phi_path.exists() { read_matrix(&phi_path)? } else { theta.clone() };
    let transform = if psi == Matrix::identity(psi.nrows()) { Transform::Identity } else { Transform::Dct };
    let ensemble = SensingEnsemble {
        phi,
        n: theta.ncols(),
        m: theta.nrows(),
        theta,
        psi,
        seed: 0,
        transform,
    };
    Ok(Inputs { ensemble, y, s_star })
}

#[derive(Debug, Clone, Serialize)]
struct SolveManifest<'a> {
    tool: &'a str,
    version: &'a str,
    command: &'a str,
    timestamp: u64,
    input: String,
    kind: &'a str,
    solver: &'a SolverSection,
    refresh_sweeps: Option<usize>,
    status: &'a str,
    error: Option<String>,
    termination: Option<&'a str>,
    sweeps_run: Option<usize>,
    returned_sweep: Option<usize>,
    projections: Option<usize>,
    report: Option<ReportRecord>,
    files: BTreeMap<String, String>,
}

fn report_for(inputs: &Inputs, s_hat: &[f64], support_eps: f64, wall_time: f64) -> Result<Option<ReportRecord>, CliError> {
    let Some(s_star) = &inputs.s_star else { return Ok(None) };
    let mut r = bregman_cs::evaluate(s_hat, s_star, &inputs.ensemble, &inputs.y, support_eps)?;
    r.wall_time = wall_time;
    Ok(Some(ReportRecord::from(&r)))
}

/// Solves the problem in `input` with `kind`, writing `s_hat`, `x_hat`,
/// `trace.csv` and `manifest.json` to `out`. A solver error is recorded in
/// the manifest before it is returned.
pub fn solve_dir(
    input: &Path,
    kind: FunctionalKind,
    solver: &SolverSection,
    support_eps: f64,
    out: &Path,
) -> Result<SolverTrace, CliError> {
    let inputs = read_inputs(input)?;
    create_dir(out)?;
    let mut manifest = SolveManifest {
        tool: TOOL,
        version: VERSION,
        command: "solve",
        timestamp: timestamp(),
        input: input.display().to_string(),
        kind: kind.name(),
        solver,
        refresh_sweeps: None,
        status: "failed",
        error: None,
        termination: None,
        sweeps_run: None,
        returned_sweep: None,
        projections: None,
        report: None,
        files: BTreeMap::new(),
    };
    let start = std::time::Instant::now();
    let result = hyperplanes_from(&inputs.ensemble.theta, &inputs.y).and_then(|h| solve(&h, &solver.for_kind(kind)));
    let elapsed = start.elapsed().as_secs_f64();
    let (s_hat, trace) = match result {
        Ok(v) => v,
        Err(e) => {
            manifest.error = Some(e.to_string());
            write_json(&out.join("manifest.json"), &manifest)?;
            return Err(e.into());
        }
    };
    write_vector(&out.join("s_hat.txt"), &s_hat)?;
    write_vector(&out.join("x_hat.txt"), &inputs.ensemble.psi.matvec(&s_hat)?)?;
    write_text(&out.join("trace.csv"), &trace_csv(&trace))?;
    manifest.status = "ok";
    manifest.termination = Some(trace.termination.name());
    manifest.sweeps_run = Some(trace.sweeps_run);
    manifest.returned_sweep = Some(trace.returned_sweep);
    manifest.projections = Some(trace.projections);
    manifest.report = report_for(&inputs, &s_hat, support_eps, elapsed)?;
    manifest.files = files(&[("s_hat", "s_hat.txt"), ("x_hat", "x_hat.txt"), ("trace", "trace.csv")]);
    write_json(&out.join("manifest.json"), &manifest)?;
    Ok(trace)
}

/// Online reconstruction of the problem in `input`: writes the
/// error-versus-measurements curve, the settled estimate and its trace.
pub fn online_dir(
    input: &Path,
    kind: FunctionalKind,
    solver: &SolverSection,
    refresh_sweeps: usize,
    support_eps: f64,
    out: &Path,
) -> Result<OnlineOutcome, CliError> {
    let inputs = read_inputs(input)?;
    let s_star = inputs
        .s_star
        .clone()
        .ok_or_else(|| CliError::Config(format!("{}: online needs s_star.txt for the error curve", input.display())))?;
    create_dir(out)?;
    let start = std::time::Instant::now();
    let outcome = run_online(&inputs.ensemble, &inputs.y, &s_star, &solver.for_kind(kind), refresh_sweeps);
    let elapsed = start.elapsed().as_secs_f64();
    let outcome = match outcome {
        Ok(o) => o,
        Err(e) => {
            let manifest = SolveManifest {
                tool: TOOL,
                version: VERSION,
                command: "online",
                timestamp: timestamp(),
                input: input.display().to_string(),
                kind: kind.name(),
                solver,
                refresh_sweeps: Some(refresh_sweeps),
                status: "failed",
                error: Some(e.to_string()),
                termination: None,
                sweeps_run: None,
                returned_sweep: None,
                projections: None,
                report: None,
                files: BTreeMap::new(),
            };
            write_json(&out.join("manifest.json"), &manifest)?;
            return Err(e);
        }
    };
    let mut curve = String::from(CURVE_HEADER);
    curve.push('\n');
    for p in &outcome.curve {
        curve.push_str(&format!("{},{},{}\n", p.measurements, format_value(p.rel_l2_error), format_value(p.max_residual)));
    }
    write_text(&out.join("curve.csv"), &curve)?;
    write_vector(&out.join("s_hat.txt"), &outcome.s_hat)?;
    write_vector(&out.join("x_hat.txt"), &inputs.ensemble.psi.matvec(&outcome.s_hat)?)?;
    write_text(&out.join("trace.csv"), &trace_csv(&outcome.settle))?;
    let manifest = SolveManifest {
        tool: TOOL,
        version: VERSION,
        command: "online",
        timestamp: timestamp(),
        input: input.display().to_string(),
        kind: kind.name(),
        solver,
        refresh_sweeps: Some(refresh_sweeps),
        status: "ok",
        error: None,
        termination: Some(outcome.settle.termination.name()),
        sweeps_run: Some(outcome.settle.sweeps_run),
        returned_sweep: Some(outcome.settle.returned_sweep),
        projections: Some(outcome.projections),
        report: report_for(&inputs, &outcome.s_hat, support_eps, elapsed)?,
        files: files(&[("curve", "curve.csv"), ("s_hat", "s_hat.txt"), ("x_hat", "x_hat.txt"), ("trace", "trace.csv")]),
    };
    write_json(&out.join("manifest.json"), &manifest)?;
    Ok(outcome)
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub runs_checked: usize,
    /// Largest `|recomputed - recorded| / max(1, |recorded|)` seen.
    pub max_deviation: f64,
}

const VERIFY_TOL: f64 = 1e-12;

fn parse_csv(path: &Path) -> Result<Vec<Vec<String>>, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    Ok(text.lines().skip(1).filter(|l| !l.is_empty()).map(|l| l.split(',').map(str::to_string).collect()).collect())
}

fn parse_field(path: &Path, line: usize, field: &str) -> Result<f64, CliError> {
    field.parse().map_err(|_| CliError::format(path, line, &format!("not a number: '{field}'")))
}

/// Recomputes every metric in `summary.csv` and `aggregate.csv` of an
/// experiment directory from the emitted vectors. Matrices are rebuilt
/// from the seeds recorded in the manifest, and the stored measurements
/// must match them exactly.
pub fn verify(dir: &Path) -> Result<VerifyReport, CliError> {
    let manifest_path = dir.join("manifest.json");
    let text = fs::read_to_string(&manifest_path).map_err(|e| CliError::io(&manifest_path, e))?;
    let manifest: RunManifest = serde_json::from_str(&text).map_err(|e| CliError::Config(e.to_string()))?;
    let config = &manifest.config;
    let summary_path = dir.join("summary.csv");
    let rows = parse_csv(&summary_path)?;

    let mut deviation = 0.0f64;
    let mut check = |what: String, recorded: f64, recomputed: f64| -> Result<(), CliError> {
        let d = (recorded - recomputed).abs() / recorded.abs().max(1.0);
        let same_nan = recorded.is_nan() && recomputed.is_nan();
        if !same_nan && !(d <= VERIFY_TOL) {
            return Err(CliError::Verify(format!("{what}: recorded {recorded}, recomputed {recomputed}")));
        }
        if !same_nan {
            deviation = deviation.max(d);
        }
        Ok(())
    };

    let expected_rows: usize = manifest.seeds.iter().map(|s| s.runs.len()).sum();
    if rows.len() != expected_rows {
        return Err(CliError::Verify(format!("summary has {} rows, manifest lists {expected_rows} runs", rows.len())));
    }
    let mut row_iter = rows.iter().enumerate();
    let mut records = Vec::new();
    let mut runs_checked = 0;
    for seed_record in &manifest.seeds {
        let inst = prepare(config, seed_record.seed)?;
        let read = |key: &str| -> Result<Vec<f64>, CliError> {
            let rel = seed_record
                .files
                .get(key)
                .ok_or_else(|| CliError::Verify(format!("seed {}: no `{key}` file recorded", seed_record.seed)))?;
            read_vector(&dir.join(rel))
        };
        let s_star = read("s_star")?;
        let y = read("y")?;
        if s_star != inst.s_star || y != inst.y {
            return Err(CliError::Verify(format!("seed {}: stored instance differs from its seed", seed_record.seed)));
        }
        for run in &seed_record.runs {
            let (idx, row) = row_iter.next().expect("row count checked");
            let line = idx + 2;
            if row.len() != 10 || row[0] != run.seed.to_string() || row[1] != run.method {
                return Err(CliError::format(&summary_path, line, "row does not match the manifest"));
            }
            let mut record = run.clone();
            if run.status == "ok" {
                let s_hat = read_vector(&dir.join(&run.files["s_hat"]))?;
                let r = bregman_cs::evaluate(&s_hat, &s_star, &inst.ensemble, &y, config.support_eps)?;
                let wall_time = parse_field(&summary_path, line, &row[9])?;
                let label = |m: &str| format!("seed {} {} {m}", run.seed, run.method);
                check(label("rel_l2_error"), parse_field(&summary_path, line, &row[5])?, r.rel_l2_error)?;
                check(label("support_precision"), parse_field(&summary_path, line, &row[6])?, r.support_precision)?;
                check(label("support_recall"), parse_field(&summary_path, line, &row[7])?, r.support_recall)?;
                check(label("residual_inf"), parse_field(&summary_path, line, &row[8])?, r.residual_inf)?;
                record.report = Some(ReportRecord { wall_time, ..ReportRecord::from(&r) });
                runs_checked += 1;
            }
            records.push(record);
        }
    }

    let methods: Vec<String> = Method::all_for(config)?.iter().map(|m| m.name().to_string()).collect();
    let recomputed = aggregate_csv(&methods, &records);
    let aggregate_path = dir.join("aggregate.csv");
    let stored = parse_csv(&aggregate_path)?;
    let fresh: Vec<Vec<String>> =
        recomputed.lines().skip(1).map(|l| l.split(',').map(str::to_string).collect()).collect();
    if stored.len() != fresh.len() {
        return Err(CliError::Verify("aggregate row count differs".into()));
    }
    for (i, (a, b)) in stored.iter().zip(&fresh).enumerate() {
        if a.len() != b.len() || a[..3] != b[..3] {
            return Err(CliError::format(&aggregate_path, i + 2, "row does not match the summary"));
        }
        for (j, (x, y)) in a.iter().zip(b).enumerate().skip(3) {
            let recorded = parse_field(&aggregate_path, i + 2, x)?;
            let again = parse_field(&aggregate_path, i + 2, y)?;
            check(format!("aggregate {} column {}", a[0], j + 1), recorded, again)?;
        }
    }
    Ok(VerifyReport { runs_checked, max_deviation: deviation })
}

/// Resolves the experiment directory for `config` and an optional override.
pub fn output_dir(config: &ExperimentConfig, out: Option<&Path>) -> PathBuf {
    out.map(Path::to_path_buf).unwrap_or_else(|| config.output_dir.clone())
}
