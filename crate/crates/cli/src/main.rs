use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bregman_cs::FunctionalKind;
use bregman_cs_cli::commands::{self, output_dir};
use bregman_cs_cli::config::{Seeds, SolverSection};
use bregman_cs_cli::{CliError, ExperimentConfig};
use clap::{Parser, Subcommand};

/// Sparse recovery by cyclic Bregman D-projections.
#[derive(Debug, Parser)]
#[command(name = "bregman-cs", version)]
struct Cli {
    /// Experiment config (TOML), or a manifest.json from an earlier run.
    #[arg(long, global = true, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Built-in config: cusp-2s, cusp-10s, rand-6s or rand-10s.
    #[arg(long, global = true)]
    preset: Option<String>,
    /// Run this seed only.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Potential to minimize: euclidean, positive-entropy or shifted-entropy.
    #[arg(long, global = true)]
    kind: Option<FunctionalKind>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a signal, its ensemble and measurements for one seed.
    Generate,
    /// Reconstruct from a `generate` directory.
    Solve {
        #[arg(long)]
        input: PathBuf,
    },
    /// Run every seed, kind and baseline of a config.
    Experiment,
    /// Feed measurements one at a time and record the error curve.
    Online {
        /// A `generate` directory; generated from the config when absent.
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        refresh_sweeps: usize,
    },
    /// Recompute an experiment's summary from its emitted vectors.
    Verify {
        dir: Option<PathBuf>,
    },
}

impl Cli {
    fn config(&self) -> Result<Option<ExperimentConfig>, CliError> {
        let mut config = match (&self.config, &self.preset) {
            (Some(path), _) => ExperimentConfig::load(path)?,
            (None, Some(name)) => ExperimentConfig::preset(name)?,
            (None, None) => return Ok(None),
        };
        if let Some(seed) = self.seed {
            config.seeds = Seeds::List(vec![seed]);
        }
        if let Some(kind) = self.kind {
            config.kinds = vec![kind.name().into()];
        }
        if let Some(out) = &self.out {
            config.output_dir = out.clone();
        }
        config.validate()?;
        Ok(Some(config))
    }

    fn require_config(&self) -> Result<ExperimentConfig, CliError> {
        self.config()?.ok_or_else(|| CliError::Config("pass --config <path> or --preset <name>".into()))
    }

    /// Kind, solver settings and support threshold for single-problem commands.
    fn solver_settings(&self, config: Option<&ExperimentConfig>) -> Result<(FunctionalKind, SolverSection, f64), CliError> {
        let kind = match (self.kind, config) {
            (Some(k), _) => k,
            (None, Some(c)) => c.kinds()?[0],
            (None, None) => FunctionalKind::ShiftedEntropy,
        };
        let solver = config.map(|c| c.solver.clone()).unwrap_or_default();
        let eps = config.map_or(1e-3, |c| c.support_eps);
        Ok((kind, solver, eps))
    }

    fn out_or(&self, fallback: &str) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from(fallback))
    }
}

fn first_seed(config: &ExperimentConfig) -> u64 {
    config.seeds.to_vec()[0]
}

fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Generate => {
            let config = cli.require_config()?;
            let out = output_dir(&config, cli.out.as_deref());
            let seed = first_seed(&config);
            let inst = commands::generate(&config, seed, &out)?;
            println!("generated seed {seed}: n={} m={} -> {}", inst.ensemble.n, inst.ensemble.m, out.display());
        }
        Command::Solve { input } => {
            let config = cli.config()?;
            let (kind, solver, eps) = cli.solver_settings(config.as_ref())?;
            let out = cli.out_or("out/solve");
            let trace = commands::solve_dir(input, kind, &solver, eps, &out)?;
            println!(
                "{kind}: {} after {} sweeps, residual {:.3e} -> {}",
                trace.termination.name(),
                trace.sweeps_run,
                trace.final_residual().unwrap_or(f64::NAN),
                out.display()
            );
        }
        Command::Experiment => {
            let config = cli.require_config()?;
            let out = output_dir(&config, cli.out.as_deref());
            let result = commands::experiment(&config, &out)?;
            let text = std::fs::read_to_string(out.join("aggregate.csv")).map_err(|e| CliError::io(&out, e))?;
            print!("{text}");
            if result.manifest.failures > 0 {
                return Err(CliError::Solver(bregman_cs::Error::InvalidArgument(format!(
                    "{} run(s) failed; see {}",
                    result.manifest.failures,
                    out.join("summary.csv").display()
                ))));
            }
        }
        Command::Online { input, refresh_sweeps } => {
            let config = cli.config()?;
            let (kind, solver, eps) = cli.solver_settings(config.as_ref())?;
            let out = cli.out_or("out/online");
            let input = match (input, &config) {
                (Some(dir), _) => dir.clone(),
                (None, Some(c)) => {
                    let dir = out.join("input");
                    commands::generate(c, first_seed(c), &dir)?;
                    dir
                }
                (None, None) => {
                    return Err(CliError::Config("online needs --input <dir>, --config or --preset".into()))
                }
            };
            let outcome = commands::online_dir(&input, kind, &solver, *refresh_sweeps, eps, &out)?;
            let first = outcome.curve.first().map_or(f64::NAN, |p| p.rel_l2_error);
            let last = outcome.curve.last().map_or(f64::NAN, |p| p.rel_l2_error);
            println!(
                "{kind}: error {first:.3e} -> {last:.3e} over {} rows; settled {} after {} sweeps -> {}",
                outcome.curve.len(),
                outcome.settle.termination.name(),
                outcome.settle.sweeps_run,
                out.display()
            );
        }
        Command::Verify { dir } => {
            let dir = match (dir, &cli.out) {
                (Some(d), _) | (None, Some(d)) => d.clone(),
                (None, None) => output_dir(&cli.require_config()?, None),
            };
            let report = commands::verify(Path::new(&dir))?;
            println!("verified {} runs, max deviation {:.3e}", report.runs_checked, report.max_deviation);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
