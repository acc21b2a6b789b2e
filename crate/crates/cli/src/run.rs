//! In-memory pipeline: generate, measure, reconstruct, evaluate.

use std::time::Instant;

use bregman_cs::baselines::L0_MAX_K;
use bregman_cs::{
    evaluate, hyperplanes_from, l0_oracle, make_cusp_scaled, make_gaussian_ensemble, make_random_sparse, measure,
    pseudo_inverse_solve, solve, FunctionalKind, OnlineSolver, ReconReport, SensingEnsemble, SolverConfig,
    SolverTrace, SparseSignalSpec,
};

use crate::config::{ensemble_seed, ExperimentConfig, SignalConfig};
use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Bregman(FunctionalKind),
    PseudoInverse,
    L0Oracle,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Bregman(kind) => kind.name(),
            Method::PseudoInverse => "pseudo-inverse",
            Method::L0Oracle => "l0-oracle",
        }
    }

    /// Configured kinds in order, then the active baselines.
    pub fn all_for(config: &ExperimentConfig) -> Result<Vec<Method>, CliError> {
        let mut methods: Vec<Method> = config.kinds()?.into_iter().map(Method::Bregman).collect();
        if config.baselines.pseudo_inverse {
            methods.push(Method::PseudoInverse);
        }
        if config.baselines.l0_oracle {
            methods.push(Method::L0Oracle);
        }
        Ok(methods)
    }
}

impl std::str::FromStr for Method {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "pseudo-inverse" => Ok(Method::PseudoInverse),
            "l0-oracle" => Ok(Method::L0Oracle),
            other => other
                .parse()
                .map(Method::Bregman)
                .map_err(|_| CliError::Config(format!("unknown method '{other}'"))),
        }
    }
}

/// One seeded problem: planted coefficients, signal, ensemble, measurements.
#[derive(Debug, Clone)]
pub struct Instance {
    pub seed: u64,
    pub ensemble: SensingEnsemble,
    pub s_star: Vec<f64>,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

pub fn prepare(config: &ExperimentConfig, seed: u64) -> Result<Instance, CliError> {
    let n = config.signal.n();
    let transform = config.signal.transform();
    let s_star = match &config.signal {
        SignalConfig::Cusp { n, sparsity, amplitude } => make_cusp_scaled(*n, *sparsity, *amplitude)?.1,
        SignalConfig::RandomSparse { n, sparsity, amplitude_min, amplitude_max } => {
            make_random_sparse(&SparseSignalSpec {
                n: *n,
                sparsity: *sparsity,
                amplitude_range: (*amplitude_min, *amplitude_max),
                seed,
            })?
        }
    };
    let ensemble = make_gaussian_ensemble(n, config.measurements(), ensemble_seed(seed), transform)?;
    let x = ensemble.psi.matvec(&s_star)?;
    let y = measure(&ensemble, &s_star)?;
    Ok(Instance { seed, ensemble, s_star, x, y })
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub method: Method,
    pub s_hat: Option<Vec<f64>>,
    pub trace: Option<SolverTrace>,
    pub report: Option<ReconReport>,
    pub error: Option<String>,
}

impl RunOutcome {
    pub fn is_ok(&self) -> bool {
        self.error.is_none()
    }
}

/// Reconstructs `s` by `method` and scores it. Failures are captured in
/// the outcome rather than returned.
pub fn run_method(instance: &Instance, method: Method, config: &ExperimentConfig) -> RunOutcome {
    let start = Instant::now();
    let result = reconstruct(instance, method, config);
    let elapsed = start.elapsed().as_secs_f64();
    let failed = |e: String| RunOutcome { method, s_hat: None, trace: None, report: None, error: Some(e) };
    match result {
        Err(e) => failed(e.to_string()),
        Ok((s_hat, trace)) => {
            match evaluate(&s_hat, &instance.s_star, &instance.ensemble, &instance.y, config.support_eps) {
                Ok(mut report) => {
                    report.wall_time = elapsed;
                    RunOutcome { method, s_hat: Some(s_hat), trace, report: Some(report), error: None }
                }
                Err(e) => failed(e.to_string()),
            }
        }
    }
}

fn reconstruct(
    instance: &Instance,
    method: Method,
    config: &ExperimentConfig,
) -> bregman_cs::Result<(Vec<f64>, Option<SolverTrace>)> {
    let ens = &instance.ensemble;
    match method {
        Method::Bregman(kind) => {
            let hyperplanes = hyperplanes_from(&ens.theta, &instance.y)?;
            let (s, trace) = solve(&hyperplanes, &config.solver.for_kind(kind))?;
            Ok((s, Some(trace)))
        }
        Method::PseudoInverse => Ok((pseudo_inverse_solve(ens, &instance.y)?, None)),
        Method::L0Oracle => Ok((l0_oracle(ens, &instance.y, config.baselines.l0_k_max.min(L0_MAX_K))?, None)),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurvePoint {
    pub measurements: usize,
    pub rel_l2_error: f64,
    pub max_residual: f64,
}

#[derive(Debug, Clone)]
pub struct OnlineOutcome {
    /// State after each append.
    pub curve: Vec<CurvePoint>,
    /// Sweeps after the last append, under the batch stopping rules.
    pub settle: SolverTrace,
    pub s_hat: Vec<f64>,
    pub projections: usize,
}

/// Feeds the rows of `theta` one at a time, then settles the estimate.
pub fn run_online(
    ens: &SensingEnsemble,
    y: &[f64],
    s_star: &[f64],
    solver: &SolverConfig,
    refresh_sweeps: usize,
) -> Result<OnlineOutcome, CliError> {
    let hyperplanes = hyperplanes_from(&ens.theta, y)?;
    let mut online = OnlineSolver::new(ens.n, solver.clone())?;
    let truth_norm = bregman_cs::matrix::norm2(s_star);
    let error_of = |s: &[f64]| {
        let err = bregman_cs::matrix::dist2(s, s_star);
        if truth_norm > 0.0 {
            err / truth_norm
        } else {
            err
        }
    };
    let mut curve = Vec::with_capacity(hyperplanes.len());
    for (i, h) in hyperplanes.into_iter().enumerate() {
        online.append(h, refresh_sweeps)?;
        curve.push(CurvePoint {
            measurements: i + 1,
            rel_l2_error: error_of(online.current()),
            max_residual: online.max_residual(),
        });
    }
    let settle = online.settle()?;
    Ok(OnlineOutcome { curve, settle, s_hat: online.current().to_vec(), projections: online.projections() })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config() -> ExperimentConfig {
        ExperimentConfig::parse(
            r#"
            signal.type = "random-sparse"
            signal.n = 12
            signal.sparsity = 2
            signal.amplitude_min = 1.0
            signal.amplitude_max = 2.0
            measurement_factor = 4
            kinds = ["euclidean", "shifted-entropy"]
            baselines.l0_oracle = true
            baselines.l0_k_max = 2
            "#,
        )
        .unwrap()
    }

    #[test]
    fn methods_in_configured_order() {
        let names: Vec<&str> = Method::all_for(&small_config()).unwrap().iter().map(|m| m.name()).collect();
        assert_eq!(names, ["euclidean", "shifted-entropy", "pseudo-inverse", "l0-oracle"]);
        for name in names {
            assert_eq!(name.parse::<Method>().unwrap().name(), name);
        }
    }

    #[test]
    fn instance_is_consistent_and_seeded() {
        let c = small_config();
        let a = prepare(&c, 3).unwrap();
        assert_eq!(a.ensemble.m, 8);
        assert_eq!(a.s_star.iter().filter(|v| **v != 0.0).count(), 2);
        assert_eq!(a.y, a.ensemble.theta.matvec(&a.s_star).unwrap());
        let b = prepare(&c, 3).unwrap();
        assert_eq!((&a.s_star, &a.y), (&b.s_star, &b.y));
        assert_ne!(prepare(&c, 4).unwrap().y, b.y);
    }

    #[test]
    fn oracle_recovers_and_failures_are_captured() {
        let c = small_config();
        let inst = prepare(&c, 1).unwrap();
        let out = run_method(&inst, Method::L0Oracle, &c);
        assert!(out.report.unwrap().rel_l2_error < 1e-10);

        let mut broken = inst.clone();
        broken.y.pop();
        let out = run_method(&broken, Method::PseudoInverse, &c);
        assert!(!out.is_ok() && out.s_hat.is_none());
    }

    #[test]
    fn online_without_refresh_counts_projections() {
        let c = small_config();
        let inst = prepare(&c, 2).unwrap();
        let solver = c.solver.for_kind(FunctionalKind::ShiftedEntropy);
        let out = run_online(&inst.ensemble, &inst.y, &inst.s_star, &solver, 0).unwrap();
        assert_eq!(out.curve.len(), 8);
        assert_eq!(out.projections, 8 + out.settle.projections);
    }
}
