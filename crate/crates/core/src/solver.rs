//! Cyclic row-action iteration and its online variant.
//!
//! Each sweep D-projects the current estimate onto `H_1`, then `H_2`, and
//! so on through `H_M`, in fixed ascending order. For the entropy kinds the
//! estimate is carried in gradient space as well, since every projection is
//! an additive update `g'(s) += lambda * row` there.

use crate::error::{check_len, Error, Result};
use crate::functional::FunctionalKind;
use crate::matrix::{dist2, norm2};
use crate::projection::{gradient_vector, search, Hyperplane, MultiplierOptions, MultiplierProblem};

#[derive(Debug, Clone, PartialEq)]
pub enum InitialPoint {
    Zeros,
    Ones,
    Provided(Vec<f64>),
}

impl InitialPoint {
    fn materialize(&self, n: usize) -> Result<Vec<f64>> {
        match self {
            InitialPoint::Zeros => Ok(vec![0.0; n]),
            InitialPoint::Ones => Ok(vec![1.0; n]),
            InitialPoint::Provided(v) => {
                check_len(n, v.len())?;
                Ok(v.clone())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub kind: FunctionalKind,
    pub max_sweeps: usize,
    /// Stop when `max_i |theta_i . s - y_i| / (1 + |y_i|) <= feas_tol`.
    pub feas_tol: f64,
    /// Stop when `|s_k - s_{k-1}| / (1 + |s_k|) < delta_tol` over a sweep.
    pub delta_tol: f64,
    pub newton_tol: f64,
    pub newton_cap: usize,
    pub initial_point: InitialPoint,
}

impl SolverConfig {
    /// Defaults for `kind`: zero start, or all ones for the positive entropy.
    pub fn new(kind: FunctionalKind) -> Self {
        let initial_point = match kind {
            FunctionalKind::PositiveEntropy => InitialPoint::Ones,
            _ => InitialPoint::Zeros,
        };
        SolverConfig {
            kind,
            max_sweeps: 2000,
            feas_tol: 1e-8,
            delta_tol: 1e-12,
            newton_tol: 1e-12,
            newton_cap: 100,
            initial_point,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_sweeps == 0 || self.newton_cap == 0 {
            return Err(Error::InvalidArgument("max_sweeps and newton_cap must be at least 1".into()));
        }
        for (name, v) in [("feas_tol", self.feas_tol), ("delta_tol", self.delta_tol), ("newton_tol", self.newton_tol)] {
            if !(v > 0.0) {
                return Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    fn multiplier_options(&self) -> MultiplierOptions {
        MultiplierOptions { tol: self.newton_tol, max_iters: self.newton_cap }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepStats {
    /// Largest relative row residual after the sweep.
    pub max_residual: f64,
    /// `|s_k - s_{k-1}| / (1 + |s_k|)`.
    pub iterate_delta: f64,
    pub lambda_max_abs: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Feasible,
    Stalled,
    SweepCapReached,
}

impl Termination {
    pub fn name(self) -> &'static str {
        match self {
            Termination::Feasible => "feasible",
            Termination::Stalled => "stalled",
            Termination::SweepCapReached => "sweep-cap",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverTrace {
    pub kind: FunctionalKind,
    pub per_sweep: Vec<SweepStats>,
    pub termination: Termination,
    pub sweeps_run: usize,
    /// Total single-hyperplane projections performed.
    pub projections: usize,
    /// Sweep (1-based) whose iterate was returned.
    pub returned_sweep: usize,
}

impl SolverTrace {
    pub fn final_residual(&self) -> Option<f64> {
        self.per_sweep.last().map(|s| s.max_residual)
    }
}

/// Current estimate of a row-action iteration.
#[derive(Debug, Clone)]
struct Iterate {
    kind: FunctionalKind,
    point: Vec<f64>,
    /// `g'(point)`; unused for the Euclidean kind.
    grad: Vec<f64>,
    scratch: Vec<f64>,
}

impl Iterate {
    fn new(kind: FunctionalKind, point: Vec<f64>) -> Result<Self> {
        let grad = match kind {
            FunctionalKind::Euclidean => Vec::new(),
            _ => gradient_vector(kind, &point)?,
        };
        let scratch = vec![0.0; point.len()];
        Ok(Iterate { kind, point, grad, scratch })
    }

    /// Projects in place and returns the multiplier.
    fn project(&mut self, h: &Hyperplane, opts: MultiplierOptions) -> Result<f64> {
        let row = h.row();
        if self.kind == FunctionalKind::Euclidean {
            let lambda = -h.residual(&self.point) / h.norm_sq();
            for (s, t) in self.point.iter_mut().zip(row) {
                *s += lambda * t;
            }
            return Ok(lambda);
        }
        let problem = MultiplierProblem {
            kind: self.kind,
            point0: &self.point,
            grad0: &self.grad,
            row,
            value: h.value(),
        };
        let outcome = search(&problem, opts, false, Some(&mut self.scratch))?;
        let lambda = outcome.solution.lambda;
        if lambda != 0.0 {
            let cached = outcome.scratch_lambda == Some(lambda);
            for (n, &t) in row.iter().enumerate() {
                if t != 0.0 {
                    self.grad[n] += lambda * t;
                    self.point[n] = if cached { self.scratch[n] } else { self.kind.gradient_inverse(self.grad[n]) };
                }
            }
        }
        Ok(lambda)
    }
}

fn max_relative_residual(hyperplanes: &[Hyperplane], s: &[f64]) -> f64 {
    hyperplanes.iter().map(|h| h.relative_residual(s)).fold(0.0, f64::max)
}

fn check_dims(hyperplanes: &[Hyperplane], n: usize) -> Result<()> {
    hyperplanes.iter().try_for_each(|h| check_len(n, h.dim()))
}

/// One full cyclic pass; returns the largest `|lambda|`.
fn sweep(it: &mut Iterate, hyperplanes: &[Hyperplane], opts: MultiplierOptions, sweep_no: usize) -> Result<f64> {
    let mut lambda_max = 0.0f64;
    for (row, h) in hyperplanes.iter().enumerate() {
        let lambda = it
            .project(h, opts)
            .map_err(|e| Error::Projection { sweep: sweep_no, row, source: Box::new(e) })?;
        lambda_max = lambda_max.max(lambda.abs());
    }
    Ok(lambda_max)
}

/// Runs cyclic sweeps until the iterate is feasible, stops moving, or the
/// sweep cap is reached. If the iterate never becomes feasible, the iterate
/// with the smallest residual seen at the end of a sweep is returned.
pub fn solve(hyperplanes: &[Hyperplane], config: &SolverConfig) -> Result<(Vec<f64>, SolverTrace)> {
    config.validate()?;
    let n = hyperplanes
        .first()
        .ok_or_else(|| Error::InvalidArgument("no hyperplanes to project onto".into()))?
        .dim();
    check_dims(hyperplanes, n)?;
    let mut it = Iterate::new(config.kind, config.initial_point.materialize(n)?)?;
    let trace = run_sweeps(&mut it, hyperplanes, config)?;
    Ok((it.point, trace))
}

/// Sweeps `it` until a stopping rule fires. On return `it` holds the
/// iterate reported by the trace.
fn run_sweeps(it: &mut Iterate, hyperplanes: &[Hyperplane], config: &SolverConfig) -> Result<SolverTrace> {
    let opts = config.multiplier_options();
    let mut per_sweep = Vec::new();
    let mut best: Option<(f64, usize, Vec<f64>)> = None;
    let mut termination = Termination::SweepCapReached;
    for sweep_no in 1..=config.max_sweeps {
        let previous = it.point.clone();
        let lambda_max_abs = sweep(it, hyperplanes, opts, sweep_no)?;
        let max_residual = max_relative_residual(hyperplanes, &it.point);
        let iterate_delta = dist2(&it.point, &previous) / (1.0 + norm2(&it.point));
        per_sweep.push(SweepStats { max_residual, iterate_delta, lambda_max_abs });

        if max_residual <= config.feas_tol {
            termination = Termination::Feasible;
            best = None;
            break;
        }
        if best.as_ref().is_none_or(|b| max_residual < b.0) {
            best = Some((max_residual, sweep_no, it.point.clone()));
        }
        if iterate_delta < config.delta_tol {
            termination = Termination::Stalled;
            break;
        }
    }
    let sweeps_run = per_sweep.len();
    let returned_sweep = match best {
        Some((_, sweep_no, point)) if sweep_no != sweeps_run => {
            *it = Iterate::new(config.kind, point)?;
            sweep_no
        }
        _ => sweeps_run,
    };
    Ok(SolverTrace {
        kind: config.kind,
        per_sweep,
        termination,
        sweeps_run,
        projections: sweeps_run * hyperplanes.len(),
        returned_sweep,
    })
}

/// Row-action solver fed one measurement at a time.
///
/// Each appended hyperplane is D-projected onto immediately, after which
/// optional refresh sweeps revisit every stored hyperplane.
#[derive(Debug, Clone)]
pub struct OnlineSolver {
    config: SolverConfig,
    iterate: Iterate,
    hyperplanes: Vec<Hyperplane>,
    projections: usize,
}

impl OnlineSolver {
    pub fn new(n: usize, config: SolverConfig) -> Result<Self> {
        config.validate()?;
        if n == 0 {
            return Err(Error::InvalidArgument("online solver needs n >= 1".into()));
        }
        let iterate = Iterate::new(config.kind, config.initial_point.materialize(n)?)?;
        Ok(OnlineSolver { config, iterate, hyperplanes: Vec::new(), projections: 0 })
    }

    pub fn current(&self) -> &[f64] {
        &self.iterate.point
    }

    pub fn hyperplanes(&self) -> &[Hyperplane] {
        &self.hyperplanes
    }

    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    pub fn dim(&self) -> usize {
        self.iterate.point.len()
    }

    /// Total single-hyperplane projections performed so far.
    pub fn projections(&self) -> usize {
        self.projections
    }

    pub fn max_residual(&self) -> f64 {
        max_relative_residual(&self.hyperplanes, &self.iterate.point)
    }

    /// Adds `h`, projects onto it, then runs `refresh_sweeps` sweeps over all
    /// stored hyperplanes. Returns the multiplier of the first projection.
    pub fn append(&mut self, h: Hyperplane, refresh_sweeps: usize) -> Result<f64> {
        check_len(self.dim(), h.dim())?;
        let opts = self.config.multiplier_options();
        let row = self.hyperplanes.len();
        let lambda = self
            .iterate
            .project(&h, opts)
            .map_err(|e| Error::Projection { sweep: 0, row, source: Box::new(e) })?;
        self.projections += 1;
        self.hyperplanes.push(h);
        for sweep_no in 1..=refresh_sweeps {
            sweep(&mut self.iterate, &self.hyperplanes, opts, sweep_no)?;
            self.projections += self.hyperplanes.len();
        }
        Ok(lambda)
    }

    /// Sweeps over the stored hyperplanes under the batch stopping rules,
    /// leaving the reported iterate as the current estimate.
    pub fn settle(&mut self) -> Result<SolverTrace> {
        if self.hyperplanes.is_empty() {
            return Err(Error::InvalidArgument("no hyperplanes to project onto".into()));
        }
        let trace = run_sweeps(&mut self.iterate, &self.hyperplanes, &self.config)?;
        self.projections += trace.projections;
        Ok(trace)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plane(row: &[f64], value: f64) -> Hyperplane {
        Hyperplane::new(row.to_vec(), value).unwrap()
    }

    #[test]
    fn single_hyperplane_one_sweep() {
        let h = vec![plane(&[1.0, -2.0, 0.5], 3.0)];
        for kind in FunctionalKind::ALL {
            let (s, trace) = solve(&h, &SolverConfig::new(kind)).unwrap();
            assert_eq!(trace.termination, Termination::Feasible, "{kind}");
            assert_eq!(trace.sweeps_run, 1);
            assert!(h[0].relative_residual(&s) <= 1e-9);
        }
    }

    #[test]
    fn config_validation() {
        let mut c = SolverConfig::new(FunctionalKind::Euclidean);
        c.max_sweeps = 0;
        assert!(c.validate().is_err());
        let mut c = SolverConfig::new(FunctionalKind::Euclidean);
        c.feas_tol = 0.0;
        assert!(solve(&[plane(&[1.0], 1.0)], &c).is_err());
        assert!(solve(&[], &SolverConfig::new(FunctionalKind::Euclidean)).is_err());
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let h = vec![plane(&[1.0, 1.0], 1.0), plane(&[1.0], 1.0)];
        assert!(matches!(
            solve(&h, &SolverConfig::new(FunctionalKind::ShiftedEntropy)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn projection_failures_carry_context() {
        let h = vec![plane(&[1.0, 1.0], 1.0), plane(&[1.0, 1.0], -1.0)];
        let err = solve(&h, &SolverConfig::new(FunctionalKind::PositiveEntropy)).unwrap_err();
        match err {
            Error::Projection { sweep, row, source } => {
                assert_eq!((sweep, row), (1, 1));
                assert_eq!(*source, Error::Infeasible);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn zero_start_is_a_domain_error_for_positive_entropy() {
        let mut c = SolverConfig::new(FunctionalKind::PositiveEntropy);
        c.initial_point = InitialPoint::Zeros;
        assert!(matches!(solve(&[plane(&[1.0], 1.0)], &c), Err(Error::Domain { .. })));
    }

    #[test]
    fn inconsistent_system_does_not_report_feasible() {
        let h = vec![plane(&[1.0, 0.0], 1.0), plane(&[1.0, 0.0], 2.0), plane(&[0.0, 1.0], 0.0)];
        let mut c = SolverConfig::new(FunctionalKind::Euclidean);
        c.max_sweeps = 50;
        let (_, trace) = solve(&h, &c).unwrap();
        assert_ne!(trace.termination, Termination::Feasible);
        assert_eq!(trace.per_sweep.len(), trace.sweeps_run);
    }

    #[test]
    fn online_init_and_append() {
        let c = SolverConfig::new(FunctionalKind::ShiftedEntropy);
        let online = OnlineSolver::new(8, c.clone()).unwrap();
        assert_eq!(online.current(), &[0.0; 8]);

        let v: Vec<f64> = (0..8).map(|i| i as f64 * 0.25 - 1.0).collect();
        let provided = SolverConfig { initial_point: InitialPoint::Provided(v.clone()), ..c.clone() };
        let mut online = OnlineSolver::new(8, provided).unwrap();
        assert_eq!(online.current(), v.as_slice());

        let h = plane(&[1.0, 0.0, 2.0, 0.0, 0.0, -1.0, 0.0, 0.5], 2.0);
        online.append(h.clone(), 0).unwrap();
        assert_eq!(online.projections(), 1);
        assert!(h.relative_residual(online.current()) <= 1e-9);

        let before = online.current().to_vec();
        let lambda = online.append(h, 0).unwrap();
        assert_eq!(lambda, 0.0);
        assert_eq!(online.current(), before.as_slice());
        assert!(online.append(plane(&[1.0], 1.0), 0).is_err());
    }

    #[test]
    fn settle_matches_batch_from_the_same_start() {
        let h = vec![plane(&[1.0, 2.0, 0.0], 1.0), plane(&[0.0, 1.0, -1.0], 0.5)];
        let c = SolverConfig::new(FunctionalKind::ShiftedEntropy);
        let mut online = OnlineSolver::new(3, c.clone()).unwrap();
        assert!(online.settle().is_err());
        for p in &h {
            online.append(p.clone(), 0).unwrap();
        }
        let start = online.current().to_vec();
        let trace = online.settle().unwrap();
        assert_eq!(trace.termination, Termination::Feasible);
        assert_eq!(online.projections(), 2 + trace.projections);
        let (batch, _) = solve(&h, &SolverConfig { initial_point: InitialPoint::Provided(start), ..c }).unwrap();
        // the online iterate carries its gradient forward, the batch one recomputes it
        for (a, b) in online.current().iter().zip(&batch) {
            assert!((a - b).abs() <= 1e-12, "{a} vs {b}");
        }
    }
}
