//! D-projection of a point onto a single hyperplane `row . s = value`.
//!
//! For a separable potential the projection satisfies
//! `g'(s_p(n)) = g'(s0(n)) + lambda * row(n)` together with
//! `row . s_p = value`. Since `g'` is a strictly increasing bijection for
//! every supported kind, `s_p` is an explicit function of the scalar
//! multiplier and only a one-dimensional root solve remains.

use crate::error::{check_len, Error, Result};
use crate::functional::FunctionalKind;
use crate::matrix::dot;

/// Largest magnitude allowed for a gradient-space coordinate. `exp` overflows
/// just above 709, so every trial multiplier is kept inside this box.
const GRADIENT_LIMIT: f64 = 700.0;

/// One measurement equation `row . s = value`.
#[derive(Debug, Clone, PartialEq)]
pub struct Hyperplane {
    row: Vec<f64>,
    value: f64,
    norm_sq: f64,
}

impl Hyperplane {
    pub fn new(row: Vec<f64>, value: f64) -> Result<Self> {
        let norm_sq = dot(&row, &row);
        if !(norm_sq > 0.0) || !norm_sq.is_finite() || !value.is_finite() {
            return Err(Error::InvalidHyperplane);
        }
        Ok(Hyperplane { row, value, norm_sq })
    }

    pub fn row(&self) -> &[f64] {
        &self.row
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn dim(&self) -> usize {
        self.row.len()
    }

    pub fn norm_sq(&self) -> f64 {
        self.norm_sq
    }

    /// Signed residual `row . s - value`.
    pub fn residual(&self, s: &[f64]) -> f64 {
        dot(&self.row, s) - self.value
    }

    /// `|row . s - value| / (1 + |value|)`.
    pub fn relative_residual(&self, s: &[f64]) -> f64 {
        self.residual(s).abs() / (1.0 + self.value.abs())
    }
}

/// Builds one hyperplane per row of `theta` with the matching entry of `y`.
pub fn hyperplanes_from(theta: &crate::Matrix, y: &[f64]) -> Result<Vec<Hyperplane>> {
    check_len(theta.nrows(), y.len())?;
    theta
        .row_iter()
        .zip(y)
        .map(|(r, &v)| Hyperplane::new(r.to_vec(), v))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionResult {
    pub kind: FunctionalKind,
    pub point: Vec<f64>,
    /// Multiplier of the projection. For the entropy kinds this is the
    /// gradient-space multiplier, `g'(s_p) - g'(s0) = lambda * row`. For the
    /// Euclidean kind it is the step length of `s_p = s0 + lambda * row`,
    /// which is half the gradient-space multiplier of `g(v) = v^2`.
    pub multiplier: f64,
    pub newton_iters: usize,
    /// `|row . point - value|` after the projection.
    pub residual: f64,
}

/// Stopping rule for the scalar multiplier search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MultiplierOptions {
    /// Relative tolerance: stop once `|F(lambda)| <= tol * (1 + |value|)`.
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for MultiplierOptions {
    fn default() -> Self {
        MultiplierOptions { tol: 1e-12, max_iters: 100 }
    }
}

/// Bracket state recorded whenever the search falls back to bisection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bracket {
    pub lo: f64,
    pub f_lo: f64,
    pub hi: f64,
    pub f_hi: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiplierSolution {
    /// Gradient-space multiplier.
    pub lambda: f64,
    pub iters: usize,
    /// `|F(lambda)|`.
    pub residual: f64,
    /// Brackets in force at each bisection fallback step.
    pub bisection_brackets: Vec<Bracket>,
}

/// Orthogonal projection, closed form.
pub fn project_euclidean(s0: &[f64], h: &Hyperplane) -> Result<ProjectionResult> {
    check_len(h.dim(), s0.len())?;
    let lambda = -h.residual(s0) / h.norm_sq;
    let point: Vec<f64> = s0.iter().zip(&h.row).map(|(s, t)| s + lambda * t).collect();
    let residual = h.residual(&point).abs();
    Ok(ProjectionResult {
        kind: FunctionalKind::Euclidean,
        point,
        multiplier: lambda,
        newton_iters: 0,
        residual,
    })
}

/// Multiplicative (MART) projection `s_p(n) = s0(n) exp(lambda row(n))`.
/// Every entry of `s0` must be strictly positive.
pub fn project_positive_entropy(s0: &[f64], h: &Hyperplane) -> Result<ProjectionResult> {
    project_with(FunctionalKind::PositiveEntropy, s0, h, MultiplierOptions::default())
}

/// Projection under the shifted entropy potential, defined for points of any sign.
pub fn project_shifted_entropy(s0: &[f64], h: &Hyperplane) -> Result<ProjectionResult> {
    project_with(FunctionalKind::ShiftedEntropy, s0, h, MultiplierOptions::default())
}

/// Dispatches on `kind` with the default multiplier options.
pub fn project(kind: FunctionalKind, s0: &[f64], h: &Hyperplane) -> Result<ProjectionResult> {
    project_with(kind, s0, h, MultiplierOptions::default())
}

pub fn project_with(
    kind: FunctionalKind,
    s0: &[f64],
    h: &Hyperplane,
    opts: MultiplierOptions,
) -> Result<ProjectionResult> {
    if kind == FunctionalKind::Euclidean {
        return project_euclidean(s0, h);
    }
    check_len(h.dim(), s0.len())?;
    let grad0 = gradient_vector(kind, s0)?;
    let problem = MultiplierProblem { kind, point0: s0, grad0: &grad0, row: &h.row, value: h.value };
    let sol = search(&problem, opts, false, None)?.solution;
    let point = if sol.lambda == 0.0 { s0.to_vec() } else { point_at(kind, s0, &grad0, &h.row, sol.lambda) };
    let residual = h.residual(&point).abs();
    Ok(ProjectionResult { kind, point, multiplier: sol.lambda, newton_iters: sol.iters, residual })
}

/// Solves `F(lambda) = row . s_p(lambda) - value = 0` for the gradient-space
/// multiplier.
///
/// `F` is strictly increasing, so the root is unique. The search evaluates
/// `F` at `lambda = 0`, grows a bracket geometrically on the side indicated
/// by the sign of `F(0)` (in multiples of the first Newton step), then runs
/// Newton's method inside the bracket, bisecting whenever a Newton step
/// would leave it.
pub fn solve_multiplier(
    s0: &[f64],
    h: &Hyperplane,
    kind: FunctionalKind,
    tol: f64,
    max_iters: usize,
) -> Result<MultiplierSolution> {
    check_len(h.dim(), s0.len())?;
    let grad0 = gradient_vector(kind, s0)?;
    let problem = MultiplierProblem { kind, point0: s0, grad0: &grad0, row: &h.row, value: h.value };
    Ok(search(&problem, MultiplierOptions { tol, max_iters }, true, None)?.solution)
}

pub(crate) fn gradient_vector(kind: FunctionalKind, s: &[f64]) -> Result<Vec<f64>> {
    s.iter().map(|&v| kind.gradient(v)).collect()
}

/// `s_p(n) = (g')^{-1}(g'(s0(n)) + lambda row(n))`; components with a zero
/// row entry are copied unchanged.
pub(crate) fn point_at(
    kind: FunctionalKind,
    s0: &[f64],
    grad0: &[f64],
    row: &[f64],
    lambda: f64,
) -> Vec<f64> {
    s0.iter()
        .zip(grad0)
        .zip(row)
        .map(|((&s, &u), &t)| if t == 0.0 { s } else { kind.gradient_inverse(u + lambda * t) })
        .collect()
}

/// The scalar equation `F(lambda) = row . s_p(lambda) - value = 0` for one
/// projection, with `s_p(lambda) = (g')^{-1}(grad0 + lambda row)`.
pub(crate) struct MultiplierProblem<'a> {
    pub kind: FunctionalKind,
    /// Starting point; must satisfy `point0 = (g')^{-1}(grad0)`.
    pub point0: &'a [f64],
    pub grad0: &'a [f64],
    pub row: &'a [f64],
    pub value: f64,
}

impl MultiplierProblem<'_> {
    /// `(F(0), F'(0), F''(0))` from the starting point, without any `exp`.
    fn at_zero(&self) -> (f64, f64, f64) {
        const INV_E: f64 = 1.0 / std::f64::consts::E;
        let f = dot(self.row, self.point0) - self.value;
        let (mut df, mut d2f) = (0.0, 0.0);
        for (&t, &s) in self.row.iter().zip(self.point0) {
            let (slope, curve) = match self.kind {
                FunctionalKind::Euclidean => (0.5, 0.0),
                FunctionalKind::PositiveEntropy => (s, s),
                FunctionalKind::ShiftedEntropy => (s.abs() + INV_E, (s.abs() + INV_E).copysign(s)),
            };
            df += t * t * slope;
            d2f += t * t * t * curve;
        }
        (f, df, d2f)
    }

    /// Largest `|lambda|` that keeps every gradient-space coordinate inside
    /// the limit, from `max |grad0|` and `max |row|` alone.
    fn safe_radius(&self) -> f64 {
        if self.kind == FunctionalKind::Euclidean {
            return f64::INFINITY;
        }
        let u_max = self.grad0.iter().fold(0.0f64, |m, u| m.max(u.abs()));
        let t_max = self.row.iter().fold(0.0f64, |m, t| m.max(t.abs()));
        ((GRADIENT_LIMIT - u_max) / t_max).max(0.0)
    }

    /// `(F(lambda), F'(lambda))`, writing `s_p(lambda)` into `out` when given.
    /// Entries of `out` with a zero row coefficient are left untouched.
    fn evaluate(&self, lambda: f64, mut out: Option<&mut [f64]>) -> (f64, f64) {
        let mut f = -self.value;
        let mut df = 0.0;
        for (n, (&u, &t)) in self.grad0.iter().zip(self.row).enumerate() {
            if t == 0.0 {
                continue;
            }
            let w = u + lambda * t;
            let (v, slope) = match self.kind {
                FunctionalKind::ShiftedEntropy => {
                    const INV_E: f64 = 1.0 / std::f64::consts::E;
                    let a = w.abs();
                    // expm1 only matters where exp(a) - 1 cancels
                    let em1 = if a > 0.5 { a.exp() - 1.0 } else { a.exp_m1() };
                    ((em1 * INV_E).copysign(w), (em1 + 1.0) * INV_E)
                }
                kind => (kind.gradient_inverse(w), kind.gradient_inverse_slope(w)),
            };
            f += t * v;
            df += t * t * slope;
            if let Some(out) = out.as_deref_mut() {
                out[n] = v;
            }
        }
        (f, df)
    }

    /// Multipliers for which every gradient-space coordinate stays inside
    /// `[-GRADIENT_LIMIT, GRADIENT_LIMIT]`.
    fn domain(&self) -> Result<(f64, f64)> {
        if self.kind == FunctionalKind::Euclidean {
            return Ok((f64::NEG_INFINITY, f64::INFINITY));
        }
        let mut lo = f64::NEG_INFINITY;
        let mut hi = f64::INFINITY;
        for (&u, &t) in self.grad0.iter().zip(self.row) {
            if t == 0.0 {
                continue;
            }
            let a = (-GRADIENT_LIMIT - u) / t;
            let b = (GRADIENT_LIMIT - u) / t;
            lo = lo.max(a.min(b));
            hi = hi.min(a.max(b));
        }
        if lo > 0.0 || hi < 0.0 {
            return Err(Error::InvalidArgument(
                "starting point is too large for the gradient to be inverted in floating point".into(),
            ));
        }
        Ok((lo, hi))
    }
}

/// Whether `row . s = value` has a solution with every `s(n) > 0`.
fn admits_positive_solution(row: &[f64], value: f64) -> bool {
    let has_pos = row.iter().any(|&t| t > 0.0);
    let has_neg = row.iter().any(|&t| t < 0.0);
    if value > 0.0 {
        has_pos
    } else if value < 0.0 {
        has_neg
    } else {
        has_pos && has_neg
    }
}

fn out_of_range(kind: FunctionalKind, lambda: f64, residual: f64, iters: usize) -> Error {
    match kind {
        FunctionalKind::PositiveEntropy => Error::Infeasible,
        _ => Error::SolverFailure { lambda, residual, iters },
    }
}

/// Outcome of [`search`]: the solution plus the multiplier whose point was
/// last written to the scratch buffer, if any.
pub(crate) struct SearchOutcome {
    pub solution: MultiplierSolution,
    pub scratch_lambda: Option<f64>,
}

pub(crate) fn search(
    problem: &MultiplierProblem<'_>,
    opts: MultiplierOptions,
    record: bool,
    mut scratch: Option<&mut [f64]>,
) -> Result<SearchOutcome> {
    let kind = problem.kind;
    if kind == FunctionalKind::PositiveEntropy && !admits_positive_solution(problem.row, problem.value) {
        return Err(Error::Infeasible);
    }
    let target = opts.tol * (1.0 + problem.value.abs());
    let mut brackets = Vec::new();
    let mut scratch_lambda = None;
    let done = |lambda: f64, iters, residual: f64, brackets, scratch_lambda| {
        Ok(SearchOutcome {
            solution: MultiplierSolution { lambda, iters, residual, bisection_brackets: brackets },
            scratch_lambda,
        })
    };

    let (f0, df0, d2f0) = problem.at_zero();
    if f0.abs() <= target {
        return done(0.0, 0, f0.abs(), brackets, scratch_lambda);
    }
    let mut iters = 0;
    let mut best = (0.0, f0, df0);
    let mut eval = |lambda: f64, scratch_lambda: &mut Option<f64>| {
        *scratch_lambda = scratch.is_some().then_some(lambda);
        problem.evaluate(lambda, scratch.as_deref_mut())
    };

    // Grow the bracket away from zero until F changes sign.
    let direction = if f0 < 0.0 { 1.0 } else { -1.0 };
    let mut limit = problem.safe_radius();
    let mut exact_limit = false;
    // first trial: Halley step from zero, or Newton when the correction is large
    let mut unit = (f0 / df0).abs();
    let halley = 1.0 - f0 * d2f0 / (2.0 * df0 * df0);
    if (0.5..=2.0).contains(&halley) {
        unit /= halley;
    }
    if !(unit.is_finite() && unit > 0.0) {
        unit = 1.0;
    }
    let (mut lo, mut f_lo, mut hi, mut f_hi) =
        if direction > 0.0 { (0.0, f0, f64::NAN, f64::NAN) } else { (f64::NAN, f64::NAN, 0.0, f0) };
    let mut step = unit;
    loop {
        if step >= limit && !exact_limit {
            let (dom_lo, dom_hi) = problem.domain()?;
            limit = if direction > 0.0 { dom_hi } else { -dom_lo };
            exact_limit = true;
        }
        let at_limit = step >= limit;
        let trial = direction * step.min(limit);
        iters += 1;
        let (f, df) = eval(trial, &mut scratch_lambda);
        if f.abs() < best.1.abs() {
            best = (trial, f, df);
        }
        if f.abs() <= target {
            return done(trial, iters, f.abs(), brackets, scratch_lambda);
        }
        if (f > 0.0) == (direction > 0.0) {
            if direction > 0.0 {
                hi = trial;
                f_hi = f;
            } else {
                lo = trial;
                f_lo = f;
            }
            break;
        }
        if direction > 0.0 {
            lo = trial;
            f_lo = f;
        } else {
            hi = trial;
            f_hi = f;
        }
        if at_limit {
            return Err(out_of_range(kind, best.0, best.1.abs(), iters));
        }
        if iters >= opts.max_iters {
            return Err(Error::SolverFailure { lambda: best.0, residual: best.1.abs(), iters });
        }
        step *= 2.0;
    }

    // Safeguarded Newton inside [lo, hi], F(lo) < 0 < F(hi). A Newton step
    // is rejected in favour of bisection when it leaves the bracket or is
    // more than half the step before last, so the bracket shrinks at least
    // as fast as plain bisection.
    let (mut lambda, mut f, mut df) = best;
    let mut step_old = hi - lo;
    let mut step = step_old;
    while iters < opts.max_iters {
        let newton = lambda - f / df;
        let accept =
            newton > lo && newton < hi && newton.is_finite() && (2.0 * f).abs() <= (step_old * df).abs();
        step_old = step;
        let next = if accept {
            step = (f / df).abs();
            newton
        } else {
            if record {
                brackets.push(Bracket { lo, f_lo, hi, f_hi });
            }
            step = 0.5 * (hi - lo);
            lo + step
        };
        if next == lambda || next <= lo || next >= hi {
            // The bracket has collapsed to adjacent floating-point values.
            return done(best.0, iters, best.1.abs(), brackets, scratch_lambda);
        }
        iters += 1;
        let (fn_, dfn) = eval(next, &mut scratch_lambda);
        lambda = next;
        f = fn_;
        df = dfn;
        if f.abs() < best.1.abs() {
            best = (lambda, f, df);
        }
        if f.abs() <= target {
            return done(lambda, iters, f.abs(), brackets, scratch_lambda);
        }
        if f < 0.0 {
            lo = lambda;
            f_lo = f;
        } else {
            hi = lambda;
            f_hi = f;
        }
    }
    Err(Error::SolverFailure { lambda: best.0, residual: best.1.abs(), iters })
}
