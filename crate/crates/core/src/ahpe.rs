//! Accelerated hybrid proximal extragradient iteration for strongly convex
//! composite problems.
//!
//! One iteration picks a stepsize `lambda`, forms the extrapolation point
//! `x_tilde` from `(x, y, A)`, asks a [`StepSolver`] for an inexact proximal
//! triple `(y', v', eps')` at `x_tilde`, tests the relative-error criterion
//!
//! ```text
//! |lambda v' + y' - x_tilde|^2 / (1 + lambda mu) + 2 lambda eps' <= sigma^2 |y' - x_tilde|^2
//! ```
//!
//! and then advances `A' = A + a`, `x' = ((1 + mu A) x + mu a y' - a v') / (1 + mu A')`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{all_finite, gaussian_vector, Vector};
use crate::problem::CompositeProblem;
use crate::subproblem::StepSolver;

/// `(k, x^k, y^k, A_k)` plus the last accepted stepsize.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    pub k: usize,
    pub x: Vector,
    pub y: Vector,
    pub a_sum: f64,
    pub last_lambda: Option<f64>,
}

impl SolverState {
    pub fn initial(x0: Vector, y0: Option<Vector>) -> Self {
        let y = y0.unwrap_or_else(|| x0.clone());
        SolverState {
            k: 0,
            x: x0,
            y,
            a_sum: 0.0,
            last_lambda: None,
        }
    }
}

/// Inexact proximal triple `(y, v, eps)` for stepsize `lambda`, with the
/// relative residual of the acceptance criterion attached.
#[derive(Debug, Clone, PartialEq)]
pub struct InexactTriple {
    pub y: Vector,
    pub v: Vector,
    pub eps: f64,
    pub lambda: f64,
    /// Left side of the criterion divided by `|y - x_tilde|^2`; zero when both vanish.
    pub residual_ratio: f64,
}

impl InexactTriple {
    pub fn new(y: Vector, v: Vector, eps: f64, lambda: f64, x_tilde: &Vector, mu: f64) -> Self {
        let (lhs, step_sq) = criterion_sides(&y, &v, eps, lambda, x_tilde, mu);
        InexactTriple {
            y,
            v,
            eps,
            lambda,
            residual_ratio: ratio(lhs, step_sq),
        }
    }
}

/// `(LHS, |y - x_tilde|^2)` of the relative-error inequality.
pub(crate) fn criterion_sides(y: &Vector, v: &Vector, eps: f64, lambda: f64, x_tilde: &Vector, mu: f64) -> (f64, f64) {
    let d = y - x_tilde;
    let r = v * lambda + &d;
    (r.norm_squared() / (1.0 + lambda * mu) + 2.0 * lambda * eps, d.norm_squared())
}

/// Squared noise floor below which `y = x_tilde` and a zero residual are
/// indistinguishable in double precision.
pub(crate) fn noise_floor_sq(x_tilde: &Vector) -> f64 {
    let t = 1e-13 * (1.0 + x_tilde.norm());
    t * t
}

pub(crate) fn ratio(lhs: f64, step_sq: f64) -> f64 {
    if step_sq > 0.0 {
        lhs / step_sq
    } else if lhs == 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "value")]
pub enum LambdaPolicy {
    Constant(f64),
    /// `lambda_k` for `k = 1, 2, ...`; the last entry repeats.
    Schedule(Vec<f64>),
}

impl LambdaPolicy {
    pub fn lambda_for(&self, k: usize) -> Result<f64> {
        let lam = match self {
            LambdaPolicy::Constant(l) => *l,
            LambdaPolicy::Schedule(s) => *s
                .get(k.saturating_sub(1))
                .or_else(|| s.last())
                .ok_or_else(|| Error::Parameter("empty lambda schedule".into()))?,
        };
        if !(lam.is_finite() && lam > 0.0) {
            return Err(Error::Parameter(format!("lambda_{k} = {lam} must be positive")));
        }
        Ok(lam)
    }

    /// Smallest stepsize the policy can produce.
    pub fn lower_bound(&self) -> Option<f64> {
        match self {
            LambdaPolicy::Constant(l) => Some(*l),
            LambdaPolicy::Schedule(s) => s.iter().cloned().reduce(f64::min),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "tol")]
pub enum StopCriterion {
    /// `|v^k| <= tol`: residual of `0 in df + dg`.
    GradNorm(f64),
    /// `h(y^k) - h* <= tol`; needs a known minimizer.
    ValueGap(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stopping {
    pub max_iter: usize,
    pub criterion: Option<StopCriterion>,
}

impl Stopping {
    pub fn max_iter(n: usize) -> Self {
        Stopping {
            max_iter: n,
            criterion: None,
        }
    }

    pub fn grad_norm(tol: f64, max_iter: usize) -> Self {
        Stopping {
            max_iter,
            criterion: Some(StopCriterion::GradNorm(tol)),
        }
    }

    pub fn value_gap(tol: f64, max_iter: usize) -> Self {
        Stopping {
            max_iter,
            criterion: Some(StopCriterion::ValueGap(tol)),
        }
    }

    pub(crate) fn validate(&self, problem: &CompositeProblem) -> Result<()> {
        match self.criterion {
            Some(StopCriterion::ValueGap(_)) if problem.known_minimizer().is_none() => Err(Error::Parameter(
                "value_gap stopping needs a problem with a known minimizer".into(),
            )),
            Some(StopCriterion::GradNorm(t)) | Some(StopCriterion::ValueGap(t)) if !(t >= 0.0) => {
                Err(Error::Parameter(format!("stopping tolerance {t} must be >= 0")))
            }
            _ => Ok(()),
        }
    }

    pub(crate) fn satisfied(&self, rec: &TraceRecord) -> bool {
        match self.criterion {
            Some(StopCriterion::GradNorm(tol)) => rec.v_norm <= tol,
            Some(StopCriterion::ValueGap(tol)) => rec.value_gap.is_some_and(|g| g <= tol),
            None => false,
        }
    }
}

impl Default for Stopping {
    fn default() -> Self {
        Stopping::grad_norm(1e-10, 1000)
    }
}

/// Floating-point slack knobs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Additive slack `acceptance * (1 + |y - x_tilde|^2)` in the acceptance test.
    pub acceptance: f64,
    /// Relative slack `certificate * (1 + |bound|)` used by certificates.
    pub certificate: f64,
    /// Probe points for the epsilon-subgradient spot check; 0 disables it.
    pub inclusion_probes: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            acceptance: 1e-12,
            certificate: 1e-9,
            inclusion_probes: 16,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodConfig {
    pub sigma: f64,
    pub lambda_policy: LambdaPolicy,
    pub stopping: Stopping,
    pub tolerances: Tolerances,
}

impl MethodConfig {
    pub fn new(sigma: f64, lambda_policy: LambdaPolicy, stopping: Stopping) -> Self {
        MethodConfig {
            sigma,
            lambda_policy,
            stopping,
            tolerances: Tolerances::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.sigma) {
            return Err(Error::Parameter(format!("sigma = {} must lie in [0, 1]", self.sigma)));
        }
        self.lambda_policy.lambda_for(1)?;
        Ok(())
    }
}

/// One row of the per-iteration trace. Row `k` describes the state after
/// iteration `k`; quantities relative to `x*` are present only when the
/// problem carries a known minimizer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub k: usize,
    pub lambda: f64,
    pub a: f64,
    #[serde(rename = "A")]
    pub a_sum: f64,
    pub value_gap: Option<f64>,
    pub dist_x: Option<f64>,
    pub dist_y: Option<f64>,
    pub v_norm: f64,
    pub eps: f64,
    pub residual_ratio: f64,
    /// `|y^k - x_tilde^{k-1}|`.
    pub step_norm: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Converged,
    /// `v = 0` and `y = x_tilde`: an exact minimizer was hit.
    Stationary,
    MaxIterations,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub records: Vec<TraceRecord>,
    pub initial: SolverState,
    pub final_state: SolverState,
    pub termination: Termination,
    /// `|x^0 - x*|`, when `x*` is known.
    pub d0: Option<f64>,
}

impl Trace {
    pub(crate) fn start(initial: SolverState, problem: &CompositeProblem) -> Self {
        let d0 = problem.known_minimizer().map(|m| (&initial.x - &m.x).norm());
        Trace {
            records: Vec::new(),
            final_state: initial.clone(),
            initial,
            termination: Termination::MaxIterations,
            d0,
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// `A_{k}` with `A_0 = 0`.
    pub fn a_sum_at(&self, k: usize) -> f64 {
        if k == 0 {
            0.0
        } else {
            self.records[k - 1].a_sum
        }
    }
}

/// Largest root of `a^2 - (1 + 2 mu A) lambda a - (1 + mu A) A lambda = 0`.
pub fn compute_a_next(a_sum: f64, lambda: f64, mu: f64) -> Result<f64> {
    if !(a_sum.is_finite() && lambda.is_finite() && mu.is_finite()) {
        return Err(Error::Numeric(format!("A = {a_sum}, lambda = {lambda}, mu = {mu}")));
    }
    if a_sum < 0.0 || lambda <= 0.0 || mu < 0.0 {
        return Err(Error::Numeric(format!(
            "need A >= 0, lambda > 0, mu >= 0; got A = {a_sum}, lambda = {lambda}, mu = {mu}"
        )));
    }
    if a_sum == 0.0 {
        return Ok(lambda);
    }
    let b = (1.0 + 2.0 * mu * a_sum) * lambda;
    let disc = b * b + 4.0 * (1.0 + mu * a_sum) * a_sum * lambda;
    let a = 0.5 * (b + disc.sqrt());
    if !a.is_finite() {
        return Err(Error::Numeric(format!("a overflowed for A = {a_sum}, lambda = {lambda}")));
    }
    Ok(a)
}

/// Weights `(tau, 1 - tau)` of `x` and `y` in the extrapolation point.
pub fn x_tilde_weights(a_sum: f64, a: f64, lambda: f64, mu: f64) -> Result<(f64, f64)> {
    let denom = a_sum + a;
    if !(denom > 0.0) {
        return Err(Error::DegenerateState(format!("A + a = {denom}")));
    }
    let wx = (a - mu * a_sum * lambda) / denom;
    let wy = (a_sum + mu * a_sum * lambda) / denom;
    if !(wx > 0.0) {
        return Err(Error::DegenerateState(format!(
            "a - mu A lambda = {} is not positive",
            a - mu * a_sum * lambda
        )));
    }
    Ok((wx, wy))
}

pub fn compute_x_tilde(x: &Vector, y: &Vector, a_sum: f64, a: f64, lambda: f64, mu: f64) -> Result<Vector> {
    let (wx, wy) = x_tilde_weights(a_sum, a, lambda, mu)?;
    if wy == 0.0 {
        return Ok(x.clone());
    }
    Ok(x * wx + y * wy)
}

pub fn update_x_next(x: &Vector, y_next: &Vector, v_next: &Vector, a_sum: f64, a: f64, mu: f64) -> Vector {
    let a_next = a_sum + a;
    let denom = 1.0 + mu * a_next;
    x * ((1.0 + mu * a_sum) / denom) + y_next * (mu * a / denom) - v_next * (a / denom)
}

/// Outcome of the relative-error test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Acceptance {
    pub accepted: bool,
    pub residual_ratio: f64,
    pub lhs: f64,
    pub rhs: f64,
    /// Whether the epsilon-subgradient spot check ran.
    pub inclusion_checked: bool,
    /// Spot check verdict; `true` when it did not run.
    pub inclusion_ok: bool,
}

pub fn check_error_criterion(
    triple: &InexactTriple,
    x_tilde: &Vector,
    mu: f64,
    sigma: f64,
    problem: &CompositeProblem,
) -> Acceptance {
    check_error_criterion_with(triple, x_tilde, mu, sigma, problem, &Tolerances::default())
}

pub fn check_error_criterion_with(
    triple: &InexactTriple,
    x_tilde: &Vector,
    mu: f64,
    sigma: f64,
    problem: &CompositeProblem,
    tol: &Tolerances,
) -> Acceptance {
    let finite = all_finite(&triple.y) && all_finite(&triple.v) && triple.eps.is_finite() && triple.lambda.is_finite();
    let (lhs, step_sq) = criterion_sides(&triple.y, &triple.v, triple.eps, triple.lambda, x_tilde, mu);
    let rhs = sigma * sigma * step_sq;
    let accepted = finite && triple.eps >= 0.0 && triple.lambda > 0.0 && lhs <= rhs + tol.acceptance * (1.0 + step_sq);

    let (inclusion_checked, inclusion_ok) = if finite && tol.inclusion_probes > 0 {
        (true, spot_check_inclusion(triple, problem, tol.inclusion_probes))
    } else {
        (false, true)
    };
    Acceptance {
        accepted,
        residual_ratio: ratio(lhs, step_sq),
        lhs,
        rhs,
        inclusion_checked,
        inclusion_ok,
    }
}

/// Tests `f(w) >= f(y) + <v - grad g(y), w - y> - eps` at random probes `w`.
fn spot_check_inclusion(triple: &InexactTriple, problem: &CompositeProblem, probes: usize) -> bool {
    let y = &triple.y;
    let u = &triple.v - problem.g_grad(y);
    let fy = problem.f_value(y);
    let radius = 1.0 + y.norm();
    // rounding in v = (x_tilde - y) / lambda grows like 1 / lambda
    let u_noise = 1e-8 * (triple.v.norm() + u.norm()) + 1e-12 * radius / triple.lambda;
    let mut rng = ChaCha8Rng::seed_from_u64(0x00ac_ce55);
    (0..probes).all(|_| {
        let w = y + gaussian_vector(&mut rng, y.len()) * radius;
        let fw = problem.f_value(&w);
        let lower = fy + u.dot(&(&w - y)) - triple.eps;
        fw >= lower - 1e-9 * (1.0 + fw.abs() + fy.abs()) - u_noise * (&w - y).norm()
    })
}

/// Advances the state once the triple has been accepted.
pub(crate) fn commit_step(
    state: &SolverState,
    lambda: f64,
    a: f64,
    x_tilde: &Vector,
    triple: InexactTriple,
    problem: &CompositeProblem,
) -> (SolverState, TraceRecord) {
    let mu = problem.mu();
    let a_next = state.a_sum + a;
    let x_next = update_x_next(&state.x, &triple.y, &triple.v, state.a_sum, a, mu);
    let step_norm = (&triple.y - x_tilde).norm();
    let (value_gap, dist_x, dist_y) = match problem.known_minimizer() {
        Some(m) => (
            Some(problem.h_value(&triple.y) - m.value),
            Some((&x_next - &m.x).norm()),
            Some((&triple.y - &m.x).norm()),
        ),
        None => (None, None, None),
    };
    let rec = TraceRecord {
        k: state.k + 1,
        lambda,
        a,
        a_sum: a_next,
        value_gap,
        dist_x,
        dist_y,
        v_norm: triple.v.norm(),
        eps: triple.eps,
        residual_ratio: triple.residual_ratio,
        step_norm,
    };
    let next = SolverState {
        k: state.k + 1,
        x: x_next,
        y: triple.y,
        a_sum: a_next,
        last_lambda: Some(lambda),
    };
    (next, rec)
}

/// Validates a solver-produced triple against the criterion and stamps the
/// residual ratio.
pub(crate) fn accept_triple(
    mut triple: InexactTriple,
    x_tilde: &Vector,
    sigma: f64,
    problem: &CompositeProblem,
    tol: &Tolerances,
) -> Result<InexactTriple> {
    let check = check_error_criterion_with(&triple, x_tilde, problem.mu(), sigma, problem, tol);
    triple.residual_ratio = check.residual_ratio;
    if !check.accepted {
        return Err(Error::SolverFailure {
            reason: format!(
                "triple violates the relative-error criterion (lhs {:.3e} > sigma^2 |y - x_tilde|^2 = {:.3e})",
                check.lhs, check.rhs
            ),
            iterations: 0,
            best_residual_ratio: check.residual_ratio,
        });
    }
    if !check.inclusion_ok {
        return Err(Error::SolverFailure {
            reason: "epsilon-subgradient spot check failed for v".into(),
            iterations: 0,
            best_residual_ratio: check.residual_ratio,
        });
    }
    Ok(triple)
}

pub fn ahpe_step<S: StepSolver + ?Sized>(
    state: &SolverState,
    solver: &S,
    config: &MethodConfig,
    problem: &CompositeProblem,
) -> Result<(SolverState, TraceRecord)> {
    let k_next = state.k + 1;
    let step = || -> Result<(SolverState, TraceRecord)> {
        let mu = problem.mu();
        let lambda = config.lambda_policy.lambda_for(k_next)?;
        let a = compute_a_next(state.a_sum, lambda, mu)?;
        let x_tilde = compute_x_tilde(&state.x, &state.y, state.a_sum, a, lambda, mu)?;
        let triple = solver.solve(problem, &x_tilde, lambda, config.sigma)?;
        let triple = accept_triple(triple, &x_tilde, config.sigma, problem, &config.tolerances)?;
        Ok(commit_step(state, lambda, a, &x_tilde, triple, problem))
    };
    step().map_err(|e| e.at_step(k_next))
}

pub(crate) fn check_start(problem: &CompositeProblem, initial: &SolverState) -> Result<()> {
    let n = problem.dim();
    if initial.x.len() != n || initial.y.len() != n {
        return Err(Error::Parameter(format!(
            "starting point has dimension {} / {} but the problem has {n}",
            initial.x.len(),
            initial.y.len()
        )));
    }
    if !(all_finite(&initial.x) && all_finite(&initial.y)) {
        return Err(Error::Numeric("starting point is not finite".into()));
    }
    Ok(())
}

/// Runs the iteration from `initial` until the stopping rule fires.
pub fn run_ahpe<S: StepSolver + ?Sized>(
    problem: &CompositeProblem,
    solver: &S,
    config: &MethodConfig,
    initial: SolverState,
) -> Result<Trace> {
    config.validate()?;
    config.stopping.validate(problem)?;
    check_start(problem, &initial)?;
    let mut trace = Trace::start(initial, problem);
    let mut state = trace.initial.clone();
    while state.k < config.stopping.max_iter {
        let (next, rec) = ahpe_step(&state, solver, config, problem)?;
        state = next;
        let stationary = rec.v_norm == 0.0 && rec.step_norm == 0.0;
        let done = config.stopping.satisfied(&rec);
        trace.records.push(rec);
        if done {
            trace.termination = Termination::Converged;
            break;
        }
        if stationary {
            trace.termination = Termination::Stationary;
            break;
        }
    }
    trace.final_state = state;
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;
    use crate::problem::quadratic_from_parts;
    use crate::subproblem::SubproblemSolver;
    use approx::assert_relative_eq;

    /// Generic quadratic root finder: Newton from a large starting point
    /// followed by bisection refinement; independent of the closed form.
    fn largest_root_oracle(b: f64, c: f64) -> f64 {
        // roots of t^2 - b t - c = 0 with c >= 0
        let q = |t: f64| t * t - b * t - c;
        let mut hi = 1.0 + b.abs() + c.abs();
        while q(hi) < 0.0 {
            hi *= 2.0;
        }
        let mut lo = 0.5 * b.max(0.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if q(mid) > 0.0 {
                hi = mid
            } else {
                lo = mid
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn a_next_first_step_equals_lambda() {
        for &lam in &[1.0, 0.37, 1e-8, 1e6] {
            assert_eq!(compute_a_next(0.0, lam, 7.0).unwrap(), lam);
        }
    }

    #[test]
    fn a_next_matches_root_oracle() {
        let golden = compute_a_next(1.0, 1.0, 0.0).unwrap();
        assert_relative_eq!(golden, largest_root_oracle(1.0, 1.0), max_relative = 1e-14);
        assert_relative_eq!(golden, 1.618_033_988_7, max_relative = 1e-10);
        let a = compute_a_next(1.0, 1.0, 1.0).unwrap();
        assert_relative_eq!(a, largest_root_oracle(3.0, 2.0), max_relative = 1e-14);
        assert_relative_eq!(a, 3.561_552_812_8, max_relative = 1e-10);
        assert!((a * a - 3.0 * a - 2.0).abs() < 1e-12);
    }

    #[test]
    fn a_next_rejects_non_finite() {
        assert!(matches!(compute_a_next(f64::NAN, 1.0, 1.0), Err(Error::Numeric(_))));
        assert!(matches!(compute_a_next(1.0, f64::INFINITY, 1.0), Err(Error::Numeric(_))));
        assert!(matches!(compute_a_next(1.0, 0.0, 1.0), Err(Error::Numeric(_))));
    }

    #[test]
    fn x_tilde_cases() {
        let x = Vector::from_vec(vec![1.0, 0.0]);
        let y = Vector::from_vec(vec![0.0, 1.0]);
        assert_eq!(compute_x_tilde(&x, &y, 0.0, 2.0, 2.0, 1.0).unwrap(), x);
        assert_eq!(compute_x_tilde(&x, &x, 3.0, 1.5, 0.2, 1.0).unwrap(), x);

        let a = compute_a_next(1.0, 1.0, 1.0).unwrap();
        let xt = compute_x_tilde(&x, &y, 1.0, a, 1.0, 1.0).unwrap();
        assert_relative_eq!(xt[0], (a - 1.0) / (1.0 + a), max_relative = 1e-14);
        assert_relative_eq!(xt[1], 2.0 / (1.0 + a), max_relative = 1e-14);
        assert_relative_eq!(xt[0], 0.561_553, epsilon = 1e-6);
        assert_relative_eq!(xt[1], 0.438_447, epsilon = 1e-6);
    }

    #[test]
    fn update_x_reduces_without_strong_convexity() {
        let x = Vector::from_vec(vec![1.0, 2.0]);
        let y = Vector::from_vec(vec![5.0, -1.0]);
        let v = Vector::from_vec(vec![0.5, 0.25]);
        let got = update_x_next(&x, &y, &v, 3.0, 2.0, 0.0);
        assert_eq!(got, &x - &v * 2.0);
        assert!((update_x_next(&x, &x, &Vector::zeros(2), 3.0, 2.0, 0.7) - &x).norm() < 1e-15);
        let got = update_x_next(
            &Vector::from_element(1, 1.0),
            &Vector::from_element(1, 0.5),
            &Vector::from_element(1, 0.5),
            0.0,
            1.0,
            1.0,
        );
        assert_relative_eq!(got[0], 0.5, max_relative = 1e-15);
    }

    fn unit_quadratic() -> CompositeProblem {
        quadratic_from_parts(Matrix::identity(1, 1), Vector::zeros(1), 1.0, 1.0).unwrap()
    }

    #[test]
    fn criterion_examples() {
        let p = unit_quadratic();
        let xt = Vector::from_element(1, 1.0);
        let y = Vector::from_element(1, 0.5);
        let exact = InexactTriple::new(y.clone(), (&xt - &y) / 1.0, 0.0, 1.0, &xt, 1.0);
        for sigma in [0.0, 0.3, 1.0] {
            let c = check_error_criterion(&exact, &xt, 1.0, sigma, &p);
            assert!(c.accepted);
            assert_eq!(c.residual_ratio, 0.0);
            assert!(c.inclusion_checked && c.inclusion_ok);
        }
        let still = InexactTriple::new(xt.clone(), Vector::zeros(1), 0.0, 1.0, &xt, 1.0);
        assert!(check_error_criterion(&still, &xt, 1.0, 0.5, &p).accepted);
        let bad = InexactTriple::new(xt.clone(), Vector::from_element(1, 0.1), 0.0, 1.0, &xt, 1.0);
        for sigma in [0.0, 0.5, 1.0] {
            let c = check_error_criterion(&bad, &xt, 1.0, sigma, &p);
            assert!(!c.accepted);
            assert!(c.residual_ratio.is_infinite());
        }
    }

    #[test]
    fn criterion_with_positive_eps_on_linear_f() {
        // f(x) = <c, x>: its eps-subdifferential is {c} for every eps >= 0.
        let c = Vector::from_vec(vec![0.3, -0.2]);
        let cf = c.clone();
        let p = CompositeProblem::builder(2, 1.0, |x: &Vector| 0.5 * x.norm_squared(), |x: &Vector| x.clone())
            .f_value(move |x: &Vector| cf.dot(x))
            .build()
            .unwrap();
        let xt = Vector::from_vec(vec![1.0, 1.0]);
        let lambda = 0.5;
        // exact prox of h at xt: y + lambda (c + y) = xt
        let y_exact = (&xt - &c * lambda) / (1.0 + lambda);
        let y = &y_exact + Vector::from_vec(vec![1e-3, -2e-3]);
        let v = &c + &y;
        let (lhs0, step_sq) = criterion_sides(&y, &v, 0.0, lambda, &xt, 1.0);
        let sigma = 0.5;
        let eps_max = (sigma * sigma * step_sq - lhs0) / (2.0 * lambda);
        assert!(eps_max > 0.0);
        let ok = InexactTriple::new(y.clone(), v.clone(), 0.5 * eps_max, lambda, &xt, 1.0);
        let chk = check_error_criterion(&ok, &xt, 1.0, sigma, &p);
        assert!(chk.accepted && chk.inclusion_ok);
        let too_big = InexactTriple::new(y.clone(), v.clone(), 2.0 * eps_max, lambda, &xt, 1.0);
        assert!(!check_error_criterion(&too_big, &xt, 1.0, sigma, &p).accepted);
        // wrong u is caught by the spot check
        let wrong = InexactTriple::new(y.clone(), &v + Vector::from_vec(vec![0.05, 0.0]), 0.0, lambda, &xt, 1.0);
        assert!(!check_error_criterion(&wrong, &xt, 1.0, 1.0, &p).inclusion_ok);
    }

    #[test]
    fn one_dimensional_first_step_by_hand() {
        let p = unit_quadratic();
        let config = MethodConfig::new(0.0, LambdaPolicy::Constant(1.0), Stopping::max_iter(1));
        let s0 = SolverState::initial(Vector::from_element(1, 1.0), None);
        let (s1, rec) = ahpe_step(&s0, &SubproblemSolver::ExactStructured, &config, &p).unwrap();
        assert_relative_eq!(s1.y[0], 0.5, max_relative = 1e-15);
        assert_relative_eq!(rec.v_norm, 0.5, max_relative = 1e-15);
        assert_eq!(s1.a_sum, 1.0);
        assert_relative_eq!(s1.x[0], 0.5, max_relative = 1e-15);
        assert_relative_eq!(rec.value_gap.unwrap(), 0.125, max_relative = 1e-15);
        assert!(rec.value_gap.unwrap() <= 0.5);
        assert_eq!(rec.residual_ratio, 0.0);
    }

    #[test]
    fn zero_iteration_run_is_empty() {
        let p = unit_quadratic();
        let config = MethodConfig::new(0.0, LambdaPolicy::Constant(1.0), Stopping::max_iter(0));
        let s0 = SolverState::initial(Vector::from_element(1, 2.0), None);
        let t = run_ahpe(&p, &SubproblemSolver::ExactStructured, &config, s0.clone()).unwrap();
        assert!(t.is_empty());
        assert_eq!(t.final_state, s0);
        assert_eq!(t.termination, Termination::MaxIterations);
    }

    #[test]
    fn schedule_repeats_last_entry() {
        let pol = LambdaPolicy::Schedule(vec![1.0, 2.0]);
        assert_eq!(pol.lambda_for(1).unwrap(), 1.0);
        assert_eq!(pol.lambda_for(5).unwrap(), 2.0);
        assert_eq!(pol.lower_bound(), Some(1.0));
        assert!(LambdaPolicy::Schedule(vec![]).lambda_for(1).is_err());
    }

    #[test]
    fn value_gap_stop_requires_minimizer() {
        let p = CompositeProblem::builder(1, 1.0, |x: &Vector| 0.5 * x.norm_squared(), |x: &Vector| x.clone())
            .build()
            .unwrap();
        let config = MethodConfig::new(0.5, LambdaPolicy::Constant(1.0), Stopping::value_gap(1e-8, 10));
        let s0 = SolverState::initial(Vector::from_element(1, 2.0), None);
        let err = run_ahpe(&p, &SubproblemSolver::ExactStructured, &config, s0).unwrap_err();
        assert!(matches!(err, Error::Parameter(_)));
    }
}
