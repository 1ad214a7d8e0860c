//! Large-step variant: every accepted step must additionally satisfy
//! `phi = lambda |y - x_tilde|^{p-1} >= theta`, with `lambda` found by a
//! bracketing search along the curve `x_tilde(lambda) = y + tau(lambda) (x - y)`.

use serde::{Deserialize, Serialize};

use crate::ahpe::{
    accept_triple, check_start, commit_step, compute_a_next, compute_x_tilde, x_tilde_weights, InexactTriple,
    SolverState, Stopping, Termination, Tolerances, Trace, TraceRecord,
};
use crate::error::{Error, Result};
use crate::linalg::Vector;
use crate::problem::CompositeProblem;
use crate::subproblem::StepSolver;

/// Admissible range for `phi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Window {
    /// `theta <= phi <= cap * theta`.
    Generic { cap: f64 },
    /// `theta <= phi <= upper_base * sqrt(1 + lambda mu)`.
    Tensor { upper_base: f64 },
}

impl Window {
    pub fn upper(&self, theta: f64, lambda: f64, mu: f64) -> f64 {
        match *self {
            Window::Generic { cap } => cap * theta,
            Window::Tensor { upper_base } => upper_base * (1.0 + lambda * mu).sqrt(),
        }
    }
}

impl Default for Window {
    fn default() -> Self {
        Window::Generic { cap: 10.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LargeStepConfig {
    pub p: usize,
    pub theta: f64,
    pub sigma: f64,
    pub window: Window,
    /// Bracket growth factor.
    pub expansion: f64,
    /// Solver calls allowed per line search.
    pub max_steps: usize,
    /// Stepsize tried first at `k = 0`; later steps start from the previous `lambda`.
    pub lambda_seed: f64,
    pub stopping: Stopping,
    pub tolerances: Tolerances,
}

impl LargeStepConfig {
    pub fn new(p: usize, theta: f64, sigma: f64, stopping: Stopping) -> Self {
        LargeStepConfig {
            p,
            theta,
            sigma,
            window: Window::default(),
            expansion: 2.0,
            max_steps: 200,
            lambda_seed: 1.0,
            stopping,
            tolerances: Tolerances::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.p < 2 {
            return Err(Error::Parameter(format!("p = {} must be at least 2", self.p)));
        }
        if !(self.theta > 0.0 && self.theta.is_finite()) {
            return Err(Error::Parameter(format!("theta = {} must be positive", self.theta)));
        }
        if !(0.0..1.0).contains(&self.sigma) {
            return Err(Error::Parameter(format!("sigma = {} must lie in [0, 1)", self.sigma)));
        }
        if !(self.expansion > 1.0) {
            return Err(Error::Parameter(format!("expansion = {} must exceed 1", self.expansion)));
        }
        if self.max_steps == 0 {
            return Err(Error::Parameter("max_steps must be at least 1".into()));
        }
        if !(self.lambda_seed > 0.0 && self.lambda_seed.is_finite()) {
            return Err(Error::Parameter(format!("lambda_seed = {} must be positive", self.lambda_seed)));
        }
        match self.window {
            Window::Generic { cap } if !(cap > 1.0) => {
                Err(Error::Parameter(format!("window cap = {cap} must exceed 1")))
            }
            Window::Tensor { upper_base } if !(upper_base > self.theta) => Err(Error::Parameter(format!(
                "window is empty: upper base {upper_base} <= theta {}",
                self.theta
            ))),
            _ => Ok(()),
        }
    }

    pub fn phi(&self, lambda: f64, step_norm: f64) -> f64 {
        lambda * step_norm.powi(self.p as i32 - 1)
    }

    fn in_window(&self, phi: f64, lambda: f64, mu: f64) -> bool {
        phi >= self.theta && phi <= self.window.upper(self.theta, lambda, mu)
    }
}

/// Weight of `x` in `x_tilde(lambda)`.
pub fn tau_of_lambda(a_sum: f64, mu: f64, lambda: f64) -> Result<f64> {
    let a = compute_a_next(a_sum, lambda, mu)?;
    Ok(x_tilde_weights(a_sum, a, lambda, mu)?.0)
}

/// Everything produced by one trial stepsize.
#[derive(Debug, Clone, PartialEq)]
pub struct StepTrial {
    pub lambda: f64,
    pub a: f64,
    pub x_tilde: Vector,
    pub triple: InexactTriple,
    pub phi: f64,
}

pub fn step_residual<S: StepSolver + ?Sized>(
    problem: &CompositeProblem,
    state: &SolverState,
    lambda: f64,
    solver: &S,
    config: &LargeStepConfig,
) -> Result<StepTrial> {
    let mu = problem.mu();
    let a = compute_a_next(state.a_sum, lambda, mu)?;
    let x_tilde = compute_x_tilde(&state.x, &state.y, state.a_sum, a, lambda, mu)?;
    let triple = solver.solve(problem, &x_tilde, lambda, config.sigma)?;
    let phi = config.phi(lambda, (&triple.y - &x_tilde).norm());
    Ok(StepTrial {
        lambda,
        a,
        x_tilde,
        triple,
        phi,
    })
}

/// Search for `lambda` with `phi(lambda)` inside the window. Brackets by
/// repeated expansion or contraction, then bisects in `log lambda`. The
/// relative-error test is applied to the trial that lands in the window.
pub fn bisect_lambda<S: StepSolver + ?Sized>(
    problem: &CompositeProblem,
    state: &SolverState,
    config: &LargeStepConfig,
    solver: &S,
) -> Result<StepTrial> {
    let mut trial = search_window(problem, state, config, solver)?;
    trial.triple = accept_triple(trial.triple, &trial.x_tilde, config.sigma, problem, &config.tolerances)?;
    Ok(trial)
}

fn search_window<S: StepSolver + ?Sized>(
    problem: &CompositeProblem,
    state: &SolverState,
    config: &LargeStepConfig,
    solver: &S,
) -> Result<StepTrial> {
    let mu = problem.mu();
    let calls = std::cell::Cell::new(0usize);
    let eval = |lambda: f64| -> Result<StepTrial> {
        calls.set(calls.get() + 1);
        step_residual(problem, state, lambda, solver, config)
    };
    let fail = |steps: usize, lower: f64, upper: f64, last_phi: f64| Error::LineSearch {
        steps,
        lower,
        upper,
        last_phi,
    };

    let seed = state.last_lambda.unwrap_or(config.lambda_seed);
    let mut trial = eval(seed)?;
    if config.in_window(trial.phi, trial.lambda, mu) {
        return Ok(trial);
    }
    // (lo, hi): phi(lo) below the window, phi(hi) above it
    let too_small = trial.phi < config.theta;
    let mut lo = if too_small { seed } else { 0.0 };
    let mut hi = if too_small { f64::INFINITY } else { seed };
    let mut lambda = seed;
    while lo == 0.0 || hi.is_infinite() {
        if calls.get() >= config.max_steps {
            return Err(fail(calls.get(), lo, hi, trial.phi));
        }
        lambda = if too_small { lambda * config.expansion } else { lambda / config.expansion };
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(fail(calls.get(), lo, hi, trial.phi));
        }
        trial = eval(lambda)?;
        if config.in_window(trial.phi, lambda, mu) {
            return Ok(trial);
        }
        if trial.phi < config.theta {
            lo = lambda;
        } else {
            hi = lambda;
        }
    }
    loop {
        if calls.get() >= config.max_steps {
            return Err(fail(calls.get(), lo, hi, trial.phi));
        }
        let mid = (lo * hi).sqrt();
        if !(mid > lo && mid < hi) {
            return Err(fail(calls.get(), lo, hi, trial.phi));
        }
        trial = eval(mid)?;
        if config.in_window(trial.phi, mid, mu) {
            return Ok(trial);
        }
        if trial.phi < config.theta {
            lo = mid;
        } else {
            hi = mid;
        }
    }
}

pub fn largestep_step<S: StepSolver + ?Sized>(
    state: &SolverState,
    solver: &S,
    config: &LargeStepConfig,
    problem: &CompositeProblem,
) -> Result<(SolverState, TraceRecord)> {
    let k_next = state.k + 1;
    let trial = bisect_lambda(problem, state, config, solver).map_err(|e| e.at_step(k_next))?;
    Ok(commit_step(state, trial.lambda, trial.a, &trial.x_tilde, trial.triple, problem))
}

pub fn run_largestep<S: StepSolver + ?Sized>(
    problem: &CompositeProblem,
    config: &LargeStepConfig,
    solver: &S,
    initial: SolverState,
) -> Result<Trace> {
    config.validate()?;
    config.stopping.validate(problem)?;
    check_start(problem, &initial)?;
    let mut trace = Trace::start(initial, problem);
    let mut state = trace.initial.clone();
    while state.k < config.stopping.max_iter {
        let (next, rec) = largestep_step(&state, solver, config, problem)?;
        state = next;
        let done = config.stopping.satisfied(&rec);
        let stationary = rec.v_norm == 0.0 && rec.step_norm == 0.0;
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
    use crate::problem::{make_quadratic, quadratic_from_parts};
    use crate::subproblem::SubproblemSolver;
    use approx::assert_relative_eq;

    fn scalar_quadratic() -> CompositeProblem {
        quadratic_from_parts(Matrix::identity(1, 1), Vector::zeros(1), 1.0, 1.0).unwrap()
    }

    #[test]
    fn tau_first_step_is_one() {
        for lam in [1e-6, 1.0, 1e6] {
            assert_eq!(tau_of_lambda(0.0, 0.7, lam).unwrap(), 1.0);
        }
    }

    #[test]
    fn tau_vanishes_for_tiny_lambda() {
        assert!(tau_of_lambda(1.0, 1.0, 1e-12).unwrap() < 1e-5);
    }

    #[test]
    fn tau_is_nondecreasing_on_log_grid() {
        let grid: Vec<f64> = (0..100).map(|i| 10f64.powf(-6.0 + 12.0 * i as f64 / 99.0)).collect();
        let taus: Vec<f64> = grid.iter().map(|&l| tau_of_lambda(1.0, 1.0, l).unwrap()).collect();
        for w in taus.windows(2) {
            assert!(w[1] >= w[0] - 1e-15);
        }
        assert!(taus.iter().all(|&t| t > 0.0 && t <= 1.0));
    }

    #[test]
    fn phi_on_scalar_quadratic() {
        let p = scalar_quadratic();
        let cfg = LargeStepConfig::new(2, 0.1, 0.0, Stopping::max_iter(1));
        let s0 = SolverState::initial(Vector::from_element(1, 1.0), None);
        let t = step_residual(&p, &s0, 1.0, &SubproblemSolver::ExactStructured, &cfg).unwrap();
        assert_relative_eq!(t.phi, 0.5, max_relative = 1e-15);
    }

    #[test]
    fn phi_zero_at_minimizer() {
        let p = scalar_quadratic();
        let cfg = LargeStepConfig::new(2, 0.1, 0.0, Stopping::max_iter(1));
        let s0 = SolverState::initial(Vector::zeros(1), None);
        let t = step_residual(&p, &s0, 1.0, &SubproblemSolver::ExactStructured, &cfg).unwrap();
        assert_eq!(t.phi, 0.0);
    }

    #[test]
    fn phi_increases_along_doubling_sweep() {
        let p = make_quadratic(8, 0.1, 1.0, 4).unwrap();
        let cfg = LargeStepConfig::new(2, 0.1, 0.0, Stopping::max_iter(1));
        let s0 = SolverState::initial(Vector::from_element(8, 1.0), None);
        let phis: Vec<f64> = (-20..=10)
            .map(|e| {
                step_residual(&p, &s0, 2f64.powi(e), &SubproblemSolver::ExactStructured, &cfg)
                    .unwrap()
                    .phi
            })
            .collect();
        for w in phis.windows(2) {
            assert!(w[1] > w[0]);
        }
    }

    #[test]
    fn seed_in_window_needs_one_call() {
        struct Counting<'a>(&'a std::cell::Cell<usize>);
        impl StepSolver for Counting<'_> {
            fn solve(&self, p: &CompositeProblem, xt: &Vector, l: f64, s: f64) -> Result<InexactTriple> {
                self.0.set(self.0.get() + 1);
                SubproblemSolver::ExactStructured.solve(p, xt, l, s)
            }
        }
        let p = scalar_quadratic();
        let mut cfg = LargeStepConfig::new(2, 0.4, 0.0, Stopping::max_iter(1));
        cfg.window = Window::Generic { cap: 1.5 };
        let calls = std::cell::Cell::new(0);
        let s0 = SolverState::initial(Vector::from_element(1, 1.0), None);
        let t = bisect_lambda(&p, &s0, &cfg, &Counting(&calls)).unwrap();
        assert_eq!(calls.get(), 1);
        assert_eq!(t.lambda, 1.0);
    }

    #[test]
    fn bisection_lands_in_narrow_window() {
        let p = scalar_quadratic();
        let mut cfg = LargeStepConfig::new(2, 0.55, 0.0, Stopping::max_iter(1));
        cfg.window = Window::Generic { cap: 0.6 / 0.55 };
        cfg.lambda_seed = 1e-3;
        let s0 = SolverState::initial(Vector::from_element(1, 1.0), None);
        let t = bisect_lambda(&p, &s0, &cfg, &SubproblemSolver::ExactStructured).unwrap();
        assert!(t.phi >= 0.55 && t.phi <= 0.6 + 1e-15, "phi = {}", t.phi);
        // phi(lambda) = lambda^2 / (1 + lambda) on this instance
        assert_relative_eq!(t.phi, t.lambda * t.lambda / (1.0 + t.lambda), max_relative = 1e-12);
    }

    #[test]
    fn exhausted_search_reports_bracket() {
        let p = scalar_quadratic();
        let mut cfg = LargeStepConfig::new(2, 0.5, 0.0, Stopping::max_iter(1));
        cfg.window = Window::Generic { cap: 1.0 + 1e-14 };
        cfg.max_steps = 5;
        cfg.lambda_seed = 1e-3;
        let s0 = SolverState::initial(Vector::from_element(1, 1.0), None);
        let err = bisect_lambda(&p, &s0, &cfg, &SubproblemSolver::ExactStructured).unwrap_err();
        assert!(matches!(err, Error::LineSearch { steps: 5, .. }));
    }

    #[test]
    fn degenerate_curve_still_moves() {
        let p = make_quadratic(2, 0.5, 1.0, 1).unwrap();
        let cfg = LargeStepConfig::new(2, 0.1, 0.0, Stopping::max_iter(1));
        let x = Vector::from_vec(vec![1.0, -1.0]);
        let s = SolverState {
            k: 3,
            x: x.clone(),
            y: x,
            a_sum: 2.0,
            last_lambda: Some(1.0),
        };
        for e in -4..4 {
            let t = step_residual(&p, &s, 2f64.powi(e), &SubproblemSolver::ExactStructured, &cfg).unwrap();
            assert!(t.phi > 0.0);
        }
    }

    #[test]
    fn run_respects_large_step_condition() {
        let p = make_quadratic(10, 0.05, 1.0, 9).unwrap();
        let mut cfg = LargeStepConfig::new(2, 0.05, 0.5, Stopping::grad_norm(1e-9, 200));
        cfg.window = Window::Generic { cap: 10.0 };
        let s0 = SolverState::initial(Vector::from_element(10, 1.0), None);
        let t = run_largestep(&p, &cfg, &SubproblemSolver::inner_loop(10_000), s0).unwrap();
        assert!(!t.is_empty());
        for r in &t.records {
            let phi = cfg.phi(r.lambda, r.step_norm);
            assert!(phi >= cfg.theta - 1e-12 && phi <= 10.0 * cfg.theta + 1e-12);
            assert!(r.residual_ratio <= 0.25);
        }
    }

    #[test]
    fn config_validation() {
        let ok = LargeStepConfig::new(2, 0.1, 0.5, Stopping::max_iter(1));
        assert!(ok.validate().is_ok());
        let mut bad = ok.clone();
        bad.p = 1;
        assert!(bad.validate().is_err());
        let mut bad = ok.clone();
        bad.sigma = 1.0;
        assert!(bad.validate().is_err());
        let mut bad = ok.clone();
        bad.window = Window::Tensor { upper_base: 0.05 };
        assert!(bad.validate().is_err());
    }
}
