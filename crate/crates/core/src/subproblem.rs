//! Producers of inexact proximal triples.
//!
//! [`exact_prox`] covers the structured cases where `prox_{lambda h}` is
//! computable (quadratic `g` with `f = 0`, and one-dimensional problems).
//! [`inner_loop_solve`] runs proximal-gradient on the regularized problem
//! `min f + g + |. - x_tilde|^2 / (2 lambda)` and stops at the first iterate
//! whose certificate passes the relative-error criterion.

use crate::ahpe::{criterion_sides, ratio, InexactTriple};
use crate::error::{Error, Result};
use crate::linalg::{Matrix, Vector};
use crate::problem::{CompositeProblem, Structure};

/// Anything that can produce `(y, v, eps)` for the proximal subproblem at
/// `(x_tilde, lambda)`. `v` must lie in `d_eps f(y) + grad g(y)` by construction.
pub trait StepSolver {
    fn solve(&self, problem: &CompositeProblem, x_tilde: &Vector, lambda: f64, sigma: f64) -> Result<InexactTriple>;
}

impl<S: StepSolver + ?Sized> StepSolver for &S {
    fn solve(&self, problem: &CompositeProblem, x_tilde: &Vector, lambda: f64, sigma: f64) -> Result<InexactTriple> {
        (**self).solve(problem, x_tilde, lambda, sigma)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SubproblemSolver {
    ExactStructured,
    InnerLoop {
        budget: usize,
        /// Stagnation floor: the loop gives up once consecutive iterates move
        /// less than `tol_floor * (1 + |y|)`.
        tol_floor: f64,
    },
}

impl SubproblemSolver {
    pub fn inner_loop(budget: usize) -> Self {
        SubproblemSolver::InnerLoop {
            budget,
            tol_floor: 1e-15,
        }
    }
}

impl StepSolver for SubproblemSolver {
    fn solve(&self, problem: &CompositeProblem, x_tilde: &Vector, lambda: f64, sigma: f64) -> Result<InexactTriple> {
        match *self {
            SubproblemSolver::ExactStructured => exact_prox(problem, x_tilde, lambda),
            SubproblemSolver::InnerLoop { budget, tol_floor } => {
                inner_loop_solve_with_floor(problem, x_tilde, lambda, sigma, problem.mu(), budget, tol_floor)
            }
        }
    }
}

/// `y = prox_{lambda h}(x_tilde)`, `v = (x_tilde - y) / lambda`, `eps = 0`.
pub fn exact_prox(problem: &CompositeProblem, x_tilde: &Vector, lambda: f64) -> Result<InexactTriple> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::Parameter(format!("lambda = {lambda} must be positive")));
    }
    let y = match problem.structure() {
        Structure::Quadratic { q, b } if problem.f_is_zero() => {
            let n = b.len();
            let m = q * lambda + Matrix::identity(n, n);
            m.cholesky()
                .ok_or_else(|| Error::Numeric("lambda Q + I not positive definite".into()))?
                .solve(&(x_tilde + b * lambda))
        }
        _ if problem.dim() == 1 && problem.has_f_prox() => prox_1d(problem, x_tilde[0], lambda)?,
        _ => {
            return Err(Error::Capability(format!(
                "exact prox of lambda h is not available for problem '{}' (need f = 0 with quadratic g, or dimension 1)",
                problem.name()
            )))
        }
    };
    let v = (x_tilde - &y) / lambda;
    Ok(InexactTriple::new(y, v, 0.0, lambda, x_tilde, problem.mu()))
}

/// Solves `0 in lambda (df(y) + g'(y)) + y - x` in one dimension by bisection
/// on the increasing map `w -> w + lambda g'(prox_{lambda f}(w)) - x`; then
/// `y = prox_{lambda f}(w)`.
fn prox_1d(problem: &CompositeProblem, x: f64, lambda: f64) -> Result<Vector> {
    let prox = |w: f64| -> f64 {
        problem
            .f_prox(&Vector::from_element(1, w), lambda)
            .map(|p| p[0])
            .unwrap_or(w)
    };
    let residual = |w: f64| -> f64 { w + lambda * problem.g_grad(&Vector::from_element(1, prox(w)))[0] - x };
    let r0 = residual(x);
    if r0 == 0.0 {
        return Ok(Vector::from_element(1, prox(x)));
    }
    let mut width = 1.0 + x.abs();
    let (mut lo, mut hi) = if r0 > 0.0 { (x - width, x) } else { (x, x + width) };
    let mut guard = 0;
    while residual(lo) > 0.0 || residual(hi) < 0.0 {
        width *= 2.0;
        if r0 > 0.0 {
            lo = x - width;
        } else {
            hi = x + width;
        }
        guard += 1;
        if guard > 2000 || !width.is_finite() {
            return Err(Error::Numeric("could not bracket the 1-D prox root".into()));
        }
    }
    for _ in 0..300 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let r = residual(mid);
        if r == 0.0 {
            lo = mid;
            hi = mid;
            break;
        }
        if r > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(Vector::from_element(1, prox(0.5 * (lo + hi))))
}

pub fn inner_loop_solve(
    problem: &CompositeProblem,
    x_tilde: &Vector,
    lambda: f64,
    sigma: f64,
    mu: f64,
    budget: usize,
) -> Result<InexactTriple> {
    inner_loop_solve_with_floor(problem, x_tilde, lambda, sigma, mu, budget, 1e-15)
}

pub fn inner_loop_solve_with_floor(
    problem: &CompositeProblem,
    x_tilde: &Vector,
    lambda: f64,
    sigma: f64,
    mu: f64,
    budget: usize,
    tol_floor: f64,
) -> Result<InexactTriple> {
    if budget == 0 {
        return Err(Error::Parameter("inner budget must be at least 1".into()));
    }
    if !(sigma > 0.0 && sigma <= 1.0) {
        return Err(Error::Parameter(format!("inner loop needs sigma in (0, 1], got {sigma}")));
    }
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::Parameter(format!("lambda = {lambda} must be positive")));
    }
    let lip = problem
        .lip_grad()
        .ok_or_else(|| Error::Capability("inner loop needs the Lipschitz constant of grad g".into()))?;
    if !problem.has_f_prox() {
        return Err(Error::Capability("inner loop needs the prox of f".into()));
    }
    let step = 1.0 / (lip + 1.0 / lambda);
    let floor = crate::ahpe::noise_floor_sq(x_tilde);

    let mut w = x_tilde.clone();
    let mut best = f64::INFINITY;
    for it in 1..=budget {
        let forward = &w - (problem.g_grad(&w) + (&w - x_tilde) / lambda) * step;
        let y = problem.f_prox(&forward, step).expect("prox checked above");
        let u = (&forward - &y) / step;
        let v = u + problem.g_grad(&y);
        let (lhs, step_sq) = criterion_sides(&y, &v, 0.0, lambda, x_tilde, mu);
        let r = ratio(lhs, step_sq);
        best = best.min(r);
        if lhs <= sigma * sigma * step_sq || (lhs <= floor && step_sq <= floor) {
            return Ok(InexactTriple {
                y,
                v,
                eps: 0.0,
                lambda,
                residual_ratio: r,
            });
        }
        let moved = (&y - &w).norm();
        if moved <= tol_floor * (1.0 + y.norm()) {
            return Err(Error::SolverFailure {
                reason: "inner iterates stagnated".into(),
                iterations: it,
                best_residual_ratio: best,
            });
        }
        w = y;
    }
    Err(Error::SolverFailure {
        reason: "inner budget exhausted".into(),
        iterations: budget,
        best_residual_ratio: best,
    })
}
