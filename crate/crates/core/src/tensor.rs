//! Accelerated inexact high-order tensor method.
//!
//! The regularized Taylor model of `g` at `x`,
//!
//! ```text
//! g_{x,p}(y) = g(x) + sum_{k=1..p} D^k g(x)[y - x]^k / k! + M |y - x|^{p+1} / (p+1)!
//! ```
//!
//! replaces `g` in the proximal subproblem. Approximate minimizers of the
//! model lift to relative-error triples for the original problem, so the
//! outer loop is the large-step driver with a two-sided window on
//! `lambda |y - x_tilde|^{p-1}`. Only `p = 2` has a native subproblem solver.

use nalgebra::SymmetricEigen;

use crate::ahpe::{InexactTriple, SolverState, Stopping, Tolerances, Trace};
use crate::error::{Error, Result};
use crate::largestep::{run_largestep, LargeStepConfig, Window};
use crate::linalg::Vector;
use crate::problem::CompositeProblem;
use crate::subproblem::StepSolver;

pub(crate) fn factorial(p: usize) -> f64 {
    (1..=p).map(|i| i as f64).product()
}

#[derive(Debug, Clone, PartialEq)]
pub struct TensorConfig {
    pub p: usize,
    /// Regularization weight; `None` selects `p L_p`.
    pub m: Option<f64>,
    pub sigma_hat: f64,
    pub sigma_l: f64,
    pub sigma_u: f64,
    /// Iteration cap for the model solver when `f` is not zero.
    pub inner_budget: usize,
    pub expansion: f64,
    pub max_steps: usize,
    pub lambda_seed: f64,
    pub stopping: Stopping,
    pub tolerances: Tolerances,
}

/// Constants derived from a configuration and a problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TensorParams {
    pub p: usize,
    pub lip_p: f64,
    pub m: f64,
    /// `p! sigma_l / (L_p + M)`.
    pub theta: f64,
    /// `p! sigma_u / (L_p + M)`.
    pub upper_base: f64,
    /// `sigma_u + sigma_hat`.
    pub sigma: f64,
}

impl TensorConfig {
    pub fn new(sigma_l: f64, sigma_u: f64, sigma_hat: f64, stopping: Stopping) -> Self {
        TensorConfig {
            p: 2,
            m: None,
            sigma_hat,
            sigma_l,
            sigma_u,
            inner_budget: 10_000,
            expansion: 2.0,
            max_steps: 200,
            lambda_seed: 1.0,
            stopping,
            tolerances: Tolerances::default(),
        }
    }

    fn validate_sigmas(&self) -> Result<()> {
        let (sl, su, sh) = (self.sigma_l, self.sigma_u, self.sigma_hat);
        if self.p < 2 {
            return Err(Error::Parameter(format!("p = {} must be at least 2", self.p)));
        }
        if !(sl > 0.0 && sl < su && su < 1.0) {
            return Err(Error::Parameter(format!("need 0 < sigma_l < sigma_u < 1, got {sl}, {su}")));
        }
        if !(sh >= 0.0 && su + sh < 1.0) {
            return Err(Error::Parameter(format!("need sigma_hat >= 0 and sigma_u + sigma_hat < 1, got {sh}")));
        }
        let e = self.p as i32 - 1;
        if !(sl * (1.0 + sh).powi(e) < su * (1.0 - sh).powi(e)) {
            return Err(Error::Parameter(
                "window is empty: sigma_l (1 + sigma_hat)^(p-1) must be below sigma_u (1 - sigma_hat)^(p-1)".into(),
            ));
        }
        Ok(())
    }

    pub fn resolve(&self, problem: &CompositeProblem) -> Result<TensorParams> {
        self.validate_sigmas()?;
        let lip_p = problem
            .lip_p(self.p)
            .ok_or_else(|| Error::Capability(format!("problem '{}' has no L_{} constant", problem.name(), self.p)))?;
        let m = self.m.unwrap_or(self.p as f64 * lip_p);
        if !(m.is_finite() && m >= self.p as f64 * lip_p) {
            return Err(Error::Parameter(format!(
                "M = {m} must be at least p L_p = {}",
                self.p as f64 * lip_p
            )));
        }
        if !(lip_p + m > 0.0) {
            return Err(Error::Parameter("L_p + M must be positive; set M explicitly".into()));
        }
        let pf = factorial(self.p);
        Ok(TensorParams {
            p: self.p,
            lip_p,
            m,
            theta: pf * self.sigma_l / (lip_p + m),
            upper_base: pf * self.sigma_u / (lip_p + m),
            sigma: self.sigma_u + self.sigma_hat,
        })
    }

    pub fn largestep_config(&self, params: &TensorParams) -> LargeStepConfig {
        LargeStepConfig {
            p: self.p,
            theta: params.theta,
            sigma: params.sigma,
            window: Window::Tensor {
                upper_base: params.upper_base,
            },
            expansion: self.expansion,
            max_steps: self.max_steps,
            lambda_seed: self.lambda_seed,
            stopping: self.stopping,
            tolerances: self.tolerances,
        }
    }
}

/// Approximate model solution: `u` is an `eps`-subgradient of `f` at `y`.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorTriple {
    pub y: Vector,
    pub u: Vector,
    pub eps: f64,
    pub model_residual: f64,
}

fn second_order_oracles(problem: &CompositeProblem, p: usize) -> Result<()> {
    if p != 2 {
        return Err(Error::Capability(format!("model oracles of order {p} are not available; only p = 2")));
    }
    if !problem.has_g_hess() {
        return Err(Error::Capability(format!(
            "problem '{}' has no Hessian oracle for g",
            problem.name()
        )));
    }
    Ok(())
}

pub fn tensor_model_value(problem: &CompositeProblem, x: &Vector, y: &Vector, p: usize, m: f64) -> Result<f64> {
    second_order_oracles(problem, p)?;
    let d = y - x;
    let h = problem.g_hess(x).expect("checked");
    let r = d.norm();
    Ok(problem.g_value(x) + problem.g_grad(x).dot(&d) + 0.5 * d.dot(&(&h * &d)) + m * r * r * r / 6.0)
}

pub fn tensor_model_grad(problem: &CompositeProblem, x: &Vector, y: &Vector, p: usize, m: f64) -> Result<Vector> {
    second_order_oracles(problem, p)?;
    let d = y - x;
    let h = problem.g_hess(x).expect("checked");
    Ok(problem.g_grad(x) + &h * &d + &d * (0.5 * m * d.norm()))
}

/// Left side of the model acceptance test, without the `eps` term.
fn model_residual(problem: &CompositeProblem, z: &Vector, x: &Vector, y: &Vector, u: &Vector, lambda: f64, m: f64) -> Result<f64> {
    let gm = tensor_model_grad(problem, z, y, 2, m)?;
    let r = (u + gm) * lambda + y - x;
    Ok(r.norm_squared() / (1.0 + lambda * problem.mu()))
}

pub fn solve_tensor_subproblem_p2(
    problem: &CompositeProblem,
    x: &Vector,
    lambda: f64,
    m: f64,
    sigma_hat: f64,
) -> Result<TensorTriple> {
    solve_tensor_subproblem_p2_with_budget(problem, x, lambda, m, sigma_hat, 10_000)
}

pub fn solve_tensor_subproblem_p2_with_budget(
    problem: &CompositeProblem,
    x: &Vector,
    lambda: f64,
    m: f64,
    sigma_hat: f64,
    budget: usize,
) -> Result<TensorTriple> {
    second_order_oracles(problem, 2)?;
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::Parameter(format!("lambda = {lambda} must be positive")));
    }
    if !(m >= 0.0 && m.is_finite() && sigma_hat >= 0.0) {
        return Err(Error::Parameter(format!("need M >= 0 and sigma_hat >= 0, got {m}, {sigma_hat}")));
    }
    let z = problem.project(x);
    if problem.f_is_zero() {
        let y = secular_solve(problem, &z, x, lambda, m)?;
        let u = Vector::zeros(x.len());
        let res = model_residual(problem, &z, x, &y, &u, lambda, m)?;
        let step_sq = (&y - x).norm_squared();
        if res > sigma_hat * sigma_hat * step_sq + 1e-12 * (1.0 + step_sq) {
            return Err(Error::SolverFailure {
                reason: "secular solve missed the model residual target".into(),
                iterations: 1,
                best_residual_ratio: res / step_sq,
            });
        }
        return Ok(TensorTriple {
            y,
            u,
            eps: 0.0,
            model_residual: res,
        });
    }
    if sigma_hat == 0.0 {
        return Err(Error::Capability("exact model solutions need f = 0; use sigma_hat > 0".into()));
    }
    if !problem.has_f_prox() {
        return Err(Error::Capability("model solver needs the prox of f".into()));
    }
    model_prox_gradient(problem, &z, x, lambda, m, sigma_hat, budget)
}

/// Stationarity `lambda grad g_z(y) + y - x = 0` with `d = y - z` reads
/// `(lambda H + (1 + lambda M r / 2) I) d = x - z - lambda grad g(z)`, `r = |d|`.
/// Eigendecomposing `H` turns it into a scalar equation in `r`.
fn secular_solve(problem: &CompositeProblem, z: &Vector, x: &Vector, lambda: f64, m: f64) -> Result<Vector> {
    let h = problem.g_hess(z).expect("checked");
    let eig = SymmetricEigen::new(h);
    let rhs = x - z - problem.g_grad(z) * lambda;
    let w = eig.eigenvectors.transpose() * rhs;
    let base: Vec<f64> = eig.eigenvalues.iter().map(|&e| lambda * e + 1.0).collect();
    if base.iter().any(|&b| !(b > 0.0)) {
        return Err(Error::Numeric("I + lambda H is not positive definite".into()));
    }
    let c = 0.5 * lambda * m;
    let norm_at = |r: f64| -> f64 {
        w.iter()
            .zip(&base)
            .map(|(wi, b)| (wi / (b + c * r)).powi(2))
            .sum::<f64>()
            .sqrt()
    };
    let mut r = 0.0;
    let n0 = norm_at(0.0);
    if c > 0.0 && n0 > 0.0 {
        let (mut lo, mut hi) = (0.0, n0);
        r = n0;
        for _ in 0..300 {
            let nr = norm_at(r);
            let psi = nr - r;
            if psi.abs() <= 1e-15 * r {
                break;
            }
            if psi > 0.0 {
                lo = r;
            } else {
                hi = r;
            }
            let dn = -c * w.iter().zip(&base).map(|(wi, b)| wi * wi / (b + c * r).powi(3)).sum::<f64>() / nr;
            let newton = r - psi / (dn - 1.0);
            r = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
            if hi - lo <= 1e-16 * hi {
                break;
            }
        }
    }
    let scaled = Vector::from_iterator(w.len(), w.iter().zip(&base).map(|(wi, b)| wi / (b + c * r)));
    Ok(z + eig.eigenvectors * scaled)
}

/// Proximal gradient with backtracking on `f + g_z + |. - x|^2 / (2 lambda)`,
/// stopped by the model acceptance test.
fn model_prox_gradient(
    problem: &CompositeProblem,
    z: &Vector,
    x: &Vector,
    lambda: f64,
    m: f64,
    sigma_hat: f64,
    budget: usize,
) -> Result<TensorTriple> {
    let smooth = |y: &Vector| -> Result<f64> {
        Ok(tensor_model_value(problem, z, y, 2, m)? + (y - x).norm_squared() / (2.0 * lambda))
    };
    let smooth_grad = |y: &Vector| -> Result<Vector> { Ok(tensor_model_grad(problem, z, y, 2, m)? + (y - x) / lambda) };
    let h = problem.g_hess(z).expect("checked");
    let mut s = 1.0 / (crate::linalg::sym_op_norm(&h) + 1.0 / lambda);
    let floor = {
        let t = 1e-13 * (1.0 + x.norm());
        t * t
    };
    let mut w = x.clone();
    let mut best = f64::INFINITY;
    for it in 1..=budget {
        let fw = smooth(&w)?;
        let gw = smooth_grad(&w)?;
        let (y, u) = loop {
            let forward = &w - &gw * s;
            let y = problem.f_prox(&forward, s).expect("checked");
            let d = &y - &w;
            if smooth(&y)? <= fw + gw.dot(&d) + d.norm_squared() / (2.0 * s) + 1e-14 * (1.0 + fw.abs()) {
                break (y.clone(), (forward - y) / s);
            }
            s *= 0.5;
            if s < 1e-300 {
                return Err(Error::Numeric("model backtracking collapsed".into()));
            }
        };
        let res = model_residual(problem, z, x, &y, &u, lambda, m)?;
        let step_sq = (&y - x).norm_squared();
        best = best.min(res / step_sq);
        if res <= sigma_hat * sigma_hat * step_sq || (res <= floor && step_sq <= floor) {
            return Ok(TensorTriple {
                y,
                u,
                eps: 0.0,
                model_residual: res,
            });
        }
        if (&y - &w).norm() <= 1e-15 * (1.0 + y.norm()) {
            return Err(Error::SolverFailure {
                reason: "model iterates stagnated".into(),
                iterations: it,
                best_residual_ratio: best,
            });
        }
        w = y;
    }
    Err(Error::SolverFailure {
        reason: "model solver budget exhausted".into(),
        iterations: budget,
        best_residual_ratio: best,
    })
}

/// `v = u + grad g(y)` with the same `eps`.
pub fn lift_tensor_solution(triple: TensorTriple, problem: &CompositeProblem, x: &Vector, lambda: f64) -> InexactTriple {
    let v = &triple.u + problem.g_grad(&triple.y);
    InexactTriple::new(triple.y, v, triple.eps, lambda, x, problem.mu())
}

/// Relative-error level certified for a lifted triple:
/// `lambda (L_p + M) |y - x|^{p-1} / (p! sqrt(1 + lambda mu)) + sigma_hat`.
pub fn lifted_sigma(params: &TensorParams, sigma_hat: f64, mu: f64, lambda: f64, step_norm: f64) -> f64 {
    lambda * (params.lip_p + params.m) * step_norm.powi(params.p as i32 - 1)
        / (factorial(params.p) * (1.0 + lambda * mu).sqrt())
        + sigma_hat
}

/// Step solver used inside the large-step driver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TensorStepSolver {
    pub m: f64,
    pub sigma_hat: f64,
    pub inner_budget: usize,
}

impl StepSolver for TensorStepSolver {
    fn solve(&self, problem: &CompositeProblem, x_tilde: &Vector, lambda: f64, _sigma: f64) -> Result<InexactTriple> {
        let t = solve_tensor_subproblem_p2_with_budget(problem, x_tilde, lambda, self.m, self.sigma_hat, self.inner_budget)?;
        Ok(lift_tensor_solution(t, problem, x_tilde, lambda))
    }
}

pub fn run_tensor(problem: &CompositeProblem, config: &TensorConfig, initial: SolverState) -> Result<Trace> {
    let params = config.resolve(problem)?;
    second_order_oracles(problem, config.p)?;
    let solver = TensorStepSolver {
        m: params.m,
        sigma_hat: config.sigma_hat,
        inner_budget: config.inner_budget,
    };
    run_largestep(problem, &config.largestep_config(&params), &solver, initial)
}
