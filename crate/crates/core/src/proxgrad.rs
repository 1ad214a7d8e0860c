//! Accelerated inexact proximal-gradient method.
//!
//! A single forward-backward step at `x_tilde` with the fixed stepsize
//!
//! ```text
//! lambda = sigma_u / (sqrt((sigma_u mu / 2)^2 + L^2) - sigma_u mu / 2)
//! ```
//!
//! is a relative-error proximal triple with `sigma = sigma_u + sigma_hat`,
//! so the outer loop is the plain accelerated iteration.

use std::sync::Mutex;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::ahpe::{run_ahpe, InexactTriple, LambdaPolicy, MethodConfig, SolverState, Stopping, Tolerances, Trace};
use crate::error::{Error, Result};
use crate::linalg::{gaussian_vector, Vector};
use crate::problem::CompositeProblem;
use crate::subproblem::StepSolver;

#[derive(Debug, Clone, PartialEq)]
pub struct PGConfig {
    pub sigma_u: f64,
    pub sigma_hat: f64,
    pub stopping: Stopping,
    pub tolerances: Tolerances,
}

impl PGConfig {
    pub fn new(sigma_u: f64, stopping: Stopping) -> Self {
        PGConfig {
            sigma_u,
            sigma_hat: 0.0,
            stopping,
            tolerances: Tolerances::default(),
        }
    }

    pub fn sigma(&self) -> f64 {
        self.sigma_u + self.sigma_hat
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_u > 0.0 && self.sigma_u <= 1.0) {
            return Err(Error::Parameter(format!("sigma_u = {} must lie in (0, 1]", self.sigma_u)));
        }
        if !(self.sigma_hat >= 0.0) {
            return Err(Error::Parameter(format!("sigma_hat = {} must be >= 0", self.sigma_hat)));
        }
        if !(self.sigma() < 1.0) {
            return Err(Error::Parameter(format!(
                "sigma_u + sigma_hat = {} must be below 1",
                self.sigma()
            )));
        }
        Ok(())
    }
}

impl Default for PGConfig {
    fn default() -> Self {
        PGConfig::new(0.99, Stopping::default())
    }
}

pub fn compute_lambda_pg(sigma_u: f64, mu: f64, lip: f64) -> f64 {
    let half = 0.5 * sigma_u * mu;
    // sigma_u / (sqrt(half^2 + L^2) - half), rationalized
    (half + (half * half + lip * lip).sqrt()) * sigma_u / (lip * lip)
}

/// `|L^2 lambda^2 - sigma_u^2 mu lambda - sigma_u^2| / max(1, L^2 lambda^2)`.
pub fn lambda_identity_residual(lambda: f64, sigma_u: f64, mu: f64, lip: f64) -> f64 {
    let ll = lip * lip * lambda * lambda;
    (ll - sigma_u * sigma_u * mu * lambda - sigma_u * sigma_u).abs() / ll.max(1.0)
}

/// Forward-backward output: `u` is a subgradient of `f` at `y`.
#[derive(Debug, Clone, PartialEq)]
pub struct PgRecord {
    pub y: Vector,
    pub u: Vector,
    pub eps: f64,
    /// `|lambda (u + grad g(z)) + y - x_tilde|^2 / (1 + lambda mu) + 2 lambda eps`.
    pub residual: f64,
}

fn forward_backward(problem: &CompositeProblem, x_tilde: &Vector, lambda: f64, noise: Option<&Vector>) -> Result<PgRecord> {
    let z = problem.project(x_tilde);
    let grad_z = problem.g_grad(&z);
    let mut forward = x_tilde - &grad_z * lambda;
    if let Some(e) = noise {
        forward += e;
    }
    let y = problem
        .f_prox(&forward, lambda)
        .ok_or_else(|| Error::Capability(format!("problem '{}' has no prox for f", problem.name())))?;
    let u = (&forward - &y) / lambda;
    let r = (&u + &grad_z) * lambda + &y - x_tilde;
    Ok(PgRecord {
        residual: r.norm_squared() / (1.0 + lambda * problem.mu()),
        y,
        u,
        eps: 0.0,
    })
}

pub fn pg_exact_solution(problem: &CompositeProblem, x_tilde: &Vector, lambda: f64) -> Result<PgRecord> {
    forward_backward(problem, x_tilde, lambda, None)
}

/// Perturbs the forward point by `noise`; the residual then equals
/// `|noise|^2 / (1 + lambda mu)`.
pub fn pg_perturbed_solution(problem: &CompositeProblem, x_tilde: &Vector, lambda: f64, noise: &Vector) -> Result<PgRecord> {
    forward_backward(problem, x_tilde, lambda, Some(noise))
}

pub fn pg_residual_ok(record: &PgRecord, x_tilde: &Vector, sigma_hat: f64) -> bool {
    record.residual <= sigma_hat * sigma_hat * (&record.y - x_tilde).norm_squared()
}

pub fn lift_pg_solution(record: PgRecord, problem: &CompositeProblem, x_tilde: &Vector, lambda: f64) -> InexactTriple {
    let v = &record.u + problem.g_grad(&record.y);
    InexactTriple::new(record.y, v, record.eps, lambda, x_tilde, problem.mu())
}

/// Step solver for the outer loop. With `noise` set, each step perturbs the
/// forward point by a random vector scaled to keep the residual within
/// `sigma_hat`.
#[derive(Debug)]
pub struct PgStepSolver {
    pub sigma_hat: f64,
    noise: Option<Mutex<(f64, ChaCha8Rng)>>,
}

impl PgStepSolver {
    pub fn exact() -> Self {
        PgStepSolver {
            sigma_hat: 0.0,
            noise: None,
        }
    }

    /// `fraction` in (0, 1) sets the residual to roughly `fraction^2 sigma_hat^2 |y - x_tilde|^2`.
    pub fn perturbed(sigma_hat: f64, fraction: f64, seed: u64) -> Self {
        PgStepSolver {
            sigma_hat,
            noise: Some(Mutex::new((fraction, ChaCha8Rng::seed_from_u64(seed)))),
        }
    }
}

impl StepSolver for PgStepSolver {
    fn solve(&self, problem: &CompositeProblem, x_tilde: &Vector, lambda: f64, _sigma: f64) -> Result<InexactTriple> {
        let exact = pg_exact_solution(problem, x_tilde, lambda)?;
        let record = match (&self.noise, self.sigma_hat > 0.0) {
            (Some(cell), true) => {
                let mut guard = cell.lock().expect("noise state poisoned");
                let (fraction, rng) = &mut *guard;
                let dir = gaussian_vector(rng, x_tilde.len());
                let dir = if dir.norm() > 0.0 { &dir / dir.norm() } else { dir };
                let base = self.sigma_hat * (1.0 + lambda * problem.mu()).sqrt() * (&exact.y - x_tilde).norm();
                let mut scale = *fraction * base;
                let mut rec = exact.clone();
                for _ in 0..60 {
                    let trial = pg_perturbed_solution(problem, x_tilde, lambda, &(&dir * scale))?;
                    if pg_residual_ok(&trial, x_tilde, self.sigma_hat) {
                        rec = trial;
                        break;
                    }
                    scale *= 0.5;
                }
                rec
            }
            _ => exact,
        };
        Ok(lift_pg_solution(record, problem, x_tilde, lambda))
    }
}

/// Validated constants for a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PgParams {
    pub lambda: f64,
    pub lip: f64,
    pub sigma: f64,
}

pub fn resolve_pg(problem: &CompositeProblem, config: &PGConfig) -> Result<PgParams> {
    config.validate()?;
    let mu = problem.mu();
    if !(mu > 0.0) {
        return Err(Error::Parameter("proximal-gradient runs need mu > 0".into()));
    }
    let lip = problem
        .lip_grad()
        .ok_or_else(|| Error::Capability(format!("problem '{}' has no Lipschitz constant for grad g", problem.name())))?;
    if !problem.has_f_prox() {
        return Err(Error::Capability(format!("problem '{}' has no prox for f", problem.name())));
    }
    let lambda = compute_lambda_pg(config.sigma_u, mu, lip);
    let res = lambda_identity_residual(lambda, config.sigma_u, mu, lip);
    if res > 1e-12 {
        return Err(Error::Numeric(format!("stepsize identity residual {res:.3e} exceeds 1e-12")));
    }
    Ok(PgParams {
        lambda,
        lip,
        sigma: config.sigma(),
    })
}

pub fn run_proxgrad(problem: &CompositeProblem, config: &PGConfig, initial: SolverState) -> Result<Trace> {
    run_proxgrad_with(problem, config, &PgStepSolver::exact(), initial)
}

pub fn run_proxgrad_with(
    problem: &CompositeProblem,
    config: &PGConfig,
    solver: &PgStepSolver,
    initial: SolverState,
) -> Result<Trace> {
    let params = resolve_pg(problem, config)?;
    let method = MethodConfig {
        sigma: params.sigma,
        lambda_policy: LambdaPolicy::Constant(params.lambda),
        stopping: config.stopping,
        tolerances: config.tolerances,
    };
    run_ahpe(problem, solver, &method, initial)
}
