//! Config-driven runs: build a problem, run one method, certify the trace and
//! serialize the results.

mod config;
mod output;

pub use config::{
    AlgorithmSpec, CriterionKind, OutputSpec, ProblemSpec, RunSpec, SolverKind, StartSpec, StoppingSpec, WindowKind,
};
pub use output::{merge_traces, read_trace_csv, report_json, summary_json, trace_csv, CsvRow, TRACE_HEADER};

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::ahpe::{run_ahpe, LambdaPolicy, MethodConfig, SolverState, Stopping, Trace};
use crate::certificates::{verify_trace, CertificateBundle, MethodKind, VerifyContext};
use crate::largestep::{run_largestep, LargeStepConfig, Window};
use crate::linalg::gaussian_vector;
use crate::problem::{make_l1_composite, make_logistic_synthetic, make_quadratic, make_quartic, CompositeProblem};
use crate::proxgrad::{resolve_pg, run_proxgrad_with, PGConfig, PgStepSolver};
use crate::subproblem::SubproblemSolver;
use crate::tensor::{run_tensor, TensorConfig};
use crate::{Error, Vector};

/// Failure classes of a bench run, one per nonzero exit status.
#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Run(Error),
}

impl BenchError {
    pub fn exit_code(&self) -> i32 {
        match self {
            BenchError::Config(_) => 2,
            BenchError::Run(_) => 3,
        }
    }

    /// Setup errors are configuration errors unless a capability is missing.
    fn setup(e: Error) -> Self {
        match e.root() {
            Error::Capability(_) => BenchError::Run(e),
            _ => BenchError::Config(e.to_string()),
        }
    }
}

pub struct RunOutcome {
    pub spec: RunSpec,
    pub problem: CompositeProblem,
    pub trace: Trace,
    pub context: VerifyContext,
    pub constants: BTreeMap<String, f64>,
    pub certificates: CertificateBundle,
}

impl RunOutcome {
    /// 0 when every bound holds, 4 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.certificates.passed() {
            0
        } else {
            4
        }
    }
}

pub fn build_problem(spec: &ProblemSpec) -> crate::Result<CompositeProblem> {
    let p = match *spec {
        ProblemSpec::Quadratic { dim, mu, lip, seed, .. } => make_quadratic(dim, mu, lip, seed)?,
        ProblemSpec::Logistic {
            samples, dim, mu, seed, ..
        } => make_logistic_synthetic(samples, dim, mu, seed)?,
        ProblemSpec::L1 {
            dim,
            mu,
            lip,
            l1_weight,
            seed,
            ..
        } => make_l1_composite(dim, mu, lip, l1_weight, seed)?,
        ProblemSpec::Quartic {
            dim,
            mu,
            coupling,
            radius,
            seed,
            ..
        } => make_quartic(dim, mu, coupling, radius, seed)?,
    };
    Ok(if spec.hessian() { p } else { p.without_hessian() })
}

pub fn build_start(spec: &StartSpec, dim: usize, problem_seed: u64) -> crate::Result<SolverState> {
    let x0 = match spec {
        StartSpec::Ones => Vector::from_element(dim, 1.0),
        StartSpec::Zeros => Vector::zeros(dim),
        StartSpec::Random { scale, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.unwrap_or(problem_seed));
            gaussian_vector(&mut rng, dim) * *scale
        }
        StartSpec::Explicit { values } => {
            if values.len() != dim {
                return Err(Error::Parameter(format!(
                    "start has {} values but the problem dimension is {dim}",
                    values.len()
                )));
            }
            Vector::from_column_slice(values)
        }
    };
    Ok(SolverState::initial(x0, None))
}

pub fn build_stopping(spec: &StoppingSpec) -> Stopping {
    match spec.criterion {
        CriterionKind::None => Stopping::max_iter(spec.max_iter),
        CriterionKind::GradNorm => Stopping::grad_norm(spec.tol, spec.max_iter),
        CriterionKind::ValueGap => Stopping::value_gap(spec.tol, spec.max_iter),
    }
}

fn subproblem_solver(kind: SolverKind, budget: usize) -> SubproblemSolver {
    match kind {
        SolverKind::Exact => SubproblemSolver::ExactStructured,
        SolverKind::InnerLoop => SubproblemSolver::inner_loop(budget),
    }
}

enum Plan {
    Ahpe(MethodConfig, SubproblemSolver),
    LargeStep(LargeStepConfig, SubproblemSolver),
    Tensor(TensorConfig),
    ProxGrad(PGConfig, Box<PgStepSolver>),
}

fn plan(
    spec: &RunSpec,
    problem: &CompositeProblem,
    stopping: Stopping,
    constants: &mut BTreeMap<String, f64>,
) -> crate::Result<(Plan, VerifyContext)> {
    stopping.validate(problem)?;
    let seed = spec.problem.seed();
    match &spec.algorithm {
        AlgorithmSpec::Ahpe {
            sigma,
            lambda,
            lambda_schedule,
            solver,
            inner_budget,
        } => {
            let policy = match (lambda, lambda_schedule) {
                (Some(l), None) => LambdaPolicy::Constant(*l),
                (None, Some(s)) => LambdaPolicy::Schedule(s.clone()),
                (None, None) => LambdaPolicy::Constant(1.0),
                (Some(_), Some(_)) => {
                    return Err(Error::Parameter("give either lambda or lambda_schedule, not both".into()))
                }
            };
            if let Some(lo) = policy.lower_bound() {
                constants.insert("lambda_min".into(), lo);
            }
            let cfg = MethodConfig::new(*sigma, policy, stopping);
            cfg.validate()?;
            constants.insert("sigma".into(), *sigma);
            let ctx = VerifyContext {
                sigma: *sigma,
                method: MethodKind::Ahpe,
            };
            Ok((Plan::Ahpe(cfg, subproblem_solver(*solver, *inner_budget)), ctx))
        }
        AlgorithmSpec::Largestep {
            p,
            theta,
            sigma,
            window,
            cap,
            upper_base,
            expansion,
            max_steps,
            lambda_seed,
            solver,
            inner_budget,
        } => {
            let window = match (window, cap, upper_base) {
                (WindowKind::Generic, c, None) => Window::Generic { cap: c.unwrap_or(10.0) },
                (WindowKind::Tensor, None, Some(u)) => Window::Tensor { upper_base: *u },
                (WindowKind::Tensor, None, None) => {
                    return Err(Error::Parameter("window = \"tensor\" needs upper_base".into()))
                }
                _ => {
                    return Err(Error::Parameter(
                        "cap belongs to the generic window and upper_base to the tensor window".into(),
                    ))
                }
            };
            let mut cfg = LargeStepConfig::new(*p, *theta, *sigma, stopping);
            cfg.window = window;
            cfg.expansion = *expansion;
            cfg.max_steps = *max_steps;
            cfg.lambda_seed = *lambda_seed;
            cfg.validate()?;
            constants.insert("sigma".into(), *sigma);
            constants.insert("theta".into(), *theta);
            match window {
                Window::Generic { cap } => constants.insert("window_cap".into(), cap),
                Window::Tensor { upper_base } => constants.insert("upper_base".into(), upper_base),
            };
            let ctx = VerifyContext {
                sigma: *sigma,
                method: MethodKind::LargeStep {
                    p: *p,
                    theta: *theta,
                    window,
                },
            };
            Ok((Plan::LargeStep(cfg, subproblem_solver(*solver, *inner_budget)), ctx))
        }
        AlgorithmSpec::Tensor {
            p,
            m,
            sigma_l,
            sigma_u,
            sigma_hat,
            inner_budget,
            expansion,
            max_steps,
            lambda_seed,
        } => {
            let mut cfg = TensorConfig::new(*sigma_l, *sigma_u, *sigma_hat, stopping);
            cfg.p = *p;
            cfg.m = *m;
            cfg.inner_budget = *inner_budget;
            cfg.expansion = *expansion;
            cfg.max_steps = *max_steps;
            cfg.lambda_seed = *lambda_seed;
            let params = cfg.resolve(problem)?;
            cfg.largestep_config(&params).validate()?;
            if !problem.has_g_hess() {
                return Err(Error::Capability(format!(
                    "problem '{}' provides no Hessian of g; the tensor method needs it",
                    problem.name()
                )));
            }
            for (k, v) in [
                ("sigma", params.sigma),
                ("theta", params.theta),
                ("upper_base", params.upper_base),
                ("lip_p", params.lip_p),
                ("m", params.m),
            ] {
                constants.insert(k.into(), v);
            }
            let ctx = VerifyContext {
                sigma: params.sigma,
                method: MethodKind::LargeStep {
                    p: params.p,
                    theta: params.theta,
                    window: Window::Tensor {
                        upper_base: params.upper_base,
                    },
                },
            };
            Ok((Plan::Tensor(cfg), ctx))
        }
        AlgorithmSpec::Proxgrad {
            sigma_u,
            sigma_hat,
            noise_fraction,
            noise_seed,
        } => {
            let mut cfg = PGConfig::new(*sigma_u, stopping);
            cfg.sigma_hat = *sigma_hat;
            let params = resolve_pg(problem, &cfg)?;
            if !(0.0..=1.0).contains(noise_fraction) {
                return Err(Error::Parameter(format!("noise_fraction = {noise_fraction} must lie in [0, 1]")));
            }
            let solver = if *sigma_hat > 0.0 && *noise_fraction > 0.0 {
                PgStepSolver::perturbed(*sigma_hat, *noise_fraction, noise_seed.unwrap_or(seed))
            } else {
                PgStepSolver::exact()
            };
            for (k, v) in [
                ("sigma", params.sigma),
                ("sigma_u", *sigma_u),
                ("lambda", params.lambda),
                ("lip", params.lip),
            ] {
                constants.insert(k.into(), v);
            }
            let ctx = VerifyContext {
                sigma: params.sigma,
                method: MethodKind::ProxGrad {
                    sigma_u: *sigma_u,
                    lip: params.lip,
                },
            };
            Ok((Plan::ProxGrad(cfg, Box::new(solver)), ctx))
        }
    }
}

/// Builds, runs and certifies one spec.
pub fn execute(spec: RunSpec) -> Result<RunOutcome, BenchError> {
    let problem = build_problem(&spec.problem).map_err(BenchError::setup)?;
    let initial = build_start(&spec.start, problem.dim(), spec.problem.seed()).map_err(BenchError::setup)?;
    let stopping = build_stopping(&spec.stopping);
    let mut constants = BTreeMap::new();
    constants.insert("mu".into(), problem.mu());
    let (plan, context) = plan(&spec, &problem, stopping, &mut constants).map_err(BenchError::setup)?;
    let trace = match &plan {
        Plan::Ahpe(cfg, solver) => run_ahpe(&problem, solver, cfg, initial),
        Plan::LargeStep(cfg, solver) => run_largestep(&problem, cfg, solver, initial),
        Plan::Tensor(cfg) => run_tensor(&problem, cfg, initial),
        Plan::ProxGrad(cfg, solver) => run_proxgrad_with(&problem, cfg, solver, initial),
    }
    .map_err(BenchError::Run)?;
    if let Some(d0) = trace.d0 {
        constants.insert("d0".into(), d0);
    }
    if let Some(m) = problem.known_minimizer() {
        constants.insert("h_star".into(), m.value);
    }
    let certificates = verify_trace(&trace, &problem, &context);
    Ok(RunOutcome {
        spec,
        problem,
        trace,
        context,
        constants,
        certificates,
    })
}
