//! C interface to `hpe_accel`.
//!
//! Every function returns an [`HpeStatus`]. On failure a message is kept per
//! thread and can be read with [`hpe_last_error_message`]. Handles are created
//! by the library and must be released with the matching `*_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use hpe_accel::ahpe::{run_ahpe, LambdaPolicy, MethodConfig, SolverState, Stopping, Termination, Trace};
use hpe_accel::certificates::{verify_trace, MethodKind, VerifyContext};
use hpe_accel::largestep::{run_largestep, LargeStepConfig, Window};
use hpe_accel::problem::{
    make_l1_composite, make_logistic_synthetic, make_quadratic, make_quartic, quadratic_from_parts, CompositeProblem,
};
use hpe_accel::proxgrad::{resolve_pg, run_proxgrad, PGConfig};
use hpe_accel::subproblem::SubproblemSolver;
use hpe_accel::tensor::{run_tensor, TensorConfig};
use hpe_accel::{Error, Matrix, Vector};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HpeStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidParameter = 2,
    InvalidData = 3,
    Numeric = 4,
    MissingCapability = 5,
    DegenerateState = 6,
    SolverFailure = 7,
    LineSearch = 8,
    OutOfRange = 9,
    Panic = 10,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HpeStopCriterion {
    None = 0,
    GradNorm = 1,
    ValueGap = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HpeStopping {
    pub max_iter: usize,
    pub criterion: HpeStopCriterion,
    pub tol: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HpeTermination {
    Converged = 0,
    Stationary = 1,
    MaxIterations = 2,
}

/// One trace row. Quantities that need a known minimizer are NaN when absent.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HpeTraceRow {
    pub k: usize,
    pub lambda: f64,
    pub a: f64,
    pub a_sum: f64,
    pub value_gap: f64,
    pub dist_x: f64,
    pub dist_y: f64,
    pub v_norm: f64,
    pub eps: f64,
    pub residual_ratio: f64,
    pub step_norm: f64,
}

/// Opaque problem handle.
pub struct HpeProblem {
    inner: CompositeProblem,
}

/// Opaque trace handle.
pub struct HpeTrace {
    trace: Trace,
    context: VerifyContext,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> HpeStatus {
    match e.root() {
        Error::Parameter(_) => HpeStatus::InvalidParameter,
        Error::Data(_) => HpeStatus::InvalidData,
        Error::Numeric(_) => HpeStatus::Numeric,
        Error::Capability(_) => HpeStatus::MissingCapability,
        Error::DegenerateState(_) => HpeStatus::DegenerateState,
        Error::SolverFailure { .. } => HpeStatus::SolverFailure,
        Error::LineSearch { .. } => HpeStatus::LineSearch,
        Error::Step { .. } => HpeStatus::SolverFailure,
    }
}

struct Fail(HpeStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(HpeStatus::NullPointer, format!("{what} is NULL"))
}

fn guard<F: FnOnce() -> Result<(), Fail>>(f: F) -> HpeStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => HpeStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            HpeStatus::Panic
        }
    }
}

unsafe fn slice<'a>(data: *const f64, len: usize, what: &str) -> Result<&'a [f64], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if data.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(data, len))
}

unsafe fn emit_problem(out: *mut *mut HpeProblem, build: hpe_accel::Result<CompositeProblem>) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null("out"));
    }
    let p = build?;
    *out = Box::into_raw(Box::new(HpeProblem { inner: p }));
    Ok(())
}

/// Message of the last failed call on this thread, or NULL. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn hpe_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

#[no_mangle]
pub extern "C" fn hpe_version() -> *const c_char {
    static VERSION: &CStr = match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
        Ok(v) => v,
        Err(_) => c"unknown",
    };
    VERSION.as_ptr()
}

/// Random quadratic with spectrum in `[mu, lip]`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn hpe_problem_quadratic(
    dim: usize,
    mu: f64,
    lip: f64,
    seed: u64,
    out: *mut *mut HpeProblem,
) -> HpeStatus {
    guard(|| emit_problem(out, make_quadratic(dim, mu, lip, seed)))
}

/// `g(x) = x'Qx/2 - b'x` with row-major `q` (`dim * dim` entries).
///
/// # Safety
/// `q` and `b` must point to `dim * dim` and `dim` readable doubles; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn hpe_problem_quadratic_from_parts(
    q: *const f64,
    b: *const f64,
    dim: usize,
    mu: f64,
    lip: f64,
    out: *mut *mut HpeProblem,
) -> HpeStatus {
    guard(|| {
        let qs = slice(q, dim * dim, "q")?;
        let bs = slice(b, dim, "b")?;
        let qm = Matrix::from_row_slice(dim, dim, qs);
        emit_problem(out, quadratic_from_parts(qm, Vector::from_column_slice(bs), mu, lip))
    })
}

/// Ridge-regularized logistic regression on synthetic data.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn hpe_problem_logistic(
    samples: usize,
    dim: usize,
    mu: f64,
    seed: u64,
    out: *mut *mut HpeProblem,
) -> HpeStatus {
    guard(|| emit_problem(out, make_logistic_synthetic(samples, dim, mu, seed)))
}

/// Quadratic plus `l1_weight |x|_1`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn hpe_problem_l1(
    dim: usize,
    mu: f64,
    lip: f64,
    l1_weight: f64,
    seed: u64,
    out: *mut *mut HpeProblem,
) -> HpeStatus {
    guard(|| emit_problem(out, make_l1_composite(dim, mu, lip, l1_weight, seed)))
}

/// Strongly convex quartic; the second-order constant holds on the ball of `radius`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn hpe_problem_quartic(
    dim: usize,
    mu: f64,
    coupling: f64,
    radius: f64,
    seed: u64,
    out: *mut *mut HpeProblem,
) -> HpeStatus {
    guard(|| emit_problem(out, make_quartic(dim, mu, coupling, radius, seed)))
}

/// Drops the Hessian oracle so second-order methods report a missing capability.
///
/// # Safety
/// `problem` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn hpe_problem_drop_hessian(problem: *mut HpeProblem) -> HpeStatus {
    guard(|| {
        let p = problem.as_mut().ok_or_else(|| null("problem"))?;
        p.inner = p.inner.clone().without_hessian();
        Ok(())
    })
}

/// Dimension of the problem, 0 for NULL.
///
/// # Safety
/// `problem` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn hpe_problem_dim(problem: *const HpeProblem) -> usize {
    problem.as_ref().map_or(0, |p| p.inner.dim())
}

/// # Safety
/// `problem` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn hpe_problem_free(problem: *mut HpeProblem) {
    if !problem.is_null() {
        drop(Box::from_raw(problem));
    }
}

fn stopping(s: HpeStopping) -> Stopping {
    match s.criterion {
        HpeStopCriterion::None => Stopping::max_iter(s.max_iter),
        HpeStopCriterion::GradNorm => Stopping::grad_norm(s.tol, s.max_iter),
        HpeStopCriterion::ValueGap => Stopping::value_gap(s.tol, s.max_iter),
    }
}

/// Starting point from `x0[0..len]`; NULL gives the all-ones vector.
unsafe fn start(problem: &CompositeProblem, x0: *const f64, len: usize) -> Result<SolverState, Fail> {
    let x = if x0.is_null() {
        Vector::from_element(problem.dim(), 1.0)
    } else {
        if len != problem.dim() {
            return Err(Fail(
                HpeStatus::InvalidParameter,
                format!("x0 has {len} entries but the problem dimension is {}", problem.dim()),
            ));
        }
        Vector::from_column_slice(slice(x0, len, "x0")?)
    };
    Ok(SolverState::initial(x, None))
}

unsafe fn run_into<F>(problem: *const HpeProblem, out: *mut *mut HpeTrace, f: F) -> HpeStatus
where
    F: FnOnce(&CompositeProblem) -> Result<(Trace, VerifyContext), Fail>,
{
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let p = problem.as_ref().ok_or_else(|| null("problem"))?;
        let (trace, context) = f(&p.inner)?;
        *out = Box::into_raw(Box::new(HpeTrace { trace, context }));
        Ok(())
    })
}

/// Accelerated proximal point with constant `lambda`. `inner_budget == 0`
/// selects the exact resolvent, otherwise a prox-gradient inner loop.
///
/// # Safety
/// `problem` must be live, `x0` NULL or `x0_len` readable doubles, `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn hpe_run_ahpe(
    problem: *const HpeProblem,
    x0: *const f64,
    x0_len: usize,
    sigma: f64,
    lambda: f64,
    inner_budget: usize,
    stop: HpeStopping,
    out: *mut *mut HpeTrace,
) -> HpeStatus {
    run_into(problem, out, |p| {
        let init = start(p, x0, x0_len)?;
        let cfg = MethodConfig::new(sigma, LambdaPolicy::Constant(lambda), stopping(stop));
        let solver = if inner_budget == 0 {
            SubproblemSolver::ExactStructured
        } else {
            SubproblemSolver::inner_loop(inner_budget)
        };
        let trace = run_ahpe(p, &solver, &cfg, init)?;
        Ok((
            trace,
            VerifyContext {
                sigma,
                method: MethodKind::Ahpe,
            },
        ))
    })
}

/// Large-step method with exact resolvents and the window `theta <= phi <= cap * theta`.
///
/// # Safety
/// As for [`hpe_run_ahpe`].
#[no_mangle]
pub unsafe extern "C" fn hpe_run_largestep(
    problem: *const HpeProblem,
    x0: *const f64,
    x0_len: usize,
    p_order: usize,
    theta: f64,
    sigma: f64,
    cap: f64,
    stop: HpeStopping,
    out: *mut *mut HpeTrace,
) -> HpeStatus {
    run_into(problem, out, |p| {
        let init = start(p, x0, x0_len)?;
        let mut cfg = LargeStepConfig::new(p_order, theta, sigma, stopping(stop));
        cfg.window = Window::Generic { cap };
        let trace = run_largestep(p, &cfg, &SubproblemSolver::ExactStructured, init)?;
        Ok((
            trace,
            VerifyContext {
                sigma,
                method: MethodKind::LargeStep {
                    p: p_order,
                    theta,
                    window: cfg.window,
                },
            },
        ))
    })
}

/// Second-order tensor method. A NaN `m` selects `M = 2 L_2`.
///
/// # Safety
/// As for [`hpe_run_ahpe`].
#[no_mangle]
pub unsafe extern "C" fn hpe_run_tensor(
    problem: *const HpeProblem,
    x0: *const f64,
    x0_len: usize,
    sigma_l: f64,
    sigma_u: f64,
    sigma_hat: f64,
    m: f64,
    stop: HpeStopping,
    out: *mut *mut HpeTrace,
) -> HpeStatus {
    run_into(problem, out, |p| {
        let init = start(p, x0, x0_len)?;
        let mut cfg = TensorConfig::new(sigma_l, sigma_u, sigma_hat, stopping(stop));
        cfg.m = (!m.is_nan()).then_some(m);
        let params = cfg.resolve(p)?;
        let trace = run_tensor(p, &cfg, init)?;
        Ok((
            trace,
            VerifyContext {
                sigma: params.sigma,
                method: MethodKind::LargeStep {
                    p: params.p,
                    theta: params.theta,
                    window: Window::Tensor {
                        upper_base: params.upper_base,
                    },
                },
            },
        ))
    })
}

/// Accelerated proximal gradient with stepsize derived from `sigma_u`.
///
/// # Safety
/// As for [`hpe_run_ahpe`].
#[no_mangle]
pub unsafe extern "C" fn hpe_run_proxgrad(
    problem: *const HpeProblem,
    x0: *const f64,
    x0_len: usize,
    sigma_u: f64,
    stop: HpeStopping,
    out: *mut *mut HpeTrace,
) -> HpeStatus {
    run_into(problem, out, |p| {
        let init = start(p, x0, x0_len)?;
        let cfg = PGConfig::new(sigma_u, stopping(stop));
        let params = resolve_pg(p, &cfg)?;
        let trace = run_proxgrad(p, &cfg, init)?;
        Ok((
            trace,
            VerifyContext {
                sigma: params.sigma,
                method: MethodKind::ProxGrad {
                    sigma_u,
                    lip: params.lip,
                },
            },
        ))
    })
}

/// Number of recorded iterations, 0 for NULL.
///
/// # Safety
/// `trace` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn hpe_trace_len(trace: *const HpeTrace) -> usize {
    trace.as_ref().map_or(0, |t| t.trace.len())
}

/// # Safety
/// `trace` must be live and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn hpe_trace_row(trace: *const HpeTrace, index: usize, out: *mut HpeTraceRow) -> HpeStatus {
    guard(|| {
        let t = trace.as_ref().ok_or_else(|| null("trace"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let r = t.trace.records.get(index).ok_or_else(|| {
            Fail(
                HpeStatus::OutOfRange,
                format!("row {index} out of range for a trace of {} rows", t.trace.len()),
            )
        })?;
        *out = HpeTraceRow {
            k: r.k,
            lambda: r.lambda,
            a: r.a,
            a_sum: r.a_sum,
            value_gap: r.value_gap.unwrap_or(f64::NAN),
            dist_x: r.dist_x.unwrap_or(f64::NAN),
            dist_y: r.dist_y.unwrap_or(f64::NAN),
            v_norm: r.v_norm,
            eps: r.eps,
            residual_ratio: r.residual_ratio,
            step_norm: r.step_norm,
        };
        Ok(())
    })
}

/// # Safety
/// `trace` must be live and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn hpe_trace_termination(trace: *const HpeTrace, out: *mut HpeTermination) -> HpeStatus {
    guard(|| {
        let t = trace.as_ref().ok_or_else(|| null("trace"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = match t.trace.termination {
            Termination::Converged => HpeTermination::Converged,
            Termination::Stationary => HpeTermination::Stationary,
            Termination::MaxIterations => HpeTermination::MaxIterations,
        };
        Ok(())
    })
}

/// Copies the last iterate `y` into `out[0..len]`; `len` must equal the dimension.
///
/// # Safety
/// `trace` must be live and `out` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn hpe_trace_final_y(trace: *const HpeTrace, out: *mut f64, len: usize) -> HpeStatus {
    guard(|| {
        let t = trace.as_ref().ok_or_else(|| null("trace"))?;
        let y = &t.trace.final_state.y;
        if len != y.len() {
            return Err(Fail(
                HpeStatus::InvalidParameter,
                format!("buffer has {len} entries, iterate has {}", y.len()),
            ));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        std::slice::from_raw_parts_mut(out, len).copy_from_slice(y.as_slice());
        Ok(())
    })
}

/// Evaluates every certificate on the trace and stores the number of violated checks.
///
/// # Safety
/// `trace` and `problem` must be live (the problem the trace was produced on);
/// `violations` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn hpe_trace_verify(
    trace: *const HpeTrace,
    problem: *const HpeProblem,
    violations: *mut usize,
) -> HpeStatus {
    guard(|| {
        let t = trace.as_ref().ok_or_else(|| null("trace"))?;
        let p = problem.as_ref().ok_or_else(|| null("problem"))?;
        if violations.is_null() {
            return Err(null("violations"));
        }
        *violations = verify_trace(&t.trace, &p.inner, &t.context).total_violations();
        Ok(())
    })
}

/// # Safety
/// `trace` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn hpe_trace_free(trace: *mut HpeTrace) {
    if !trace.is_null() {
        drop(Box::from_raw(trace));
    }
}
