//! Runtime certificates: every per-step identity and convergence bound of the
//! methods, evaluated over a [`Trace`] as a list of [`BoundReport`]s.
//!
//! A check passes when `observed <= bound + 1e-9 (1 + |bound|)`.

mod closed_forms;

pub use closed_forms::{carinhoso_optimal, wolfe_closed_forms, wolfe_q, WolfeForms};

use serde::Serialize;

use crate::ahpe::{x_tilde_weights, Trace, TraceRecord};
use crate::largestep::Window;
use crate::problem::CompositeProblem;

pub const CERTIFICATE_SLACK: f64 = 1e-9;

pub fn slack(bound: f64) -> f64 {
    CERTIFICATE_SLACK * (1.0 + bound.abs())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundCheck {
    pub k: usize,
    pub bound: f64,
    pub observed: f64,
    pub satisfied: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub name: String,
    pub per_k: Vec<BoundCheck>,
    /// Smallest `bound - observed` over the checked `k`.
    pub worst_margin: f64,
    /// Reason the bound could not be evaluated at all.
    pub skipped: Option<String>,
    /// Indices where the bound is not defined.
    pub not_applicable: Vec<usize>,
}

impl BoundReport {
    pub fn new(name: &str) -> Self {
        BoundReport {
            name: name.to_string(),
            per_k: Vec::new(),
            worst_margin: f64::INFINITY,
            skipped: None,
            not_applicable: Vec::new(),
        }
    }

    pub fn skipped(name: &str, reason: &str) -> Self {
        let mut r = BoundReport::new(name);
        r.skipped = Some(reason.to_string());
        r
    }

    /// Records `observed <= bound` with the default slack.
    pub fn push(&mut self, k: usize, bound: f64, observed: f64) {
        self.push_with_slack(k, bound, observed, slack(bound));
    }

    pub fn push_with_slack(&mut self, k: usize, bound: f64, observed: f64, tol: f64) {
        let satisfied = bound == f64::INFINITY || observed <= bound + tol;
        let margin = bound - observed;
        if margin.is_nan() {
            self.worst_margin = f64::NEG_INFINITY;
        } else if margin < self.worst_margin {
            self.worst_margin = margin;
        }
        self.per_k.push(BoundCheck {
            k,
            bound,
            observed,
            satisfied,
        });
    }

    pub fn violations(&self) -> usize {
        self.per_k.iter().filter(|c| !c.satisfied).count()
    }

    pub fn passed(&self) -> bool {
        self.violations() == 0
    }

    pub fn first_violation(&self) -> Option<&BoundCheck> {
        self.per_k.iter().find(|c| !c.satisfied)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct CertificateBundle {
    pub reports: Vec<BoundReport>,
}

impl CertificateBundle {
    pub fn total_violations(&self) -> usize {
        self.reports.iter().map(BoundReport::violations).sum()
    }

    pub fn passed(&self) -> bool {
        self.total_violations() == 0
    }

    pub fn report(&self, name: &str) -> Option<&BoundReport> {
        self.reports.iter().find(|r| r.name == name)
    }

    pub fn failing(&self) -> Vec<&str> {
        self.reports
            .iter()
            .filter(|r| !r.passed())
            .map(|r| r.name.as_str())
            .collect()
    }
}

/// Method-specific facts the verifier needs beyond the trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MethodKind {
    Ahpe,
    LargeStep { p: usize, theta: f64, window: Window },
    ProxGrad { sigma_u: f64, lip: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyContext {
    pub sigma: f64,
    pub method: MethodKind,
}

fn records_with_prev(trace: &Trace) -> impl Iterator<Item = (usize, f64, &TraceRecord)> {
    trace
        .records
        .iter()
        .enumerate()
        .map(move |(i, r)| (i + 1, trace.a_sum_at(i), r))
}

/// `|a^2 - (1 + 2 mu A) lambda a - (1 + mu A) A lambda| <= 1e-10 max(1, a^2)`.
pub fn quadratic_identity(trace: &Trace, mu: f64) -> BoundReport {
    let mut rep = BoundReport::new("quadratic_identity");
    for (k, a_prev, r) in records_with_prev(trace) {
        let (a, l) = (r.a, r.lambda);
        let res = (a * a - (1.0 + 2.0 * mu * a_prev) * l * a - (1.0 + mu * a_prev) * a_prev * l).abs();
        rep.push_with_slack(k, 1e-10 * (a * a).max(1.0), res, 0.0);
    }
    rep
}

/// `A_k = A_{k-1} + a_k`.
pub fn a_sum_consistency(trace: &Trace) -> BoundReport {
    let mut rep = BoundReport::new("a_sum_consistency");
    for (k, a_prev, r) in records_with_prev(trace) {
        rep.push_with_slack(k, 1e-12 * r.a_sum.abs().max(1.0), (r.a_sum - a_prev - r.a).abs(), 0.0);
    }
    rep
}

/// `A_1 = lambda_1` exactly.
pub fn first_step_identity(trace: &Trace) -> BoundReport {
    let mut rep = BoundReport::new("first_step_a_equals_lambda");
    if let Some(r) = trace.records.first() {
        rep.push_with_slack(1, 0.0, (r.a_sum - r.lambda).abs(), 0.0);
    }
    rep
}

/// Extrapolation weights lie in `[0, 1]`, sum to one and the `x` weight is positive.
pub fn x_tilde_coefficients(trace: &Trace, mu: f64) -> BoundReport {
    let mut rep = BoundReport::new("x_tilde_coefficients");
    for (k, a_prev, r) in records_with_prev(trace) {
        let observed = match x_tilde_weights(a_prev, r.a, r.lambda, mu) {
            Ok((wx, wy)) if wx > 0.0 && wx <= 1.0 + 1e-12 && (0.0..=1.0 + 1e-12).contains(&wy) => (wx + wy - 1.0).abs(),
            _ => f64::INFINITY,
        };
        rep.push_with_slack(k, 1e-12, observed, 0.0);
    }
    rep
}

/// `A_{k+1} >= A_k (1 + mu lambda + sqrt(mu lambda (1 + mu lambda)))`, `k >= 1`.
pub fn a_growth_step(trace: &Trace, mu: f64) -> BoundReport {
    let mut rep = BoundReport::new("a_growth_per_step");
    for (k, a_prev, r) in records_with_prev(trace) {
        if k == 1 {
            rep.push(k, r.a_sum, 0.0);
            continue;
        }
        let x = mu * r.lambda;
        let lower = a_prev * (1.0 + x + (x * (1.0 + x)).sqrt());
        rep.push(k, r.a_sum, lower);
    }
    rep
}

/// Lower bounds on `A_{k+1}` from `lambda_1, ..., lambda_{k+1}`:
/// `(lambda_1 prod_{j>=2} 1 / (1 - sqrt(mu lambda_j / (1 + mu lambda_j))), lambda_1 prod_{j>=2} (1 + 2 mu lambda_j))`.
pub fn ak_growth_bounds(lambda_seq: &[f64], mu: f64) -> (f64, f64) {
    let Some((&first, rest)) = lambda_seq.split_first() else {
        return (0.0, 0.0);
    };
    rest.iter().fold((first, first), |(pa, pb), &l| {
        let x = mu * l;
        (pa / (1.0 - (x / (1.0 + x)).sqrt()), pb * (1.0 + 2.0 * x))
    })
}

pub fn ak_growth_reports(trace: &Trace, mu: f64) -> Vec<BoundReport> {
    let mut prod = BoundReport::new("a_growth_product");
    let mut lin = BoundReport::new("a_growth_linear");
    let lambdas: Vec<f64> = trace.records.iter().map(|r| r.lambda).collect();
    for (i, r) in trace.records.iter().enumerate() {
        let (pa, pb) = ak_growth_bounds(&lambdas[..=i], mu);
        prod.push(i + 1, r.a_sum, pa);
        lin.push(i + 1, r.a_sum, pb);
    }
    vec![prod, lin]
}

/// Accepted-step residual: `ratio |y - x_tilde|^2 <= sigma^2 |y - x_tilde|^2 + 1e-12 (1 + |y - x_tilde|^2)`.
pub fn residual_ratio_report(trace: &Trace, sigma: f64) -> BoundReport {
    let mut rep = BoundReport::new("residual_ratio");
    for r in &trace.records {
        let s2 = r.step_norm * r.step_norm;
        let lhs = if s2 > 0.0 {
            r.residual_ratio * s2
        } else if r.residual_ratio == 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        rep.push(r.k, sigma * sigma * s2 + 1e-12 * (1.0 + s2), lhs);
    }
    rep
}

/// `(1 - sigma sqrt(1 + lambda mu)) |y - x_tilde| <= |lambda v| <= (1 + sigma sqrt(1 + lambda mu)) |y - x_tilde|`.
pub fn norm_sandwich(trace: &Trace, mu: f64, sigma: f64) -> Vec<BoundReport> {
    let mut lo = BoundReport::new("norm_sandwich_lower");
    let mut hi = BoundReport::new("norm_sandwich_upper");
    for r in &trace.records {
        let c = sigma * (1.0 + r.lambda * mu).sqrt();
        let lv = r.lambda * r.v_norm;
        lo.push(r.k, lv, (1.0 - c) * r.step_norm);
        hi.push(r.k, (1.0 + c) * r.step_norm, lv);
    }
    vec![lo, hi]
}

/// `sum_{j<=k} (A_j / lambda_j) |y^j - x_tilde^{j-1}|^2 <= d0^2 / (1 - sigma^2)`.
pub fn summed_residual(trace: &Trace, d0: f64, sigma: f64) -> BoundReport {
    if sigma >= 1.0 {
        return BoundReport::skipped("summed_residual", "sigma = 1");
    }
    let mut rep = BoundReport::new("summed_residual");
    let bound = d0 * d0 / (1.0 - sigma * sigma);
    let mut acc = 0.0;
    for r in &trace.records {
        acc += r.a_sum / r.lambda * r.step_norm * r.step_norm;
        rep.push(r.k, bound, acc);
    }
    rep
}

fn gap_missing(name: &str) -> BoundReport {
    BoundReport::skipped(name, "problem has no known minimizer")
}

/// Value gap, distances, `|v|` and `eps` against `A_k`.
pub fn rate_bounds_alg1(trace: &Trace, d0: f64, mu: f64, sigma: f64) -> Vec<BoundReport> {
    let names = ["alg1_value_gap", "alg1_dist_y", "alg1_dist_x", "alg1_v_norm", "alg1_eps"];
    let mut reps: Vec<BoundReport> = names.iter().map(|n| BoundReport::new(n)).collect();
    let d2 = d0 * d0;
    let div = |num: f64, den: f64| if den > 0.0 { num / den } else { f64::INFINITY };
    for (i, r) in trace.records.iter().enumerate() {
        let k = i + 1;
        let a = r.a_sum;
        let (Some(gap), Some(dx), Some(dy)) = (r.value_gap, r.dist_x, r.dist_y) else {
            return names.iter().map(|n| gap_missing(n)).collect();
        };
        reps[0].push(k, div(d2, 2.0 * a), gap);
        reps[1].push(k, div(d2, mu * a), dy * dy);
        reps[2].push(k, d2 / (1.0 + mu * a), dx * dx);
        if k >= 2 {
            // v^{k}, eps_{k} against A_{k-1} and lambda_{k}
            let a_prev = trace.a_sum_at(k - 1);
            let l = r.lambda;
            let c = (1.0 + sigma * (1.0 + mu * l).sqrt()) * 6f64.sqrt() / l;
            reps[3].push(k, c * c * div(d2, mu * a_prev), r.v_norm * r.v_norm);
            reps[4].push(k, 3.0 * sigma * sigma / l * div(d2, mu * a_prev), r.eps);
        }
    }
    reps
}

pub fn alpha(mu: f64, lambda_min: f64) -> f64 {
    (mu * lambda_min / (1.0 + mu * lambda_min)).sqrt()
}

/// Linear envelopes for stepsizes bounded below by `lambda_min`.
pub fn rate_bounds_alg1_bounded_lambda(trace: &Trace, d0: f64, mu: f64, sigma: f64, lambda_min: f64) -> Vec<BoundReport> {
    let mut pre = BoundReport::new("lambda_lower_bound_precondition");
    let mut acor = BoundReport::new("a_growth_bounded_lambda");
    let names = ["linear_value_gap", "linear_dist", "linear_v_norm", "linear_eps"];
    let mut reps: Vec<BoundReport> = names.iter().map(|n| BoundReport::new(n)).collect();
    let al = alpha(mu, lambda_min);
    let q = 1.0 - al;
    let d2 = d0 * d0;
    let have_x = trace.records.first().is_none_or(|r| r.value_gap.is_some());
    for (i, r) in trace.records.iter().enumerate() {
        let k = i + 1;
        pre.push(k, r.lambda, lambda_min);
        acor.push(k, r.a_sum, lambda_min * q.powi(-(k as i32 - 1)));
        if have_x {
            let e = q.powi(k as i32 - 1);
            reps[0].push(k, d2 / (2.0 * lambda_min) * e, r.value_gap.unwrap_or(f64::NAN));
            let dist = r.dist_x.unwrap_or(f64::NAN).max(r.dist_y.unwrap_or(f64::NAN));
            reps[1].push(k, d0 / (mu * lambda_min).sqrt() * e.sqrt(), dist);
            if k >= 2 {
                let e = q.powi(k as i32 - 2);
                let cv = (1.0 + sigma * (1.0 + mu * lambda_min).sqrt()) * 6f64.sqrt()
                    / (mu.sqrt() * lambda_min.powf(1.5));
                reps[2].push(k, cv * d0 * e.sqrt(), r.v_norm);
                reps[3].push(k, 3.0 * sigma * sigma * d2 / (mu * lambda_min * lambda_min) * e, r.eps);
            }
        }
    }
    if !have_x {
        reps = names.iter().map(|n| gap_missing(n)).collect();
    }
    let mut out = vec![pre, acor];
    out.extend(reps);
    out
}

/// `lambda_1^{(p-1)/(p+1)} theta^{2/(p+1)} (1 - sigma^2)^{(p-1)/(p+1)}`.
pub fn large_step_constant(lambda1: f64, theta: f64, sigma: f64, p: usize) -> f64 {
    let (pm, pp) = ((p - 1) as f64, (p + 1) as f64);
    lambda1.powf(pm / pp) * theta.powf(2.0 / pp) * (1.0 - sigma * sigma).powf(pm / pp)
}

/// `lambda_1 (1 + 2 mu C d0^{-2(p-1)/(p+1)} k^{(p-1)/(p+1)})^k`, a lower bound on `A_{k+1}`.
pub fn superlinear_envelope(k: usize, lambda1: f64, mu: f64, theta: f64, sigma: f64, p: usize, d0: f64) -> f64 {
    if k == 0 {
        return lambda1;
    }
    let e = (p - 1) as f64 / (p + 1) as f64;
    let c = large_step_constant(lambda1, theta, sigma, p);
    let base = 1.0 + 2.0 * mu * c * d0.powf(-2.0 * e) * (k as f64).powf(e);
    lambda1 * base.powf(k as f64)
}

/// Large-step checks: the step condition, the window, stepsize and
/// superlinear growth lower bounds, and the convergence envelopes.
pub fn large_step_reports(trace: &Trace, d0: Option<f64>, mu: f64, sigma: f64, p: usize, theta: f64, window: &Window) -> Vec<BoundReport> {
    let pm1 = p as i32 - 1;
    let mut cond = BoundReport::new("large_step_condition");
    let mut upper = BoundReport::new("large_step_window_upper");
    for r in &trace.records {
        let phi = r.lambda * r.step_norm.powi(pm1);
        cond.push_with_slack(r.k, phi, theta, 1e-12);
        upper.push_with_slack(r.k, window.upper(theta, r.lambda, mu), phi, 1e-12);
    }
    let mut out = vec![cond, upper];
    let names = [
        "large_step_lambda_lower",
        "superlinear_a_growth",
        "large_step_sum",
        "alg2_value_gap",
        "alg2_dist",
        "alg2_v_norm",
        "alg2_eps",
    ];
    let Some(d0) = d0 else {
        out.extend(names.iter().map(|n| gap_missing(n)));
        return out;
    };
    let Some(first) = trace.records.first() else {
        out.extend(names.iter().map(|n| BoundReport::new(n)));
        return out;
    };
    let lambda1 = first.lambda;
    let c = large_step_constant(lambda1, theta, sigma, p);
    let e = (p - 1) as f64 / (p + 1) as f64;
    let lam_low = c * d0.powf(-2.0 * e);
    let mut reps: Vec<BoundReport> = names.iter().map(|n| BoundReport::new(n)).collect();
    let sum_bound = d0 * d0 / (theta.powf(2.0 / (p - 1) as f64) * (1.0 - sigma * sigma));
    let mut acc = 0.0;
    let d2 = d0 * d0;
    for (i, r) in trace.records.iter().enumerate() {
        let k = i + 1;
        reps[0].push(k, r.lambda, lam_low);
        // A_{k} >= envelope(k - 1)
        let env = superlinear_envelope(k - 1, lambda1, mu, theta, sigma, p, d0);
        reps[1].push(k, r.a_sum, env);
        acc += r.a_sum / r.lambda.powf((p + 1) as f64 / (p - 1) as f64);
        reps[2].push(k, sum_bound, acc);
        if let (Some(gap), Some(dx), Some(dy)) = (r.value_gap, r.dist_x, r.dist_y) {
            reps[3].push(k, d2 / (2.0 * env), gap);
            reps[4].push(k, d2 / (mu * env), dx.max(dy).powi(2));
        }
        // item (b) for v^{j+1}, eps_{j+1} with j = k - 1 >= 2
        let j = k - 1;
        if j == 1 {
            reps[5].not_applicable.push(k);
            reps[6].not_applicable.push(k);
        } else if j >= 2 {
            let base = 1.0 + 2.0 * mu * c * d0.powf(-2.0 * e) * ((j - 1) as f64).powf(e);
            let den = base.powf((j - 1) as f64);
            let pf = p as f64;
            let lead = (1.0 + sigma * (1.0 + mu * lam_low).sqrt()).powi(2);
            let vb = lead * 6.0 * d0.powf(2.0 * (3.0 * pf - 1.0) / (pf + 1.0)) / (mu * c * c * lambda1 * den);
            reps[5].push(k, vb, r.v_norm * r.v_norm);
            let eb = 3.0 * sigma * sigma * d0.powf(4.0 * pf / (pf + 1.0)) / (mu * c * lambda1 * den);
            reps[6].push(k, eb, r.eps);
        }
    }
    out.extend(reps);
    out
}

/// Proximal-gradient envelopes with `gamma = sqrt(sigma_u / (1 + sigma_u))`.
pub fn rate_bounds_alg4(trace: &Trace, d0: f64, mu: f64, lip: f64, sigma_u: f64, sigma: f64) -> Vec<BoundReport> {
    let names = ["alg4_value_gap", "alg4_dist", "alg4_v_norm", "alg4_eps"];
    let mut reps: Vec<BoundReport> = names.iter().map(|n| BoundReport::new(n)).collect();
    let gamma = (sigma_u / (1.0 + sigma_u)).sqrt();
    let q = 1.0 - gamma * (mu / lip).sqrt();
    let d2 = d0 * d0;
    for (i, r) in trace.records.iter().enumerate() {
        let k = i + 1;
        let (Some(gap), Some(dx), Some(dy)) = (r.value_gap, r.dist_x, r.dist_y) else {
            return names.iter().map(|n| gap_missing(n)).collect();
        };
        let e = q.powi(k as i32 - 1);
        reps[0].push(k, lip * d2 / (2.0 * sigma_u) * e, gap);
        reps[1].push(k, (lip / (sigma_u * mu)).sqrt() * d0 * e.sqrt(), dx.max(dy));
        if k >= 2 {
            let e = q.powi(k as i32 - 2);
            let vb = 6.0 * d0 * lip.powf(1.5) / (mu.sqrt() * sigma_u.powf(1.5))
                * (1.0 + sigma * (1.0 + sigma_u * mu / lip).sqrt())
                * e.sqrt();
            reps[2].push(k, vb, r.v_norm);
            reps[3].push(k, 3.0 * sigma * sigma * d2 * lip * lip / (sigma_u * sigma_u * mu) * e, r.eps);
        }
    }
    reps
}

/// All checks that apply to the run.
pub fn verify_trace(trace: &Trace, problem: &CompositeProblem, ctx: &VerifyContext) -> CertificateBundle {
    let mu = problem.mu();
    let sigma = ctx.sigma;
    let mut reports = vec![
        quadratic_identity(trace, mu),
        a_sum_consistency(trace),
        first_step_identity(trace),
        x_tilde_coefficients(trace, mu),
        a_growth_step(trace, mu),
    ];
    reports.extend(ak_growth_reports(trace, mu));
    reports.push(residual_ratio_report(trace, sigma));
    reports.extend(norm_sandwich(trace, mu, sigma));

    let d0 = trace.d0;
    match d0 {
        Some(d0) => {
            reports.push(summed_residual(trace, d0, sigma));
            reports.extend(rate_bounds_alg1(trace, d0, mu, sigma));
            if let Some(lmin) = trace.records.iter().map(|r| r.lambda).reduce(f64::min) {
                reports.extend(rate_bounds_alg1_bounded_lambda(trace, d0, mu, sigma, lmin));
            }
        }
        None => {
            for n in ["summed_residual", "alg1_value_gap", "linear_value_gap"] {
                reports.push(gap_missing(n));
            }
        }
    }
    match ctx.method {
        MethodKind::Ahpe => {}
        MethodKind::LargeStep { p, theta, window } => {
            reports.extend(large_step_reports(trace, d0, mu, sigma, p, theta, &window));
        }
        MethodKind::ProxGrad { sigma_u, lip } => match d0 {
            Some(d0) => reports.extend(rate_bounds_alg4(trace, d0, mu, lip, sigma_u, sigma)),
            None => reports.push(gap_missing("alg4_value_gap")),
        },
    }
    CertificateBundle { reports }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ahpe::{run_ahpe, LambdaPolicy, MethodConfig, SolverState, Stopping};
    use crate::linalg::{gaussian_vector, Vector};
    use crate::problem::make_quadratic;
    use crate::subproblem::SubproblemSolver;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn quad_run(n: usize, iters: usize) -> (CompositeProblem, Trace) {
        let p = make_quadratic(n, 0.05, 1.0, 12).unwrap();
        let cfg = MethodConfig::new(0.0, LambdaPolicy::Constant(1.0), Stopping::max_iter(iters));
        let t = run_ahpe(&p, &SubproblemSolver::ExactStructured, &cfg, SolverState::initial(Vector::from_element(n, 1.0), None)).unwrap();
        (p, t)
    }

    #[test]
    fn exact_run_has_no_violations() {
        let (p, t) = quad_run(10, 80);
        let b = verify_trace(&t, &p, &VerifyContext { sigma: 0.0, method: MethodKind::Ahpe });
        assert!(b.passed(), "{:?}", b.failing());
        assert!(b.report("alg1_value_gap").unwrap().per_k.len() == 80);
    }

    #[test]
    fn empty_trace_is_vacuous() {
        let (p, t) = quad_run(4, 0);
        let b = verify_trace(&t, &p, &VerifyContext { sigma: 0.5, method: MethodKind::Ahpe });
        assert!(b.passed());
        assert!(b.reports.iter().all(|r| r.per_k.is_empty()));
    }

    #[test]
    fn zeroed_a_gives_infinite_bound() {
        let (_, mut t) = quad_run(4, 5);
        for r in &mut t.records {
            r.a_sum = 0.0;
        }
        let reps = rate_bounds_alg1(&t, t.d0.unwrap(), 0.05, 0.0);
        assert!(reps[0].per_k.iter().all(|c| c.bound.is_infinite() && c.satisfied));
    }

    #[test]
    fn inflated_gap_is_caught() {
        let (_, mut t) = quad_run(4, 5);
        let d0 = t.d0.unwrap();
        let bound = d0 * d0 / (2.0 * t.records[2].a_sum);
        t.records[2].value_gap = Some(2.0 * bound);
        let reps = rate_bounds_alg1(&t, d0, 0.05, 0.0);
        assert_eq!(reps[0].violations(), 1);
        assert_eq!(reps[0].first_violation().unwrap().k, 3);
    }

    #[test]
    fn alpha_at_unit_product() {
        assert_relative_eq!(alpha(2.0, 0.5), 0.5f64.sqrt(), max_relative = 1e-15);
    }

    #[test]
    fn bounded_lambda_first_envelope() {
        let (p, t) = quad_run(4, 3);
        let reps = rate_bounds_alg1_bounded_lambda(&t, t.d0.unwrap(), p.mu(), 0.0, 1.0);
        let gap = reps.iter().find(|r| r.name == "linear_value_gap").unwrap();
        assert_relative_eq!(gap.per_k[0].bound, t.d0.unwrap().powi(2) / 2.0, max_relative = 1e-15);
        let pre = rate_bounds_alg1_bounded_lambda(&t, t.d0.unwrap(), p.mu(), 0.0, 2.0);
        assert!(!pre[0].passed());
    }

    #[test]
    fn growth_bounds_constant_lambda() {
        let (pa, pb) = ak_growth_bounds(&[0.5; 6], 0.3);
        assert_relative_eq!(pb, 0.5 * 1.3f64.powi(5), max_relative = 1e-14);
        assert!(pa >= pb);
    }

    #[test]
    fn product_bound_dominates_linear_bound() {
        for i in 1..=1000 {
            let x = i as f64 / 100.0;
            let s = (x / (1.0 + x)).sqrt();
            assert!(1.0 / (1.0 - s) >= 1.0 + 2.0 * x - 1e-12);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let lams: Vec<f64> = (0..30).map(|_| rng.random::<f64>() * 5.0 + 0.01).collect();
        for k in 1..=lams.len() {
            let (a, b) = ak_growth_bounds(&lams[..k], 0.7);
            assert!(a >= b * (1.0 - 1e-14));
        }
    }

    #[test]
    fn superlinear_envelope_shape() {
        assert_eq!(superlinear_envelope(0, 0.7, 1.0, 0.1, 0.5, 2, 3.0), 0.7);
        let c = large_step_constant(0.7, 0.1, 0.5, 2);
        let k = 5usize;
        let manual = 0.7 * (1.0 + 2.0 * c * 3f64.powf(-2.0 / 3.0) * (k as f64).powf(1.0 / 3.0)).powi(5);
        assert_relative_eq!(superlinear_envelope(k, 0.7, 1.0, 0.1, 0.5, 2, 3.0), manual, max_relative = 1e-13);
        let env: Vec<f64> = (0..30).map(|k| superlinear_envelope(k, 0.7, 1.0, 0.1, 0.5, 2, 3.0)).collect();
        for w in env.windows(3) {
            // log-increments grow: superlinear
            assert!((w[2] / w[1]).ln() >= (w[1] / w[0]).ln() - 1e-12);
        }
    }

    #[test]
    fn linear_envelopes_decay_geometrically() {
        let (p, t) = quad_run(4, 20);
        let reps = rate_bounds_alg1_bounded_lambda(&t, t.d0.unwrap(), p.mu(), 0.3, 1.0);
        for r in &reps[2..] {
            let b: Vec<f64> = r.per_k.iter().map(|c| c.bound).collect();
            for w in b.windows(3) {
                assert_relative_eq!(w[1] / w[0], w[2] / w[1], max_relative = 1e-12);
                assert!(w[1] < w[0]);
            }
        }
    }

    #[test]
    fn carinhoso_is_lower_bound_on_random_feasible_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..10_000 {
            let k = rng.random_range(1..=4usize);
            let c = rng.random_range(0.2..3.0);
            let q = rng.random_range(1.0..3.0);
            let raw: Vec<f64> = (0..k).map(|_| rng.random_range(0.05..5.0)).collect();
            // rescale onto the constraint boundary sum t^{-q} = c
            let s: f64 = raw.iter().map(|t: &f64| t.powf(-q)).sum();
            let scale = (s / c).powf(1.0 / q);
            let prod: f64 = raw.iter().map(|t| 1.0 + t * scale).product();
            assert!(prod >= carinhoso_optimal(k, c, q) - 1e-9);
        }
    }

    #[test]
    fn wolfe_taylor_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let v = gaussian_vector(&mut rng, 4);
        let y = gaussian_vector(&mut rng, 4);
        let z = gaussian_vector(&mut rng, 4);
        let w = wolfe_closed_forms(&v, &y, &z, 0.7, 0.2, 1.3);
        for _ in 0..100 {
            let x = gaussian_vector(&mut rng, 4) * 3.0;
            assert!(w.taylor_residual(&x).abs() <= 1e-10);
        }
        assert_relative_eq!(w.q(&w.minimizer), w.min_value, epsilon = 1e-12);
    }
}
