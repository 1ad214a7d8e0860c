//! Composite problems `h = f + g` and the synthetic generators used by the
//! benchmarks and tests.
//!
//! `f` is closed convex and possibly nonsmooth (accessed through its value,
//! an optional proximal map and an optional subgradient selection), `g` is
//! `mu`-strongly convex and differentiable (optionally twice, with a Hessian
//! oracle). All oracles are pure, so a problem can be shared read-only across
//! threads.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{gaussian_matrix, gaussian_vector, random_orthogonal, sym_op_norm, symmetrize, Matrix, Vector};

pub type ScalarFn = Arc<dyn Fn(&Vector) -> f64 + Send + Sync>;
pub type VectorFn = Arc<dyn Fn(&Vector) -> Vector + Send + Sync>;
pub type ProxFn = Arc<dyn Fn(&Vector, f64) -> Vector + Send + Sync>;
pub type MatrixFn = Arc<dyn Fn(&Vector) -> Matrix + Send + Sync>;

/// Largest `|sigma''|`-type factor of the logistic loss third derivative,
/// `max_t |s(t)(1-s(t))(1-2s(t))|` for the sigmoid `s`.
pub const LOGISTIC_THIRD_DERIVATIVE_BOUND: f64 = 0.096_225_044_864_937_63; // 1/(6*sqrt(3))

/// Reference minimizer `x*` and optimal value `h* = h(x*)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Minimizer {
    pub x: Vector,
    pub value: f64,
}

/// Structural hints that let exact solvers avoid black-box iterations.
#[derive(Debug, Clone)]
pub enum Structure {
    /// `g(x) = 0.5 <Qx, x> - <b, x>`.
    Quadratic { q: Matrix, b: Vector },
    Generic,
}

/// Lipschitz constant of the p-th derivative of `g`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HigherLipschitz {
    /// Polynomial of degree two: every derivative of order >= 2 is constant.
    AllZero,
    Order { p: usize, constant: f64 },
}

#[derive(Clone)]
pub struct CompositeProblem {
    name: String,
    dim: usize,
    f_zero: bool,
    f_value: ScalarFn,
    f_prox: Option<ProxFn>,
    f_subgrad: Option<VectorFn>,
    g_value: ScalarFn,
    g_grad: VectorFn,
    g_hess: Option<MatrixFn>,
    projection: Option<VectorFn>,
    mu: f64,
    lip_grad: Option<f64>,
    lip_p: Option<HigherLipschitz>,
    known_minimizer: Option<Minimizer>,
    structure: Structure,
}

impl fmt::Debug for CompositeProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CompositeProblem")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("f_zero", &self.f_zero)
            .field("has_f_prox", &self.f_prox.is_some())
            .field("has_g_hess", &self.g_hess.is_some())
            .field("mu", &self.mu)
            .field("lip_grad", &self.lip_grad)
            .field("lip_p", &self.lip_p)
            .field("has_known_minimizer", &self.known_minimizer.is_some())
            .finish()
    }
}

impl CompositeProblem {
    pub fn builder<G, DG>(dim: usize, mu: f64, g_value: G, g_grad: DG) -> ProblemBuilder
    where
        G: Fn(&Vector) -> f64 + Send + Sync + 'static,
        DG: Fn(&Vector) -> Vector + Send + Sync + 'static,
    {
        ProblemBuilder {
            problem: CompositeProblem {
                name: "custom".to_string(),
                dim,
                f_zero: true,
                f_value: Arc::new(|_| 0.0),
                f_prox: None,
                f_subgrad: None,
                g_value: Arc::new(g_value),
                g_grad: Arc::new(g_grad),
                g_hess: None,
                projection: None,
                mu,
                lip_grad: None,
                lip_p: None,
                known_minimizer: None,
                structure: Structure::Generic,
            },
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn lip_grad(&self) -> Option<f64> {
        self.lip_grad
    }

    pub fn lip_p_raw(&self) -> Option<HigherLipschitz> {
        self.lip_p
    }

    /// `L_p` for the requested order, when known.
    pub fn lip_p(&self, p: usize) -> Option<f64> {
        match self.lip_p? {
            HigherLipschitz::AllZero => Some(0.0),
            HigherLipschitz::Order { p: q, constant } if q == p => Some(constant),
            HigherLipschitz::Order { .. } => None,
        }
    }

    pub fn known_minimizer(&self) -> Option<&Minimizer> {
        self.known_minimizer.as_ref()
    }

    pub fn structure(&self) -> &Structure {
        &self.structure
    }

    /// True when `f` is identically zero.
    pub fn f_is_zero(&self) -> bool {
        self.f_zero
    }

    pub fn has_f_prox(&self) -> bool {
        self.f_zero || self.f_prox.is_some()
    }

    pub fn has_g_hess(&self) -> bool {
        self.g_hess.is_some()
    }

    pub fn f_value(&self, x: &Vector) -> f64 {
        (self.f_value)(x)
    }

    /// `argmin_y f(y) + |y - x|^2 / (2 lambda)`. Identity when `f == 0`.
    pub fn f_prox(&self, x: &Vector, lambda: f64) -> Option<Vector> {
        if let Some(prox) = &self.f_prox {
            Some(prox(x, lambda))
        } else if self.f_zero {
            Some(x.clone())
        } else {
            None
        }
    }

    pub fn f_subgrad(&self, y: &Vector) -> Option<Vector> {
        if let Some(sg) = &self.f_subgrad {
            Some(sg(y))
        } else if self.f_zero {
            Some(Vector::zeros(self.dim))
        } else {
            None
        }
    }

    pub fn g_value(&self, x: &Vector) -> f64 {
        (self.g_value)(x)
    }

    pub fn g_grad(&self, x: &Vector) -> Vector {
        (self.g_grad)(x)
    }

    pub fn g_hess(&self, x: &Vector) -> Option<Matrix> {
        self.g_hess.as_ref().map(|h| h(x))
    }

    pub fn h_value(&self, x: &Vector) -> f64 {
        self.f_value(x) + self.g_value(x)
    }

    /// Projection onto the set where the smoothness constants hold. Identity
    /// unless a projection oracle was installed.
    pub fn project(&self, x: &Vector) -> Vector {
        match &self.projection {
            Some(p) => p(x),
            None => x.clone(),
        }
    }

    /// Drops the Hessian oracle.
    pub fn without_hessian(mut self) -> Self {
        self.g_hess = None;
        self
    }

    pub fn with_known_minimizer(mut self, x: Vector) -> Self {
        let value = self.h_value(&x);
        self.known_minimizer = Some(Minimizer { x, value });
        self
    }
}

pub struct ProblemBuilder {
    problem: CompositeProblem,
}

impl ProblemBuilder {
    pub fn name(mut self, name: impl Into<String>) -> Self {
        self.problem.name = name.into();
        self
    }

    pub fn f_value<F>(mut self, f: F) -> Self
    where
        F: Fn(&Vector) -> f64 + Send + Sync + 'static,
    {
        self.problem.f_value = Arc::new(f);
        self.problem.f_zero = false;
        self
    }

    pub fn f_prox<F>(mut self, prox: F) -> Self
    where
        F: Fn(&Vector, f64) -> Vector + Send + Sync + 'static,
    {
        self.problem.f_prox = Some(Arc::new(prox));
        self
    }

    pub fn f_subgrad<F>(mut self, sg: F) -> Self
    where
        F: Fn(&Vector) -> Vector + Send + Sync + 'static,
    {
        self.problem.f_subgrad = Some(Arc::new(sg));
        self
    }

    pub fn g_hess<F>(mut self, hess: F) -> Self
    where
        F: Fn(&Vector) -> Matrix + Send + Sync + 'static,
    {
        self.problem.g_hess = Some(Arc::new(hess));
        self
    }

    pub fn projection<F>(mut self, proj: F) -> Self
    where
        F: Fn(&Vector) -> Vector + Send + Sync + 'static,
    {
        self.problem.projection = Some(Arc::new(proj));
        self
    }

    pub fn lip_grad(mut self, l: f64) -> Self {
        self.problem.lip_grad = Some(l);
        self
    }

    pub fn lip_p(mut self, lip: HigherLipschitz) -> Self {
        self.problem.lip_p = Some(lip);
        self
    }

    pub fn structure(mut self, s: Structure) -> Self {
        self.problem.structure = s;
        self
    }

    /// Sets `x*`; `h*` is evaluated from the installed oracles at build time.
    pub fn known_minimizer(mut self, x: Vector) -> Self {
        self.problem.known_minimizer = Some(Minimizer { x, value: f64::NAN });
        self
    }

    pub fn build(mut self) -> Result<CompositeProblem> {
        let p = &self.problem;
        if p.dim == 0 {
            return Err(Error::Parameter("dimension must be positive".into()));
        }
        if !(p.mu.is_finite() && p.mu > 0.0) {
            return Err(Error::Parameter(format!("mu must be positive, got {}", p.mu)));
        }
        if let Some(l) = p.lip_grad {
            if !(l.is_finite() && l >= p.mu) {
                return Err(Error::Parameter(format!("lip_grad {l} must be finite and >= mu {}", p.mu)));
            }
        }
        if let Some(HigherLipschitz::Order { p: order, constant }) = p.lip_p {
            if order < 2 || !(constant.is_finite() && constant >= 0.0) {
                return Err(Error::Parameter(format!("invalid L_p (p = {order}, value {constant})")));
            }
        }
        if let Some(m) = self.problem.known_minimizer.take() {
            if m.x.len() != self.problem.dim {
                return Err(Error::Parameter("known minimizer has wrong dimension".into()));
            }
            let value = self.problem.h_value(&m.x);
            self.problem.known_minimizer = Some(Minimizer { x: m.x, value });
        }
        Ok(self.problem)
    }
}

fn check_constants(dim: usize, mu: f64, lip: f64) -> Result<()> {
    if dim == 0 {
        return Err(Error::Parameter("dimension must be at least 1".into()));
    }
    if !(mu.is_finite() && lip.is_finite() && mu > 0.0 && mu <= lip) {
        return Err(Error::Parameter(format!("need 0 < mu <= L, got mu = {mu}, L = {lip}")));
    }
    Ok(())
}

/// Quadratic `g(x) = 0.5 <Qx, x> - <b, x>` with `f = 0` built from explicit parts.
///
/// `mu` and `lip` must bracket the spectrum of `q`.
pub fn quadratic_from_parts(q: Matrix, b: Vector, mu: f64, lip: f64) -> Result<CompositeProblem> {
    let n = b.len();
    check_constants(n, mu, lip)?;
    if q.nrows() != n || q.ncols() != n {
        return Err(Error::Parameter("Q must be square and match b".into()));
    }
    let eig = q.clone().symmetric_eigen();
    let (lo, hi) = eig
        .eigenvalues
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &l| (lo.min(l), hi.max(l)));
    let tol = 1e-10 * (1.0 + lip);
    if lo < mu - tol || hi > lip + tol {
        return Err(Error::Parameter(format!(
            "spectrum [{lo}, {hi}] of Q is not inside [mu, L] = [{mu}, {lip}]"
        )));
    }
    let x_star = q
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Numeric("Q is not positive definite".into()))?
        .solve(&b);

    let (qv, bv) = (q.clone(), b.clone());
    let (qg, bg) = (q.clone(), b.clone());
    let qh = q.clone();
    CompositeProblem::builder(
        n,
        mu,
        move |x: &Vector| 0.5 * x.dot(&(&qv * x)) - bv.dot(x),
        move |x: &Vector| &qg * x - &bg,
    )
    .name("quadratic")
    .g_hess(move |_| qh.clone())
    .lip_grad(lip)
    .lip_p(HigherLipschitz::AllZero)
    .structure(Structure::Quadratic { q, b })
    .known_minimizer(x_star)
    .build()
}

fn spectrum(rng: &mut ChaCha8Rng, dim: usize, mu: f64, lip: f64) -> Vec<f64> {
    let mut d: Vec<f64> = (0..dim).map(|_| mu + (lip - mu) * rng.random::<f64>()).collect();
    d[0] = mu;
    if dim >= 2 {
        d[dim - 1] = lip;
    }
    d
}

fn random_spd(rng: &mut ChaCha8Rng, dim: usize, mu: f64, lip: f64) -> Matrix {
    let u = random_orthogonal(rng, dim);
    let d = Matrix::from_diagonal(&Vector::from_vec(spectrum(rng, dim, mu, lip)));
    let mut q = &u * d * u.transpose();
    symmetrize(&mut q);
    q
}

/// Random strongly convex quadratic with `f = 0`. The spectrum of `Q` lies in
/// `[mu, L]` with both endpoints attained when `dim >= 2`.
pub fn make_quadratic(dim: usize, mu: f64, lip: f64, seed: u64) -> Result<CompositeProblem> {
    check_constants(dim, mu, lip)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let q = random_spd(&mut rng, dim, mu, lip);
    let b = gaussian_vector(&mut rng, dim);
    quadratic_from_parts(q, b, mu, lip)
}

fn softplus(t: f64) -> f64 {
    t.max(0.0) + (-t.abs()).exp().ln_1p()
}

fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// Logistic loss plus ridge: `g(x) = sum_i log(1 + exp(-l_i <a_i, x>)) + mu/2 |x|^2`,
/// `f = 0`. Rows of `samples` are the `a_i`.
pub fn make_logistic_ridge(samples: &Matrix, labels: &Vector, mu: f64) -> Result<CompositeProblem> {
    let (m, n) = samples.shape();
    if labels.len() != m {
        return Err(Error::Data(format!("{} labels for {m} samples", labels.len())));
    }
    if let Some(bad) = labels.iter().find(|l| **l != 1.0 && **l != -1.0) {
        return Err(Error::Data(format!("label {bad} is not in {{-1, +1}}")));
    }
    if n == 0 {
        return Err(Error::Parameter("dimension must be at least 1".into()));
    }
    if !(mu.is_finite() && mu > 0.0) {
        return Err(Error::Parameter(format!("mu must be positive, got {mu}")));
    }
    // Rows pre-multiplied by their labels: margins are (la) x.
    let mut la = samples.clone();
    for (i, l) in labels.iter().enumerate() {
        la.row_mut(i).scale_mut(*l);
    }
    let la = Arc::new(la);

    let ata = samples.transpose() * samples;
    let lip_grad = sym_op_norm(&ata) / 4.0 + mu;
    let max_row = (0..m).map(|i| samples.row(i).norm()).fold(0.0_f64, f64::max);
    let lip_hess = max_row.powi(3) * LOGISTIC_THIRD_DERIVATIVE_BOUND * m as f64;

    let (a1, a2, a3) = (la.clone(), la.clone(), la.clone());
    let value = move |x: &Vector| {
        let margins = a1.as_ref() * x;
        margins.iter().map(|t| softplus(-t)).sum::<f64>() + 0.5 * mu * x.norm_squared()
    };
    let grad = move |x: &Vector| {
        let margins = a2.as_ref() * x;
        let w = margins.map(|t| -sigmoid(-t));
        a2.transpose() * w + x * mu
    };
    let hess = move |x: &Vector| {
        let margins = a3.as_ref() * x;
        let w = margins.map(|t| {
            let s = sigmoid(t);
            s * (1.0 - s)
        });
        let mut h = a3.transpose() * Matrix::from_diagonal(&w) * a3.as_ref();
        for i in 0..h.nrows() {
            h[(i, i)] += mu;
        }
        symmetrize(&mut h);
        h
    };
    let problem = CompositeProblem::builder(n, mu, value, grad)
        .name("logistic_ridge")
        .g_hess(hess)
        .lip_grad(lip_grad)
        .lip_p(HigherLipschitz::Order { p: 2, constant: lip_hess })
        .build()?;
    let x_star = newton_reference_minimizer(&problem, &Vector::zeros(n), 1e-13)?;
    Ok(problem.with_known_minimizer(x_star))
}

/// Synthetic logistic data: Gaussian features, labels from a planted model
/// with a fraction of flips.
pub fn make_logistic_synthetic(samples: usize, dim: usize, mu: f64, seed: u64) -> Result<CompositeProblem> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = gaussian_matrix(&mut rng, samples, dim) / (dim as f64).sqrt();
    let w = gaussian_vector(&mut rng, dim);
    let labels = Vector::from_fn(samples, |i, _| {
        let s = a.row(i).transpose().dot(&w);
        let flip = rng.random::<f64>() < 0.1;
        if (s >= 0.0) ^ flip {
            1.0
        } else {
            -1.0
        }
    });
    make_logistic_ridge(&a, &labels, mu)
}

pub fn soft_threshold(x: &Vector, t: f64) -> Vector {
    x.map(|xi| xi.signum() * (xi.abs() - t).max(0.0))
}

/// `l1_weight * |x|_1 + g` with `g` the quadratic of [`make_quadratic`] for the
/// same seed.
pub fn make_l1_composite(dim: usize, mu: f64, lip: f64, l1_weight: f64, seed: u64) -> Result<CompositeProblem> {
    check_constants(dim, mu, lip)?;
    if !(l1_weight.is_finite() && l1_weight >= 0.0) {
        return Err(Error::Parameter(format!("l1_weight must be >= 0, got {l1_weight}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let q = random_spd(&mut rng, dim, mu, lip);
    let b = gaussian_vector(&mut rng, dim);
    l1_from_parts(q, b, mu, lip, l1_weight)
}

pub fn l1_from_parts(q: Matrix, b: Vector, mu: f64, lip: f64, l1_weight: f64) -> Result<CompositeProblem> {
    let quad = quadratic_from_parts(q.clone(), b.clone(), mu, lip)?;
    if l1_weight == 0.0 {
        return Ok(quad);
    }
    let n = b.len();
    let w = l1_weight;
    let (qv, bv, qg, bg, qh) = (q.clone(), b.clone(), q.clone(), b.clone(), q.clone());
    let problem = CompositeProblem::builder(
        n,
        mu,
        move |x: &Vector| 0.5 * x.dot(&(&qv * x)) - bv.dot(x),
        move |x: &Vector| &qg * x - &bg,
    )
    .name("l1_composite")
    .f_value(move |x: &Vector| w * x.iter().map(|t| t.abs()).sum::<f64>())
    .f_prox(move |x: &Vector, lambda: f64| soft_threshold(x, lambda * w))
    .f_subgrad(move |x: &Vector| x.map(|t| if t == 0.0 { 0.0 } else { w * t.signum() }))
    .g_hess(move |_| qh.clone())
    .lip_grad(lip)
    .lip_p(HigherLipschitz::AllZero)
    .structure(Structure::Quadratic { q: q.clone(), b: b.clone() })
    .build()?;
    let x_star = l1_reference_minimizer(&q, &b, lip, w)?;
    Ok(problem.with_known_minimizer(x_star))
}

/// Forward-backward iteration to a small fixed-point residual, followed by an
/// exact solve on the identified support and a coordinate-wise optimality check.
fn l1_reference_minimizer(q: &Matrix, b: &Vector, lip: f64, w: f64) -> Result<Vector> {
    let n = b.len();
    let step = 1.0 / lip;
    let mut y = Vector::zeros(n);
    for _ in 0..2_000_000 {
        let grad = q * &y - b;
        let next = soft_threshold(&(&y - &grad * step), w * step);
        let res = (&next - &y).norm() * lip;
        y = next;
        if res <= 1e-12 {
            break;
        }
    }
    // Polish: on the support S, Q_SS x_S = b_S - w sign(x_S).
    let support: Vec<usize> = (0..n).filter(|&i| y[i] != 0.0).collect();
    if !support.is_empty() {
        let s = support.len();
        let qss = Matrix::from_fn(s, s, |i, j| q[(support[i], support[j])]);
        let rhs = Vector::from_fn(s, |i, _| b[support[i]] - w * y[support[i]].signum());
        if let Some(chol) = qss.cholesky() {
            let xs = chol.solve(&rhs);
            let consistent = (0..s).all(|i| xs[i].signum() == y[support[i]].signum());
            if consistent {
                let mut polished = Vector::zeros(n);
                for (i, &j) in support.iter().enumerate() {
                    polished[j] = xs[i];
                }
                if l1_optimality_residual(q, b, w, &polished) <= l1_optimality_residual(q, b, w, &y) {
                    y = polished;
                }
            }
        }
    }
    let res = l1_optimality_residual(q, b, w, &y);
    if res > 1e-8 {
        return Err(Error::Numeric(format!("L1 reference solve did not converge (residual {res:e})")));
    }
    Ok(y)
}

/// Distance from `0` to `w sign(x) + Qx - b`, coordinate-wise.
pub(crate) fn l1_optimality_residual(q: &Matrix, b: &Vector, w: f64, x: &Vector) -> f64 {
    let grad = q * x - b;
    let mut acc = 0.0;
    for i in 0..x.len() {
        let r = if x[i] != 0.0 {
            grad[i] + w * x[i].signum()
        } else {
            (grad[i].abs() - w).max(0.0)
        };
        acc += r * r;
    }
    acc.sqrt()
}

/// Strongly convex quartic `g(x) = 1/4 sum x_i^4 + mu/2 |x|^2 + 1/2 <Bx, x> - <c, x>`
/// with a random PSD coupling `B` of spectral norm `coupling`.
///
/// The Hessian is Lipschitz only locally; the reported `L_2 = 6 radius` is
/// valid on the Euclidean ball of the given radius around the origin, and
/// `lip_grad` likewise.
pub fn make_quartic(dim: usize, mu: f64, coupling: f64, radius: f64, seed: u64) -> Result<CompositeProblem> {
    if dim == 0 {
        return Err(Error::Parameter("dimension must be at least 1".into()));
    }
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(Error::Parameter(format!("mu must be positive, got {mu}")));
    }
    if !(coupling >= 0.0 && coupling.is_finite() && radius > 0.0 && radius.is_finite()) {
        return Err(Error::Parameter("coupling must be >= 0 and radius > 0".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bmat = if coupling > 0.0 {
        let c = gaussian_matrix(&mut rng, dim, dim);
        let mut b = c.transpose() * &c;
        symmetrize(&mut b);
        let nb = sym_op_norm(&b);
        b * (coupling / nb)
    } else {
        Matrix::zeros(dim, dim)
    };
    let c = gaussian_vector(&mut rng, dim);
    quartic_from_parts(bmat, c, mu, radius)
}

pub fn quartic_from_parts(bmat: Matrix, c: Vector, mu: f64, radius: f64) -> Result<CompositeProblem> {
    let n = c.len();
    let lip_grad = 3.0 * radius * radius + mu + sym_op_norm(&bmat);
    let (b1, c1, b2, c2, b3) = (bmat.clone(), c.clone(), bmat.clone(), c.clone(), bmat);
    let problem = CompositeProblem::builder(
        n,
        mu,
        move |x: &Vector| {
            0.25 * x.iter().map(|t| t.powi(4)).sum::<f64>() + 0.5 * mu * x.norm_squared() + 0.5 * x.dot(&(&b1 * x))
                - c1.dot(x)
        },
        move |x: &Vector| x.map(|t| t.powi(3)) + x * mu + &b2 * x - &c2,
    )
    .name("quartic")
    .g_hess(move |x: &Vector| {
        let mut h = b3.clone();
        for i in 0..x.len() {
            h[(i, i)] += 3.0 * x[i] * x[i] + mu;
        }
        h
    })
    .lip_grad(lip_grad)
    .lip_p(HigherLipschitz::Order { p: 2, constant: 6.0 * radius })
    .build()?;
    let x_star = newton_reference_minimizer(&problem, &Vector::zeros(n), 1e-14)?;
    Ok(problem.with_known_minimizer(x_star))
}

/// Damped Newton on a smooth `g` (requires `f = 0` and a Hessian oracle).
pub(crate) fn newton_reference_minimizer(problem: &CompositeProblem, x0: &Vector, tol: f64) -> Result<Vector> {
    if !problem.f_is_zero() {
        return Err(Error::Capability("Newton reference solve needs f = 0".into()));
    }
    let mut x = x0.clone();
    for _ in 0..200 {
        let g = problem.g_grad(&x);
        if g.norm() <= tol {
            return Ok(x);
        }
        let h = problem
            .g_hess(&x)
            .ok_or_else(|| Error::Capability("Newton reference solve needs a Hessian".into()))?;
        let d = h
            .cholesky()
            .ok_or_else(|| Error::Numeric("Hessian not positive definite".into()))?
            .solve(&(-&g));
        let f0 = problem.g_value(&x);
        let slope = g.dot(&d);
        let mut t = 1.0;
        loop {
            let trial = &x + &d * t;
            let armijo = problem.g_value(&trial) <= f0 + 1e-4 * t * slope;
            if armijo || problem.g_grad(&trial).norm() <= 0.5 * g.norm() || t < 1e-12 {
                x = trial;
                break;
            }
            t *= 0.5;
        }
    }
    let g = problem.g_grad(&x).norm();
    if g <= tol * 1e3 {
        Ok(x)
    } else {
        Err(Error::Numeric(format!("Newton reference solve stalled at gradient norm {g:e}")))
    }
}

/// Counts sampled violations of `g(y) >= g(x) + <grad g(x), y - x> + mu/2 |y - x|^2`.
pub fn strong_convexity_violations(problem: &CompositeProblem, pairs: usize, scale: f64, seed: u64) -> usize {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = problem.dim();
    let mu = problem.mu();
    (0..pairs)
        .filter(|_| {
            let x = gaussian_vector(&mut rng, n) * scale;
            let y = gaussian_vector(&mut rng, n) * scale;
            let d = &y - &x;
            let lower = problem.g_value(&x) + problem.g_grad(&x).dot(&d) + 0.5 * mu * d.norm_squared();
            let gy = problem.g_value(&y);
            gy < lower - 1e-9 * (1.0 + gy.abs())
        })
        .count()
}

/// Counts sampled violations of the subgradient inequality certifying
/// `(x - prox(x, lambda)) / lambda` as an element of `df(prox(x, lambda))`.
pub fn prox_inclusion_violations(problem: &CompositeProblem, trials: usize, probes: usize, seed: u64) -> Result<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = problem.dim();
    let mut bad = 0;
    for _ in 0..trials {
        let x = gaussian_vector(&mut rng, n) * 2.0;
        let lambda = 0.1 + 2.0 * rng.random::<f64>();
        let y = problem
            .f_prox(&x, lambda)
            .ok_or_else(|| Error::Capability("problem has no prox for f".into()))?;
        let u = (&x - &y) / lambda;
        let fy = problem.f_value(&y);
        for _ in 0..probes {
            let w = &y + gaussian_vector(&mut rng, n) * 2.0;
            let fw = problem.f_value(&w);
            if fw < fy + u.dot(&(&w - &y)) - 1e-9 * (1.0 + fw.abs()) {
                bad += 1;
            }
        }
    }
    Ok(bad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn central_diff_grad(p: &CompositeProblem, x: &Vector, h: f64) -> Vector {
        Vector::from_fn(x.len(), |i, _| {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[i] += h;
            xm[i] -= h;
            (p.g_value(&xp) - p.g_value(&xm)) / (2.0 * h)
        })
    }

    #[test]
    fn identity_quadratic_in_one_dimension() {
        let p = quadratic_from_parts(Matrix::identity(1, 1), Vector::zeros(1), 1.0, 1.0).unwrap();
        let x = Vector::from_vec(vec![3.0]);
        assert_eq!(p.g_value(&x), 4.5);
        let m = p.known_minimizer().unwrap();
        assert_eq!(m.x[0], 0.0);
        assert_eq!(m.value, 0.0);
    }

    #[test]
    fn quadratic_pins_spectrum_endpoints() {
        let p = make_quadratic(50, 0.01, 1.0, 7).unwrap();
        let Structure::Quadratic { q, .. } = p.structure() else {
            panic!("expected quadratic structure")
        };
        let eig = q.clone().symmetric_eigen().eigenvalues;
        let lo = eig.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = eig.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert_relative_eq!(lo, 0.01, max_relative = 1e-10);
        assert_relative_eq!(hi, 1.0, max_relative = 1e-10);
    }

    #[test]
    fn quadratic_minimizer_zeroes_gradient() {
        for seed in 0..5 {
            let p = make_quadratic(20, 0.1, 3.0, seed).unwrap();
            let Structure::Quadratic { q, b } = p.structure() else { unreachable!() };
            // independent route: LU solve
            let oracle = q.clone().lu().solve(b).unwrap();
            let x = &p.known_minimizer().unwrap().x;
            assert!((x - &oracle).norm() < 1e-10);
            assert!(p.g_grad(x).norm() < 1e-10);
        }
    }

    #[test]
    fn rejects_bad_constants() {
        assert!(matches!(make_quadratic(3, 2.0, 1.0, 0), Err(Error::Parameter(_))));
        assert!(matches!(make_quadratic(0, 1.0, 1.0, 0), Err(Error::Parameter(_))));
        assert!(matches!(make_l1_composite(3, 1.0, 2.0, -1.0, 0), Err(Error::Parameter(_))));
        assert!(matches!(make_quadratic(3, 0.0, 1.0, 0), Err(Error::Parameter(_))));
    }

    #[test]
    fn logistic_empty_sample_set_is_pure_ridge() {
        let p = make_logistic_ridge(&Matrix::zeros(0, 3), &Vector::zeros(0), 0.5).unwrap();
        let x = Vector::from_vec(vec![1.0, -2.0, 0.5]);
        assert_relative_eq!(p.g_value(&x), 0.25 * x.norm_squared(), max_relative = 1e-15);
        assert!(p.known_minimizer().unwrap().x.norm() < 1e-14);
    }

    #[test]
    fn logistic_single_sample_gradient() {
        let a = Matrix::from_element(1, 1, 1.0);
        let l = Vector::from_element(1, 1.0);
        let p = make_logistic_ridge(&a, &l, 1.0).unwrap();
        let x0 = Vector::zeros(1);
        assert_relative_eq!(p.g_grad(&x0)[0], -0.5, max_relative = 1e-15);
        let fd = central_diff_grad(&p, &x0, 1e-6);
        assert_relative_eq!(fd[0], -0.5, max_relative = 1e-8);
    }

    #[test]
    fn logistic_rejects_bad_labels() {
        let a = Matrix::from_element(2, 1, 1.0);
        let l = Vector::from_vec(vec![1.0, 0.0]);
        assert!(matches!(make_logistic_ridge(&a, &l, 1.0), Err(Error::Data(_))));
    }

    #[test]
    fn logistic_hessian_matches_finite_differences() {
        let p = make_logistic_synthetic(30, 6, 0.1, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let x = gaussian_vector(&mut rng, 6);
            let h = p.g_hess(&x).unwrap();
            let eps = 1e-6;
            for j in 0..6 {
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[j] += eps;
                xm[j] -= eps;
                let col = (p.g_grad(&xp) - p.g_grad(&xm)) / (2.0 * eps);
                let diff = (&col - h.column(j)).norm();
                assert!(diff <= 1e-5 * (1.0 + col.norm()), "column {j}: {diff}");
            }
        }
    }

    #[test]
    fn logistic_hessian_lipschitz_bound_holds_empirically() {
        let p = make_logistic_synthetic(25, 5, 0.1, 9).unwrap();
        let l2 = p.lip_p(2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..500 {
            let x = gaussian_vector(&mut rng, 5) * 3.0;
            let y = gaussian_vector(&mut rng, 5) * 3.0;
            let ratio = sym_op_norm(&(p.g_hess(&x).unwrap() - p.g_hess(&y).unwrap())) / (&x - &y).norm();
            assert!(ratio <= l2 * (1.0 + 1e-12), "{ratio} > {l2}");
        }
    }

    #[test]
    fn third_derivative_constant() {
        assert_relative_eq!(LOGISTIC_THIRD_DERIVATIVE_BOUND, 1.0 / (6.0 * 3f64.sqrt()), max_relative = 1e-15);
        // grid maximum of |s(1-s)(1-2s)|
        let grid_max = (0..200_001)
            .map(|i| {
                let s = sigmoid(-10.0 + 20.0 * i as f64 / 200_000.0);
                (s * (1.0 - s) * (1.0 - 2.0 * s)).abs()
            })
            .fold(0.0, f64::max);
        assert!(grid_max <= LOGISTIC_THIRD_DERIVATIVE_BOUND);
        assert_relative_eq!(grid_max, LOGISTIC_THIRD_DERIVATIVE_BOUND, max_relative = 1e-6);
    }

    #[test]
    fn l1_with_zero_weight_is_the_quadratic() {
        let a = make_l1_composite(8, 0.1, 2.0, 0.0, 4).unwrap();
        let b = make_quadratic(8, 0.1, 2.0, 4).unwrap();
        assert!(a.f_is_zero());
        let (xa, xb) = (&a.known_minimizer().unwrap().x, &b.known_minimizer().unwrap().x);
        assert!((xa - xb).norm() < 1e-14);
    }

    #[test]
    fn l1_one_dimensional_minimizer_is_zero() {
        let p = l1_from_parts(Matrix::identity(1, 1), Vector::zeros(1), 1.0, 1.0, 1.0).unwrap();
        assert_eq!(p.known_minimizer().unwrap().x[0], 0.0);
        let x = Vector::from_vec(vec![3.0]);
        assert_eq!(p.f_prox(&x, 1.0).unwrap()[0], 2.0);
    }

    #[test]
    fn l1_minimizer_satisfies_optimality() {
        for seed in 0..4 {
            let p = make_l1_composite(30, 0.01, 1.0, 0.3, seed).unwrap();
            let Structure::Quadratic { q, b } = p.structure() else { unreachable!() };
            let x = &p.known_minimizer().unwrap().x;
            assert!(l1_optimality_residual(q, b, 0.3, x) <= 1e-8);
        }
    }

    #[test]
    fn generated_problems_are_strongly_convex_on_samples() {
        let problems = vec![
            make_quadratic(10, 0.05, 2.0, 1).unwrap(),
            make_l1_composite(10, 0.05, 2.0, 0.5, 1).unwrap(),
            make_logistic_synthetic(40, 10, 0.2, 1).unwrap(),
            make_quartic(10, 1.0, 1.0, 4.0, 1).unwrap(),
        ];
        for p in &problems {
            assert_eq!(strong_convexity_violations(p, 1000, 2.0, 99), 0, "{}", p.name());
        }
    }

    #[test]
    fn soft_threshold_prox_is_a_subgradient_step() {
        let p = make_l1_composite(6, 0.1, 1.0, 0.7, 2).unwrap();
        assert_eq!(prox_inclusion_violations(&p, 50, 20, 8).unwrap(), 0);
    }

    #[test]
    fn quartic_minimizer_and_hessian() {
        let p = make_quartic(10, 1.0, 1.0, 4.0, 3).unwrap();
        let m = p.known_minimizer().unwrap();
        assert!(p.g_grad(&m.x).norm() < 1e-12);
        assert!(m.x.norm() < 4.0);
        let x = Vector::from_fn(10, |i, _| (i as f64 * 0.3).sin());
        let fd = central_diff_grad(&p, &x, 1e-6);
        assert!((fd - p.g_grad(&x)).norm() < 1e-7);
    }
}
