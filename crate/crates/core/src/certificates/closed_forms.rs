//! Closed forms for two auxiliary minimization problems.

use crate::linalg::Vector;

/// Optimal value of `min prod_{j=1..k} (1 + t_j)` subject to
/// `sum_j t_j^{-q} <= c`, `t > 0`: `(1 + (k / c)^{1/q})^k`.
pub fn carinhoso_optimal(k: usize, c: f64, q: f64) -> f64 {
    (1.0 + (k as f64 / c).powf(1.0 / q)).powi(k as i32)
}

/// Minimizer and minimum of
/// `q(x) = <v, x - y> + mu |x - y|^2 / 2 - eps + |x - z|^2 / (2 lambda)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WolfeForms {
    pub minimizer: Vector,
    pub min_value: f64,
    v: Vector,
    y: Vector,
    z: Vector,
    mu: f64,
    eps: f64,
    lambda: f64,
}

impl WolfeForms {
    pub fn q(&self, x: &Vector) -> f64 {
        wolfe_q(&self.v, &self.y, &self.z, self.mu, self.eps, self.lambda, x)
    }

    /// `q(x) - min_value - (1 + lambda mu) |x - x*|^2 / (2 lambda)`; zero in exact arithmetic.
    pub fn taylor_residual(&self, x: &Vector) -> f64 {
        let curv = (1.0 + self.lambda * self.mu) / (2.0 * self.lambda);
        self.q(x) - self.min_value - curv * (x - &self.minimizer).norm_squared()
    }
}

pub fn wolfe_q(v: &Vector, y: &Vector, z: &Vector, mu: f64, eps: f64, lambda: f64, x: &Vector) -> f64 {
    let dy = x - y;
    v.dot(&dy) + 0.5 * mu * dy.norm_squared() - eps + (x - z).norm_squared() / (2.0 * lambda)
}

pub fn wolfe_closed_forms(v: &Vector, y: &Vector, z: &Vector, mu: f64, eps: f64, lambda: f64) -> WolfeForms {
    let s = 1.0 + lambda * mu;
    let minimizer = (z + y * (lambda * mu) - v * lambda) / s;
    let r = v * lambda + y - z;
    let min_value = ((y - z).norm_squared() - (r.norm_squared() / s + 2.0 * lambda * eps)) / (2.0 * lambda);
    WolfeForms {
        minimizer,
        min_value,
        v: v.clone(),
        y: y.clone(),
        z: z.clone(),
        mu,
        eps,
        lambda,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn carinhoso_small_cases() {
        assert_eq!(carinhoso_optimal(1, 1.0, 1.0), 2.0);
        assert_eq!(carinhoso_optimal(2, 2.0, 1.0), 4.0);
        assert_relative_eq!(carinhoso_optimal(3, 1.0, 2.0), (1.0 + 3f64.sqrt()).powi(3), max_relative = 1e-15);
        assert_relative_eq!(carinhoso_optimal(3, 1.0, 2.0), 20.392_304_845, max_relative = 1e-10);
    }

    #[test]
    fn wolfe_trivial_cases() {
        let z = Vector::from_vec(vec![0.3, -1.0]);
        let w = wolfe_closed_forms(&Vector::zeros(2), &z, &z, 1.0, 0.0, 2.0);
        assert_eq!(w.minimizer, z);
        assert_eq!(w.min_value, 0.0);

        let v = Vector::from_vec(vec![1.0, 0.0]);
        let w = wolfe_closed_forms(&v, &z, &z, 1e-12, 0.0, 1.0);
        assert!((&w.minimizer - (&z - &v)).norm() < 1e-11);
        assert_relative_eq!(w.min_value, -0.5, max_relative = 1e-10);
    }
}
