//! TOML run specification. Every table rejects unknown keys.

use serde::{Deserialize, Serialize};

fn yes() -> bool {
    true
}

fn default_radius() -> f64 {
    4.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    pub problem: ProblemSpec,
    #[serde(default)]
    pub start: StartSpec,
    pub algorithm: AlgorithmSpec,
    #[serde(default)]
    pub stopping: StoppingSpec,
    #[serde(default)]
    pub output: OutputSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "generator", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProblemSpec {
    Quadratic {
        dim: usize,
        mu: f64,
        lip: f64,
        seed: u64,
        #[serde(default = "yes")]
        hessian: bool,
    },
    Logistic {
        samples: usize,
        dim: usize,
        mu: f64,
        seed: u64,
        #[serde(default = "yes")]
        hessian: bool,
    },
    L1 {
        dim: usize,
        mu: f64,
        lip: f64,
        l1_weight: f64,
        seed: u64,
        #[serde(default = "yes")]
        hessian: bool,
    },
    Quartic {
        dim: usize,
        mu: f64,
        coupling: f64,
        #[serde(default = "default_radius")]
        radius: f64,
        seed: u64,
        #[serde(default = "yes")]
        hessian: bool,
    },
}

impl ProblemSpec {
    pub fn seed_mut(&mut self) -> &mut u64 {
        match self {
            ProblemSpec::Quadratic { seed, .. }
            | ProblemSpec::Logistic { seed, .. }
            | ProblemSpec::L1 { seed, .. }
            | ProblemSpec::Quartic { seed, .. } => seed,
        }
    }

    pub fn seed(&self) -> u64 {
        match self {
            ProblemSpec::Quadratic { seed, .. }
            | ProblemSpec::Logistic { seed, .. }
            | ProblemSpec::L1 { seed, .. }
            | ProblemSpec::Quartic { seed, .. } => *seed,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            ProblemSpec::Quadratic { dim, .. }
            | ProblemSpec::Logistic { dim, .. }
            | ProblemSpec::L1 { dim, .. }
            | ProblemSpec::Quartic { dim, .. } => *dim,
        }
    }

    pub fn hessian(&self) -> bool {
        match self {
            ProblemSpec::Quadratic { hessian, .. }
            | ProblemSpec::Logistic { hessian, .. }
            | ProblemSpec::L1 { hessian, .. }
            | ProblemSpec::Quartic { hessian, .. } => *hessian,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StartSpec {
    #[default]
    Ones,
    Zeros,
    /// Gaussian entries times `scale`; `seed` defaults to the problem seed.
    Random {
        #[serde(default = "one")]
        scale: f64,
        seed: Option<u64>,
    },
    Explicit {
        values: Vec<f64>,
    },
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    #[default]
    Exact,
    InnerLoop,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowKind {
    #[default]
    Generic,
    Tensor,
}

fn inner_budget() -> usize {
    1000
}

fn tensor_budget() -> usize {
    10_000
}

fn two() -> f64 {
    2.0
}

fn two_usize() -> usize {
    2
}

fn max_steps() -> usize {
    200
}

fn sigma_u_pg() -> f64 {
    0.99
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum AlgorithmSpec {
    Ahpe {
        #[serde(default)]
        sigma: f64,
        lambda: Option<f64>,
        lambda_schedule: Option<Vec<f64>>,
        #[serde(default)]
        solver: SolverKind,
        #[serde(default = "inner_budget")]
        inner_budget: usize,
    },
    Largestep {
        #[serde(default = "two_usize")]
        p: usize,
        theta: f64,
        #[serde(default)]
        sigma: f64,
        #[serde(default)]
        window: WindowKind,
        cap: Option<f64>,
        upper_base: Option<f64>,
        #[serde(default = "two")]
        expansion: f64,
        #[serde(default = "max_steps")]
        max_steps: usize,
        #[serde(default = "one")]
        lambda_seed: f64,
        #[serde(default)]
        solver: SolverKind,
        #[serde(default = "inner_budget")]
        inner_budget: usize,
    },
    Tensor {
        #[serde(default = "two_usize")]
        p: usize,
        m: Option<f64>,
        sigma_l: f64,
        sigma_u: f64,
        #[serde(default)]
        sigma_hat: f64,
        #[serde(default = "tensor_budget")]
        inner_budget: usize,
        #[serde(default = "two")]
        expansion: f64,
        #[serde(default = "max_steps")]
        max_steps: usize,
        #[serde(default = "one")]
        lambda_seed: f64,
    },
    Proxgrad {
        #[serde(default = "sigma_u_pg")]
        sigma_u: f64,
        #[serde(default)]
        sigma_hat: f64,
        /// Fraction of the admissible perturbation injected when `sigma_hat > 0`.
        #[serde(default)]
        noise_fraction: f64,
        noise_seed: Option<u64>,
    },
}

impl AlgorithmSpec {
    pub fn name(&self) -> &'static str {
        match self {
            AlgorithmSpec::Ahpe { .. } => "ahpe",
            AlgorithmSpec::Largestep { .. } => "largestep",
            AlgorithmSpec::Tensor { .. } => "tensor",
            AlgorithmSpec::Proxgrad { .. } => "proxgrad",
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CriterionKind {
    None,
    #[default]
    GradNorm,
    ValueGap,
}

fn max_iter() -> usize {
    1000
}

fn tol() -> f64 {
    1e-10
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StoppingSpec {
    #[serde(default = "max_iter")]
    pub max_iter: usize,
    #[serde(default)]
    pub criterion: CriterionKind,
    #[serde(default = "tol")]
    pub tol: f64,
}

impl Default for StoppingSpec {
    fn default() -> Self {
        StoppingSpec {
            max_iter: max_iter(),
            criterion: CriterionKind::default(),
            tol: tol(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    /// File stem for `<name>.trace.csv`, `<name>.summary.json` and `<name>.report.json`.
    pub name: Option<String>,
    /// Output directory when no `--out-dir` is given.
    pub dir: Option<String>,
}

impl RunSpec {
    /// Parses TOML; errors carry the line and column of the offending key.
    pub fn from_toml(text: &str) -> std::result::Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }
}
