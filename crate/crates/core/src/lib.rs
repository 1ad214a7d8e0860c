//! Accelerated inexact proximal methods for strongly convex composite
//! minimization `min f(x) + g(x)`.
//!
//! [`ahpe`] holds the core accelerated iteration. [`largestep`], [`tensor`]
//! and [`proxgrad`] build on it, [`certificates`] checks every run against
//! its convergence guarantees and [`bench`] drives runs from config files.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod ahpe;
pub mod bench;
pub mod certificates;
pub mod error;
pub mod largestep;
mod linalg;
pub mod problem;
pub mod proxgrad;
pub mod subproblem;
pub mod tensor;

pub use error::{Error, Result};
pub use linalg::{Matrix, Vector};
