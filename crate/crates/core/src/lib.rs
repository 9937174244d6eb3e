//! Armijo backtracking, two-way backtracking and coordinate-wise gradient
//! descent variants, with the experiment harnesses used to study them.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod cli;
pub mod error;
pub mod line_search;
pub mod objective;
pub mod optimizers;

pub use error::{Error, Result};
pub use line_search::{LineSearchParams, SmoothnessModel};
pub use objective::{DifferentiableFunction, Point, SeparableObjective};
pub use optimizers::{run_method, Method, Objective, RunOptions, StoppingRule, Trajectory};
