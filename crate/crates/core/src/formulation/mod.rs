//! Multiple-shooting parameterization and the optimization problems built
//! on it.
//!
//! The parameter vector interleaves segment start states and durations,
//! `X = [x0^1, t1, x0^2, t2, ..., x0^N, tN]`, so segment `i` (0-based) owns
//! the slots `i*(n+1) .. i*(n+1)+n` for its state and `i*(n+1)+n` for its
//! duration.

pub mod closed_form;
#[cfg(test)]
pub(crate) mod fixtures;
mod constraints;
mod ellipsoid;
mod lagrangian;
mod multipliers;
mod objective;
mod problem;
mod segments;
mod shooting;

pub use constraints::{constraint_jacobian, constraint_value};
pub use ellipsoid::Ellipsoid;
pub use lagrangian::lagrangian_gradient;
pub use multipliers::Multipliers;
pub use objective::{objective_gradient, objective_value, regularizer_value};
pub use problem::{ConstraintKind, Formulation, Objective, ProblemInstance, Regularizer};
pub use segments::{evaluate_segments, SegmentFlows};
pub use shooting::{Segment, ShootingVector};
