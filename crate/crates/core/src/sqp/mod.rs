//! Line-search SQP on the shooting formulations.
//!
//! Each iteration solves the saddle-point system for `(d_x, d_lambda)`,
//! picks a common step `alpha` for both by backtracking on the merit
//! function
//!
//! ```text
//! m(alpha) = F(X + alpha d_x) + (lambda + d_lambda)^T c(X + alpha d_x)
//!            + omega/2 ||c(X + alpha d_x)||^2
//! ```
//!
//! and updates the quasi-Newton Hessian with
//! `s = alpha d_x`, `y = grad L(X+, lambda+) - grad L(X, lambda+)`.

mod driver;
mod merit;
mod point;

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

pub use driver::{run, run_observed};
pub use merit::{backtrack, merit_derivative_at_zero, LineSearch, Merit};
pub use point::Point;

use crate::dynamics::IntegratorConfig;
use crate::formulation::ShootingVector;
use crate::hessian::HessianKind;
use crate::kkt::KktMethod;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SqpConfig {
    /// Penalty weight of `||c||^2` in the merit function.
    pub omega: f64,
    /// Sufficient-decrease parameter.
    pub delta: f64,
    /// Tolerance on `||grad L||`.
    pub eps1: f64,
    /// Tolerance on `||c||`.
    pub eps2: f64,
    /// Smallest step length before giving up.
    pub eps3: f64,
    pub max_iter: usize,
    pub backtrack_factor: f64,
    pub hessian: HessianKind,
    pub kkt: KktMethod,
    pub integrator: IntegratorConfig,
}

impl Default for SqpConfig {
    fn default() -> Self {
        Self {
            omega: 1.0,
            delta: 1e-4,
            eps1: 1e-3,
            eps2: 1e-8,
            eps3: 1e-8,
            max_iter: 400,
            backtrack_factor: 0.5,
            hessian: HessianKind::BlockDiagonal,
            kkt: KktMethod::Ppcg,
            integrator: IntegratorConfig::default(),
        }
    }
}

impl SqpConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("omega", self.omega),
            ("eps1", self.eps1),
            ("eps2", self.eps2),
            ("eps3", self.eps3),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidInput(format!("{name} must be positive, got {v}")));
            }
        }
        for (name, v) in [("delta", self.delta), ("backtrack_factor", self.backtrack_factor)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::InvalidInput(format!("{name} must lie in (0, 1), got {v}")));
            }
        }
        self.integrator.validate()
    }
}

/// Why a run stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Termination {
    /// `||grad L|| < eps1` and `||c|| < eps2`.
    #[serde(rename = "S1_converged")]
    Converged,
    #[serde(rename = "S2_maxit")]
    MaxIterations,
    /// No acceptable step longer than `eps3`, or a non-descent direction.
    #[serde(rename = "S3_step_too_small")]
    StepTooSmall,
    /// The starting point could not be integrated.
    IntegrationFailure,
}

impl Termination {
    /// `1`, `2`, `3` for the three stopping criteria.
    pub fn digit(self) -> Option<u8> {
        match self {
            Termination::Converged => Some(1),
            Termination::MaxIterations => Some(2),
            Termination::StepTooSmall => Some(3),
            Termination::IntegrationFailure => None,
        }
    }
}

/// One accepted (or finally rejected) iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iter: usize,
    /// Objective at the start of the iteration.
    pub objective: f64,
    pub constraint_norm: f64,
    pub gradient_norm: f64,
    pub alpha: f64,
    /// `m(alpha)` at the accepted step.
    pub merit: f64,
    /// `m(0)`
    pub merit0: f64,
    /// `m'(0)`
    pub merit_slope: f64,
    pub cg_iterations: usize,
    /// Solver that produced the step: `ppcg`, `direct` or `min-norm`.
    pub solver: String,
}

impl IterationRecord {
    /// Whether the sufficient-decrease test holds for the stored numbers.
    pub fn satisfies_decrease(&self, delta: f64) -> bool {
        self.merit - self.merit0 <= delta * self.alpha * self.merit_slope
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub nit: usize,
    pub termination: Termination,
    pub final_x: ShootingVector,
    pub final_lambda: Vec<f64>,
    pub final_objective: f64,
    pub final_constraint_norm: f64,
    pub final_gradient_norm: f64,
    pub hessian_skips: usize,
    pub kkt_fallbacks: usize,
    /// Error text when the run ended with an integration failure.
    pub failure: Option<String>,
    pub trace: Vec<IterationRecord>,
}

/// Writes one JSON object per line.
pub fn write_trace<W: Write>(records: &[IterationRecord], out: &mut W) -> io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut *out, r)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        let cfg = SqpConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.max_iter, 400);
        let bad = SqpConfig {
            delta: 1.0,
            ..cfg
        };
        assert!(bad.validate().is_err());
        let bad = SqpConfig { eps2: 0.0, ..cfg };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn termination_names() {
        assert_eq!(
            serde_json::to_string(&Termination::Converged).unwrap(),
            "\"S1_converged\""
        );
        assert_eq!(Termination::StepTooSmall.digit(), Some(3));
        assert_eq!(Termination::IntegrationFailure.digit(), None);
    }

    #[test]
    fn trace_lines() {
        let rec = IterationRecord {
            iter: 0,
            objective: 1.0,
            constraint_norm: 0.5,
            gradient_norm: 2.0,
            alpha: 1.0,
            merit: 0.9,
            merit0: 1.0,
            merit_slope: -1.0,
            cg_iterations: 3,
            solver: "ppcg".into(),
        };
        let mut buf = Vec::new();
        write_trace(&[rec.clone(), rec.clone()], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 2);
        let back: IterationRecord = serde_json::from_str(text.lines().next().unwrap()).unwrap();
        assert_eq!(back, rec);
        assert!(rec.satisfies_decrease(1e-4));
    }
}
