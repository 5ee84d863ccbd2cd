use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::Ellipsoid;
use crate::dynamics::OdeSystem;
use crate::{Error, Result};

/// Penalty part of the objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Objective {
    /// No penalty; only the regularizer contributes.
    Zero,
    /// `0.5 (||x0^1 - c_I||_EI^2 + ||Phi(t_N, x0^N) - c_U||_EU^2)`
    F1,
    /// `0.5 sum_i ||x0^{i+1} - Phi(t_i, x0^i)||^2`
    F2,
    /// `F1 + F2`
    F3,
}

/// Regularization of the segment durations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Regularizer {
    None,
    /// `0.5 sum_i t_i^2`
    R1,
    /// `0.5 sum_i (t_{i+1} - t_i)^2`
    R2,
    /// `0.5 sum_i (t_i - mean(t))^2`
    R3,
}

/// Equality constraint set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ConstraintKind {
    /// Matching conditions `x0^{i+1} - Phi(t_i, x0^i) = 0`.
    C1,
    /// Boundary of `Init`, matching conditions, boundary of `Unsafe`.
    C2,
    /// Boundary of `Init` and boundary of `Unsafe` only.
    C3,
    Unconstrained,
}

impl ConstraintKind {
    /// Number of scalar constraints for state dimension `n` and `segments`.
    pub fn dim(self, n: usize, segments: usize) -> usize {
        let matching = n * segments.saturating_sub(1);
        match self {
            ConstraintKind::C1 => matching,
            ConstraintKind::C2 => matching + 2,
            ConstraintKind::C3 => 2,
            ConstraintKind::Unconstrained => 0,
        }
    }

    pub fn has_matching(self) -> bool {
        matches!(self, ConstraintKind::C1 | ConstraintKind::C2)
    }

    pub fn has_boundary(self) -> bool {
        matches!(self, ConstraintKind::C2 | ConstraintKind::C3)
    }
}

/// Objective, regularizer and constraint set of one optimization problem.
///
/// The nine named problems are numbered 5 to 13:
///
/// | eq | objective | constraints |
/// |----|-----------|-------------|
/// | 5  | F1        | C1 |
/// | 6  | F2        | C3 |
/// | 7  | F3        | none |
/// | 8  | R1        | C2 |
/// | 9  | F1 + R1   | C1 |
/// | 10 | F2 + R1   | C3 |
/// | 11 | F2 + R2   | C3 |
/// | 12 | F2 + R3   | C3 |
/// | 13 | F3 + R1   | none |
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Formulation {
    objective: Objective,
    regularizer: Regularizer,
    constraints: ConstraintKind,
    equation: Option<u8>,
}

impl Formulation {
    pub const EQUATIONS: [u8; 9] = [5, 6, 7, 8, 9, 10, 11, 12, 13];

    pub fn equation(number: u8) -> Result<Self> {
        use ConstraintKind::*;
        use Objective::*;
        let (objective, regularizer, constraints) = match number {
            5 => (F1, Regularizer::None, C1),
            6 => (F2, Regularizer::None, C3),
            7 => (F3, Regularizer::None, Unconstrained),
            8 => (Zero, Regularizer::R1, C2),
            9 => (F1, Regularizer::R1, C1),
            10 => (F2, Regularizer::R1, C3),
            11 => (F2, Regularizer::R2, C3),
            12 => (F2, Regularizer::R3, C3),
            13 => (F3, Regularizer::R1, Unconstrained),
            _ => {
                return Err(Error::InvalidInput(format!(
                    "unknown formulation eq{number}; expected eq5 .. eq13"
                )))
            }
        };
        Ok(Self {
            objective,
            regularizer,
            constraints,
            equation: Some(number),
        })
    }

    /// Any combination, including ones without a published counterpart.
    pub fn experimental(
        objective: Objective,
        regularizer: Regularizer,
        constraints: ConstraintKind,
    ) -> Self {
        let equation = Self::EQUATIONS.iter().copied().find(|&k| {
            let f = Self::equation(k).expect("listed equation");
            f.objective == objective && f.regularizer == regularizer && f.constraints == constraints
        });
        Self {
            objective,
            regularizer,
            constraints,
            equation,
        }
    }

    pub fn all_named() -> impl Iterator<Item = Self> {
        Self::EQUATIONS
            .iter()
            .map(|&k| Self::equation(k).expect("listed equation"))
    }

    pub fn objective(&self) -> Objective {
        self.objective
    }

    pub fn regularizer(&self) -> Regularizer {
        self.regularizer
    }

    pub fn constraints(&self) -> ConstraintKind {
        self.constraints
    }

    pub fn equation_number(&self) -> Option<u8> {
        self.equation
    }
}

impl fmt::Display for Formulation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.equation {
            Some(k) => write!(f, "eq{k}"),
            None => write!(
                f,
                "{:?}+{:?} s.t. {:?}",
                self.objective, self.regularizer, self.constraints
            ),
        }
    }
}

impl FromStr for Formulation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let digits = s.trim().trim_start_matches("eq");
        let number: u8 = digits
            .parse()
            .map_err(|_| Error::InvalidInput(format!("unknown formulation {s:?}")))?;
        Self::equation(number)
    }
}

/// Dynamics, the two target sets, and the number of shooting segments.
#[derive(Debug, Clone)]
pub struct ProblemInstance {
    pub system: OdeSystem,
    pub init: Ellipsoid,
    pub unsafe_set: Ellipsoid,
    pub n_segments: usize,
}

impl ProblemInstance {
    pub fn new(
        system: OdeSystem,
        init: Ellipsoid,
        unsafe_set: Ellipsoid,
        n_segments: usize,
    ) -> Result<Self> {
        let n = system.dim();
        for (what, set) in [("Init ellipsoid", &init), ("Unsafe ellipsoid", &unsafe_set)] {
            if set.dim() != n {
                return Err(Error::DimensionMismatch {
                    what,
                    expected: n,
                    found: set.dim(),
                });
            }
        }
        if n_segments == 0 {
            return Err(Error::InvalidInput("at least one segment is required".into()));
        }
        if init.center() == unsafe_set.center() {
            return Err(Error::InvalidInput(
                "Init and Unsafe share the same center".into(),
            ));
        }
        let gap = (init.center() - unsafe_set.center()).norm();
        if init.contains(unsafe_set.center())
            || unsafe_set.contains(init.center())
            || gap < init.outer_radius() + unsafe_set.outer_radius()
        {
            log::warn!("Init and Unsafe may overlap (center distance {gap:.3e})");
        }
        Ok(Self {
            system,
            init,
            unsafe_set,
            n_segments,
        })
    }

    pub fn dim(&self) -> usize {
        self.system.dim()
    }

    /// `N (n + 1)`
    pub fn packed_len(&self) -> usize {
        self.n_segments * (self.dim() + 1)
    }

    pub fn with_segments(&self, n_segments: usize) -> Result<Self> {
        Self::new(
            self.system.clone(),
            self.init.clone(),
            self.unsafe_set.clone(),
            n_segments,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::benchmark2;
    use nalgebra::DVector;

    #[test]
    fn named_formulations() {
        let f8 = Formulation::equation(8).unwrap();
        assert_eq!(f8.objective(), Objective::Zero);
        assert_eq!(f8.regularizer(), Regularizer::R1);
        assert_eq!(f8.constraints(), ConstraintKind::C2);
        assert_eq!("eq11".parse::<Formulation>().unwrap(), Formulation::equation(11).unwrap());
        assert!("eq4".parse::<Formulation>().is_err());
        assert!("banana".parse::<Formulation>().is_err());
        assert_eq!(Formulation::all_named().count(), 9);
        assert_eq!(Formulation::equation(13).unwrap().to_string(), "eq13");
    }

    #[test]
    fn experimental_recognizes_named() {
        let f = Formulation::experimental(Objective::F2, Regularizer::R2, ConstraintKind::C3);
        assert_eq!(f.equation_number(), Some(11));
        let g = Formulation::experimental(Objective::F1, Regularizer::R3, ConstraintKind::C2);
        assert_eq!(g.equation_number(), None);
    }

    #[test]
    fn constraint_dims() {
        assert_eq!(ConstraintKind::C1.dim(3, 5), 12);
        assert_eq!(ConstraintKind::C2.dim(3, 5), 14);
        assert_eq!(ConstraintKind::C3.dim(3, 5), 2);
        assert_eq!(ConstraintKind::Unconstrained.dim(3, 5), 0);
        assert_eq!(ConstraintKind::C1.dim(3, 1), 0);
    }

    #[test]
    fn instance_validation() {
        let sys = benchmark2().unwrap();
        let a = Ellipsoid::ball(DVector::from_vec(vec![1.0, 1.0, 1.0]), 0.25).unwrap();
        let b = Ellipsoid::ball(DVector::from_vec(vec![0.0, 0.0, 0.0]), 0.25).unwrap();
        assert!(ProblemInstance::new(sys.clone(), a.clone(), b.clone(), 3).is_ok());
        assert!(ProblemInstance::new(sys.clone(), a.clone(), a.clone(), 3).is_err());
        assert!(ProblemInstance::new(sys.clone(), a.clone(), b.clone(), 0).is_err());
        let two = Ellipsoid::ball(DVector::from_vec(vec![0.0, 0.0]), 0.25).unwrap();
        assert!(ProblemInstance::new(sys, a, two, 3).is_err());
    }
}
