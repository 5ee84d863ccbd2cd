use nalgebra::DVector;

use super::ConstraintKind;
use crate::{Error, Result};

/// Lagrange multipliers laid out like the constraint vector:
///
/// - C1: `[lambda_1, ..., lambda_{N-1}]`
/// - C2: `[lambda_I, lambda_1, ..., lambda_{N-1}, lambda_U]`
/// - C3: `[lambda_I, lambda_U]`
/// - unconstrained: empty
#[derive(Debug, Clone, PartialEq)]
pub struct Multipliers {
    kind: ConstraintKind,
    n: usize,
    segments: usize,
    values: DVector<f64>,
}

impl Multipliers {
    pub fn zeros(kind: ConstraintKind, n: usize, segments: usize) -> Self {
        Self {
            kind,
            n,
            segments,
            values: DVector::zeros(kind.dim(n, segments)),
        }
    }

    pub fn from_flat(
        kind: ConstraintKind,
        n: usize,
        segments: usize,
        values: DVector<f64>,
    ) -> Result<Self> {
        let expected = kind.dim(n, segments);
        if values.len() != expected {
            return Err(Error::DimensionMismatch {
                what: "multipliers",
                expected,
                found: values.len(),
            });
        }
        Ok(Self {
            kind,
            n,
            segments,
            values,
        })
    }

    pub fn kind(&self) -> ConstraintKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn as_flat(&self) -> &DVector<f64> {
        &self.values
    }

    pub fn into_flat(self) -> DVector<f64> {
        self.values
    }

    fn matching_offset(&self) -> usize {
        match self.kind {
            ConstraintKind::C2 => 1,
            _ => 0,
        }
    }

    /// `lambda_i` for the matching condition between segments `i` and
    /// `i + 1` (0-based `i < N - 1`). Empty for kinds without matching.
    pub fn matching(&self, i: usize) -> &[f64] {
        if !self.kind.has_matching() {
            return &[];
        }
        assert!(i + 1 < self.segments, "matching index {i} out of range");
        let start = self.matching_offset() + i * self.n;
        &self.values.as_slice()[start..start + self.n]
    }

    /// `(lambda_I, lambda_U)` when boundary constraints are active.
    pub fn boundary(&self) -> Option<(f64, f64)> {
        self.kind
            .has_boundary()
            .then(|| (self.values[0], self.values[self.values.len() - 1]))
    }
}
