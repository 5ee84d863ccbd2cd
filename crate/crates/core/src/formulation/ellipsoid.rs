use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// `{ v : (v - c)^T E (v - c) <= 1 }` with `E` symmetric positive definite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ellipsoid {
    center: DVector<f64>,
    shape: DMatrix<f64>,
}

impl Ellipsoid {
    pub fn new(center: DVector<f64>, shape: DMatrix<f64>) -> Result<Self> {
        let n = center.len();
        if n == 0 {
            return Err(Error::InvalidInput("ellipsoid dimension must be positive".into()));
        }
        if shape.nrows() != n || shape.ncols() != n {
            return Err(Error::DimensionMismatch {
                what: "ellipsoid shape",
                expected: n,
                found: shape.nrows().max(shape.ncols()),
            });
        }
        let asym = (&shape - shape.transpose()).amax();
        if asym > 1e-12 * shape.amax().max(1.0) {
            return Err(Error::InvalidInput(format!(
                "ellipsoid shape is not symmetric (max asymmetry {asym:e})"
            )));
        }
        if shape.clone().cholesky().is_none() {
            return Err(Error::InvalidInput(
                "ellipsoid shape is not positive definite".into(),
            ));
        }
        Ok(Self { center, shape })
    }

    /// Euclidean ball of the given radius, i.e. shape `I / r^2`.
    pub fn ball(center: DVector<f64>, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidInput(format!("ball radius must be positive, got {radius}")));
        }
        let n = center.len();
        Self::new(center, DMatrix::identity(n, n) / (radius * radius))
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn center(&self) -> &DVector<f64> {
        &self.center
    }

    pub fn shape(&self) -> &DMatrix<f64> {
        &self.shape
    }

    /// `E (v - c)`, the gradient of `0.5 * ||v - c||_E^2`.
    pub fn scaled_offset(&self, v: &DVector<f64>) -> DVector<f64> {
        &self.shape * (v - &self.center)
    }

    /// `||v - c||_E^2`
    pub fn norm_squared(&self, v: &DVector<f64>) -> f64 {
        let d = v - &self.center;
        d.dot(&(&self.shape * &d))
    }

    /// `||v - c||_E`
    pub fn norm(&self, v: &DVector<f64>) -> f64 {
        self.norm_squared(v).sqrt()
    }

    pub fn contains(&self, v: &DVector<f64>) -> bool {
        self.norm_squared(v) <= 1.0
    }

    /// Radius of the smallest Euclidean ball around the center that contains
    /// the ellipsoid: `1 / sqrt(lambda_min(E))`.
    pub fn outer_radius(&self) -> f64 {
        let min_eig = self.shape.clone().symmetric_eigenvalues().min();
        1.0 / min_eig.sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ball_norm() {
        let b = Ellipsoid::ball(DVector::from_vec(vec![1.0, 1.0]), 0.25).unwrap();
        assert_eq!(b.shape()[(0, 0)], 16.0);
        let v = DVector::from_vec(vec![1.25, 1.0]);
        assert!((b.norm_squared(&v) - 1.0).abs() < 1e-15);
        assert!((b.outer_radius() - 0.25).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_shapes() {
        let c = DVector::zeros(2);
        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(Ellipsoid::new(c.clone(), asym).is_err());
        let indef = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        assert!(Ellipsoid::new(c.clone(), indef).is_err());
        assert!(Ellipsoid::new(c.clone(), DMatrix::identity(3, 3)).is_err());
        assert!(Ellipsoid::ball(c, 0.0).is_err());
    }
}
