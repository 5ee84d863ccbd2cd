use nalgebra::{DMatrix, DVector};

use super::{KktSolution, SaddleSystem};
use crate::{Error, Result};

const PIVOT_RATIO: f64 = 1e-12;

fn assemble(sys: &SaddleSystem) -> (DMatrix<f64>, DVector<f64>) {
    let (m1, m2) = (sys.m1(), sys.m2());
    let mut k = DMatrix::zeros(m1 + m2, m1 + m2);
    k.view_mut((0, 0), (m1, m1)).copy_from(&sys.hess.to_dense());
    for (i, j, v) in sys.jac.triplets() {
        k[(i, m1 + j)] = v;
        k[(m1 + j, i)] = v;
    }
    let mut rhs = DVector::zeros(m1 + m2);
    rhs.rows_mut(0, m1).copy_from(&sys.rhs_top);
    rhs.rows_mut(m1, m2).copy_from(&sys.rhs_bottom);
    (k, rhs)
}

fn split(sys: &SaddleSystem, z: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
    let m1 = sys.m1();
    (z.rows(0, m1).into_owned(), z.rows(m1, sys.m2()).into_owned())
}

/// Dense LU with full pivoting on the assembled matrix. Meant as a reference
/// for moderate sizes.
pub fn solve_direct(sys: &SaddleSystem) -> Result<KktSolution> {
    let (k, rhs) = assemble(sys);
    let lu = k.full_piv_lu();
    let u = lu.u();
    let diag = u.diagonal().abs();
    let largest = diag.max();
    if diag.is_empty() {
        return Ok(KktSolution::new(sys, DVector::zeros(0), DVector::zeros(0), 0, Vec::new(), true));
    }
    if !(diag.min() > PIVOT_RATIO * largest) {
        return Err(Error::SingularSystem);
    }
    let z = lu.solve(&rhs).ok_or(Error::SingularSystem)?;
    let (d_x, d_lambda) = split(sys, &z);
    let sol = KktSolution::new(sys, d_x, d_lambda, 0, Vec::new(), true);
    if !(sol.residual_norm <= 1e-10 * (1.0 + sys.rhs_norm())) {
        return Err(Error::SingularSystem);
    }
    Ok(sol)
}

/// Minimum-norm least-squares solution through the SVD. Used as the last
/// resort when the system is singular; if the right-hand side lies in the
/// range this is an exact solution.
pub fn solve_min_norm(sys: &SaddleSystem) -> Result<KktSolution> {
    let (k, rhs) = assemble(sys);
    let svd = k.svd(true, true);
    let eps = 1e-12 * svd.singular_values.max();
    let z = svd
        .solve(&rhs, eps)
        .map_err(|e| Error::InvalidInput(format!("SVD solve failed: {e}")))?;
    let (d_x, d_lambda) = split(sys, &z);
    Ok(KktSolution::new(sys, d_x, d_lambda, 0, Vec::new(), true))
}
