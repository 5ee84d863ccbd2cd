use nalgebra::{DMatrix, DVector};

use crate::hessian::HessianApprox;
use crate::sparse::CscMatrix;
use crate::{Error, Result};

/// Orthonormal basis of the null space of `B^T` from a Householder QR of
/// `B`: the trailing `m1 - m2` columns of the full `Q`.
pub fn nullspace_basis(b: &CscMatrix) -> Result<DMatrix<f64>> {
    let (m1, m2) = (b.nrows(), b.ncols());
    if m2 > m1 {
        return Err(Error::RankDeficient {
            rank: m1,
            expected: m2,
        });
    }
    if m2 == 0 {
        return Ok(DMatrix::identity(m1, m1));
    }
    let dense = b.to_dense();
    let tol = 1e-12 * dense.norm().max(1.0);
    let qr = dense.qr();
    let rank = qr.r().diagonal().iter().filter(|d| d.abs() > tol).count();
    if rank < m2 {
        return Err(Error::RankDeficient { rank, expected: m2 });
    }
    let mut qt = DMatrix::identity(m1, m1);
    qr.q_tr_mul(&mut qt);
    Ok(qt.rows(m2, m1 - m2).transpose())
}

/// Spectral condition numbers from the SVD.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionReport {
    pub hessian: f64,
    /// `N^T H N` with `N` from [`nullspace_basis`].
    pub projected_hessian: f64,
    /// `B^T B`
    pub gram: f64,
}

fn cond(m: DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 1.0;
    }
    let sv: DVector<f64> = m.singular_values();
    let (hi, lo) = (sv.max(), sv.min());
    if lo == 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

pub fn condition_report(h: &HessianApprox, b: &CscMatrix) -> Result<ConditionReport> {
    let n = nullspace_basis(b)?;
    let hd = h.to_dense();
    let projected = n.transpose() * &hd * &n;
    Ok(ConditionReport {
        hessian: cond(hd),
        projected_hessian: cond(projected),
        gram: cond(b.gram()),
    })
}
