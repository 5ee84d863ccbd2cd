//! The saddle-point system of one SQP iteration
//!
//! ```text
//! [ H    B ] [ d_x ]   [ -grad L ]
//! [ B^T  0 ] [ d_l ] = [ -c      ]
//! ```
//!
//! and its solvers.

mod band;
mod direct;
mod nullspace;
mod ppcg;

use std::fmt;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

pub use direct::{solve_direct, solve_min_norm};
pub use nullspace::{condition_report, nullspace_basis, ConditionReport};
pub use ppcg::{solve_ppcg, PpcgOptions};

use crate::hessian::HessianApprox;
use crate::sparse::CscMatrix;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KktMethod {
    #[default]
    Ppcg,
    Direct,
}

impl fmt::Display for KktMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            KktMethod::Ppcg => "ppcg",
            KktMethod::Direct => "direct",
        })
    }
}

impl FromStr for KktMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ppcg" => Ok(KktMethod::Ppcg),
            "direct" => Ok(KktMethod::Direct),
            other => Err(Error::InvalidInput(format!(
                "unknown KKT method {other:?}; expected ppcg or direct"
            ))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SaddleSystem {
    pub hess: HessianApprox,
    pub jac: CscMatrix,
    pub rhs_top: DVector<f64>,
    pub rhs_bottom: DVector<f64>,
}

impl SaddleSystem {
    pub fn new(
        hess: HessianApprox,
        jac: CscMatrix,
        rhs_top: DVector<f64>,
        rhs_bottom: DVector<f64>,
    ) -> Result<Self> {
        let m1 = hess.dim();
        for (what, expected, found) in [
            ("Jacobian rows", m1, jac.nrows()),
            ("upper right-hand side", m1, rhs_top.len()),
            ("lower right-hand side", jac.ncols(), rhs_bottom.len()),
        ] {
            if expected != found {
                return Err(Error::DimensionMismatch {
                    what,
                    expected,
                    found,
                });
            }
        }
        Ok(Self {
            hess,
            jac,
            rhs_top,
            rhs_bottom,
        })
    }

    /// Number of primal unknowns.
    pub fn m1(&self) -> usize {
        self.rhs_top.len()
    }

    /// Number of constraints.
    pub fn m2(&self) -> usize {
        self.rhs_bottom.len()
    }

    pub fn rhs_norm(&self) -> f64 {
        (self.rhs_top.norm_squared() + self.rhs_bottom.norm_squared()).sqrt()
    }

    /// `(top, bottom)` residual blocks of a candidate solution.
    pub fn residual_blocks(
        &self,
        d_x: &DVector<f64>,
        d_lambda: &DVector<f64>,
    ) -> (DVector<f64>, DVector<f64>) {
        let top = self.hess.matvec(d_x) + self.jac.mul_vec(d_lambda) - &self.rhs_top;
        let bottom = self.jac.tr_mul_vec(d_x) - &self.rhs_bottom;
        (top, bottom)
    }

    /// Euclidean norm of the full residual.
    pub fn residual_norm(&self, d_x: &DVector<f64>, d_lambda: &DVector<f64>) -> f64 {
        let (top, bottom) = self.residual_blocks(d_x, d_lambda);
        (top.norm_squared() + bottom.norm_squared()).sqrt()
    }

    pub fn solve(&self, method: KktMethod) -> Result<KktSolution> {
        match method {
            KktMethod::Direct => solve_direct(self),
            KktMethod::Ppcg => solve_ppcg(self, &PpcgOptions::for_system(self)),
        }
    }

    /// Writes `hessian.txt`, `jacobian.txt` and `rhs.txt` into `dir`, one
    /// `row col value` line per stored entry. The right-hand side is the
    /// stacked `[top; bottom]` vector as a single column.
    pub fn dump_triplets(&self, dir: &Path) -> io::Result<()> {
        std::fs::create_dir_all(dir)?;
        let mut h = BufWriter::new(File::create(dir.join("hessian.txt"))?);
        let dense = self.hess.to_dense();
        for j in 0..dense.ncols() {
            for i in 0..dense.nrows() {
                let v = dense[(i, j)];
                if v != 0.0 {
                    writeln!(h, "{i} {j} {v:.16e}")?;
                }
            }
        }
        h.flush()?;
        let mut b = BufWriter::new(File::create(dir.join("jacobian.txt"))?);
        self.jac.write_triplets(&mut b)?;
        b.flush()?;
        let mut r = BufWriter::new(File::create(dir.join("rhs.txt"))?);
        for (i, v) in self.rhs_top.iter().chain(self.rhs_bottom.iter()).enumerate() {
            writeln!(r, "{i} 0 {v:.16e}")?;
        }
        r.flush()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KktSolution {
    pub d_x: DVector<f64>,
    pub d_lambda: DVector<f64>,
    /// Norm of the full residual, recomputed from the returned solution.
    pub residual_norm: f64,
    pub cg_iterations: usize,
    /// `||B^T x_k - rhs_bottom||` of every PPCG iterate (empty for direct
    /// solves).
    pub constraint_residuals: Vec<f64>,
    /// Whether PPCG reached its tolerance; always true for direct solves.
    pub converged: bool,
}

impl KktSolution {
    pub(crate) fn new(
        sys: &SaddleSystem,
        d_x: DVector<f64>,
        d_lambda: DVector<f64>,
        cg_iterations: usize,
        constraint_residuals: Vec<f64>,
        converged: bool,
    ) -> Self {
        let residual_norm = sys.residual_norm(&d_x, &d_lambda);
        Self {
            d_x,
            d_lambda,
            residual_norm,
            cg_iterations,
            constraint_residuals,
            converged,
        }
    }
}
