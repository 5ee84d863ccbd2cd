//! Projected preconditioned conjugate gradients with the constraint
//! preconditioner `[[I, B], [B^T, 0]]`.
//!
//! Applying the preconditioner reduces to orthogonal projection onto the
//! null space of `B^T`, which needs solves with `B^T B`. That matrix is
//! banded for shooting Jacobians and is factored once per system.

use nalgebra::DVector;

use super::band::BandCholesky;
use super::{KktSolution, SaddleSystem};
use crate::sparse::CscMatrix;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PpcgOptions {
    /// Stop once the projected residual has dropped by this factor.
    pub tol: f64,
    pub max_iter: usize,
}

impl PpcgOptions {
    /// Relative tolerance `1e-10` and `2 m1` iterations.
    pub fn for_system(sys: &SaddleSystem) -> Self {
        Self {
            tol: 1e-10,
            max_iter: 2 * sys.m1(),
        }
    }
}

struct Projector<'a> {
    b: &'a CscMatrix,
    gram: Option<BandCholesky>,
}

impl<'a> Projector<'a> {
    fn new(b: &'a CscMatrix) -> Result<Self> {
        if b.ncols() == 0 {
            return Ok(Self { b, gram: None });
        }
        let gram = BandCholesky::factor(&b.gram()).ok_or(Error::PreconditionerSingular)?;
        Ok(Self { b, gram: Some(gram) })
    }

    /// Least-squares coefficients `v` minimizing `||r - B v||`, with one
    /// refinement sweep.
    fn coefficients(&self, r: &DVector<f64>) -> DVector<f64> {
        let Some(gram) = &self.gram else {
            return DVector::zeros(0);
        };
        let mut v = gram.solve(&self.b.tr_mul_vec(r));
        let rest = r - self.b.mul_vec(&v);
        v += gram.solve(&self.b.tr_mul_vec(&rest));
        v
    }

    /// `r - B (B^T B)^{-1} B^T r`
    fn project(&self, r: &DVector<f64>) -> DVector<f64> {
        if self.gram.is_none() {
            return r.clone();
        }
        r - self.b.mul_vec(&self.coefficients(r))
    }

    /// Minimum-norm `x` with `B^T x = c`.
    fn particular(&self, c: &DVector<f64>) -> DVector<f64> {
        let Some(gram) = &self.gram else {
            return DVector::zeros(self.b.nrows());
        };
        let mut x = self.b.mul_vec(&gram.solve(c));
        let miss = c - self.b.tr_mul_vec(&x);
        x += self.b.mul_vec(&gram.solve(&miss));
        x
    }
}

pub fn solve_ppcg(sys: &SaddleSystem, opts: &PpcgOptions) -> Result<KktSolution> {
    let b = &sys.jac;
    let proj = Projector::new(b)?;
    let bottom_residual = |x: &DVector<f64>| (b.tr_mul_vec(x) - &sys.rhs_bottom).norm();

    let mut x = proj.particular(&sys.rhs_bottom);
    let mut residuals = vec![bottom_residual(&x)];
    // r is the gradient of 0.5 x^T H x - rhs_top^T x; replacing it by its
    // projection each step keeps rounding from accumulating in range(B).
    let mut r = proj.project(&(sys.hess.matvec(&x) - &sys.rhs_top));
    let mut g = r.clone();
    let mut rg = r.dot(&g);
    let stop = opts.tol * rg.sqrt();
    let mut p = -&g;
    let mut iterations = 0;
    let mut converged = rg.sqrt() <= stop || rg == 0.0;

    while !converged && iterations < opts.max_iter {
        let hp = sys.hess.matvec(&p);
        let curvature = p.dot(&hp);
        if !(curvature > 0.0) {
            return Err(Error::Breakdown {
                iteration: iterations,
                curvature,
            });
        }
        let alpha = rg / curvature;
        x.axpy(alpha, &p, 1.0);
        iterations += 1;
        residuals.push(bottom_residual(&x));
        r.axpy(alpha, &hp, 1.0);
        g = proj.project(&r);
        r.copy_from(&g);
        let rg_new = r.dot(&g);
        converged = rg_new.sqrt() <= stop;
        let beta = rg_new / rg;
        rg = rg_new;
        p = &p * beta - &g;
    }

    let d_lambda = proj.coefficients(&(&sys.rhs_top - sys.hess.matvec(&x)));
    Ok(KktSolution::new(sys, x, d_lambda, iterations, residuals, converged))
}
