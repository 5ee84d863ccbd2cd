use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::{Error, Result};

type RhsFn = dyn Fn(f64, &[f64], &mut [f64]) + Send + Sync;
type JacobianFn = dyn Fn(f64, &[f64], &mut DMatrix<f64>) + Send + Sync;

/// Dynamics `dx/dt = f(t, x)` together with the state Jacobian `df/dx`.
///
/// Cloning is cheap; the closures are shared.
#[derive(Clone)]
pub struct OdeSystem {
    dim: usize,
    rhs: Arc<RhsFn>,
    jacobian: Arc<JacobianFn>,
    label: String,
}

impl fmt::Debug for OdeSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OdeSystem")
            .field("label", &self.label)
            .field("dim", &self.dim)
            .finish()
    }
}

impl OdeSystem {
    /// `rhs(t, x, out)` writes `f(t, x)` into `out`; `jacobian(t, x, out)`
    /// writes the `n x n` matrix `df/dx` into `out`, overwriting every entry.
    pub fn new<R, J>(label: impl Into<String>, dim: usize, rhs: R, jacobian: J) -> Result<Self>
    where
        R: Fn(f64, &[f64], &mut [f64]) + Send + Sync + 'static,
        J: Fn(f64, &[f64], &mut DMatrix<f64>) + Send + Sync + 'static,
    {
        if dim == 0 {
            return Err(Error::InvalidInput("state dimension must be positive".into()));
        }
        Ok(Self {
            dim,
            rhs: Arc::new(rhs),
            jacobian: Arc::new(jacobian),
            label: label.into(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn rhs_into(&self, t: f64, x: &[f64], out: &mut [f64]) {
        (self.rhs)(t, x, out)
    }

    pub fn jacobian_into(&self, t: f64, x: &[f64], out: &mut DMatrix<f64>) {
        (self.jacobian)(t, x, out)
    }

    pub fn rhs(&self, t: f64, x: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.dim);
        self.rhs_into(t, x.as_slice(), out.as_mut_slice());
        out
    }

    pub fn state_jacobian(&self, t: f64, x: &DVector<f64>) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.dim, self.dim);
        self.jacobian_into(t, x.as_slice(), &mut out);
        out
    }
}

fn require_even(n: usize) -> Result<()> {
    if n == 0 || !n.is_multiple_of(2) {
        return Err(Error::InvalidInput(format!(
            "state dimension must be even and positive, got {n}"
        )));
    }
    Ok(())
}

/// Block-diagonal rotation `A = diag([[0, 1], [-1, 0]], ...)` applied to `x`.
fn rotate(x: &[f64], out: &mut [f64]) {
    for k in (0..x.len()).step_by(2) {
        out[k] = x[k + 1];
        out[k + 1] = -x[k];
    }
}

fn rotation_jacobian(n: usize, out: &mut DMatrix<f64>) {
    out.fill(0.0);
    for k in (0..n).step_by(2) {
        out[(k, k + 1)] = 1.0;
        out[(k + 1, k)] = -1.0;
    }
}

/// `dx/dt = A x + sin(x^r)` where `x^r` is `x` in reverse order.
pub fn benchmark1(n: usize) -> Result<OdeSystem> {
    require_even(n)?;
    OdeSystem::new(
        format!("benchmark1(n={n})"),
        n,
        move |_, x, out| {
            rotate(x, out);
            for i in 0..n {
                out[i] += x[n - 1 - i].sin();
            }
        },
        move |_, x, out| {
            rotation_jacobian(n, out);
            for i in 0..n {
                out[(i, n - 1 - i)] += x[n - 1 - i].cos();
            }
        },
    )
}

/// Three-state nonlinear system with an equilibrium at the origin.
pub fn benchmark2() -> Result<OdeSystem> {
    OdeSystem::new(
        "benchmark2",
        3,
        |_, x, out| {
            out[0] = -x[1] + x[0] * x[2];
            out[1] = x[0] + x[1] * x[2];
            out[2] = -x[2] - x[0] * x[0] - x[1] * x[1] + x[2] * x[2];
        },
        |_, x, out| {
            out[(0, 0)] = x[2];
            out[(0, 1)] = -1.0;
            out[(0, 2)] = x[0];
            out[(1, 0)] = 1.0;
            out[(1, 1)] = x[2];
            out[(1, 2)] = x[1];
            out[(2, 0)] = -2.0 * x[0];
            out[(2, 1)] = -2.0 * x[1];
            out[(2, 2)] = -1.0 + 2.0 * x[2];
        },
    )
}

/// Linear rotation `dx/dt = A x` with the block-rotation matrix of
/// [`benchmark1`].
pub fn benchmark3(n: usize) -> Result<OdeSystem> {
    require_even(n)?;
    OdeSystem::new(
        format!("benchmark3(n={n})"),
        n,
        |_, x, out| rotate(x, out),
        move |_, _, out| rotation_jacobian(n, out),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn fd_jacobian(sys: &OdeSystem, t: f64, x: &DVector<f64>) -> DMatrix<f64> {
        let n = sys.dim();
        let mut jac = DMatrix::zeros(n, n);
        for j in 0..n {
            let h = 1e-6 * (1.0 + x[j].abs());
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[j] += h;
            xm[j] -= h;
            let col = (sys.rhs(t, &xp) - sys.rhs(t, &xm)) / (2.0 * h);
            jac.set_column(j, &col);
        }
        jac
    }

    fn check_jacobian(sys: &OdeSystem, seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..20 {
            let t = rng.random_range(-3.0..3.0);
            let x = DVector::from_fn(sys.dim(), |_, _| rng.random_range(-2.0..2.0));
            let analytic = sys.state_jacobian(t, &x);
            let fd = fd_jacobian(sys, t, &x);
            let err = (&analytic - &fd).norm() / analytic.norm().max(1.0);
            assert!(err < 1e-6, "{}: jacobian error {err:e}", sys.label());
        }
    }

    #[test]
    fn benchmark1_two_dims() {
        let sys = benchmark1(2).unwrap();
        assert_eq!(sys.rhs(0.0, &DVector::from_vec(vec![0.0, 0.0])).as_slice(), &[0.0, 0.0]);
        let (a, b) = (0.3, -1.1);
        let f = sys.rhs(0.0, &DVector::from_vec(vec![a, b]));
        assert_eq!(f.as_slice(), &[b + b.sin(), -a + a.sin()]);
    }

    #[test]
    fn benchmark2_values() {
        let sys = benchmark2().unwrap();
        assert_eq!(sys.rhs(0.0, &DVector::zeros(3)).as_slice(), &[0.0, 0.0, 0.0]);
        let f = sys.rhs(0.0, &DVector::from_vec(vec![1.0, 1.0, 1.0]));
        assert_eq!(f.as_slice(), &[0.0, 2.0, -2.0]);
    }

    #[test]
    fn benchmark3_values() {
        let sys = benchmark3(2).unwrap();
        let f = sys.rhs(0.0, &DVector::from_vec(vec![1.0, 0.0]));
        assert_eq!(f.as_slice(), &[0.0, -1.0]);
    }

    #[test]
    fn odd_dimensions_rejected() {
        assert!(benchmark1(3).is_err());
        assert!(benchmark3(5).is_err());
        assert!(benchmark3(0).is_err());
    }

    #[test]
    fn jacobians_match_finite_differences() {
        check_jacobian(&benchmark1(2).unwrap(), 1);
        check_jacobian(&benchmark1(6).unwrap(), 2);
        check_jacobian(&benchmark2().unwrap(), 3);
        check_jacobian(&benchmark3(4).unwrap(), 4);
    }
}
