use nalgebra::{DMatrix, DVector};

use super::integrator::integrate;
use super::{IntegratorConfig, OdeSystem};
use crate::{Error, Result};

/// End point of one shooting segment and its first derivatives.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowResult {
    /// `Phi(t, x0)`
    pub end_state: DVector<f64>,
    /// `S(t, x0) = dPhi/dx0`
    pub sensitivity: DMatrix<f64>,
    /// `dPhi/dt = f(t, Phi(t, x0))`
    pub end_derivative: DVector<f64>,
}

fn check_start(system: &OdeSystem, x0: &DVector<f64>) -> Result<()> {
    if x0.len() != system.dim() {
        return Err(Error::DimensionMismatch {
            what: "initial state",
            expected: system.dim(),
            found: x0.len(),
        });
    }
    Ok(())
}

/// `Phi(duration, x0)`, starting at time zero. Negative durations integrate
/// backward in time.
pub fn flow(
    system: &OdeSystem,
    x0: &DVector<f64>,
    duration: f64,
    cfg: &IntegratorConfig,
) -> Result<DVector<f64>> {
    check_start(system, x0)?;
    let end = integrate(
        |t, y, out| system.rhs_into(t, y, out),
        0.0,
        x0.as_slice(),
        duration,
        cfg,
    )?;
    Ok(DVector::from_vec(end))
}

/// Integrates the state together with the variational equations
/// `dS/dt = (df/dx)(t, x(t)) S`, `S(0) = I`, as one system of dimension
/// `n + n^2`. The sensitivity block takes part in step-size control.
pub fn flow_with_sensitivity(
    system: &OdeSystem,
    x0: &DVector<f64>,
    duration: f64,
    cfg: &IntegratorConfig,
) -> Result<FlowResult> {
    check_start(system, x0)?;
    let n = system.dim();
    let mut y0 = Vec::with_capacity(n + n * n);
    y0.extend_from_slice(x0.as_slice());
    y0.extend_from_slice(DMatrix::<f64>::identity(n, n).as_slice());

    let mut jac = DMatrix::zeros(n, n);
    let end = integrate(
        |t, y, out| {
            let (x, s) = y.split_at(n);
            let (dx, ds) = out.split_at_mut(n);
            system.rhs_into(t, x, dx);
            system.jacobian_into(t, x, &mut jac);
            // Column-major: ds[:, j] = J * s[:, j]
            for j in 0..n {
                let col = &s[j * n..(j + 1) * n];
                let dcol = &mut ds[j * n..(j + 1) * n];
                for (i, d) in dcol.iter_mut().enumerate() {
                    let mut acc = 0.0;
                    for (k, c) in col.iter().enumerate() {
                        acc += jac[(i, k)] * c;
                    }
                    *d = acc;
                }
            }
        },
        0.0,
        &y0,
        duration,
        cfg,
    )?;

    let end_state = DVector::from_column_slice(&end[..n]);
    let sensitivity = DMatrix::from_column_slice(n, n, &end[n..]);
    let end_derivative = system.rhs(duration, &end_state);
    Ok(FlowResult {
        end_state,
        sensitivity,
        end_derivative,
    })
}
