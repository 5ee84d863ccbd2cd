use nalgebra::DVector;

use super::{
    constraint_jacobian, objective_gradient, Formulation, Multipliers, ProblemInstance,
    SegmentFlows, ShootingVector,
};
use crate::{Error, Result};

/// `grad_X L(X, lambda) = grad F(X) + B lambda`.
pub fn lagrangian_gradient(
    formulation: &Formulation,
    instance: &ProblemInstance,
    x: &ShootingVector,
    lambda: &Multipliers,
    flows: &SegmentFlows,
) -> Result<DVector<f64>> {
    let kind = formulation.constraints();
    let expected = kind.dim(x.dim(), x.len());
    if lambda.kind() != kind || lambda.len() != expected {
        return Err(Error::DimensionMismatch {
            what: "multipliers",
            expected,
            found: lambda.len(),
        });
    }
    let mut g = objective_gradient(formulation, instance, x, flows);
    if !lambda.is_empty() {
        let b = constraint_jacobian(kind, instance, x, flows);
        g += b.mul_vec(lambda.as_flat());
    }
    Ok(g)
}
