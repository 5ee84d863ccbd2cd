use nalgebra::DVector;

use crate::dynamics::IntegratorConfig;
use crate::formulation::{
    constraint_jacobian, constraint_value, evaluate_segments, objective_gradient, objective_value,
    Formulation, ProblemInstance, SegmentFlows, ShootingVector,
};
use crate::sparse::CscMatrix;
use crate::Result;

/// Everything the SQP iteration needs at one parameter vector, computed from
/// a single integration of every segment.
#[derive(Debug, Clone)]
pub struct Point {
    pub x: ShootingVector,
    pub flows: SegmentFlows,
    pub objective: f64,
    pub constraints: DVector<f64>,
    pub jacobian: CscMatrix,
    pub objective_gradient: DVector<f64>,
}

impl Point {
    pub fn evaluate(
        formulation: &Formulation,
        instance: &ProblemInstance,
        x: ShootingVector,
        cfg: &IntegratorConfig,
    ) -> Result<Self> {
        let flows = evaluate_segments(instance, &x, cfg)?;
        let kind = formulation.constraints();
        Ok(Self {
            objective: objective_value(formulation, instance, &x, &flows),
            constraints: constraint_value(kind, instance, &x, &flows),
            jacobian: constraint_jacobian(kind, instance, &x, &flows),
            objective_gradient: objective_gradient(formulation, instance, &x, &flows),
            flows,
            x,
        })
    }

    /// `grad F + B lambda`
    pub fn lagrangian_gradient(&self, lambda: &DVector<f64>) -> DVector<f64> {
        &self.objective_gradient + self.jacobian.mul_vec(lambda)
    }
}
