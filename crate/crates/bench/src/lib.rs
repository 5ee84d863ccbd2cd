//! Fixtures shared by the criterion benches.

use falsify_core::bench::{generate_instance, initial_guess, SystemKind};
use falsify_core::sqp::{Point, SqpConfig};
use falsify_core::{Formulation, HessianApprox, HessianKind, ProblemInstance, SaddleSystem, ShootingVector};

/// Instance and perturbed initial guess used by the benchmark tables.
pub fn setup(system: SystemKind, n: usize, segments: usize) -> (ProblemInstance, ShootingVector) {
    let cfg = SqpConfig::default().integrator;
    let sys = system.build(n).expect("valid dimension");
    let instance = generate_instance(sys, 5.0, 0.25, segments, &cfg).expect("instance");
    let x = initial_guess(&instance, 5.0, 0.5, &cfg).expect("initial guess");
    (instance, x)
}

/// The first saddle-point system an SQP run would solve.
pub fn first_kkt_system(
    formulation: &Formulation,
    instance: &ProblemInstance,
    x: ShootingVector,
    hessian: HessianKind,
) -> SaddleSystem {
    let cfg = SqpConfig::default().integrator;
    let p = Point::evaluate(formulation, instance, x, &cfg).expect("initial guess integrates");
    let h = HessianApprox::identity(hessian, instance.dim(), instance.n_segments);
    SaddleSystem::new(h, p.jacobian, -p.objective_gradient, -p.constraints).expect("consistent shapes")
}
