//! Falsification of ODE systems by multiple shooting and SQP.
//!
//! Given dynamics `dx/dt = f(t, x)` and two ellipsoids `Init` and `Unsafe`,
//! the solver looks for an *error trajectory*: a solution starting in `Init`
//! that reaches `Unsafe`. The trajectory is split into `N` segments, each
//! parameterized by its start state and its duration, and the resulting
//! constrained minimization problem is solved with a line-search SQP method.
//!
//! Module map:
//!
//! - [`dynamics`]: ODE systems, the adaptive Runge-Kutta integrator and the
//!   variational (sensitivity) equations.
//! - [`formulation`]: shooting vector, ellipsoids, objectives, regularizers,
//!   constraints and their analytic derivatives.
//! - [`hessian`]: dense, block-diagonal and banded BFGS approximations.
//! - [`kkt`]: saddle-point systems, projected preconditioned CG and a dense
//!   direct solver.
//! - [`sqp`]: the SQP driver with merit-function line search.
//! - [`bench`]: instance generation, verification by re-simulation and
//!   result tables.

pub mod bench;
pub mod dynamics;
mod error;
pub mod formulation;
pub mod hessian;
pub mod kkt;
pub mod sparse;
pub mod sqp;

pub use error::{Error, Result};

pub use dynamics::{FlowResult, IntegratorConfig, OdeSystem};
pub use formulation::{
    ConstraintKind, Ellipsoid, Formulation, Multipliers, Objective, ProblemInstance, Regularizer,
    Segment, SegmentFlows, ShootingVector,
};
pub use hessian::{HessianApprox, HessianKind};
pub use kkt::{KktMethod, KktSolution, SaddleSystem};
pub use sparse::CscMatrix;
