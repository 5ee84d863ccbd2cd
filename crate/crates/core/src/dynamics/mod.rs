//! ODE right-hand sides, the flow map and its sensitivity.

mod flow;
mod integrator;
mod system;

pub use flow::{flow, flow_with_sensitivity, FlowResult};
pub use integrator::IntegratorConfig;
pub use system::{benchmark1, benchmark2, benchmark3, OdeSystem};
