use rayon::prelude::*;

use super::{ProblemInstance, ShootingVector};
use crate::dynamics::{flow_with_sensitivity, FlowResult, IntegratorConfig};
use crate::{Error, Result};

/// Flow, sensitivity and end derivative of every segment of one shooting
/// vector. Objective, constraints and derivatives at that vector all read
/// from the same integration.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentFlows {
    flows: Vec<FlowResult>,
}

impl SegmentFlows {
    pub fn from_results(flows: Vec<FlowResult>) -> Self {
        Self { flows }
    }

    pub fn len(&self) -> usize {
        self.flows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.flows.is_empty()
    }

    pub fn get(&self, i: usize) -> &FlowResult {
        &self.flows[i]
    }

    pub fn last(&self) -> &FlowResult {
        self.flows.last().expect("at least one segment")
    }

    pub fn iter(&self) -> impl Iterator<Item = &FlowResult> {
        self.flows.iter()
    }
}

/// Integrates every segment with its variational equations. Segments are
/// independent and run in parallel; on failure the lowest failing segment is
/// reported (1-based).
pub fn evaluate_segments(
    instance: &ProblemInstance,
    x: &ShootingVector,
    cfg: &IntegratorConfig,
) -> Result<SegmentFlows> {
    if x.dim() != instance.dim() {
        return Err(Error::DimensionMismatch {
            what: "shooting vector state",
            expected: instance.dim(),
            found: x.dim(),
        });
    }
    if x.len() != instance.n_segments {
        return Err(Error::DimensionMismatch {
            what: "number of segments",
            expected: instance.n_segments,
            found: x.len(),
        });
    }
    let results: Vec<Result<FlowResult>> = x
        .segments()
        .par_iter()
        .map(|s| flow_with_sensitivity(&instance.system, &s.start, s.duration, cfg))
        .collect();
    let mut flows = Vec::with_capacity(results.len());
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(f) => flows.push(f),
            Err(e) => {
                return Err(Error::SegmentIntegration {
                    segment: i + 1,
                    reason: e.to_string(),
                })
            }
        }
    }
    Ok(SegmentFlows { flows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{benchmark3, OdeSystem};
    use crate::formulation::{Ellipsoid, Segment};
    use nalgebra::{DMatrix, DVector};

    fn seg(x: &[f64], t: f64) -> Segment {
        Segment {
            start: DVector::from_column_slice(x),
            duration: t,
        }
    }

    fn instance(system: OdeSystem, segments: usize) -> ProblemInstance {
        let n = system.dim();
        ProblemInstance::new(
            system,
            Ellipsoid::ball(DVector::from_element(n, 1.0), 0.25).unwrap(),
            Ellipsoid::ball(DVector::from_element(n, -1.0), 0.25).unwrap(),
            segments,
        )
        .unwrap()
    }

    #[test]
    fn zero_durations() {
        let inst = instance(benchmark3(2).unwrap(), 3);
        let x = ShootingVector::new(vec![seg(&[1.0, 2.0], 0.0), seg(&[3.0, 4.0], 0.0), seg(&[5.0, 6.0], 0.0)])
            .unwrap();
        let flows = evaluate_segments(&inst, &x, &IntegratorConfig::default()).unwrap();
        for (s, f) in x.segments().iter().zip(flows.iter()) {
            assert_eq!(f.end_state, s.start);
            assert_eq!(f.sensitivity, DMatrix::identity(2, 2));
        }
    }

    #[test]
    fn rotations_in_closed_form() {
        let inst = instance(benchmark3(2).unwrap(), 3);
        let x = ShootingVector::new(vec![seg(&[1.0, 0.0], 0.5), seg(&[0.0, 2.0], 1.5), seg(&[-1.0, 1.0], -2.0)])
            .unwrap();
        let flows = evaluate_segments(&inst, &x, &IntegratorConfig::default()).unwrap();
        for (s, f) in x.segments().iter().zip(flows.iter()) {
            let (c, sn) = (s.duration.cos(), s.duration.sin());
            let expected = DVector::from_vec(vec![
                c * s.start[0] + sn * s.start[1],
                -sn * s.start[0] + c * s.start[1],
            ]);
            assert!((&f.end_state - expected).amax() < 1e-8);
        }
    }

    #[test]
    fn failing_segment_index() {
        // x' = x^2 blows up at t = 1/x0.
        let sys = OdeSystem::new(
            "riccati",
            1,
            |_, x, out| out[0] = x[0] * x[0],
            |_, x, out| out[(0, 0)] = 2.0 * x[0],
        )
        .unwrap();
        let inst = instance(sys, 3);
        let x = ShootingVector::new(vec![seg(&[0.1], 1.0), seg(&[1.0], 2.0), seg(&[0.1], 1.0)]).unwrap();
        let err = evaluate_segments(&inst, &x, &IntegratorConfig::default()).unwrap_err();
        assert!(matches!(err, Error::SegmentIntegration { segment: 2, .. }), "{err}");
    }
}
