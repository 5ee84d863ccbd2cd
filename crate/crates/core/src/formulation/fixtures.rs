//! Shared helpers for unit tests.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{evaluate_segments, Ellipsoid, ProblemInstance, Segment, SegmentFlows, ShootingVector};
use crate::dynamics::{benchmark2, benchmark3, flow, IntegratorConfig};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn tight() -> IntegratorConfig {
    IntegratorConfig {
        rel_tol: 1e-13,
        abs_tol: 1e-13,
        max_steps: 1_000_000,
    }
}

pub fn instance_for(system: crate::dynamics::OdeSystem, segments: usize) -> ProblemInstance {
    let n = system.dim();
    let ci = DVector::from_element(n, 1.0);
    let cu = flow(&system, &ci, 5.0, &tight()).unwrap();
    ProblemInstance::new(
        system,
        Ellipsoid::ball(ci, 0.25).unwrap(),
        Ellipsoid::ball(cu, 0.25).unwrap(),
        segments,
    )
    .unwrap()
}

pub fn benchmark2_instance(segments: usize) -> ProblemInstance {
    instance_for(benchmark2().unwrap(), segments)
}

pub fn rotation_instance(n: usize, segments: usize) -> ProblemInstance {
    instance_for(benchmark3(n).unwrap(), segments)
}

pub fn flows_of(inst: &ProblemInstance, x: &ShootingVector) -> SegmentFlows {
    evaluate_segments(inst, x, &IntegratorConfig::default()).unwrap()
}

pub fn flows_of_tight(inst: &ProblemInstance, x: &ShootingVector) -> SegmentFlows {
    evaluate_segments(inst, x, &tight()).unwrap()
}

pub fn durations_only(t: &[f64]) -> ShootingVector {
    ShootingVector::new(
        t.iter()
            .map(|&d| Segment {
                start: DVector::zeros(1),
                duration: d,
            })
            .collect(),
    )
    .unwrap()
}

pub fn random_x(inst: &ProblemInstance, rng: &mut ChaCha8Rng) -> ShootingVector {
    let n = inst.dim();
    ShootingVector::new(
        (0..inst.n_segments)
            .map(|_| Segment {
                start: DVector::from_fn(n, |_, _| rng.random_range(-0.8..0.8)),
                duration: rng.random_range(0.2..1.2),
            })
            .collect(),
    )
    .unwrap()
}

/// Splits the trajectory from `start` into consecutive segments of the given
/// durations.
pub fn exact_split(inst: &ProblemInstance, start: &DVector<f64>, durations: &[f64]) -> ShootingVector {
    let mut state = start.clone();
    let mut segs = Vec::new();
    for &d in durations {
        segs.push(Segment {
            start: state.clone(),
            duration: d,
        });
        state = crate::dynamics::flow_with_sensitivity(&inst.system, &state, d, &IntegratorConfig::default())
            .unwrap()
            .end_state;
    }
    ShootingVector::new(segs).unwrap()
}

/// Central differences of a scalar function of the packed vector.
pub fn fd_gradient(x: &ShootingVector, f: impl Fn(&ShootingVector) -> f64) -> DVector<f64> {
    let flat = x.pack();
    DVector::from_fn(flat.len(), |k, _| {
        let h = 1e-6 * (1.0 + flat[k].abs());
        let mut p = flat.clone();
        let mut m = flat.clone();
        p[k] += h;
        m[k] -= h;
        let xp = ShootingVector::unpack(&p, x.dim(), x.len()).unwrap();
        let xm = ShootingVector::unpack(&m, x.dim(), x.len()).unwrap();
        (f(&xp) - f(&xm)) / (2.0 * h)
    })
}

/// Central differences of a vector function; column `k` is `d f / d X_k`.
pub fn fd_jacobian_t(x: &ShootingVector, f: impl Fn(&ShootingVector) -> DVector<f64>) -> DMatrix<f64> {
    let flat = x.pack();
    let m = f(x).len();
    let mut out = DMatrix::zeros(flat.len(), m);
    for k in 0..flat.len() {
        let h = 1e-6 * (1.0 + flat[k].abs());
        let mut p = flat.clone();
        let mut q = flat.clone();
        p[k] += h;
        q[k] -= h;
        let xp = ShootingVector::unpack(&p, x.dim(), x.len()).unwrap();
        let xm = ShootingVector::unpack(&q, x.dim(), x.len()).unwrap();
        let d = (f(&xp) - f(&xm)) / (2.0 * h);
        out.set_row(k, &d.transpose());
    }
    out
}
