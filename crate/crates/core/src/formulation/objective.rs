use std::ops::{AddAssign, SubAssign};

use nalgebra::DVector;

use super::{Formulation, Objective, ProblemInstance, Regularizer, SegmentFlows, ShootingVector};

/// `x0^{i+1} - Phi(t_i, x0^i)` for `i = 0 .. N-2`.
pub(crate) fn matching_residuals(x: &ShootingVector, flows: &SegmentFlows) -> Vec<DVector<f64>> {
    x.segments()
        .windows(2)
        .zip(flows.iter())
        .map(|(pair, f)| &pair[1].start - &f.end_state)
        .collect()
}

fn boundary_penalty(instance: &ProblemInstance, x: &ShootingVector, flows: &SegmentFlows) -> f64 {
    0.5 * (instance.init.norm_squared(&x.segments()[0].start)
        + instance.unsafe_set.norm_squared(&flows.last().end_state))
}

fn matching_penalty(x: &ShootingVector, flows: &SegmentFlows) -> f64 {
    0.5 * matching_residuals(x, flows)
        .iter()
        .map(|r| r.norm_squared())
        .sum::<f64>()
}

pub fn regularizer_value(regularizer: Regularizer, x: &ShootingVector) -> f64 {
    let t: Vec<f64> = x.durations().collect();
    match regularizer {
        Regularizer::None => 0.0,
        Regularizer::R1 => 0.5 * t.iter().map(|v| v * v).sum::<f64>(),
        Regularizer::R2 => 0.5 * t.windows(2).map(|w| (w[1] - w[0]).powi(2)).sum::<f64>(),
        Regularizer::R3 => {
            let mean = t.iter().sum::<f64>() / t.len() as f64;
            0.5 * t.iter().map(|v| (v - mean).powi(2)).sum::<f64>()
        }
    }
}

/// Penalty objective plus regularizer at `x`.
pub fn objective_value(
    formulation: &Formulation,
    instance: &ProblemInstance,
    x: &ShootingVector,
    flows: &SegmentFlows,
) -> f64 {
    let penalty = match formulation.objective() {
        Objective::Zero => 0.0,
        Objective::F1 => boundary_penalty(instance, x, flows),
        Objective::F2 => matching_penalty(x, flows),
        Objective::F3 => boundary_penalty(instance, x, flows) + matching_penalty(x, flows),
    };
    penalty + regularizer_value(formulation.regularizer(), x)
}

fn add_boundary_gradient(
    g: &mut DVector<f64>,
    instance: &ProblemInstance,
    x: &ShootingVector,
    flows: &SegmentFlows,
) {
    let n = x.dim();
    let last = (x.len() - 1) * (n + 1);
    let init = instance.init.scaled_offset(&x.segments()[0].start);
    g.rows_mut(0, n).add_assign(&init);

    let end = flows.last();
    let w = instance.unsafe_set.scaled_offset(&end.end_state);
    let state_part = end.sensitivity.tr_mul(&w);
    g.rows_mut(last, n).add_assign(&state_part);
    g[last + n] += end.end_derivative.dot(&w);
}

fn add_matching_gradient(g: &mut DVector<f64>, x: &ShootingVector, flows: &SegmentFlows) {
    let n = x.dim();
    for (i, r) in matching_residuals(x, flows).iter().enumerate() {
        let f = flows.get(i);
        let off = i * (n + 1);
        let st = f.sensitivity.tr_mul(r);
        g.rows_mut(off, n).sub_assign(&st);
        g[off + n] -= f.end_derivative.dot(r);
        g.rows_mut(off + n + 1, n).add_assign(r);
    }
}

fn add_regularizer_gradient(g: &mut DVector<f64>, regularizer: Regularizer, x: &ShootingVector) {
    let n = x.dim();
    let slot = |i: usize| i * (n + 1) + n;
    let t: Vec<f64> = x.durations().collect();
    match regularizer {
        Regularizer::None => {}
        Regularizer::R1 => {
            for (i, ti) in t.iter().enumerate() {
                g[slot(i)] += ti;
            }
        }
        Regularizer::R2 => {
            for i in 0..t.len().saturating_sub(1) {
                let d = t[i + 1] - t[i];
                g[slot(i + 1)] += d;
                g[slot(i)] -= d;
            }
        }
        Regularizer::R3 => {
            let mean = t.iter().sum::<f64>() / t.len() as f64;
            for (i, ti) in t.iter().enumerate() {
                g[slot(i)] += ti - mean;
            }
        }
    }
}

/// Gradient of [`objective_value`] with respect to the packed vector.
pub fn objective_gradient(
    formulation: &Formulation,
    instance: &ProblemInstance,
    x: &ShootingVector,
    flows: &SegmentFlows,
) -> DVector<f64> {
    let mut g = DVector::zeros(x.packed_len());
    match formulation.objective() {
        Objective::Zero => {}
        Objective::F1 => add_boundary_gradient(&mut g, instance, x, flows),
        Objective::F2 => add_matching_gradient(&mut g, x, flows),
        Objective::F3 => {
            add_boundary_gradient(&mut g, instance, x, flows);
            add_matching_gradient(&mut g, x, flows);
        }
    }
    add_regularizer_gradient(&mut g, formulation.regularizer(), x);
    g
}
