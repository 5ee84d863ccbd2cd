use nalgebra::DVector;

use super::objective::matching_residuals;
use super::{ConstraintKind, ProblemInstance, SegmentFlows, ShootingVector};
use crate::sparse::{CscBuilder, CscMatrix};

fn init_boundary(instance: &ProblemInstance, x: &ShootingVector) -> f64 {
    0.5 * (instance.init.norm_squared(&x.segments()[0].start) - 1.0)
}

fn unsafe_boundary(instance: &ProblemInstance, flows: &SegmentFlows) -> f64 {
    0.5 * (instance.unsafe_set.norm_squared(&flows.last().end_state) - 1.0)
}

/// Constraint vector `c(X)`. Row order follows [`super::Multipliers`]:
/// boundary of `Init` first (C2, C3), then the matching conditions (C1, C2),
/// then boundary of `Unsafe` (C2, C3).
pub fn constraint_value(
    kind: ConstraintKind,
    instance: &ProblemInstance,
    x: &ShootingVector,
    flows: &SegmentFlows,
) -> DVector<f64> {
    let mut out = Vec::with_capacity(kind.dim(x.dim(), x.len()));
    if kind.has_boundary() {
        out.push(init_boundary(instance, x));
    }
    if kind.has_matching() {
        for r in matching_residuals(x, flows) {
            out.extend(r.iter());
        }
    }
    if kind.has_boundary() {
        out.push(unsafe_boundary(instance, flows));
    }
    DVector::from_vec(out)
}

/// Transposed constraint Jacobian `B = [grad c_1, ..., grad c_m]` with
/// `N (n + 1)` rows and one column per constraint.
///
/// Matching column `(i, j)` holds `-S_i^T e_j` and `-f_i^T e_j` in the rows
/// of segment `i` and `e_j` in the state rows of segment `i + 1`. The `Init`
/// column holds `E_I (x0^1 - c_I)`; the `Unsafe` column holds
/// `S_N^T E_U (Phi_N - c_U)` and `f_N^T E_U (Phi_N - c_U)`.
pub fn constraint_jacobian(
    kind: ConstraintKind,
    instance: &ProblemInstance,
    x: &ShootingVector,
    flows: &SegmentFlows,
) -> CscMatrix {
    let n = x.dim();
    let segments = x.len();
    let mut b = CscBuilder::new(x.packed_len());

    if kind.has_boundary() {
        let w = instance.init.scaled_offset(&x.segments()[0].start);
        for (k, v) in w.iter().enumerate() {
            b.push(k, *v);
        }
        b.finish_column();
    }
    if kind.has_matching() {
        for i in 0..segments - 1 {
            let f = flows.get(i);
            let off = i * (n + 1);
            for j in 0..n {
                for k in 0..n {
                    b.push(off + k, -f.sensitivity[(j, k)]);
                }
                b.push(off + n, -f.end_derivative[j]);
                b.push(off + n + 1 + j, 1.0);
                b.finish_column();
            }
        }
    }
    if kind.has_boundary() {
        let end = flows.last();
        let w = instance.unsafe_set.scaled_offset(&end.end_state);
        let state_part = end.sensitivity.tr_mul(&w);
        let off = (segments - 1) * (n + 1);
        for (k, v) in state_part.iter().enumerate() {
            b.push(off + k, *v);
        }
        b.push(off + n, end.end_derivative.dot(&w));
        b.finish_column();
    }
    b.build()
}
