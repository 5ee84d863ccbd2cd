//! Closed-form Lagrangian gradients for the six regularized formulations
//! (eq8 .. eq13), written row block by row block.
//!
//! These do not go through the constraint Jacobian and serve as an
//! independent check of [`super::lagrangian_gradient`]. Segment `i` contributes
//! a state row block and a duration row:
//!
//! ```text
//! state_i    = incoming_i - S_i^T outgoing_i                   (i < N)
//! state_N    = incoming_N + lambda_U S_N^T E_U (Phi_N - c_U)
//! duration_i = reg_i - f_i^T outgoing_i                         (i < N)
//! duration_N = reg_N + lambda_U f_N^T E_U (Phi_N - c_U)
//! ```
//!
//! where `outgoing_i` is `lambda_i` for the constrained matching (eq8, eq9)
//! and the residual `x0^{i+1} - Phi(t_i, x0^i)` for the penalized matching
//! (eq10 .. eq13), and `incoming_i` is the previous block's `outgoing`, or the
//! `Init` term for the first segment. For eq9 and eq13 the boundary weights
//! are 1 (penalties instead of multipliers).

use nalgebra::DVector;

use super::{Formulation, Multipliers, ProblemInstance, SegmentFlows, ShootingVector};
use crate::{Error, Result};

#[derive(Clone, Copy)]
enum Coupling {
    Multiplier,
    Residual,
}

#[derive(Clone, Copy)]
enum TimeReg {
    Plain,
    Difference,
    Mean,
}

/// Returns `None` for formulations without a closed form here (eq5 .. eq7
/// and experimental combinations).
pub fn lagrangian_gradient(
    formulation: &Formulation,
    instance: &ProblemInstance,
    x: &ShootingVector,
    lambda: &Multipliers,
    flows: &SegmentFlows,
) -> Result<Option<DVector<f64>>> {
    let Some(eq) = formulation.equation_number() else {
        return Ok(None);
    };
    let (coupling, reg, boundary_from_multipliers) = match eq {
        8 => (Coupling::Multiplier, TimeReg::Plain, true),
        9 => (Coupling::Multiplier, TimeReg::Plain, false),
        10 => (Coupling::Residual, TimeReg::Plain, true),
        11 => (Coupling::Residual, TimeReg::Difference, true),
        12 => (Coupling::Residual, TimeReg::Mean, true),
        13 => (Coupling::Residual, TimeReg::Plain, false),
        _ => return Ok(None),
    };
    let expected = formulation.constraints().dim(x.dim(), x.len());
    if lambda.len() != expected {
        return Err(Error::DimensionMismatch {
            what: "multipliers",
            expected,
            found: lambda.len(),
        });
    }

    let n = x.dim();
    let big_n = x.len();
    let segs = x.segments();
    let t: Vec<f64> = x.durations().collect();
    let mean = t.iter().sum::<f64>() / big_n as f64;
    let (lambda_i, lambda_u) = if boundary_from_multipliers {
        lambda.boundary().expect("boundary multipliers")
    } else {
        (1.0, 1.0)
    };

    let outgoing = |i: usize| -> DVector<f64> {
        match coupling {
            Coupling::Multiplier => DVector::from_column_slice(lambda.matching(i)),
            Coupling::Residual => &segs[i + 1].start - &flows.get(i).end_state,
        }
    };
    let reg_row = |i: usize| -> f64 {
        match reg {
            TimeReg::Plain => t[i],
            TimeReg::Mean => t[i] - mean,
            TimeReg::Difference => {
                let left = if i > 0 { t[i] - t[i - 1] } else { 0.0 };
                let right = if i + 1 < big_n { t[i + 1] - t[i] } else { 0.0 };
                left - right
            }
        }
    };

    let mut g = DVector::zeros(x.packed_len());
    let mut incoming = lambda_i * instance.init.scaled_offset(&segs[0].start);
    for i in 0..big_n {
        let f = flows.get(i);
        let off = i * (n + 1);
        let (state, duration) = if i + 1 < big_n {
            let out = outgoing(i);
            let state = &incoming - f.sensitivity.transpose() * &out;
            let duration = reg_row(i) - f.end_derivative.dot(&out);
            incoming = out;
            (state, duration)
        } else {
            let w = instance.unsafe_set.scaled_offset(&f.end_state);
            let state = &incoming + lambda_u * f.sensitivity.transpose() * &w;
            let duration = reg_row(i) + lambda_u * f.end_derivative.dot(&w);
            (state, duration)
        };
        g.rows_mut(off, n).copy_from(&state);
        g[off + n] = duration;
    }
    Ok(Some(g))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formulation::fixtures::*;
    use crate::formulation::lagrangian_gradient as generic;
    use rand::Rng;

    #[test]
    fn agrees_with_generic_path() {
        let inst = benchmark2_instance(5);
        let mut r = rng(17);
        for eq in 8..=13u8 {
            let f = Formulation::equation(eq).unwrap();
            for _ in 0..5 {
                let x = random_x(&inst, &mut r);
                let flows = flows_of(&inst, &x);
                let kind = f.constraints();
                let lam = Multipliers::from_flat(
                    kind,
                    3,
                    5,
                    DVector::from_fn(kind.dim(3, 5), |_, _| r.random_range(-2.0..2.0)),
                )
                .unwrap();
                let a = generic(&f, &inst, &x, &lam, &flows).unwrap();
                let b = lagrangian_gradient(&f, &inst, &x, &lam, &flows).unwrap().unwrap();
                let err = (&a - &b).amax() / a.amax().max(1.0);
                assert!(err < 1e-12, "eq{eq}: {err:e}");
            }
        }
    }

    #[test]
    fn unsupported_formulations() {
        let inst = benchmark2_instance(2);
        let x = random_x(&inst, &mut rng(1));
        let flows = flows_of(&inst, &x);
        for eq in 5..=7u8 {
            let f = Formulation::equation(eq).unwrap();
            let lam = Multipliers::zeros(f.constraints(), 3, 2);
            assert!(lagrangian_gradient(&f, &inst, &x, &lam, &flows).unwrap().is_none());
        }
    }

    #[test]
    fn single_segment() {
        let inst = benchmark2_instance(1);
        let x = random_x(&inst, &mut rng(3));
        let flows = flows_of(&inst, &x);
        for eq in 8..=13u8 {
            let f = Formulation::equation(eq).unwrap();
            let lam = Multipliers::from_flat(
                f.constraints(),
                3,
                1,
                DVector::from_element(f.constraints().dim(3, 1), 0.7),
            )
            .unwrap();
            let a = generic(&f, &inst, &x, &lam, &flows).unwrap();
            let b = lagrangian_gradient(&f, &inst, &x, &lam, &flows).unwrap().unwrap();
            assert!((&a - &b).amax() < 1e-12 * a.amax().max(1.0), "eq{eq}");
        }
    }
}
