use nalgebra::DVector;

use super::merit::{backtrack, LineSearch, Merit};
use super::point::Point;
use super::{IterationRecord, RunReport, SqpConfig, Termination};
use crate::formulation::{Formulation, ProblemInstance, ShootingVector};
use crate::hessian::HessianApprox;
use crate::kkt::{solve_direct, solve_min_norm, solve_ppcg, KktMethod, KktSolution, PpcgOptions, SaddleSystem};
use crate::{Error, Result};

/// Runs SQP from `x_init` with `lambda = 0` and an identity Hessian.
pub fn run(
    formulation: &Formulation,
    instance: &ProblemInstance,
    x_init: ShootingVector,
    cfg: &SqpConfig,
) -> Result<RunReport> {
    run_observed(formulation, instance, x_init, cfg, &mut |_, _| {})
}

struct Step {
    solution: KktSolution,
    solver: &'static str,
    alpha0: f64,
    fallback: bool,
}

/// PPCG, then the dense solver, then a minimum-norm solve with the first
/// trial step halved.
fn solve_step(sys: &SaddleSystem, method: KktMethod) -> Option<Step> {
    if method == KktMethod::Ppcg {
        match solve_ppcg(sys, &PpcgOptions::for_system(sys)) {
            Ok(solution) if solution.converged => {
                return Some(Step {
                    solution,
                    solver: "ppcg",
                    alpha0: 1.0,
                    fallback: false,
                })
            }
            Ok(s) => log::debug!("PPCG stopped after {} iterations unconverged", s.cg_iterations),
            Err(e) => log::debug!("PPCG failed: {e}"),
        }
    }
    let fallback = method == KktMethod::Ppcg;
    match solve_direct(sys) {
        Ok(solution) => {
            return Some(Step {
                solution,
                solver: "direct",
                alpha0: 1.0,
                fallback,
            })
        }
        Err(e) => log::debug!("direct solve failed: {e}"),
    }
    match solve_min_norm(sys) {
        Ok(solution) => Some(Step {
            solution,
            solver: "min-norm",
            alpha0: 0.5,
            fallback: true,
        }),
        Err(e) => {
            log::warn!("no usable KKT solution: {e}");
            None
        }
    }
}

/// Like [`run`], calling `observer` with every saddle-point system and the
/// solution used for the step.
pub fn run_observed(
    formulation: &Formulation,
    instance: &ProblemInstance,
    x_init: ShootingVector,
    cfg: &SqpConfig,
    observer: &mut dyn FnMut(&SaddleSystem, &KktSolution),
) -> Result<RunReport> {
    cfg.validate()?;
    if x_init.dim() != instance.dim() || x_init.len() != instance.n_segments {
        return Err(Error::DimensionMismatch {
            what: "initial shooting vector",
            expected: instance.packed_len(),
            found: x_init.packed_len(),
        });
    }
    let n = instance.dim();
    let segments = instance.n_segments;
    let m2 = formulation.constraints().dim(n, segments);
    let merit = Merit {
        formulation,
        instance,
        integrator: &cfg.integrator,
        omega: cfg.omega,
    };

    let mut point = match Point::evaluate(formulation, instance, x_init.clone(), &cfg.integrator) {
        Ok(p) => p,
        Err(e) => {
            return Ok(RunReport {
                nit: 0,
                termination: Termination::IntegrationFailure,
                final_x: x_init,
                final_lambda: vec![0.0; m2],
                final_objective: f64::NAN,
                final_constraint_norm: f64::NAN,
                final_gradient_norm: f64::NAN,
                hessian_skips: 0,
                kkt_fallbacks: 0,
                failure: Some(e.to_string()),
                trace: Vec::new(),
            })
        }
    };
    let mut lambda = DVector::zeros(m2);
    let mut hess = HessianApprox::identity(cfg.hessian, n, segments);
    let mut trace = Vec::new();
    let mut fallbacks = 0;
    let mut iter = 0;

    let termination = loop {
        let grad_l = point.lagrangian_gradient(&lambda);
        let c_norm = point.constraints.norm();
        if grad_l.norm() < cfg.eps1 && c_norm < cfg.eps2 {
            break Termination::Converged;
        }
        if iter >= cfg.max_iter {
            break Termination::MaxIterations;
        }

        let sys = SaddleSystem::new(
            hess.clone(),
            point.jacobian.clone(),
            -&grad_l,
            -&point.constraints,
        )?;
        let Some(step) = solve_step(&sys, cfg.kkt) else {
            break Termination::StepTooSmall;
        };
        observer(&sys, &step.solution);
        if step.fallback {
            fallbacks += 1;
        }
        let d_x = &step.solution.d_x;
        let d_lambda = &step.solution.d_lambda;
        if d_x.iter().chain(d_lambda.iter()).any(|v| !v.is_finite()) {
            log::warn!("non-finite KKT solution at iteration {iter}");
            break Termination::StepTooSmall;
        }

        let lambda_plus = &lambda + d_lambda;
        let m0 = merit.at_point(&point, &lambda_plus);
        let slope = merit.slope_at_point(&point, &lambda_plus, d_x);
        let search = backtrack(m0, slope, step.alpha0, cfg, |alpha| {
            merit.along(&point.x, &lambda_plus, d_x, alpha)
        });
        let (alpha, m_alpha, next) = match search {
            LineSearch::Accepted {
                alpha,
                merit,
                value,
            } => (alpha, merit, value),
            LineSearch::StepTooSmall { alpha } => {
                log::debug!("line search failed at iteration {iter} (slope {slope:e}, alpha {alpha:e})");
                break Termination::StepTooSmall;
            }
        };

        let lambda_next = &lambda + d_lambda * alpha;
        let s = d_x * alpha;
        let y = next.lagrangian_gradient(&lambda_next) - point.lagrangian_gradient(&lambda_next);
        hess.update(&s, &y);

        trace.push(IterationRecord {
            iter,
            objective: point.objective,
            constraint_norm: c_norm,
            gradient_norm: grad_l.norm(),
            alpha,
            merit: m_alpha,
            merit0: m0,
            merit_slope: slope,
            cg_iterations: step.solution.cg_iterations,
            solver: step.solver.to_string(),
        });
        log::debug!(
            "iter {iter}: F = {:.6e}, |c| = {c_norm:.3e}, |grad L| = {:.3e}, alpha = {alpha:.3e}",
            point.objective,
            grad_l.norm()
        );
        point = next;
        lambda = lambda_next;
        iter += 1;
    };

    Ok(RunReport {
        nit: iter,
        termination,
        final_lambda: lambda.iter().copied().collect(),
        final_objective: point.objective,
        final_constraint_norm: point.constraints.norm(),
        final_gradient_norm: point.lagrangian_gradient(&lambda).norm(),
        hessian_skips: hess.skipped(),
        kkt_fallbacks: fallbacks,
        failure: None,
        trace,
        final_x: point.x,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formulation::fixtures::*;
    use crate::formulation::Segment;
    use crate::hessian::HessianKind;

    fn shifted_guess(inst: &ProblemInstance, segments: usize) -> ShootingVector {
        let n = inst.dim();
        let h = 5.0 / segments as f64;
        let durations = vec![h; segments];
        let exact = exact_split(inst, inst.init.center(), &durations);
        let u = DVector::from_fn(n, |j, _| if j % 2 == 0 { -0.5 } else { 0.5 });
        ShootingVector::new(
            exact
                .segments()
                .iter()
                .map(|s| Segment {
                    start: &s.start + &u,
                    duration: s.duration,
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn max_iter_zero_returns_start() {
        let inst = benchmark2_instance(3);
        let f = Formulation::equation(8).unwrap();
        let x = shifted_guess(&inst, 3);
        let cfg = SqpConfig {
            max_iter: 0,
            ..Default::default()
        };
        let rep = run(&f, &inst, x.clone(), &cfg).unwrap();
        assert_eq!(rep.termination, Termination::MaxIterations);
        assert_eq!(rep.nit, 0);
        assert_eq!(rep.final_x, x);
    }

    #[test]
    fn rotation_converges_with_decreasing_merit() {
        let inst = rotation_instance(4, 5);
        let f = Formulation::equation(8).unwrap();
        let cfg = SqpConfig::default();
        let rep = run(&f, &inst, shifted_guess(&inst, 5), &cfg).unwrap();
        assert_eq!(rep.termination, Termination::Converged, "{:?}", rep.trace.last());
        assert!(rep.final_constraint_norm < cfg.eps2);
        assert!(rep.final_gradient_norm < cfg.eps1);
        for r in &rep.trace {
            assert!(r.satisfies_decrease(cfg.delta), "{r:?}");
        }
    }

    #[test]
    fn deterministic_traces() {
        let inst = benchmark2_instance(5);
        let f = Formulation::equation(9).unwrap();
        let cfg = SqpConfig {
            max_iter: 15,
            hessian: HessianKind::Full,
            ..Default::default()
        };
        let a = run(&f, &inst, shifted_guess(&inst, 5), &cfg).unwrap();
        let b = run(&f, &inst, shifted_guess(&inst, 5), &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn unconstrained_has_no_multipliers() {
        let inst = benchmark2_instance(4);
        let f = Formulation::equation(13).unwrap();
        let cfg = SqpConfig {
            max_iter: 5,
            ..Default::default()
        };
        let mut sizes = Vec::new();
        let rep = run_observed(&f, &inst, shifted_guess(&inst, 4), &cfg, &mut |sys, _| {
            sizes.push(sys.m2())
        })
        .unwrap();
        assert!(rep.final_lambda.is_empty());
        assert!(!sizes.is_empty());
        assert!(sizes.iter().all(|&m| m == 0));
    }

    #[test]
    fn exact_solution_stops_immediately() {
        // Rotation: a start at unit E-distance from c_I maps to unit
        // distance from c_U, so an exact split is feasible for eq8.
        let inst = rotation_instance(2, 4);
        let f = Formulation::equation(8).unwrap();
        let start = inst.init.center() + DVector::from_vec(vec![0.25, 0.0]);
        let x = exact_split(&inst, &start, &[1.25; 4]);
        let cfg = SqpConfig::default();
        let rep = run(&f, &inst, x, &cfg).unwrap();
        assert_eq!(rep.termination, Termination::Converged, "{:?}", rep.trace);
        assert!(rep.nit <= 2, "nit = {}", rep.nit);
    }

    #[test]
    fn failing_start_is_reported() {
        let inst = benchmark2_instance(2);
        let f = Formulation::equation(8).unwrap();
        let cfg = SqpConfig {
            integrator: crate::dynamics::IntegratorConfig {
                max_steps: 1,
                ..Default::default()
            },
            ..Default::default()
        };
        let rep = run(&f, &inst, shifted_guess(&inst, 2), &cfg).unwrap();
        assert_eq!(rep.termination, Termination::IntegrationFailure);
        assert!(rep.failure.is_some());
    }
}
