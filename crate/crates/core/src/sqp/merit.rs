use nalgebra::DVector;

use super::point::Point;
use super::SqpConfig;
use crate::dynamics::IntegratorConfig;
use crate::formulation::{Formulation, ProblemInstance, ShootingVector};
use crate::sparse::CscMatrix;

/// `F + lambda_plus^T c + omega/2 ||c||^2` from precomputed values.
pub fn merit_value(objective: f64, constraints: &DVector<f64>, lambda_plus: &DVector<f64>, omega: f64) -> f64 {
    objective + lambda_plus.dot(constraints) + 0.5 * omega * constraints.norm_squared()
}

/// `m'(0) = d_x^T (grad F + B lambda_plus) + omega d_x^T B c`
pub fn merit_derivative_at_zero(
    objective_gradient: &DVector<f64>,
    jacobian: &CscMatrix,
    constraints: &DVector<f64>,
    lambda_plus: &DVector<f64>,
    d_x: &DVector<f64>,
    omega: f64,
) -> f64 {
    let grad = objective_gradient + jacobian.mul_vec(&(lambda_plus + constraints * omega));
    d_x.dot(&grad)
}

/// The merit function of one problem, evaluated along `X + alpha d_x` with
/// the full multiplier estimate `lambda + d_lambda`.
#[derive(Debug, Clone, Copy)]
pub struct Merit<'a> {
    pub formulation: &'a Formulation,
    pub instance: &'a ProblemInstance,
    pub integrator: &'a IntegratorConfig,
    pub omega: f64,
}

impl Merit<'_> {
    pub fn at_point(&self, p: &Point, lambda_plus: &DVector<f64>) -> f64 {
        merit_value(p.objective, &p.constraints, lambda_plus, self.omega)
    }

    pub fn slope_at_point(&self, p: &Point, lambda_plus: &DVector<f64>, d_x: &DVector<f64>) -> f64 {
        merit_derivative_at_zero(
            &p.objective_gradient,
            &p.jacobian,
            &p.constraints,
            lambda_plus,
            d_x,
            self.omega,
        )
    }

    /// `m(alpha)` together with the evaluated trial point. A trial point
    /// that cannot be integrated has merit `+inf`.
    pub fn along(
        &self,
        x: &ShootingVector,
        lambda_plus: &DVector<f64>,
        d_x: &DVector<f64>,
        alpha: f64,
    ) -> (f64, Option<Point>) {
        let trial = match x.step(d_x, alpha) {
            Ok(t) => t,
            Err(_) => return (f64::INFINITY, None),
        };
        match Point::evaluate(self.formulation, self.instance, trial, self.integrator) {
            Ok(p) => {
                let m = self.at_point(&p, lambda_plus);
                if m.is_finite() {
                    (m, Some(p))
                } else {
                    (f64::INFINITY, None)
                }
            }
            Err(e) => {
                log::debug!("trial step alpha = {alpha:e} rejected: {e}");
                (f64::INFINITY, None)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LineSearch<T> {
    Accepted { alpha: f64, merit: f64, value: T },
    /// Either `m'(0) >= 0` or the step fell below `eps3`.
    StepTooSmall { alpha: f64 },
}

/// Backtracks from `alpha0` by `cfg.backtrack_factor` until
/// `m(alpha) - m(0) <= delta alpha m'(0)`. `trial` returns `m(alpha)` and
/// whatever the caller wants to keep from the accepted trial.
pub fn backtrack<T>(
    m0: f64,
    slope: f64,
    alpha0: f64,
    cfg: &SqpConfig,
    mut trial: impl FnMut(f64) -> (f64, Option<T>),
) -> LineSearch<T> {
    if !(slope < 0.0) {
        return LineSearch::StepTooSmall { alpha: 0.0 };
    }
    let mut alpha = alpha0;
    while alpha >= cfg.eps3 {
        let (m, value) = trial(alpha);
        if let Some(value) = value {
            if m - m0 <= cfg.delta * alpha * slope {
                return LineSearch::Accepted {
                    alpha,
                    merit: m,
                    value,
                };
            }
        }
        alpha *= cfg.backtrack_factor;
    }
    LineSearch::StepTooSmall { alpha }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formulation::fixtures::*;
    use crate::sparse::CscBuilder;
    use rand::Rng;

    // Toy problem: F = 0.5 ||x||^2 on R^2, c = x1 - 1, from x = 0 along
    // d = (1, 0). By hand: m(alpha) = alpha^2/2 + mu (alpha - 1) + (alpha - 1)^2 / 2.
    fn toy_merit(alpha: f64, mu: f64) -> f64 {
        let x = DVector::from_vec(vec![alpha, 0.0]);
        let c = DVector::from_vec(vec![x[0] - 1.0]);
        merit_value(0.5 * x.norm_squared(), &c, &DVector::from_vec(vec![mu]), 1.0)
    }

    #[test]
    fn toy_quadratic_expansion() {
        for &(alpha, mu) in &[(0.0, 0.3), (0.5, -1.0), (1.0, 2.0)] {
            let expected = 0.5 * alpha * alpha + mu * (alpha - 1.0) + 0.5 * (alpha - 1.0) * (alpha - 1.0);
            assert!((toy_merit(alpha, mu) - expected).abs() < 1e-15);
        }
    }

    #[test]
    fn toy_derivative_and_full_step() {
        // The Newton step from 0 is d = (1, 0), d_lambda = -1.
        let mu = -1.0;
        let mut b = CscBuilder::new(2);
        b.push(0, 1.0);
        b.finish_column();
        let jac = b.build();
        let d = DVector::from_vec(vec![1.0, 0.0]);
        let slope = merit_derivative_at_zero(
            &DVector::zeros(2),
            &jac,
            &DVector::from_vec(vec![-1.0]),
            &DVector::from_vec(vec![mu]),
            &d,
            1.0,
        );
        // d/d alpha at 0 of alpha^2/2 + mu (alpha - 1) + (alpha - 1)^2/2
        assert!((slope - (mu - 1.0)).abs() < 1e-15);
        let cfg = SqpConfig::default();
        let m0 = toy_merit(0.0, mu);
        match backtrack(m0, slope, 1.0, &cfg, |a| (toy_merit(a, mu), Some(()))) {
            LineSearch::Accepted { alpha, merit, .. } => {
                assert_eq!(alpha, 1.0);
                assert!(merit - m0 <= cfg.delta * slope);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn ascent_direction_is_step_too_small() {
        let cfg = SqpConfig::default();
        let out = backtrack(0.0, 0.0, 1.0, &cfg, |_| -> (f64, Option<()>) { panic!("no trials") });
        assert_eq!(out, LineSearch::StepTooSmall { alpha: 0.0 });
    }

    #[test]
    fn rejected_trials_shrink_to_eps3() {
        let cfg = SqpConfig::default();
        let mut calls = 0;
        let out = backtrack(0.0, -1.0, 1.0, &cfg, |_| {
            calls += 1;
            (f64::INFINITY, None::<()>)
        });
        assert!(matches!(out, LineSearch::StepTooSmall { alpha } if alpha < cfg.eps3));
        assert_eq!(calls, 27);
    }

    #[test]
    fn accepted_steps_satisfy_decrease() {
        let cfg = SqpConfig::default();
        // m(alpha) = (alpha - 0.1)^2, slope -0.2 at zero.
        let m = |a: f64| (a - 0.1) * (a - 0.1);
        let LineSearch::Accepted { alpha, merit, .. } = backtrack(m(0.0), -0.2, 1.0, &cfg, |a| (m(a), Some(())))
        else {
            panic!("no step");
        };
        assert!(merit - m(0.0) <= cfg.delta * alpha * -0.2);
        assert!(alpha < 0.2);
    }

    #[test]
    fn slope_matches_finite_differences() {
        let inst = benchmark2_instance(5);
        let mut r = rng(31);
        for f in Formulation::all_named() {
            let x = random_x(&inst, &mut r);
            let p = Point::evaluate(&f, &inst, x.clone(), &tight()).unwrap();
            let m2 = f.constraints().dim(3, 5);
            let lam = DVector::from_fn(m2, |_, _| r.random_range(-1.0..1.0));
            let d = DVector::from_fn(x.packed_len(), |_, _| r.random_range(-1.0..1.0));
            let merit = Merit {
                formulation: &f,
                instance: &inst,
                integrator: &tight(),
                omega: 1.0,
            };
            let slope = merit.slope_at_point(&p, &lam, &d);
            let h = 1e-6;
            let fd = (merit.along(&x, &lam, &d, h).0 - merit.along(&x, &lam, &d, -h).0) / (2.0 * h);
            assert!((slope - fd).abs() <= 1e-5 * fd.abs().max(1e-3), "{f}: {slope} vs {fd}");
        }
    }

    #[test]
    fn zero_direction_has_zero_slope() {
        let inst = benchmark2_instance(3);
        let f = Formulation::equation(8).unwrap();
        let x = random_x(&inst, &mut rng(2));
        let p = Point::evaluate(&f, &inst, x, &crate::dynamics::IntegratorConfig::default()).unwrap();
        let lam = DVector::from_element(8, 0.5);
        let merit = Merit {
            formulation: &f,
            instance: &inst,
            integrator: &crate::dynamics::IntegratorConfig::default(),
            omega: 1.0,
        };
        assert_eq!(merit.slope_at_point(&p, &lam, &DVector::zeros(12)), 0.0);
        assert_eq!(merit.at_point(&p, &lam), merit.along(&p.x, &lam, &DVector::zeros(12), 0.0).0);
    }
}
