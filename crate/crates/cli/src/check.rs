//! Derivative and linear-algebra self-checks at the initial guess.

use falsify_core::dynamics::IntegratorConfig;
use falsify_core::formulation::{
    closed_form, constraint_jacobian, constraint_value, evaluate_segments, lagrangian_gradient,
    objective_gradient, objective_value,
};
use falsify_core::kkt::{solve_direct, solve_ppcg, PpcgOptions};
use falsify_core::{
    Formulation, HessianApprox, HessianKind, Multipliers, ProblemInstance, SaddleSystem, ShootingVector,
};
use nalgebra::{DMatrix, DVector};

const FD_TOL: f64 = 1e-5;
const CLOSED_FORM_TOL: f64 = 1e-10;
const RANK_TOL: f64 = 1e-10;
const KKT_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    /// Measured error, or smallest singular value for the rank check.
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
    /// The value must exceed the tolerance instead of staying below it.
    pub lower_bound: bool,
    pub note: Option<String>,
}

impl CheckResult {
    fn below(name: &'static str, value: f64, tolerance: f64) -> Self {
        Self {
            name,
            value,
            tolerance,
            passed: value <= tolerance,
            lower_bound: false,
            note: None,
        }
    }

    fn skipped(name: &'static str, why: &str) -> Self {
        Self {
            name,
            value: 0.0,
            tolerance: 0.0,
            passed: true,
            lower_bound: false,
            note: Some(why.to_string()),
        }
    }

    fn failed(name: &'static str, tolerance: f64, why: String) -> Self {
        Self {
            name,
            value: f64::NAN,
            tolerance,
            passed: false,
            lower_bound: false,
            note: Some(why),
        }
    }

    pub fn line(&self) -> String {
        let verdict = if self.passed { "ok  " } else { "FAIL" };
        let mut s = if self.tolerance == 0.0 && self.passed {
            format!("{verdict} {:<22} skipped", self.name)
        } else {
            let bound = if self.lower_bound { "min" } else { "tol" };
            format!("{verdict} {:<22} {:.3e} ({bound} {:.0e})", self.name, self.value, self.tolerance)
        };
        if let Some(note) = &self.note {
            s.push_str(&format!("  {note}"));
        }
        s
    }
}

/// Derivatives are compared against central differences, so the segments
/// are integrated far more tightly than during a solve.
fn tight(base: &IntegratorConfig) -> IntegratorConfig {
    IntegratorConfig {
        rel_tol: base.rel_tol.min(1e-12),
        abs_tol: base.abs_tol.min(1e-12),
        max_steps: base.max_steps.max(1_000_000),
    }
}

fn rel_err(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let scale = b.amax().max(1.0);
    (a - b).amax() / scale
}

fn perturbed(x: &ShootingVector, k: usize, h: f64) -> ShootingVector {
    let mut flat = x.pack();
    flat[k] += h;
    ShootingVector::unpack(&flat, x.dim(), x.len()).expect("same shape")
}

/// Column `k` holds the central difference of `f` along coordinate `k`.
fn central_differences(
    x: &ShootingVector,
    rows: usize,
    f: &dyn Fn(&ShootingVector) -> Option<DVector<f64>>,
) -> Option<DMatrix<f64>> {
    let flat = x.pack();
    let mut out = DMatrix::zeros(rows, flat.len());
    for k in 0..flat.len() {
        let h = 1e-6 * (1.0 + flat[k].abs());
        let d = (f(&perturbed(x, k, h))? - f(&perturbed(x, k, -h))?) / (2.0 * h);
        out.set_column(k, &d);
    }
    Some(out)
}

/// Deterministic, non-degenerate multipliers for the Lagrangian check.
fn probe_multipliers(formulation: &Formulation, x: &ShootingVector) -> Multipliers {
    let kind = formulation.constraints();
    let m = kind.dim(x.dim(), x.len());
    let values = DVector::from_fn(m, |k, _| (0.7 * k as f64 + 0.3).sin());
    Multipliers::from_flat(kind, x.dim(), x.len(), values).expect("sized to the constraint set")
}

pub fn run_checks(
    formulation: &Formulation,
    instance: &ProblemInstance,
    x: &ShootingVector,
    hessian: HessianKind,
    base: &IntegratorConfig,
) -> Vec<CheckResult> {
    let cfg = tight(base);
    let kind = formulation.constraints();
    let m2 = kind.dim(x.dim(), x.len());
    let flows = match evaluate_segments(instance, x, &cfg) {
        Ok(f) => f,
        Err(e) => return vec![CheckResult::failed("integration", 0.0, e.to_string())],
    };
    let eval = |y: &ShootingVector| evaluate_segments(instance, y, &cfg).ok();
    let mut out = Vec::new();

    let grad = objective_gradient(formulation, instance, x, &flows);
    let fd = central_differences(x, 1, &|y| {
        let fl = eval(y)?;
        Some(DVector::from_element(1, objective_value(formulation, instance, y, &fl)))
    });
    out.push(match fd {
        Some(fd) => CheckResult::below(
            "objective gradient",
            rel_err(&DMatrix::from_row_slice(1, grad.len(), grad.as_slice()), &fd),
            FD_TOL,
        ),
        None => CheckResult::failed("objective gradient", FD_TOL, "perturbed point failed to integrate".into()),
    });

    let jac = constraint_jacobian(kind, instance, x, &flows);
    if m2 == 0 {
        out.push(CheckResult::skipped("constraint jacobian", "no constraints"));
    } else {
        let fd = central_differences(x, m2, &|y| Some(constraint_value(kind, instance, y, &eval(y)?)));
        out.push(match fd {
            Some(fd) => CheckResult::below("constraint jacobian", rel_err(&jac.to_dense().transpose(), &fd), FD_TOL),
            None => CheckResult::failed("constraint jacobian", FD_TOL, "perturbed point failed to integrate".into()),
        });
    }

    let lambda = probe_multipliers(formulation, x);
    let generic = lagrangian_gradient(formulation, instance, x, &lambda, &flows);
    let fd = central_differences(x, 1, &|y| {
        let fl = eval(y)?;
        let l = objective_value(formulation, instance, y, &fl)
            + constraint_value(kind, instance, y, &fl).dot(lambda.as_flat());
        Some(DVector::from_element(1, l))
    });
    out.push(match (&generic, fd) {
        (Ok(g), Some(fd)) => CheckResult::below(
            "lagrangian gradient",
            rel_err(&DMatrix::from_row_slice(1, g.len(), g.as_slice()), &fd),
            FD_TOL,
        ),
        (Err(e), _) => CheckResult::failed("lagrangian gradient", FD_TOL, e.to_string()),
        (_, None) => CheckResult::failed("lagrangian gradient", FD_TOL, "perturbed point failed to integrate".into()),
    });

    match (closed_form::lagrangian_gradient(formulation, instance, x, &lambda, &flows), &generic) {
        (Ok(Some(c)), Ok(g)) => {
            let err = (&c - g).amax() / g.amax().max(1.0);
            out.push(CheckResult::below("closed-form gradient", err, CLOSED_FORM_TOL));
        }
        (Ok(None), _) => out.push(CheckResult::skipped("closed-form gradient", "no closed form")),
        (Err(e), _) => out.push(CheckResult::failed("closed-form gradient", CLOSED_FORM_TOL, e.to_string())),
        (_, Err(e)) => out.push(CheckResult::failed("closed-form gradient", CLOSED_FORM_TOL, e.to_string())),
    }

    if m2 == 0 {
        out.push(CheckResult::skipped("jacobian rank", "no constraints"));
    } else {
        let sv = jac.to_dense().singular_values();
        let scaled = sv.min() / sv.max().max(1.0);
        let mut r = CheckResult::below("jacobian rank", scaled, RANK_TOL);
        r.lower_bound = true;
        r.passed = scaled > RANK_TOL;
        if !r.passed {
            let deficient = sv.iter().filter(|&&s| s / sv.max().max(1.0) <= RANK_TOL).count();
            r.note = Some(format!("rank deficient by {deficient} of {m2} columns"));
        }
        out.push(r);
    }

    let hess = HessianApprox::identity(hessian, x.dim(), x.len());
    let sys = SaddleSystem::new(hess, jac, -&grad, -constraint_value(kind, instance, x, &flows))
        .expect("shapes follow the formulation");
    out.push(match (solve_ppcg(&sys, &PpcgOptions::for_system(&sys)), solve_direct(&sys)) {
        (Ok(p), Ok(d)) => {
            let diff = (&p.d_x - &d.d_x).amax() / d.d_x.amax().max(1.0);
            let mut r = CheckResult::below("ppcg vs direct", diff, KKT_TOL);
            if !p.converged {
                r.passed = false;
                r.note = Some(format!("ppcg unconverged after {} iterations", p.cg_iterations));
            }
            r
        }
        (Err(e), _) => CheckResult::failed("ppcg vs direct", KKT_TOL, format!("ppcg: {e}")),
        (_, Err(e)) => CheckResult::failed("ppcg vs direct", KKT_TOL, format!("direct: {e}")),
    });
    out
}
