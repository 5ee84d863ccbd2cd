//! Dormand-Prince 5(4) with PI step-size control.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Tolerances and step budget for the adaptive integrator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_steps: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-9,
            abs_tol: 1e-9,
            max_steps: 100_000,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return Err(Error::InvalidInput(
                "integrator tolerances must be strictly positive".into(),
            ));
        }
        if self.max_steps == 0 {
            return Err(Error::InvalidInput("max_steps must be at least 1".into()));
        }
        Ok(())
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

// Difference between the 5th and the embedded 4th order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;
const BETA: f64 = 0.04;
const EXPO: f64 = 0.2 - BETA * 0.75;

struct Stages {
    k: [Vec<f64>; 7],
    tmp: Vec<f64>,
    y_new: Vec<f64>,
    err: Vec<f64>,
}

impl Stages {
    fn new(dim: usize) -> Self {
        Self {
            k: std::array::from_fn(|_| vec![0.0; dim]),
            tmp: vec![0.0; dim],
            y_new: vec![0.0; dim],
            err: vec![0.0; dim],
        }
    }
}

fn weighted_rms(v: &[f64], y0: &[f64], y1: &[f64], cfg: &IntegratorConfig) -> f64 {
    let sum: f64 = v
        .iter()
        .zip(y0.iter().zip(y1))
        .map(|(e, (a, b))| {
            let sc = cfg.abs_tol + cfg.rel_tol * a.abs().max(b.abs());
            (e / sc).powi(2)
        })
        .sum();
    (sum / v.len() as f64).sqrt()
}

fn initial_step<F>(rhs: &mut F, t0: f64, y0: &[f64], f0: &[f64], dir: f64, cfg: &IntegratorConfig) -> f64
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let d0 = weighted_rms(y0, y0, y0, cfg);
    let d1 = weighted_rms(f0, y0, y0, cfg);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let y1: Vec<f64> = y0.iter().zip(f0).map(|(y, f)| y + dir * h0 * f).collect();
    let mut f1 = vec![0.0; y0.len()];
    rhs(t0 + dir * h0, &y1, &mut f1);
    let diff: Vec<f64> = f1.iter().zip(f0).map(|(a, b)| a - b).collect();
    let d2 = weighted_rms(&diff, y0, y0, cfg) / h0;
    let dmax = d1.max(d2);
    let h1 = if dmax <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / dmax).powf(0.2)
    };
    (100.0 * h0).min(h1)
}

/// Integrates `dy/dt = rhs(t, y)` from `t0` over the signed `duration` and
/// returns the end state. `duration == 0` returns `y0` unchanged.
pub(crate) fn integrate<F>(
    mut rhs: F,
    t0: f64,
    y0: &[f64],
    duration: f64,
    cfg: &IntegratorConfig,
) -> Result<Vec<f64>>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    cfg.validate()?;
    if !duration.is_finite() || !t0.is_finite() {
        return Err(Error::IntegrationFailure {
            reason: format!("non-finite time span (t0 = {t0}, duration = {duration})"),
        });
    }
    if y0.iter().any(|v| !v.is_finite()) {
        return Err(Error::IntegrationFailure {
            reason: "non-finite initial state".into(),
        });
    }
    let mut y = y0.to_vec();
    if duration == 0.0 {
        return Ok(y);
    }

    let dim = y.len();
    let dir = duration.signum();
    let t_end = t0 + duration;
    let span = duration.abs();
    let mut st = Stages::new(dim);

    let mut t = t0;
    rhs(t, &y, &mut st.k[0]);
    let mut h = initial_step(&mut rhs, t0, &y, &st.k[0], dir, cfg).min(span);
    let mut fac_old: f64 = 1e-4;
    let mut rejected_last = false;
    let mut steps = 0usize;

    loop {
        steps += 1;
        if steps > cfg.max_steps {
            return Err(Error::IntegrationFailure {
                reason: format!("exceeded {} steps at t = {t}", cfg.max_steps),
            });
        }
        let remaining = (t_end - t).abs();
        let last = h >= remaining * (1.0 - 1e-12);
        if last {
            h = remaining;
        }
        if h <= 1e-14 * t.abs().max(span) {
            return Err(Error::IntegrationFailure {
                reason: format!("step size underflow at t = {t}"),
            });
        }
        let hs = dir * h;

        macro_rules! stage {
            ($dst:expr, $c:expr, $( ($a:expr, $ki:expr) ),+ ) => {{
                for i in 0..dim {
                    let mut acc = 0.0;
                    $( acc += $a * st.k[$ki][i]; )+
                    st.tmp[i] = y[i] + hs * acc;
                }
                rhs(t + $c * hs, &st.tmp, &mut st.k[$dst]);
            }};
        }

        stage!(1, C2, (A21, 0));
        stage!(2, C3, (A31, 0), (A32, 1));
        stage!(3, C4, (A41, 0), (A42, 1), (A43, 2));
        stage!(4, C5, (A51, 0), (A52, 1), (A53, 2), (A54, 3));
        stage!(5, 1.0, (A61, 0), (A62, 1), (A63, 2), (A64, 3), (A65, 4));
        for i in 0..dim {
            st.y_new[i] = y[i]
                + hs * (A71 * st.k[0][i]
                    + A73 * st.k[2][i]
                    + A74 * st.k[3][i]
                    + A75 * st.k[4][i]
                    + A76 * st.k[5][i]);
        }
        let t_new = if last { t_end } else { t + hs };
        rhs(t_new, &st.y_new, &mut st.k[6]);
        for i in 0..dim {
            st.err[i] = hs
                * (E1 * st.k[0][i]
                    + E3 * st.k[2][i]
                    + E4 * st.k[3][i]
                    + E5 * st.k[4][i]
                    + E6 * st.k[5][i]
                    + E7 * st.k[6][i]);
        }
        let err = weighted_rms(&st.err, &y, &st.y_new, cfg);
        if !err.is_finite() || st.y_new.iter().any(|v| !v.is_finite()) {
            if rejected_last && h < 1e-10 * span {
                return Err(Error::IntegrationFailure {
                    reason: format!("state left the finite range near t = {t}"),
                });
            }
            h *= FAC_MIN;
            rejected_last = true;
            continue;
        }

        let fac11 = err.powf(EXPO);
        if err <= 1.0 {
            let fac = (fac11 / fac_old.powf(BETA) / SAFETY).clamp(1.0 / FAC_MAX, 1.0 / FAC_MIN);
            let mut h_new = h / fac;
            if rejected_last {
                h_new = h_new.min(h);
            }
            fac_old = err.max(1e-4);
            std::mem::swap(&mut y, &mut st.y_new);
            // First-same-as-last: the final stage is the next step's first.
            st.k.swap(0, 6);
            t = t_new;
            if last {
                return Ok(y);
            }
            h = h_new;
            rejected_last = false;
        } else {
            h /= (fac11 / SAFETY).min(1.0 / FAC_MIN);
            rejected_last = true;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay() {
        let cfg = IntegratorConfig::default();
        let y = integrate(|_, y, out| out[0] = -y[0], 0.0, &[1.0], 2.0, &cfg).unwrap();
        assert!((y[0] - (-2.0f64).exp()).abs() < 1e-9);
    }

    #[test]
    fn backward_time() {
        let cfg = IntegratorConfig::default();
        let y = integrate(|_, y, out| out[0] = -y[0], 0.0, &[1.0], -2.0, &cfg).unwrap();
        assert!((y[0] - 2.0f64.exp()).abs() < 1e-8);
    }

    #[test]
    fn time_dependent_rhs() {
        // dy/dt = cos(t) on [1, 3]
        let cfg = IntegratorConfig::default();
        let y = integrate(|t, _, out| out[0] = t.cos(), 1.0, &[0.0], 2.0, &cfg).unwrap();
        assert!((y[0] - (3.0f64.sin() - 1.0f64.sin())).abs() < 1e-9);
    }

    #[test]
    fn zero_duration_is_identity() {
        let cfg = IntegratorConfig::default();
        let y0 = [0.1234567, -9.87];
        let y = integrate(|_, _, _| panic!("must not evaluate"), 0.0, &y0, 0.0, &cfg).unwrap();
        assert_eq!(y, y0.to_vec());
    }

    #[test]
    fn blow_up_is_reported() {
        let cfg = IntegratorConfig::default();
        // y' = y^2, y(0) = 1 explodes at t = 1.
        let res = integrate(|_, y, out| out[0] = y[0] * y[0], 0.0, &[1.0], 2.0, &cfg);
        assert!(matches!(res, Err(Error::IntegrationFailure { .. })));
    }

    #[test]
    fn step_budget_is_enforced() {
        let cfg = IntegratorConfig {
            max_steps: 3,
            ..Default::default()
        };
        let res = integrate(|_, y, out| out[0] = -50.0 * y[0], 0.0, &[1.0], 10.0, &cfg);
        assert!(matches!(res, Err(Error::IntegrationFailure { .. })));
    }

    #[test]
    fn invalid_config_rejected() {
        let cfg = IntegratorConfig {
            rel_tol: 0.0,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
    }
}
