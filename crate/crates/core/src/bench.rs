//! Benchmark methodology: generate an instance by simulating from the
//! center of `Init`, perturb a uniform split of that trajectory, run SQP,
//! and check the result by one re-simulation from the first segment start.

use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{benchmark1, benchmark2, benchmark3, flow, IntegratorConfig, OdeSystem};
use crate::formulation::{Ellipsoid, Formulation, ProblemInstance, Segment, ShootingVector};
use crate::sqp::{self, RunReport, SqpConfig, Termination};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SystemKind {
    Benchmark1,
    Benchmark2,
    Benchmark3,
}

impl SystemKind {
    /// `n` is ignored for the fixed three-dimensional benchmark2.
    pub fn build(self, n: usize) -> Result<OdeSystem> {
        match self {
            SystemKind::Benchmark1 => benchmark1(n),
            SystemKind::Benchmark2 => benchmark2(),
            SystemKind::Benchmark3 => benchmark3(n),
        }
    }
}

impl fmt::Display for SystemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SystemKind::Benchmark1 => "benchmark1",
            SystemKind::Benchmark2 => "benchmark2",
            SystemKind::Benchmark3 => "benchmark3",
        })
    }
}

impl FromStr for SystemKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "benchmark1" => Ok(SystemKind::Benchmark1),
            "benchmark2" => Ok(SystemKind::Benchmark2),
            "benchmark3" => Ok(SystemKind::Benchmark3),
            other => Err(Error::InvalidInput(format!("unknown system {other:?}"))),
        }
    }
}

/// One benchmark table: every combination of `dims` and `segments`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchSpec {
    pub system: SystemKind,
    pub dims: Vec<usize>,
    pub segments: Vec<usize>,
    pub formulation: Formulation,
    pub horizon: f64,
    pub radius: f64,
    pub eps4: f64,
    /// Magnitude of the alternating perturbation added to every segment
    /// start of the initial guess. Zero gives an exact split.
    pub perturbation: f64,
}

impl BenchSpec {
    pub fn new(system: SystemKind, dims: Vec<usize>, segments: Vec<usize>, formulation: Formulation) -> Self {
        Self {
            system,
            dims,
            segments,
            formulation,
            horizon: 5.0,
            radius: 0.25,
            eps4: 1e-4,
            perturbation: 0.5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::InvalidInput(format!("horizon must be positive, got {}", self.horizon)));
        }
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return Err(Error::InvalidInput(format!("radius must be positive, got {}", self.radius)));
        }
        if !(self.eps4 >= 0.0) {
            return Err(Error::InvalidInput(format!("eps4 must be non-negative, got {}", self.eps4)));
        }
        if self.segments.contains(&0) {
            return Err(Error::InvalidInput("segment counts must be at least 1".into()));
        }
        Ok(())
    }

    /// `(n, N)` cells in table order. benchmark2 has a single dimension.
    pub fn cells(&self) -> Vec<(usize, usize)> {
        let dims = match self.system {
            SystemKind::Benchmark2 => vec![3],
            _ => self.dims.clone(),
        };
        dims.iter()
            .flat_map(|&n| self.segments.iter().map(move |&s| (n, s)))
            .collect()
    }
}

/// `Init` is the ball of the given radius around `[1, ..., 1]`, `Unsafe` the
/// ball around the state reached from there after `horizon`.
pub fn generate_instance(
    system: OdeSystem,
    horizon: f64,
    radius: f64,
    segments: usize,
    cfg: &IntegratorConfig,
) -> Result<ProblemInstance> {
    let c_init = DVector::from_element(system.dim(), 1.0);
    let c_unsafe = flow(&system, &c_init, horizon, cfg)?;
    ProblemInstance::new(
        system,
        Ellipsoid::ball(c_init, radius)?,
        Ellipsoid::ball(c_unsafe, radius)?,
        segments,
    )
}

/// `u = scale * [-1, 1, -1, ...]`
pub fn perturbation(n: usize, scale: f64) -> DVector<f64> {
    DVector::from_fn(n, |j, _| if j % 2 == 0 { -scale } else { scale })
}

/// Splits the trajectory from the center of `Init` into `N` equal segments
/// over `horizon` and adds [`perturbation`] to every segment start,
/// including the first.
pub fn initial_guess(
    instance: &ProblemInstance,
    horizon: f64,
    scale: f64,
    cfg: &IntegratorConfig,
) -> Result<ShootingVector> {
    let n_seg = instance.n_segments;
    let h = horizon / n_seg as f64;
    let u = perturbation(instance.dim(), scale);
    let mut state = instance.init.center().clone();
    let mut segments = Vec::with_capacity(n_seg);
    for i in 0..n_seg {
        segments.push(Segment {
            start: &state + &u,
            duration: h,
        });
        if i + 1 < n_seg {
            state = flow(&instance.system, &state, h, cfg)?;
        }
    }
    ShootingVector::new(segments)
}

/// Result of re-simulating a candidate from its first segment start.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verification {
    pub negative_duration: bool,
    /// `||x0^1 - c_I||_{E_I}`
    pub init_distance: f64,
    /// `||Phi(sum t_i, x0^1) - c_U||_{E_U}`
    pub unsafe_distance: f64,
    pub integration_error: Option<String>,
    pub passed: bool,
}

pub fn verify(
    instance: &ProblemInstance,
    x: &ShootingVector,
    eps4: f64,
    cfg: &IntegratorConfig,
) -> Verification {
    let negative_duration = x.durations().any(|t| t < 0.0);
    let start = &x.segments()[0].start;
    let init_distance = instance.init.norm(start);
    let (unsafe_distance, integration_error) = match flow(&instance.system, start, x.total_duration(), cfg) {
        Ok(end) => (instance.unsafe_set.norm(&end), None),
        Err(e) => (f64::NAN, Some(e.to_string())),
    };
    let passed = !negative_duration
        && integration_error.is_none()
        && init_distance <= 1.0 + eps4
        && unsafe_distance <= 1.0 + eps4;
    Verification {
        negative_duration,
        init_distance,
        unsafe_distance,
        integration_error,
        passed,
    }
}

/// Table status: the stopping criterion digit, or `F`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Status {
    Criterion(u8),
    Failed(FailureCause),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FailureCause {
    Verification,
    NegativeDuration,
    Integration,
}

impl Status {
    pub fn from_run(termination: Termination, verification: Option<&Verification>) -> Self {
        let Some(digit) = termination.digit() else {
            return Status::Failed(FailureCause::Integration);
        };
        match verification {
            None => Status::Failed(FailureCause::Integration),
            Some(v) if v.integration_error.is_some() => Status::Failed(FailureCause::Integration),
            Some(v) if v.negative_duration => Status::Failed(FailureCause::NegativeDuration),
            Some(v) if !v.passed => Status::Failed(FailureCause::Verification),
            Some(_) => Status::Criterion(digit),
        }
    }

    pub fn is_failure(self) -> bool {
        matches!(self, Status::Failed(_))
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Status::Criterion(d) => write!(f, "{d}"),
            Status::Failed(_) => f.write_str("F"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub n: usize,
    pub segments: usize,
    pub nit: usize,
    pub status: Status,
}

/// Everything produced by one table cell.
#[derive(Debug, Clone)]
pub struct CellOutcome {
    pub row: BenchRow,
    pub instance: Option<ProblemInstance>,
    pub report: Option<RunReport>,
    pub verification: Option<Verification>,
}

/// Generates the instance for one `(n, N)` cell, solves it and verifies the
/// result. Failures are folded into the row status.
pub fn run_cell(spec: &BenchSpec, n: usize, segments: usize, cfg: &SqpConfig) -> CellOutcome {
    let failed = |nit| CellOutcome {
        row: BenchRow {
            n,
            segments,
            nit,
            status: Status::Failed(FailureCause::Integration),
        },
        instance: None,
        report: None,
        verification: None,
    };
    let prepared = spec.system.build(n).and_then(|system| {
        let instance = generate_instance(system, spec.horizon, spec.radius, segments, &cfg.integrator)?;
        let guess = initial_guess(&instance, spec.horizon, spec.perturbation, &cfg.integrator)?;
        Ok((instance, guess))
    });
    let (instance, guess) = match prepared {
        Ok(p) => p,
        Err(e) => {
            log::warn!("cell n = {n}, N = {segments}: {e}");
            return failed(0);
        }
    };
    let report = match sqp::run(&spec.formulation, &instance, guess, cfg) {
        Ok(r) => r,
        Err(e) => {
            log::warn!("cell n = {n}, N = {segments}: {e}");
            return failed(0);
        }
    };
    let verification = (report.termination != Termination::IntegrationFailure)
        .then(|| verify(&instance, &report.final_x, spec.eps4, &cfg.integrator));
    let status = Status::from_run(report.termination, verification.as_ref());
    log::info!(
        "{} {} n = {n}, N = {segments}: NIT = {}, S = {status}",
        spec.system,
        spec.formulation,
        report.nit
    );
    CellOutcome {
        row: BenchRow {
            n,
            segments,
            nit: report.nit,
            status,
        },
        instance: Some(instance),
        report: Some(report),
        verification,
    }
}

/// Runs every cell (in parallel) and returns rows in table order.
pub fn run_table(spec: &BenchSpec, cfg: &SqpConfig) -> Result<Vec<BenchRow>> {
    spec.validate()?;
    cfg.validate()?;
    Ok(spec
        .cells()
        .par_iter()
        .map(|&(n, s)| run_cell(spec, n, s, cfg).row)
        .collect())
}

pub fn emit_csv<W: Write>(rows: &[BenchRow], out: &mut W) -> io::Result<()> {
    out.write_all(b"n,N,NIT,S\n")?;
    for r in rows {
        writeln!(out, "{},{},{},{}", r.n, r.segments, r.nit, r.status)?;
    }
    Ok(())
}

/// Samples every segment at `samples + 1` equally spaced times. Columns are
/// the global time followed by the state; a `#` line precedes each segment.
pub fn write_trajectory<W: Write>(
    instance: &ProblemInstance,
    x: &ShootingVector,
    samples: usize,
    cfg: &IntegratorConfig,
    out: &mut W,
) -> Result<()> {
    let io_err = |e: io::Error| Error::InvalidInput(format!("writing trajectory: {e}"));
    let samples = samples.max(1);
    let mut t0 = 0.0;
    for (i, seg) in x.segments().iter().enumerate() {
        writeln!(out, "# segment {} start {t0:.16e} duration {:.16e}", i + 1, seg.duration).map_err(io_err)?;
        let dt = seg.duration / samples as f64;
        let mut state = seg.start.clone();
        for k in 0..=samples {
            if k > 0 {
                state = flow(&instance.system, &state, dt, cfg)?;
            }
            let mut line = format!("{:.16e}", t0 + k as f64 * dt);
            for v in state.iter() {
                line.push_str(&format!(" {v:.16e}"));
            }
            writeln!(out, "{line}").map_err(io_err)?;
        }
        t0 += seg.duration;
    }
    Ok(())
}
