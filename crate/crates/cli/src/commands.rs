use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use falsify_core::bench::{self, generate_instance, initial_guess, verify, Status, Verification};
use falsify_core::sqp::{self, RunReport, Termination};
use falsify_core::{Formulation, ProblemInstance, ShootingVector};
use serde::Serialize;

use crate::check::run_checks;
use crate::config::RunConfig;

pub enum Failure {
    Usage(String),
    Io(String),
}

fn io_failure(path: &Path, e: impl std::fmt::Display) -> Failure {
    Failure::Io(format!("{}: {e}", path.display()))
}

/// Runs `write` against the file at `path`, or stdout when there is none.
fn emit(path: Option<&Path>, write: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> Result<(), Failure> {
    match path {
        Some(p) => {
            let mut w = BufWriter::new(File::create(p).map_err(|e| io_failure(p, e))?);
            write(&mut w).and_then(|_| w.flush()).map_err(|e| io_failure(p, e))
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            write(&mut lock).and_then(|_| lock.flush()).map_err(|e| Failure::Io(format!("stdout: {e}")))
        }
    }
}

fn prepare(cfg: &RunConfig) -> Result<(Formulation, ProblemInstance), Failure> {
    let formulation = cfg.formulation().map_err(Failure::Usage)?;
    let p = &cfg.problem;
    let integ = cfg.integrator();
    if p.segments == 0 {
        return Err(Failure::Usage("problem.segments must be at least 1".into()));
    }
    let system = p.system.build(p.n).map_err(|e| Failure::Usage(e.to_string()))?;
    let instance = generate_instance(system, p.horizon, p.radius, p.segments, &integ)
        .map_err(|e| Failure::Usage(format!("cannot build instance: {e}")))?;
    Ok((formulation, instance))
}

fn guess(cfg: &RunConfig, instance: &ProblemInstance) -> Result<ShootingVector, Failure> {
    initial_guess(instance, cfg.problem.horizon, cfg.problem.perturbation, &cfg.integrator())
        .map_err(|e| Failure::Usage(format!("cannot build initial guess: {e}")))
}

#[derive(Serialize)]
struct SolveReport<'a> {
    system: String,
    formulation: String,
    n: usize,
    segments: usize,
    hessian: String,
    kkt: String,
    nit: usize,
    termination: Termination,
    status: String,
    verification: Option<&'a Verification>,
    final_objective: f64,
    final_constraint_norm: f64,
    final_gradient_norm: f64,
    hessian_skips: usize,
    kkt_fallbacks: usize,
    failure: Option<&'a str>,
    /// Packed `[x0^1, t_1, ..., x0^N, t_N]`.
    final_x: Vec<f64>,
    final_lambda: &'a [f64],
}

/// Exit status: 0 converged and verified, 1 converged but not verified,
/// 2 otherwise.
pub fn solve(cfg: &RunConfig) -> Result<u8, Failure> {
    let sqp_cfg = cfg.sqp().map_err(Failure::Usage)?;
    let (formulation, instance) = prepare(cfg)?;
    let x0 = guess(cfg, &instance)?;

    let result = match &cfg.output.kkt_dump {
        Some(dir) => {
            let mut k = 0usize;
            let mut dump_err = None;
            let r = sqp::run_observed(&formulation, &instance, x0, &sqp_cfg, &mut |sys, _| {
                k += 1;
                if dump_err.is_none() {
                    dump_err = sys.dump_triplets(&dir.join(format!("iter_{k:04}"))).err();
                }
            });
            if let Some(e) = dump_err {
                return Err(io_failure(dir, e));
            }
            r
        }
        None => sqp::run(&formulation, &instance, x0, &sqp_cfg),
    };
    let report: RunReport = result.map_err(|e| Failure::Usage(e.to_string()))?;

    let verification = (report.termination != Termination::IntegrationFailure)
        .then(|| verify(&instance, &report.final_x, cfg.problem.eps4, &cfg.integrator()));
    let status = Status::from_run(report.termination, verification.as_ref());

    if let Some(path) = &cfg.output.trace {
        emit(Some(path), |mut w| sqp::write_trace(&report.trace, &mut w))?;
    }
    if let Some(path) = &cfg.output.trajectory {
        let samples = cfg.output.trajectory_samples;
        emit(Some(path), |mut w| {
            bench::write_trajectory(&instance, &report.final_x, samples, &cfg.integrator(), &mut w)
                .map_err(io::Error::other)
        })?;
    }

    let out = SolveReport {
        system: cfg.problem.system.to_string(),
        formulation: formulation.to_string(),
        n: instance.dim(),
        segments: instance.n_segments,
        hessian: sqp_cfg.hessian.to_string(),
        kkt: sqp_cfg.kkt.to_string(),
        nit: report.nit,
        termination: report.termination,
        status: status.to_string(),
        verification: verification.as_ref(),
        final_objective: report.final_objective,
        final_constraint_norm: report.final_constraint_norm,
        final_gradient_norm: report.final_gradient_norm,
        hessian_skips: report.hessian_skips,
        kkt_fallbacks: report.kkt_fallbacks,
        failure: report.failure.as_deref(),
        final_x: report.final_x.pack().iter().copied().collect(),
        final_lambda: &report.final_lambda,
    };
    emit(cfg.output.report.as_deref(), |w| {
        serde_json::to_writer_pretty(&mut *w, &out)?;
        w.write_all(b"\n")
    })?;

    let verified = verification.as_ref().is_some_and(|v| v.passed);
    Ok(match (report.termination, verified) {
        (Termination::Converged, true) => 0,
        (Termination::Converged, false) => 1,
        _ => 2,
    })
}

/// Exit status 0 whenever the table is written, whatever the cell statuses.
pub fn bench(cfg: &RunConfig) -> Result<u8, Failure> {
    let sqp_cfg = cfg.sqp().map_err(Failure::Usage)?;
    let spec = cfg.bench_spec().map_err(Failure::Usage)?;
    let rows = bench::run_table(&spec, &sqp_cfg).map_err(|e| Failure::Usage(e.to_string()))?;
    let path: Option<PathBuf> = cfg.output.csv.clone();
    emit(path.as_deref(), |mut w| bench::emit_csv(&rows, &mut w))?;
    Ok(0)
}

/// Exit status 0 iff every check passes.
pub fn check(cfg: &RunConfig, start_at_center: bool) -> Result<u8, Failure> {
    let sqp_cfg = cfg.sqp().map_err(Failure::Usage)?;
    let (formulation, instance) = prepare(cfg)?;
    let mut x = guess(cfg, &instance)?;
    if start_at_center {
        x.segments_mut()[0].start = instance.init.center().clone();
    }
    let results = run_checks(&formulation, &instance, &x, sqp_cfg.hessian, &cfg.integrator());
    let all = results.iter().all(|r| r.passed);
    emit(None, |w| {
        writeln!(
            w,
            "{} {} n = {} N = {}",
            cfg.problem.system,
            formulation,
            instance.dim(),
            instance.n_segments
        )?;
        for r in &results {
            writeln!(w, "{}", r.line())?;
        }
        Ok(())
    })?;
    Ok(if all { 0 } else { 1 })
}
