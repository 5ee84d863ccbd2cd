use std::path::{Path, PathBuf};

use falsify_core::bench::{BenchSpec, SystemKind};
use falsify_core::dynamics::IntegratorConfig;
use falsify_core::sqp::SqpConfig;
use falsify_core::{Formulation, HessianKind, KktMethod};
use serde::Deserialize;

/// Contents of the TOML configuration file. Every key is optional.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemSection,
    pub formulation: FormulationSection,
    pub sqp: SqpSection,
    pub output: OutputSection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProblemSection {
    pub system: SystemKind,
    /// State dimension for `solve` and `check` (ignored by benchmark2).
    pub n: usize,
    /// Segment count for `solve` and `check`.
    pub segments: usize,
    /// Dimensions swept by `bench`.
    pub dims: Vec<usize>,
    /// Segment counts swept by `bench`.
    pub segment_counts: Vec<usize>,
    pub horizon: f64,
    pub radius: f64,
    pub eps4: f64,
    pub perturbation: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_steps: usize,
}

impl Default for ProblemSection {
    fn default() -> Self {
        let integ = IntegratorConfig::default();
        Self {
            system: SystemKind::Benchmark2,
            n: 3,
            segments: 5,
            dims: vec![3],
            segment_counts: vec![5, 10, 15, 20, 25, 30],
            horizon: 5.0,
            radius: 0.25,
            eps4: 1e-4,
            perturbation: 0.5,
            rel_tol: integ.rel_tol,
            abs_tol: integ.abs_tol,
            max_steps: integ.max_steps,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FormulationSection {
    /// `eq5` .. `eq13`
    pub name: String,
}

impl Default for FormulationSection {
    fn default() -> Self {
        Self { name: "eq8".into() }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SqpSection {
    pub omega: f64,
    pub delta: f64,
    pub eps1: f64,
    pub eps2: f64,
    pub eps3: f64,
    pub max_iter: usize,
    pub backtrack_factor: f64,
    pub hessian: HessianKind,
    pub kkt: KktMethod,
}

impl Default for SqpSection {
    fn default() -> Self {
        let d = SqpConfig::default();
        Self {
            omega: d.omega,
            delta: d.delta,
            eps1: d.eps1,
            eps2: d.eps2,
            eps3: d.eps3,
            max_iter: d.max_iter,
            backtrack_factor: d.backtrack_factor,
            hessian: d.hessian,
            kkt: d.kkt,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    /// Run report (JSON). Printed to stdout when unset.
    pub report: Option<PathBuf>,
    /// Benchmark table. Printed to stdout when unset.
    pub csv: Option<PathBuf>,
    pub trace: Option<PathBuf>,
    pub trajectory: Option<PathBuf>,
    pub trajectory_samples: usize,
    /// Directory receiving the saddle-point system of every iteration.
    pub kkt_dump: Option<PathBuf>,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            report: None,
            csv: None,
            trace: None,
            trajectory: None,
            trajectory_samples: 20,
            kkt_dump: None,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        Self::parse(&text).map_err(|e| format!("{}: {e}", path.display()))
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    pub fn formulation(&self) -> Result<Formulation, String> {
        self.formulation.name.parse().map_err(|e: falsify_core::Error| e.to_string())
    }

    pub fn integrator(&self) -> IntegratorConfig {
        IntegratorConfig {
            rel_tol: self.problem.rel_tol,
            abs_tol: self.problem.abs_tol,
            max_steps: self.problem.max_steps,
        }
    }

    pub fn sqp(&self) -> Result<SqpConfig, String> {
        let s = &self.sqp;
        let cfg = SqpConfig {
            omega: s.omega,
            delta: s.delta,
            eps1: s.eps1,
            eps2: s.eps2,
            eps3: s.eps3,
            max_iter: s.max_iter,
            backtrack_factor: s.backtrack_factor,
            hessian: s.hessian,
            kkt: s.kkt,
            integrator: self.integrator(),
        };
        cfg.validate().map_err(|e| e.to_string())?;
        Ok(cfg)
    }

    pub fn bench_spec(&self) -> Result<BenchSpec, String> {
        let p = &self.problem;
        let spec = BenchSpec {
            system: p.system,
            dims: p.dims.clone(),
            segments: p.segment_counts.clone(),
            formulation: self.formulation()?,
            horizon: p.horizon,
            radius: p.radius,
            eps4: p.eps4,
            perturbation: p.perturbation,
        };
        spec.validate().map_err(|e| e.to_string())?;
        Ok(spec)
    }
}
