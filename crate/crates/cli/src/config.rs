use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sidewall::fem::{AdaptiveOptions, Indicator, SolverOptions};
use sidewall::geometry::GeometryParams;
use sidewall::mesh::SizeFieldOverrides;
use sidewall::qanalysis::LossModel;
use sidewall::study::{FigureGrids, OptimizeOptions};

use crate::CliError;

/// Everything a run depends on. Every section is optional and every
/// unknown key is an error.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub geometry: GeometryParams,
    pub mesh: SizeFieldOverrides,
    pub solver: SolverConfig,
    pub sweep: SweepConfig,
    pub figures: FigureGrids,
    pub convergence: ConvergenceConfig,
    pub optimize: OptimizeConfig,
    pub lossmodel: LossConfig,
    pub io: IoConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub order: u8,
    pub rel_residual: f64,
    /// Adaptive solves.
    pub iterations: u32,
    pub refine_fraction: f64,
    pub rel_tol: f64,
    pub indicator: Indicator,
    pub v_pad: f64,
    /// Largest system factorised directly; larger ones use CG.
    pub direct_limit: usize,
    pub max_cg_iterations: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let a = AdaptiveOptions::default();
        SolverConfig {
            order: a.order,
            rel_residual: a.solver.rel_residual,
            iterations: a.iterations,
            refine_fraction: a.fraction,
            rel_tol: a.rel_tol,
            indicator: a.indicator,
            v_pad: a.v_pad,
            direct_limit: a.solver.direct_limit,
            max_cg_iterations: a.solver.max_iterations,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub axis: String,
    pub values: Vec<f64>,
    /// Undercut distances for `undercut`.
    pub x_values: Vec<f64>,
    /// Undercut angles for `undercut`.
    pub beta_values: Vec<f64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        let g = FigureGrids::default();
        SweepConfig { axis: "trench_depth".into(), values: g.trench_depth, x_values: g.undercut_x, beta_values: g.undercut_beta }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConvergenceConfig {
    pub orders: Vec<u8>,
    pub max_generations: u32,
}

impl Default for ConvergenceConfig {
    fn default() -> Self {
        ConvergenceConfig { orders: vec![1, 2], max_generations: 3 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizeConfig {
    /// Parameter → `[low, high]`; equal ends pin the parameter.
    pub bounds: BTreeMap<String, (f64, f64)>,
    pub n_starts: usize,
    pub max_evals: usize,
    pub tol: f64,
    pub step: f64,
}

impl Default for OptimizeConfig {
    fn default() -> Self {
        let o = OptimizeOptions::default();
        OptimizeConfig { bounds: BTreeMap::new(), n_starts: o.n_starts, max_evals: o.max_evals, tol: o.tol, step: o.step }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LossConfig {
    pub tan_delta: BTreeMap<String, f64>,
    /// `null` is ∞.
    pub q_other: Option<f64>,
    pub rel_err: f64,
}

impl Default for LossConfig {
    fn default() -> Self {
        LossConfig { tan_delta: LossModel::oxide(0.1).tan_delta, q_other: None, rel_err: 0.1 }
    }
}

impl LossConfig {
    pub fn model(&self) -> LossModel {
        LossModel { tan_delta: self.tan_delta.clone(), q_other: self.q_other.unwrap_or(f64::INFINITY) }
    }
}

pub const FORMATS: [&str; 4] = ["json", "csv", "vtk", "ascii"];

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IoConfig {
    pub outdir: Option<PathBuf>,
    /// File formats to write; empty means all that apply.
    pub formats: Vec<String>,
}

impl IoConfig {
    pub fn wants(&self, format: &str) -> bool {
        self.formats.is_empty() || self.formats.iter().any(|f| f == format)
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Validation(format!("config {}: {e}", path.display())))?;
        let cfg: RunConfig = serde_json::from_str(&text).map_err(|e| CliError::Validation(format!("config {}: {e}", path.display())))?;
        cfg.check().map_err(|m| CliError::Validation(format!("config {}: {m}", path.display())))?;
        Ok(cfg)
    }

    fn check(&self) -> Result<(), String> {
        self.geometry.validate().map_err(|e| format!("geometry: {e}"))?;
        self.adaptive().validate().map_err(|e| format!("solver: {e}"))?;
        self.lossmodel.model().validate().map_err(|e| format!("lossmodel: {e}"))?;
        if !(0.0..1.0).contains(&self.lossmodel.rel_err) {
            return Err(format!("lossmodel.rel_err: must lie in [0, 1), got {}", self.lossmodel.rel_err));
        }
        if let Some(f) = self.io.formats.iter().find(|f| !FORMATS.contains(&f.as_str())) {
            return Err(format!("io.formats: unknown format `{f}`, expected one of {FORMATS:?}"));
        }
        Ok(())
    }

    pub fn adaptive(&self) -> AdaptiveOptions {
        let s = &self.solver;
        AdaptiveOptions {
            iterations: s.iterations,
            fraction: s.refine_fraction,
            rel_tol: s.rel_tol,
            order: s.order,
            indicator: s.indicator,
            v_pad: s.v_pad,
            mesh: self.mesh.clone(),
            solver: SolverOptions { rel_residual: s.rel_residual, direct_limit: s.direct_limit, max_iterations: s.max_cg_iterations },
        }
    }

    pub fn optimize_options(&self, seed: u64) -> OptimizeOptions {
        let o = &self.optimize;
        OptimizeOptions { n_starts: o.n_starts, seed, max_evals: o.max_evals, tol: o.tol, step: o.step, adaptive: self.adaptive() }
    }
}
