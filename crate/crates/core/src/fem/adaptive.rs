//! Solve–estimate–bisect cycles on a pad-edge geometry.

use serde::{Deserialize, Serialize};

use super::{compute_epr, solve_potential_with, EprReport, FemError, FieldSolution, SolverOptions};
use crate::geometry::{build_cross_section, GeometryParams};
use crate::mesh::{adapt_mesh, generate_mesh, Mesh, SizeField, SizeFieldOverrides};

/// What marks an element for bisection.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Indicator {
    /// Stored energy of the element (density × area).
    #[default]
    ElementEnergy,
    /// Energy density alone; favours the smallest elements.
    EnergyDensity,
    /// Energy density × diameter, i.e. an energy-per-length scaling.
    DensityDiameter,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdaptiveOptions {
    /// Most solves, each followed by a bisection pass unless it is the last.
    pub iterations: u32,
    /// Fraction of elements marked per pass.
    pub fraction: f64,
    /// Stop once `|ΔEPR_sum| / EPR_sum` between solves drops below this.
    pub rel_tol: f64,
    pub order: u8,
    pub indicator: Indicator,
    pub v_pad: f64,
    pub mesh: SizeFieldOverrides,
    pub solver: SolverOptions,
}

impl Default for AdaptiveOptions {
    fn default() -> Self {
        AdaptiveOptions {
            iterations: 3,
            fraction: 0.2,
            rel_tol: 0.02,
            order: 1,
            indicator: Indicator::default(),
            v_pad: 1.0,
            mesh: SizeFieldOverrides::default(),
            solver: SolverOptions::default(),
        }
    }
}

impl AdaptiveOptions {
    pub fn validate(&self) -> Result<(), FemError> {
        let bad = |m: &str| Err(FemError::InvalidOption(m.to_string()));
        if self.iterations == 0 {
            return bad("iterations must be at least 1");
        }
        if !(self.fraction > 0.0 && self.fraction <= 1.0) {
            return bad("fraction must lie in (0, 1]");
        }
        if !(self.rel_tol >= 0.0) {
            return bad("rel_tol must be non-negative");
        }
        if self.order != 1 && self.order != 2 {
            return Err(FemError::InvalidOrder(self.order));
        }
        Ok(())
    }
}

/// One solve of an adaptive run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub cycle: u32,
    pub generation: u32,
    pub elements: usize,
    pub epr_top: f64,
    pub epr_side: f64,
    pub epr_sum: f64,
    pub w0: f64,
    /// Relative change of `epr_sum` from the previous solve (1 on the first).
    pub delta: f64,
}

pub fn refinement_indicators(sol: &FieldSolution<'_>, kind: Indicator) -> Vec<f64> {
    let mesh = sol.mesh;
    (0..mesh.triangles.len())
        .map(|t| match kind {
            Indicator::ElementEnergy => sol.element_energy[t],
            Indicator::EnergyDensity => sol.energy_density(t),
            Indicator::DensityDiameter => {
                let c = mesh.corners(t);
                let d = (0..3).map(|i| c[i].dist(c[(i + 1) % 3])).fold(0.0, f64::max);
                sol.energy_density(t) * d
            }
        })
        .collect()
}

/// Builds, meshes and solves `params` with the default options.
pub fn adaptive_epr(params: &GeometryParams) -> Result<EprReport, FemError> {
    adaptive_epr_with(params, &AdaptiveOptions::default()).map(|(r, _)| r)
}

/// Runs up to `opts.iterations` solves, bisecting between them, and returns
/// the last report (carrying the trace) together with the final mesh.
pub fn adaptive_epr_with(params: &GeometryParams, opts: &AdaptiveOptions) -> Result<(EprReport, Mesh), FemError> {
    opts.validate()?;
    let cs = build_cross_section(params)?;
    let sf = SizeField::for_params(params, &cs).with_overrides(&opts.mesh);
    let mut mesh = generate_mesh(&cs, &sf)?;
    let mut trace = Vec::new();
    let mut prev = 0.0;
    for cycle in 0..opts.iterations {
        let sol = solve_potential_with(&mesh, opts.v_pad, opts.order, &opts.solver)?;
        let mut report = compute_epr(&sol);
        let delta = if report.epr_sum == 0.0 && prev == 0.0 { 0.0 } else { (report.epr_sum - prev).abs() / report.epr_sum.abs().max(prev.abs()) };
        prev = report.epr_sum;
        trace.push(TraceStep {
            cycle,
            generation: mesh.generation,
            elements: mesh.triangles.len(),
            epr_top: report.epr_top,
            epr_side: report.epr_side,
            epr_sum: report.epr_sum,
            w0: report.w0,
            delta,
        });
        if delta < opts.rel_tol || cycle + 1 == opts.iterations {
            report.trace = trace;
            return Ok((report, mesh));
        }
        let ind = refinement_indicators(&sol, opts.indicator);
        drop(sol);
        mesh = adapt_mesh(&mesh, &ind, opts.fraction)?;
    }
    unreachable!("the loop returns on its last cycle")
}
