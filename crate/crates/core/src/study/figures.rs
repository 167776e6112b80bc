use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{run_sweep, StudyError, SweepResult, CSV_HEADER};
use crate::fem::AdaptiveOptions;
use crate::geometry::GeometryParams;

/// Axis grids of the reproduced figures. The ranges are read off plots and
/// are approximate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FigureGrids {
    pub trench_depth: Vec<f64>,
    pub alpha: Vec<f64>,
    pub dh: Vec<f64>,
    pub r1: Vec<f64>,
    pub r2: Vec<f64>,
    /// Footer fraction used for the `r2` sweep, so the largest fillet fits.
    pub r2_footer_fraction: f64,
    pub undercut_x: Vec<f64>,
    pub undercut_beta: Vec<f64>,
    /// Trench depth under the undercut sweeps, nm.
    pub undercut_trench: f64,
    /// Undercut distance held during the angle sweep, nm.
    pub undercut_beta_at_x: f64,
}

impl Default for FigureGrids {
    fn default() -> Self {
        FigureGrids {
            trench_depth: (0..=12).map(|k| 10.0 * k as f64).collect(),
            alpha: vec![0.0, 10.0, 20.0, 30.0, 40.0],
            dh: (1..=10).map(f64::from).collect(),
            r1: vec![0.0, 10.0, 20.0, 40.0, 60.0, 80.0],
            r2: vec![0.0, 10.0, 20.0, 40.0, 60.0, 80.0],
            r2_footer_fraction: 0.5,
            undercut_x: vec![0.0, 15.0, 30.0, 45.0, 60.0],
            undercut_beta: vec![15.0, 30.0, 45.0, 60.0, 75.0],
            undercut_trench: 100.0,
            undercut_beta_at_x: 60.0,
        }
    }
}

fn write(dir: &Path, name: &str, body: &str) -> Result<PathBuf, StudyError> {
    let path = dir.join(name);
    std::fs::write(&path, body).map_err(|e| StudyError::Io { path: path.display().to_string(), message: e.to_string() })?;
    Ok(path)
}

/// Two sweeps in one table, told apart by a leading `axis` column.
fn stacked(parts: &[&SweepResult]) -> String {
    let mut s = format!("axis,{CSV_HEADER}\n");
    for r in parts {
        for line in r.to_csv().lines().skip(1) {
            s.push_str(&r.axis);
            s.push(',');
            s.push_str(line);
            s.push('\n');
        }
    }
    s
}

/// Writes `fig2b.csv` (trench depth), `fig4b.csv` (footer angle at 5 nm
/// oxide), `fig4c.csv` (oxide thickness), `fig_s4.csv` (both radii) and
/// `fig_s11.csv` (undercut distance and angle) into `outdir`.
pub fn reproduce_figures(outdir: &Path, base: &GeometryParams, grids: &FigureGrids, opts: &AdaptiveOptions) -> Result<Vec<PathBuf>, StudyError> {
    std::fs::create_dir_all(outdir).map_err(|e| StudyError::Io { path: outdir.display().to_string(), message: e.to_string() })?;
    let mut out = Vec::new();
    out.push(write(outdir, "fig2b.csv", &run_sweep(base, "trench_depth", &grids.trench_depth, opts)?.to_csv())?);
    let thin = GeometryParams { dh: 5.0, dh_top: None, dh_side: None, ..base.clone() };
    out.push(write(outdir, "fig4b.csv", &run_sweep(&thin, "alpha", &grids.alpha, opts)?.to_csv())?);
    let upright = GeometryParams { alpha: 0.0, ..base.clone() };
    out.push(write(outdir, "fig4c.csv", &run_sweep(&upright, "dh", &grids.dh, opts)?.to_csv())?);
    let r1 = run_sweep(base, "r1", &grids.r1, opts)?;
    let r2 = run_sweep(&GeometryParams { footer_fraction: grids.r2_footer_fraction, ..base.clone() }, "r2", &grids.r2, opts)?;
    out.push(write(outdir, "fig_s4.csv", &stacked(&[&r1, &r2]))?);
    let trench = GeometryParams { trench_depth: grids.undercut_trench, ..base.clone() };
    let x = run_sweep(&trench, "undercut_x", &grids.undercut_x, opts)?;
    let at_x = GeometryParams { undercut_x: grids.undercut_beta_at_x, ..trench };
    let beta = run_sweep(&at_x, "undercut_beta", &grids.undercut_beta, opts)?;
    out.push(write(outdir, "fig_s11.csv", &stacked(&[&x, &beta]))?);
    Ok(out)
}
