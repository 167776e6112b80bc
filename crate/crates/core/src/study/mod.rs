//! Sweeps, convergence studies, optimisation and figure tables built on
//! [`adaptive_epr_with`](crate::fem::adaptive_epr_with).
//!
//! Independent points run on the rayon pool; results are always ordered
//! by input index, so a run is bit-identical whatever the thread count.

mod converge;
mod figures;
mod optimize;
mod sweep;

use thiserror::Error;

use crate::fem::FemError;
use crate::geometry::GeometryError;

pub use converge::{convergence_study, richardson, ConvergenceReport, ConvergenceRow};
pub use figures::{reproduce_figures, FigureGrids};
pub use optimize::{optimize_geometry, Evaluation, OptimizationResult, OptimizeOptions, Termination};
pub use sweep::{run_sweep, run_undercut_sweep, Provenance, SweepResult, CSV_HEADER};

#[derive(Debug, Error)]
pub enum StudyError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Fem(#[from] FemError),
    #[error("invalid study input: {0}")]
    Invalid(String),
    /// A point failed; the points before it are kept in `partial`.
    #[error("sweep over `{axis}` stopped at {value}: {source}")]
    SweepAborted {
        axis: String,
        value: f64,
        partial: Box<SweepResult>,
        #[source]
        source: FemError,
    },
    #[error("i/o on {path}: {message}")]
    Io { path: String, message: String },
}

impl StudyError {
    pub fn is_validation(&self) -> bool {
        match self {
            StudyError::Geometry(_) | StudyError::Invalid(_) => true,
            StudyError::Fem(e) | StudyError::SweepAborted { source: e, .. } => e.is_validation(),
            StudyError::Io { .. } => false,
        }
    }
}
