//! Electrostatics on a cross-section mesh and the participation ratios
//! derived from it.
//!
//! Metal is a perfect conductor: its surfaces are Dirichlet boundaries and
//! its interior is not part of the solve. Energies are per unit length out
//! of the plane, in J/m.

mod adaptive;
mod corner;
mod epr;
mod solution;
mod solver;
mod space;
mod thin;

use thiserror::Error;

pub use adaptive::{adaptive_epr, adaptive_epr_with, refinement_indicators, AdaptiveOptions, Indicator, TraceStep};
pub use corner::{fit_corner_exponent, fit_corner_exponent_n, CornerFit, MIN_FIT_RADII};
pub use epr::{compute_epr, EprReport};
pub use solution::{solve_potential, solve_potential_with, BoundaryConditions, FieldSolution};
pub use solver::{SolveStats, SolverKind, SolverOptions};
pub use thin::{thin_layer_epr, LayerLocation, ThinLayer};

/// Vacuum permittivity, F/m.
pub const EPS0: f64 = 8.8541878128e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FemError {
    #[error("singular system: {0}")]
    SingularSystem(String),
    #[error("solver stopped after {iterations} iterations at relative residual {rel_residual:.3e} ({detail})")]
    NonConvergence { iterations: usize, rel_residual: f64, detail: String },
    #[error("unknown material `{0}`")]
    UnknownMaterial(String),
    #[error("element order must be 1 or 2, got {0}")]
    InvalidOrder(u8),
    #[error("pad voltage must be finite and non-zero")]
    ZeroVoltage,
    /// The log-log fit is too noisy to trust; the corner is under-resolved.
    #[error("corner fit is poor: eta = {eta:.4}, R² = {r2:.4}")]
    PoorFit { eta: f64, r2: f64 },
    #[error("corner fit precondition violated: {0}")]
    FitPrecondition(String),
    /// The thin-layer estimate is unreliable for a layer this thick.
    #[error("layer of {thickness} nm is too thick for the thin-layer estimate (limit {limit} nm)")]
    LayerTooThick { thickness: f64, limit: f64 },
    #[error("invalid option: {0}")]
    InvalidOption(String),
    #[error(transparent)]
    Geometry(#[from] crate::geometry::GeometryError),
    #[error(transparent)]
    Mesh(#[from] crate::mesh::MeshError),
}

impl FemError {
    pub fn is_validation(&self) -> bool {
        match self {
            FemError::SingularSystem(_) | FemError::NonConvergence { .. } | FemError::PoorFit { .. } => false,
            FemError::Mesh(e) => e.is_validation(),
            _ => true,
        }
    }
}
