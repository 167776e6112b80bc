use thiserror::Error;

use crate::{fem::FemError, geometry::GeometryError, mesh::MeshError, qanalysis::AnalysisError, study::StudyError};

/// Any failure surfaced by the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Fem(#[from] FemError),
    #[error(transparent)]
    Study(#[from] StudyError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
}

impl Error {
    /// True for failures caused by bad input rather than by the numerics.
    pub fn is_validation(&self) -> bool {
        match self {
            Error::Geometry(_) | Error::Analysis(_) => true,
            Error::Mesh(e) => e.is_validation(),
            Error::Fem(e) => e.is_validation(),
            Error::Study(e) => e.is_validation(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
