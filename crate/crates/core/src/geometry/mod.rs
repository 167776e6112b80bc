//! Parameterised pad-edge cross-sections.

mod build;
mod params;
mod point;
mod section;
mod validate;

use thiserror::Error;

pub use build::{build_cross_section, CHORD_TOLERANCE, MAX_ARC_STEP};
pub use params::{GeometryParams, EPS_SAPPHIRE, EPS_SILICON, NUMERIC_FIELDS};
pub use point::*;
pub use section::*;
pub use validate::{validate_cross_section, Violation, VERTEX_TOLERANCE};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("invalid `{field}`: {reason}")]
    InvalidParams { field: &'static str, reason: String },
    /// Two parameters that cannot hold together.
    #[error("`{first}` conflicts with `{second}`: {detail}")]
    GeometryConflict { first: &'static str, second: &'static str, detail: String },
    #[error("unknown geometry field `{0}`")]
    UnknownField(String),
}

impl GeometryError {
    /// The parameter(s) at fault, for diagnostics.
    pub fn fields(&self) -> Vec<&str> {
        match self {
            GeometryError::InvalidParams { field, .. } => vec![field],
            GeometryError::GeometryConflict { first, second, .. } => vec![first, second],
            GeometryError::UnknownField(f) => vec![f.as_str()],
        }
    }
}
