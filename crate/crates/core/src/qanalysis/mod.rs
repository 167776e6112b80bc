//! Measured qubits: quality factors, rank correlations against materials
//! features, loss budgets and single-anchor prediction bands.

mod band;
mod records;
mod stats;

use thiserror::Error;

pub use band::{band_membership, default_anchor, loss_budget_q, predict_q_band, EprCurve, Interface, LossModel, Membership, MembershipSummary, PredictionBand, Side};
pub use records::{attach_features, load_qubit_table, parse_qubit_table, quality_factor, Feature, QubitRecord, Q_TOLERANCE};
pub use stats::{correlate_feature, kendall_tau, midranks, pearson, spearman, CorrelationResult};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    /// A table cell could not be read; rows count from 1 after the header.
    #[error("row {row}, column `{column}`: {message}")]
    RowError { row: usize, column: String, message: String },
    #[error("{0}")]
    InvalidInput(String),
    #[error("`{feature}` needs at least 3 records, found {found}")]
    InsufficientData { feature: String, found: usize },
    #[error("`{0}` is constant, so its rank correlation is undefined")]
    ConstantFeature(String),
    #[error("record {0} lacks feature `{1}`")]
    MissingFeature(String, String),
    #[error("unknown interface `{0}`")]
    UnknownInterface(String),
    /// The modelled surface loss alone exceeds the anchor's measured loss.
    #[error("anchor {anchor} is infeasible: surface loss {surface:.3e} exceeds 1/Q = {measured:.3e}")]
    AnchorInfeasible { anchor: String, surface: f64, measured: f64 },
    #[error("i/o on {path}: {message}")]
    Io { path: String, message: String },
}
