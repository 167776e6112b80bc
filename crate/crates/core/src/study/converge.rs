use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::StudyError;
use crate::fem::{adaptive_epr_with, AdaptiveOptions};
use crate::geometry::GeometryParams;

/// Agreement required between the extrapolated estimates of the two orders.
pub const CROSS_ORDER_TOL: f64 = 0.05;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub order: u8,
    pub generation: u32,
    pub elements: usize,
    pub epr_sum: f64,
    pub w0: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub rows: Vec<ConvergenceRow>,
    /// `(order, extrapolated EPR_sum)`.
    pub extrapolated: Vec<(u8, f64)>,
    /// Per order: the last two successive differences did not grow.
    pub settling: Vec<(u8, bool)>,
    /// Relative spread of the extrapolated estimates across orders.
    pub cross_order: f64,
    /// Set when the orders disagree by more than 5%.
    pub non_convergent: bool,
}

/// Three-term extrapolation of a geometrically converging sequence
/// (Aitken's Δ², i.e. Richardson with the observed ratio). Falls back to
/// the last value unless the differences shrink with a ratio in (0, 1).
pub fn richardson(seq: &[f64]) -> f64 {
    let n = seq.len();
    let last = seq[n - 1];
    if n < 3 {
        return last;
    }
    let (d1, d2) = (seq[n - 2] - seq[n - 3], last - seq[n - 2]);
    if d1 == 0.0 {
        return last;
    }
    let ratio = d2 / d1;
    if !(ratio > 0.0 && ratio < 1.0) {
        return last;
    }
    last + d2 * ratio / (1.0 - ratio)
}

/// Runs `max_generations` bisection passes per order (so `max_generations + 1`
/// solves) with no early exit and extrapolates each order's sequence.
pub fn convergence_study(params: &GeometryParams, orders: &[u8], max_generations: u32, opts: &AdaptiveOptions) -> Result<ConvergenceReport, StudyError> {
    if max_generations < 2 {
        return Err(StudyError::Invalid(format!("max_generations must be at least 2, got {max_generations}")));
    }
    if orders.is_empty() {
        return Err(StudyError::Invalid("no element orders given".into()));
    }
    let runs: Vec<_> = orders
        .par_iter()
        .map(|&order| {
            let o = AdaptiveOptions { order, iterations: max_generations + 1, rel_tol: 0.0, ..opts.clone() };
            adaptive_epr_with(params, &o).map(|(r, _)| (order, r))
        })
        .collect::<Result<_, _>>()?;
    let mut rows = Vec::new();
    let mut extrapolated = Vec::new();
    let mut settling = Vec::new();
    for (order, r) in &runs {
        let seq: Vec<f64> = r.trace.iter().map(|s| s.epr_sum).collect();
        rows.extend(r.trace.iter().map(|s| ConvergenceRow { order: *order, generation: s.generation, elements: s.elements, epr_sum: s.epr_sum, w0: s.w0 }));
        extrapolated.push((*order, richardson(&seq)));
        let n = seq.len();
        settling.push((*order, (seq[n - 1] - seq[n - 2]).abs() <= (seq[n - 2] - seq[n - 3]).abs()));
    }
    let (lo, hi) = extrapolated.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &(_, v)| (l.min(v), h.max(v)));
    let cross_order = if hi > 0.0 { (hi - lo) / hi } else { 0.0 };
    Ok(ConvergenceReport { rows, extrapolated, settling, cross_order, non_convergent: cross_order > CROSS_ORDER_TOL })
}
