use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::StudyError;
use crate::fem::{adaptive_epr_with, AdaptiveOptions, EprReport, FemError};
use crate::geometry::{GeometryParams, NUMERIC_FIELDS};

pub const CSV_HEADER: &str = "axis_value,epr_top,epr_side,epr_sum,epr_substrate,epr_vacuum,w0_j_per_m,elements,order,generations";

/// Where a result came from: a digest of everything that determined it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub config_hash: String,
    pub code_version: String,
}

impl Provenance {
    pub(crate) fn of(parts: &impl Serialize) -> Self {
        let json = serde_json::to_vec(parts).expect("plain data serialises");
        let digest = Sha256::digest(&json);
        Provenance {
            config_hash: digest.iter().fold(String::new(), |mut s, b| {
                let _ = write!(s, "{b:02x}");
                s
            }),
            code_version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub axis: String,
    /// Strictly increasing.
    pub values: Vec<f64>,
    pub reports: Vec<EprReport>,
    pub base: GeometryParams,
    pub provenance: Provenance,
}

impl SweepResult {
    pub fn epr_sum(&self) -> Vec<f64> {
        self.reports.iter().map(|r| r.epr_sum).collect()
    }

    /// One row per point under [`CSV_HEADER`].
    pub fn to_csv(&self) -> String {
        let mut s = String::from(CSV_HEADER);
        s.push('\n');
        for (v, r) in self.values.iter().zip(&self.reports) {
            let _ = writeln!(
                s,
                "{v},{},{},{},{},{},{},{},{},{}",
                r.epr_top, r.epr_side, r.epr_sum, r.epr_substrate, r.epr_vacuum, r.w0, r.elements, r.order, r.generation
            );
        }
        s
    }

    /// Largest relative deviation of `epr_sum` from its mean.
    pub fn spread(&self) -> f64 {
        let v = self.epr_sum();
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        v.iter().map(|x| (x - mean).abs() / mean).fold(0.0, f64::max)
    }
}

fn check_axis(axis: &str) -> Result<(), StudyError> {
    if NUMERIC_FIELDS.contains(&axis) {
        Ok(())
    } else {
        Err(StudyError::Invalid(format!("`{axis}` is not a geometry parameter")))
    }
}

/// Evaluates `base` with `axis` set to each value, in parallel. Values may
/// come in any order; the result is sorted by value. A failing point stops
/// the sweep there and returns the points below it in the error.
pub fn run_sweep(base: &GeometryParams, axis: &str, values: &[f64], opts: &AdaptiveOptions) -> Result<SweepResult, StudyError> {
    check_axis(axis)?;
    opts.validate()?;
    if values.is_empty() {
        return Err(StudyError::Invalid("a sweep needs at least one value".into()));
    }
    let mut values = values.to_vec();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(StudyError::Invalid("sweep values must be finite".into()));
    }
    values.sort_by(f64::total_cmp);
    if values.windows(2).any(|w| w[0] == w[1]) {
        return Err(StudyError::Invalid(format!("repeated value on `{axis}`")));
    }
    let points: Vec<GeometryParams> = values.iter().map(|&v| base.with(axis, v)).collect::<Result<_, _>>()?;
    for p in &points {
        p.validate()?;
    }
    let outcomes: Vec<Result<EprReport, FemError>> = points.par_iter().map(|p| adaptive_epr_with(p, opts).map(|(r, _)| r)).collect();
    let provenance = Provenance::of(&(base, axis, &values, opts));
    let mut reports = Vec::with_capacity(values.len());
    for (i, o) in outcomes.into_iter().enumerate() {
        match o {
            Ok(r) => reports.push(r),
            Err(source) => {
                let partial = SweepResult { axis: axis.to_string(), values: values[..i].to_vec(), reports, base: base.clone(), provenance };
                return Err(StudyError::SweepAborted { axis: axis.to_string(), value: values[i], partial: Box::new(partial), source });
            }
        }
    }
    Ok(SweepResult { axis: axis.to_string(), values, reports, base: base.clone(), provenance })
}

/// An undercut-distance sweep at the base angle and an undercut-angle sweep
/// at the base distance, both at the base trench depth.
pub fn run_undercut_sweep(base: &GeometryParams, x_values: &[f64], beta_values: &[f64], opts: &AdaptiveOptions) -> Result<(SweepResult, SweepResult), StudyError> {
    if base.trench_depth <= 0.0 {
        return Err(StudyError::Invalid("an undercut sweep needs a trench".into()));
    }
    Ok((run_sweep(base, "undercut_x", x_values, opts)?, run_sweep(base, "undercut_beta", beta_values, opts)?))
}
