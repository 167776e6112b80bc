use std::collections::BTreeMap;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{AnalysisError, QubitRecord};
use crate::fem::EprReport;
use crate::study::SweepResult;

/// A participation a loss tangent can attach to.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Interface {
    Top,
    Side,
    /// Top plus side oxide.
    Surface,
    Substrate,
    Vacuum,
    /// A named mesh region, e.g. `oxide_side_left`.
    Region(String),
}

impl Interface {
    pub fn parse(name: &str) -> Self {
        match name {
            "top" => Self::Top,
            "side" => Self::Side,
            "surface" | "oxide" => Self::Surface,
            "substrate" => Self::Substrate,
            "vacuum" => Self::Vacuum,
            other => Self::Region(other.to_string()),
        }
    }

    fn participation(&self, r: &EprReport) -> Result<f64, AnalysisError> {
        Ok(match self {
            Self::Top => r.epr_top,
            Self::Side => r.epr_side,
            Self::Surface => r.epr_sum,
            Self::Substrate => r.epr_substrate,
            Self::Vacuum => r.epr_vacuum,
            Self::Region(name) => match r.region_energies.get(name) {
                Some(w) if r.w0 > 0.0 => w / r.w0,
                _ => return Err(AnalysisError::UnknownInterface(name.clone())),
            },
        })
    }
}

/// Reciprocal loss budget: `1/Q = Σ p_i tanδ_i + 1/q_other`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LossModel {
    /// Interface name → loss tangent.
    pub tan_delta: BTreeMap<String, f64>,
    /// Residual quality factor from everything not modelled; `null` is ∞.
    #[serde(default = "infinite", serialize_with = "ser_q", deserialize_with = "de_q")]
    pub q_other: f64,
}

fn infinite() -> f64 {
    f64::INFINITY
}

fn ser_q<S: Serializer>(q: &f64, s: S) -> Result<S::Ok, S::Error> {
    if q.is_finite() { s.serialize_some(q) } else { s.serialize_none() }
}

fn de_q<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
}

impl LossModel {
    /// Oxide on every surface at the native-oxide loss tangent of ~0.1.
    pub fn oxide(tan_delta: f64) -> Self {
        Self { tan_delta: BTreeMap::from([("surface".to_string(), tan_delta)]), q_other: f64::INFINITY }
    }

    pub fn validate(&self) -> Result<(), AnalysisError> {
        for (name, t) in &self.tan_delta {
            if !(t.is_finite() && *t >= 0.0) {
                return Err(AnalysisError::InvalidInput(format!("tan_delta for `{name}` must be finite and ≥ 0, got {t}")));
            }
        }
        if !(self.q_other > 0.0) {
            return Err(AnalysisError::InvalidInput(format!("q_other must be > 0, got {}", self.q_other)));
        }
        Ok(())
    }

    /// `Σ p_i tanδ_i`, without the residual term.
    pub fn dielectric_loss(&self, report: &EprReport) -> Result<f64, AnalysisError> {
        self.validate()?;
        let mut loss = 0.0;
        for (name, t) in &self.tan_delta {
            loss += Interface::parse(name).participation(report)? * t;
        }
        Ok(loss)
    }
}

pub fn loss_budget_q(report: &EprReport, model: &LossModel) -> Result<f64, AnalysisError> {
    Ok(1.0 / (model.dielectric_loss(report)? + 1.0 / model.q_other))
}

/// Participations along one sweep axis, sorted by axis value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EprCurve {
    pub axis: String,
    pub values: Vec<f64>,
    pub reports: Vec<EprReport>,
}

impl EprCurve {
    /// Points may come in any order; duplicates are rejected.
    pub fn new(axis: &str, points: Vec<(f64, EprReport)>) -> Result<Self, AnalysisError> {
        let mut points = points;
        if points.len() < 2 {
            return Err(AnalysisError::InvalidInput("a curve needs at least two points".into()));
        }
        if points.iter().any(|(v, _)| !v.is_finite()) {
            return Err(AnalysisError::InvalidInput("curve values must be finite".into()));
        }
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
        if points.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(AnalysisError::InvalidInput("duplicate curve values".into()));
        }
        let (values, reports) = points.into_iter().unzip();
        Ok(Self { axis: axis.to_string(), values, reports })
    }

    pub fn range(&self) -> (f64, f64) {
        (self.values[0], *self.values.last().unwrap())
    }
}

impl TryFrom<&SweepResult> for EprCurve {
    type Error = AnalysisError;

    fn try_from(s: &SweepResult) -> Result<Self, AnalysisError> {
        Self::new(&s.axis, s.values.iter().copied().zip(s.reports.iter().cloned()).collect())
    }
}

fn interpolate(xs: &[f64], ys: &[f64], x: f64) -> Option<f64> {
    if !(x >= xs[0] && x <= *xs.last().unwrap()) {
        return None;
    }
    let i = xs.partition_point(|&v| v <= x).clamp(1, xs.len() - 1);
    let (x0, x1) = (xs[i - 1], xs[i]);
    let s = (x - x0) / (x1 - x0);
    Some(ys[i - 1] + s * (ys[i] - ys[i - 1]))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredictionBand {
    /// Record feature the axis is read from.
    pub feature: String,
    pub values: Vec<f64>,
    /// Modelled dielectric loss `Σ p_i tanδ_i` at each value.
    pub loss: Vec<f64>,
    pub q_low: Vec<f64>,
    pub q_mid: Vec<f64>,
    pub q_high: Vec<f64>,
    pub anchor_id: String,
    pub anchor_value: f64,
    pub rel_err: f64,
    /// Residual Q solved from the anchor; `null` is ∞.
    #[serde(serialize_with = "ser_q", deserialize_with = "de_q")]
    pub q_other: f64,
}

impl PredictionBand {
    fn qs(&self, loss: f64) -> (f64, f64, f64) {
        let b = 1.0 / self.q_other;
        (1.0 / ((1.0 + self.rel_err) * loss + b), 1.0 / (loss + b), 1.0 / ((1.0 - self.rel_err) * loss + b))
    }

    /// `(q_low, q_mid, q_high)` at `v`, or `None` outside the curve.
    pub fn q_at(&self, v: f64) -> Option<(f64, f64, f64)> {
        interpolate(&self.values, &self.loss, v).map(|l| self.qs(l))
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("axis_value,loss,q_low,q_mid,q_high\n");
        for i in 0..self.values.len() {
            s += &format!("{},{:e},{:e},{:e},{:e}\n", self.values[i], self.loss[i], self.q_low[i], self.q_mid[i], self.q_high[i]);
        }
        s
    }
}

/// Anchors `model` to one measured qubit: the residual `q_other` is solved so
/// the band's centre passes through the anchor's Q at `anchor_value`, and the
/// modelled dielectric loss is then scaled by `1 ± rel_err`. The model's own
/// `q_other` is ignored.
pub fn predict_q_band(curve: &EprCurve, model: &LossModel, feature: &str, anchor: &QubitRecord, anchor_value: f64, rel_err: f64) -> Result<PredictionBand, AnalysisError> {
    if !(0.0..1.0).contains(&rel_err) {
        return Err(AnalysisError::InvalidInput(format!("rel_err must lie in [0, 1), got {rel_err}")));
    }
    if !(anchor.q > 0.0 && anchor.q.is_finite()) {
        return Err(AnalysisError::InvalidInput(format!("anchor {} has Q = {}", anchor.id(), anchor.q)));
    }
    let loss = curve.reports.iter().map(|r| model.dielectric_loss(r)).collect::<Result<Vec<_>, _>>()?;
    let surface = interpolate(&curve.values, &loss, anchor_value).ok_or_else(|| {
        let (lo, hi) = curve.range();
        AnalysisError::InvalidInput(format!("anchor value {anchor_value} lies outside the curve [{lo}, {hi}]"))
    })?;
    let residual = 1.0 / anchor.q - surface;
    if residual < 0.0 {
        return Err(AnalysisError::AnchorInfeasible { anchor: anchor.id(), surface, measured: 1.0 / anchor.q });
    }
    let mut band = PredictionBand {
        feature: feature.to_string(),
        values: curve.values.clone(),
        loss,
        q_low: vec![],
        q_mid: vec![],
        q_high: vec![],
        anchor_id: anchor.id(),
        anchor_value,
        rel_err,
        q_other: 1.0 / residual,
    };
    for i in 0..band.values.len() {
        let (l, m, h) = band.qs(band.loss[i]);
        band.q_low.push(l);
        band.q_mid.push(m);
        band.q_high.push(h);
    }
    Ok(band)
}

/// The best-measured qubit of a chip: smallest relative T1 spread, or the
/// highest Q when no spreads are recorded.
pub fn default_anchor<'a>(records: &'a [QubitRecord], chip_id: &str) -> Option<&'a QubitRecord> {
    let chip: Vec<&QubitRecord> = records.iter().filter(|r| r.chip_id == chip_id).collect();
    let spread = |r: &QubitRecord| r.t1_sigma_us.map(|s| s / r.t1_avg_us);
    if chip.iter().all(|r| spread(r).is_some()) {
        chip.into_iter().min_by(|a, b| spread(a).unwrap().total_cmp(&spread(b).unwrap()))
    } else {
        chip.into_iter().max_by(|a, b| a.q.total_cmp(&b.q))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Below,
    Inside,
    Above,
    /// The record's feature lies outside the simulated axis range.
    OutOfRange,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Membership {
    pub record: String,
    pub value: f64,
    pub q: f64,
    pub side: Side,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MembershipSummary {
    pub inside: usize,
    pub below: usize,
    pub above: usize,
    pub out_of_range: usize,
    pub total: usize,
}

// Relative slack so a record sitting exactly on an edge, like the anchor with
// rel_err = 0, is not lost to rounding.
const EDGE_SLACK: f64 = 1e-12;

pub fn band_membership(records: &[QubitRecord], band: &PredictionBand) -> Result<(Vec<Membership>, MembershipSummary), AnalysisError> {
    let mut out = Vec::with_capacity(records.len());
    let mut sum = MembershipSummary { total: records.len(), ..Default::default() };
    for r in records {
        let v = r.feature(&band.feature).ok_or_else(|| AnalysisError::MissingFeature(r.id(), band.feature.clone()))?;
        let side = match band.q_at(v) {
            None => Side::OutOfRange,
            Some((lo, _, _)) if r.q < lo * (1.0 - EDGE_SLACK) => Side::Below,
            Some((_, _, hi)) if r.q > hi * (1.0 + EDGE_SLACK) => Side::Above,
            Some(_) => Side::Inside,
        };
        match side {
            Side::Below => sum.below += 1,
            Side::Inside => sum.inside += 1,
            Side::Above => sum.above += 1,
            Side::OutOfRange => sum.out_of_range += 1,
        }
        out.push(Membership { record: r.id(), value: v, q: r.q, side });
    }
    Ok((out, sum))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interpolation_hits_nodes_and_midpoints() {
        let xs = [0.0, 1.0, 3.0];
        let ys = [1.0, 3.0, 7.0];
        assert_eq!(interpolate(&xs, &ys, 1.0), Some(3.0));
        assert_eq!(interpolate(&xs, &ys, 3.0), Some(7.0));
        assert_eq!(interpolate(&xs, &ys, 2.0), Some(5.0));
        assert_eq!(interpolate(&xs, &ys, 3.5), None);
    }

    #[test]
    fn q_other_null_round_trips_as_infinity() {
        let m: LossModel = serde_json::from_str(r#"{"tan_delta":{"surface":0.1},"q_other":null}"#).unwrap();
        assert!(m.q_other.is_infinite());
        let m: LossModel = serde_json::from_str(r#"{"tan_delta":{}}"#).unwrap();
        assert!(m.q_other.is_infinite());
        assert_eq!(serde_json::to_string(&m).unwrap(), r#"{"tan_delta":{},"q_other":null}"#);
    }
}
