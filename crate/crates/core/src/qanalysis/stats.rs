use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{AnalysisError, QubitRecord};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationResult {
    pub feature: String,
    pub n: usize,
    pub spearman: f64,
    pub kendall: f64,
    /// Sign of the Q-versus-feature trend: −1, 0 or 1.
    pub sign: i8,
    pub grouped: bool,
}

/// Ranks from 1, ties sharing their mean rank.
pub fn midranks(x: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut r = vec![0.0; x.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && x[idx[j + 1]] == x[idx[i]] {
            j += 1;
        }
        let mid = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            r[k] = mid;
        }
        i = j + 1;
    }
    r
}

pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0)
}

pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    pearson(&midranks(x), &midranks(y))
}

/// Kendall's τ-b, which corrects for ties in either variable.
pub fn kendall_tau(x: &[f64], y: &[f64]) -> f64 {
    let (mut concordant, mut discordant, mut tx, mut ty) = (0i64, 0i64, 0i64, 0i64);
    for i in 0..x.len() {
        for j in i + 1..x.len() {
            let (dx, dy) = (x[i].total_cmp(&x[j]) as i64, y[i].total_cmp(&y[j]) as i64);
            match (dx, dy) {
                (0, 0) => {}
                (0, _) => tx += 1,
                (_, 0) => ty += 1,
                _ if dx == dy => concordant += 1,
                _ => discordant += 1,
            }
        }
    }
    let n0 = (concordant + discordant) as f64;
    (((concordant - discordant) as f64) / ((n0 + tx as f64) * (n0 + ty as f64)).sqrt()).clamp(-1.0, 1.0)
}

fn constant(v: &[f64]) -> bool {
    v.iter().all(|&a| a == v[0])
}

/// Rank correlation between Q and `feature`. Grouped by chip, the per-chip
/// statistics of every chip with at least three usable records are averaged
/// with weights equal to their sizes; chips where the feature does not vary
/// are skipped.
pub fn correlate_feature(records: &[QubitRecord], feature: &str, group_by_chip: bool) -> Result<CorrelationResult, AnalysisError> {
    let with: Vec<&QubitRecord> = records.iter().filter(|r| r.feature(feature).is_some()).collect();
    let pairs = |rs: &[&QubitRecord]| -> (Vec<f64>, Vec<f64>) { rs.iter().map(|r| (r.feature(feature).unwrap(), r.q)).unzip() };
    let result = |n, rho: f64, tau: f64, grouped| CorrelationResult {
        feature: feature.to_string(),
        n,
        spearman: rho,
        kendall: tau,
        sign: if rho > 0.0 { 1 } else if rho < 0.0 { -1 } else { 0 },
        grouped,
    };
    if !group_by_chip {
        if with.len() < 3 {
            return Err(AnalysisError::InsufficientData { feature: feature.into(), found: with.len() });
        }
        let (x, q) = pairs(&with);
        if constant(&x) {
            return Err(AnalysisError::ConstantFeature(feature.into()));
        }
        if constant(&q) {
            return Err(AnalysisError::ConstantFeature("q".into()));
        }
        return Ok(result(x.len(), spearman(&x, &q), kendall_tau(&x, &q), false));
    }
    let mut chips: BTreeMap<&str, Vec<&QubitRecord>> = BTreeMap::new();
    for r in &with {
        chips.entry(r.chip_id.as_str()).or_default().push(r);
    }
    let (mut n, mut rho, mut tau, mut any_large) = (0usize, 0.0, 0.0, false);
    for group in chips.values().filter(|g| g.len() >= 3) {
        any_large = true;
        let (x, q) = pairs(group);
        if constant(&x) || constant(&q) {
            continue;
        }
        n += x.len();
        rho += x.len() as f64 * spearman(&x, &q);
        tau += x.len() as f64 * kendall_tau(&x, &q);
    }
    if !any_large {
        return Err(AnalysisError::InsufficientData { feature: feature.into(), found: chips.values().map(Vec::len).max().unwrap_or(0) });
    }
    if n == 0 {
        return Err(AnalysisError::ConstantFeature(feature.into()));
    }
    Ok(result(n, rho / n as f64, tau / n as f64, true))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ties_share_midranks() {
        assert_eq!(midranks(&[3.0, 1.0, 3.0, 2.0]), vec![3.5, 1.0, 3.5, 2.0]);
    }

    #[test]
    fn known_tau_b_with_ties() {
        // one tie in x: C = 4, D = 1, tx = 1 → τb = 3/√(6·5)
        let x = [1.0, 2.0, 2.0, 3.0];
        let y = [1.0, 3.0, 2.0, 0.5];
        let mut c = 0;
        let mut d = 0;
        for i in 0..4 {
            for j in i + 1..4 {
                let s = (x[i] - x[j]) * (y[i] - y[j]);
                if s > 0.0 {
                    c += 1
                } else if s < 0.0 {
                    d += 1
                }
            }
        }
        let expected = (c - d) as f64 / (((c + d + 1) * (c + d)) as f64).sqrt();
        assert!((kendall_tau(&x, &y) - expected).abs() < 1e-12);
    }
}
