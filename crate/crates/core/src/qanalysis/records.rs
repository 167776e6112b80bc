use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::AnalysisError;

/// Relative agreement required between a printed and a recomputed Q.
pub const Q_TOLERANCE: f64 = 0.005;

/// `Q = 2π f T1` with `T1` in µs and `f` in GHz.
pub fn quality_factor(t1_us: f64, freq_ghz: f64) -> Result<f64, AnalysisError> {
    if !(t1_us > 0.0 && t1_us.is_finite()) || !(freq_ghz > 0.0 && freq_ghz.is_finite()) {
        return Err(AnalysisError::InvalidInput(format!("T1 = {t1_us} µs and f = {freq_ghz} GHz must both be positive")));
    }
    Ok(2.0 * PI * (freq_ghz * 1e9) * (t1_us * 1e-6))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Feature {
    pub value: f64,
    pub unit: String,
    /// Half-width of the reported range, if any.
    pub uncertainty: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QubitRecord {
    pub chip_id: String,
    pub qubit_id: String,
    pub substrate: String,
    pub capping: String,
    pub t1_avg_us: f64,
    pub t1_sigma_us: Option<f64>,
    pub freq_ghz: f64,
    /// Recomputed from T1 and f.
    pub q: f64,
    /// The table's own Q, when it has one.
    pub q_printed: Option<f64>,
    /// Printed and recomputed Q differ by more than [`Q_TOLERANCE`].
    pub q_mismatch: bool,
    pub features: BTreeMap<String, Feature>,
}

impl QubitRecord {
    pub fn id(&self) -> String {
        format!("{}/{}", self.chip_id, self.qubit_id)
    }

    pub fn feature(&self, name: &str) -> Option<f64> {
        self.features.get(name).map(|f| f.value)
    }
}

const REQUIRED: [&str; 7] = ["chip_id", "qubit_id", "substrate", "capping", "t1_avg_us", "t1_sigma_us", "freq_ghz"];

/// Reads a qubit table from CSV text. Lines starting with `#` are comments;
/// `q` is optional; `feat:<name>:<unit>` columns become features, with
/// cells like `5.5` or `5.5±1`.
pub fn parse_qubit_table(text: &str) -> Result<Vec<QubitRecord>, AnalysisError> {
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(text.as_bytes());
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| AnalysisError::RowError { row: 0, column: "header".into(), message: e.to_string() })?
        .iter()
        .map(str::to_string)
        .collect();
    let col = |name: &str| header.iter().position(|h| h == name);
    for name in REQUIRED {
        if col(name).is_none() {
            return Err(AnalysisError::RowError { row: 0, column: name.into(), message: "missing column".into() });
        }
    }
    let mut features = Vec::new();
    for (i, h) in header.iter().enumerate() {
        if let Some(rest) = h.strip_prefix("feat:") {
            let (name, unit) = rest.split_once(':').ok_or_else(|| AnalysisError::RowError { row: 0, column: h.clone(), message: "expected feat:<name>:<unit>".into() })?;
            features.push((i, name.to_string(), unit.to_string()));
        } else if !REQUIRED.contains(&h.as_str()) && h != "q" {
            return Err(AnalysisError::RowError { row: 0, column: h.clone(), message: "unknown column".into() });
        }
    }
    let mut out = Vec::new();
    for (r, rec) in rdr.records().enumerate() {
        let row = r + 1;
        let rec = rec.map_err(|e| AnalysisError::RowError { row, column: "*".into(), message: e.to_string() })?;
        let cell = |name: &str| rec.get(col(name).unwrap()).unwrap_or("");
        let num = |name: &str, text: &str| -> Result<f64, AnalysisError> {
            text.parse::<f64>().map_err(|e| AnalysisError::RowError { row, column: name.into(), message: format!("`{text}`: {e}") })
        };
        let opt = |name: &str| -> Result<Option<f64>, AnalysisError> {
            let t = cell(name);
            if t.is_empty() {
                Ok(None)
            } else {
                num(name, t).map(Some)
            }
        };
        let t1 = num("t1_avg_us", cell("t1_avg_us"))?;
        let freq = num("freq_ghz", cell("freq_ghz"))?;
        let q = quality_factor(t1, freq).map_err(|e| AnalysisError::RowError { row, column: if t1 > 0.0 { "freq_ghz" } else { "t1_avg_us" }.into(), message: e.to_string() })?;
        let q_printed = if col("q").is_some() { opt("q")? } else { None };
        let mut feats = BTreeMap::new();
        for (i, name, unit) in &features {
            let t = rec.get(*i).unwrap_or("");
            if let Some(f) = feature_cell(t, unit, row, &header[*i])? {
                feats.insert(name.clone(), f);
            }
        }
        let chip_id = cell("chip_id").to_string();
        if chip_id.is_empty() {
            return Err(AnalysisError::RowError { row, column: "chip_id".into(), message: "empty".into() });
        }
        out.push(QubitRecord {
            chip_id,
            qubit_id: cell("qubit_id").to_string(),
            substrate: cell("substrate").to_string(),
            capping: cell("capping").to_string(),
            t1_avg_us: t1,
            t1_sigma_us: opt("t1_sigma_us")?,
            freq_ghz: freq,
            q,
            q_mismatch: q_printed.is_some_and(|p| (p - q).abs() > Q_TOLERANCE * q),
            q_printed,
            features: feats,
        });
    }
    Ok(out)
}

/// Per-qubit features from a side table: `chip_id,qubit_id` plus
/// `feat:<name>:<unit>` columns, joined onto `records`. Returns how many
/// records gained a feature; a row naming an unknown qubit is an error.
pub fn attach_features(records: &mut [QubitRecord], text: &str) -> Result<usize, AnalysisError> {
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(text.as_bytes());
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| AnalysisError::RowError { row: 0, column: "header".into(), message: e.to_string() })?
        .iter()
        .map(str::to_string)
        .collect();
    if header.len() < 2 || header[0] != "chip_id" || header[1] != "qubit_id" {
        return Err(AnalysisError::RowError { row: 0, column: "chip_id".into(), message: "a feature table starts with chip_id,qubit_id".into() });
    }
    let mut touched = std::collections::BTreeSet::new();
    for (r, rec) in rdr.records().enumerate() {
        let row = r + 1;
        let rec = rec.map_err(|e| AnalysisError::RowError { row, column: "*".into(), message: e.to_string() })?;
        let (chip, qubit) = (rec.get(0).unwrap_or(""), rec.get(1).unwrap_or(""));
        let i = records
            .iter()
            .position(|q| q.chip_id == chip && q.qubit_id == qubit)
            .ok_or_else(|| AnalysisError::RowError { row, column: "qubit_id".into(), message: format!("no qubit {chip}/{qubit}") })?;
        for (k, column) in header.iter().enumerate().skip(2) {
            let (name, unit) = column
                .strip_prefix("feat:")
                .and_then(|c| c.split_once(':'))
                .ok_or_else(|| AnalysisError::RowError { row: 0, column: column.clone(), message: "expected feat:<name>:<unit>".into() })?;
            if let Some(f) = feature_cell(rec.get(k).unwrap_or(""), unit, row, column)? {
                records[i].features.insert(name.to_string(), f);
                touched.insert(i);
            }
        }
    }
    Ok(touched.len())
}

fn feature_cell(text: &str, unit: &str, row: usize, column: &str) -> Result<Option<Feature>, AnalysisError> {
    if text.is_empty() {
        return Ok(None);
    }
    let num = |t: &str| t.trim().parse::<f64>().map_err(|e| AnalysisError::RowError { row, column: column.into(), message: format!("`{t}`: {e}") });
    let (value, uncertainty) = match text.split_once('±') {
        Some((v, u)) => (num(v)?, Some(num(u)?)),
        None => (num(text)?, None),
    };
    Ok(Some(Feature { value, unit: unit.to_string(), uncertainty }))
}

pub fn load_qubit_table(path: &Path) -> Result<Vec<QubitRecord>, AnalysisError> {
    let text = std::fs::read_to_string(path).map_err(|e| AnalysisError::Io { path: path.display().to_string(), message: e.to_string() })?;
    parse_qubit_table(&text)
}
