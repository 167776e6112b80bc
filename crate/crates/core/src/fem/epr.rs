use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{FieldSolution, TraceStep};
use crate::geometry::Material;

/// Participation ratios of one solve.
///
/// `epr_sum` is the surface participation (`epr_top + epr_side`); every
/// ratio is a region energy over the total stored energy `W_0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EprReport {
    pub epr_top: f64,
    pub epr_side: f64,
    pub epr_sum: f64,
    pub epr_substrate: f64,
    pub epr_vacuum: f64,
    /// Total stored energy, J/m.
    #[serde(rename = "W_0")]
    pub w0: f64,
    /// Energy per region name, J/m.
    pub region_energies: BTreeMap<String, f64>,
    pub order: u8,
    pub generation: u32,
    pub elements: usize,
    /// One entry per adaptive cycle; empty for a single solve.
    #[serde(default)]
    pub trace: Vec<TraceStep>,
}

impl EprReport {
    /// Builds a report from region energies, normalising by their sum.
    pub fn from_energies(energies: BTreeMap<String, f64>, order: u8, generation: u32, elements: usize) -> Self {
        let w0: f64 = energies.values().sum();
        let ratio = |m: Material| energies.get(m.tag()).copied().unwrap_or(0.0) / w0;
        let (epr_top, epr_side) = (ratio(Material::OxideTop), ratio(Material::OxideSide));
        EprReport {
            epr_top,
            epr_side,
            epr_sum: epr_top + epr_side,
            epr_substrate: ratio(Material::Substrate),
            epr_vacuum: ratio(Material::Vacuum),
            w0,
            region_energies: energies,
            order,
            generation,
            elements,
            trace: Vec::new(),
        }
    }

    /// Participation of every region, in name order.
    pub fn ratios(&self) -> impl Iterator<Item = (&str, f64)> + '_ {
        self.region_energies.iter().map(|(k, &e)| (k.as_str(), e / self.w0))
    }
}

/// Participation ratios of a solution: each non-metal material's energy
/// over the total.
pub fn compute_epr(sol: &FieldSolution<'_>) -> EprReport {
    let energies = Material::ALL
        .into_iter()
        .filter(|&m| m != Material::Metal)
        .map(|m| (m.tag().to_string(), sol.material_energy(m)))
        .collect();
    EprReport::from_energies(energies, sol.order, sol.mesh.generation, sol.mesh.triangles.len())
}
