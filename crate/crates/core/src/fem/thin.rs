//! Thin-layer participation from a solve without the layer.
//!
//! Next to a conductor the field is normal, and a layer of thickness `t`
//! and permittivity `ε_l` carries `E_in = ε_out/ε_l · E_n`, so it stores
//! `½ε₀ (ε_out²/ε_l) E_n² t` per unit surface. The layer also displaces
//! `½ε₀ ε_out E_n² t` of the surrounding medium, which is subtracted from
//! that medium's energy. Across a dielectric interface the tangential field
//! is continuous instead and contributes `½ε₀ ε_l E_t² t`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{EprReport, FemError, FieldSolution, EPS0};
use crate::geometry::{dist_to_segment, BoundaryTag, GeometryParams, Material, MetalSurface, Point, SurfaceKind};

/// Gauss–Legendre points on [0, 1].
const GAUSS2: [(f64, f64); 2] = [(0.211_324_865_405_187_1, 0.5), (0.788_675_134_594_812_9, 0.5)];

/// Distance within which an electrode edge is matched to a surface, nm.
const SURFACE_MATCH: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LayerLocation {
    Top,
    Side,
    /// The exposed substrate surface between the electrodes.
    SubstrateAir,
}

impl LayerLocation {
    fn region(self) -> &'static str {
        match self {
            LayerLocation::Top => Material::OxideTop.tag(),
            LayerLocation::Side => Material::OxideSide.tag(),
            LayerLocation::SubstrateAir => "substrate_air",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThinLayer {
    pub location: LayerLocation,
    /// nm
    pub thickness: f64,
    pub eps: f64,
}

impl ThinLayer {
    /// The layers `p` describes: top and side oxide, plus the substrate–air
    /// layer when it has a thickness.
    pub fn from_params(p: &GeometryParams) -> Vec<ThinLayer> {
        let mut v = vec![
            ThinLayer { location: LayerLocation::Top, thickness: p.top_oxide(), eps: p.eps_oxide },
            ThinLayer { location: LayerLocation::Side, thickness: p.side_oxide(), eps: p.eps_oxide },
        ];
        if p.sa_thickness > 0.0 {
            v.push(ThinLayer { location: LayerLocation::SubstrateAir, thickness: p.sa_thickness, eps: p.eps_sa });
        }
        v
    }

    /// The smallest radius of curvature in `p`'s profile: the film thickness
    /// or a non-zero rounding radius.
    pub fn curvature_floor(p: &GeometryParams) -> f64 {
        [p.film_thickness, p.r1, p.r2].into_iter().filter(|&r| r > 0.0).fold(f64::INFINITY, f64::min)
    }
}

fn on_surface(s: &MetalSurface, p: Point) -> bool {
    s.points.windows(2).any(|w| dist_to_segment(p, w[0], w[1]) < SURFACE_MATCH)
}

/// Thin-layer participation ratios computed from `sol_bare`, a solve of the
/// geometry without oxide regions.
///
/// Electrode edges are attributed to a layer through `surfaces`; edges on
/// no surface (the film's underside) carry none. Layers thicker than
/// `0.2 × curvature_floor` are refused.
pub fn thin_layer_epr(sol_bare: &FieldSolution<'_>, surfaces: &[MetalSurface], layers: &[ThinLayer], curvature_floor: f64) -> Result<EprReport, FemError> {
    let limit = 0.2 * curvature_floor;
    for l in layers {
        if !(l.thickness >= 0.0) || !(l.eps > 0.0) {
            return Err(FemError::InvalidOption(format!("layer {:?} needs t ≥ 0 and ε > 0", l.location)));
        }
        if l.thickness > limit {
            return Err(FemError::LayerTooThick { thickness: l.thickness, limit });
        }
    }
    let mesh = sol_bare.mesh;
    let mut energies: BTreeMap<String, f64> = Material::ALL
        .into_iter()
        .filter(|&m| m != Material::Metal)
        .map(|m| (m.tag().to_string(), sol_bare.material_energy(m)))
        .collect();
    let nbr = mesh.neighbors();

    // element owning each directed boundary edge
    let mut owner = std::collections::HashMap::new();
    for (t, tri) in mesh.triangles.iter().enumerate() {
        for i in 0..3 {
            let (a, b) = (tri[(i + 1) % 3], tri[(i + 2) % 3]);
            if nbr[t][i] == u32::MAX {
                owner.insert((a.min(b), a.max(b)), (t, i));
            }
        }
    }

    let mut add = |key: &str, e: f64| *energies.entry(key.to_string()).or_insert(0.0) += e;
    for layer in layers.iter().filter(|l| l.thickness > 0.0) {
        match layer.location {
            LayerLocation::Top | LayerLocation::Side => {
                let kind = if layer.location == LayerLocation::Top { SurfaceKind::Top } else { SurfaceKind::Side };
                for e in mesh.boundary_edges.iter().filter(|e| e.tag != BoundaryTag::Outer) {
                    let [a, b] = e.nodes;
                    let (pa, pb) = (mesh.nodes[a as usize], mesh.nodes[b as usize]);
                    let mid = pa.mid(pb);
                    let nearest = surfaces.iter().filter(|s| s.electrode == e.tag && on_surface(s, mid)).map(|s| s.kind).next();
                    if nearest != Some(kind) {
                        continue;
                    }
                    let Some(&(t, i)) = owner.get(&(a.min(b), a.max(b))) else { continue };
                    let eps_out = mesh.eps(t);
                    let e2 = edge_integral(sol_bare, t, i, |g| g.norm2());
                    let per = 0.5 * EPS0 * e2 * layer.thickness;
                    add(layer.location.region(), per * eps_out * eps_out / layer.eps);
                    add(mesh.material(t).tag(), -per * eps_out);
                }
            }
            LayerLocation::SubstrateAir => {
                for (t, tri) in mesh.triangles.iter().enumerate() {
                    if mesh.material(t) != Material::Vacuum {
                        continue;
                    }
                    for i in 0..3 {
                        let u = nbr[t][i];
                        if u == u32::MAX || mesh.material(u as usize) != Material::Substrate {
                            continue;
                        }
                        let (pa, pb) = (mesh.nodes[tri[(i + 1) % 3] as usize], mesh.nodes[tri[(i + 2) % 3] as usize]);
                        let n = (pb - pa).perp().unit();
                        // vacuum-side normal and tangential parts
                        let en2 = edge_integral(sol_bare, t, i, |g| g.dot(n).powi(2));
                        let et2 = edge_integral(sol_bare, t, i, |g| g.norm2() - g.dot(n).powi(2));
                        let eps_v = mesh.eps(t);
                        let c = 0.5 * EPS0 * layer.thickness;
                        add(layer.location.region(), c * (layer.eps * et2 + eps_v * eps_v / layer.eps * en2));
                        add(Material::Vacuum.tag(), -c * eps_v * (et2 + en2));
                    }
                }
            }
        }
    }
    Ok(EprReport::from_energies(energies, sol_bare.order, mesh.generation, mesh.triangles.len()))
}

/// ∫ f(∇φ) ds along local edge `i` of element `t`; lengths in nm, so the
/// result is in V²/nm; times a thickness in nm and ½ε₀ε it is J/m.
fn edge_integral(sol: &FieldSolution<'_>, t: usize, i: usize, f: impl Fn(Point) -> f64) -> f64 {
    let c = sol.mesh.corners(t);
    let (a, b) = ((i + 1) % 3, (i + 2) % 3);
    let len = c[a].dist(c[b]);
    GAUSS2
        .iter()
        .map(|&(s, w)| {
            let mut l = [0.0; 3];
            l[a] = 1.0 - s;
            l[b] = s;
            w * f(sol.gradient(t, l))
        })
        .sum::<f64>()
        * len
}
