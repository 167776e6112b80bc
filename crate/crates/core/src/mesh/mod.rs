//! Conforming triangular meshes of a cross-section.
//!
//! [`generate_mesh`] triangulates the region polygons with a constrained
//! Delaunay kernel and refines the substrate and vacuum against a
//! [`SizeField`]. Oxide strips are not left to the Delaunay refinement:
//! they are cut into structured quads along their stations and split into
//! two element layers, so every strip is at least two elements thick no
//! matter how thin it is. [`adapt_mesh`] then bisects the hottest elements.

mod adapt;
mod cdt;
mod generate;
mod quality;

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{dist_to_segment, BoundaryTag, CrossSection, GeometryParams, Material, Point};

pub use adapt::adapt_mesh;
pub use generate::generate_mesh;
pub use quality::{mesh_quality, triangle_angles, MeshQuality};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MeshError {
    #[error("invalid size field: {0}")]
    InvalidSizeField(String),
    /// The size field cannot resolve some part of the cross-section.
    #[error("mesh failure: {0}")]
    MeshFailure(String),
    #[error("expected {expected} indicators, got {got}")]
    IndicatorLength { expected: usize, got: usize },
    /// The triangulation broke an internal invariant.
    #[error("triangulation failed: {0}")]
    Internal(String),
}

impl MeshError {
    pub fn is_validation(&self) -> bool {
        !matches!(self, MeshError::Internal(_))
    }
}

/// Largest distance from a corner marker at which metal surfaces still
/// attract the size field, nm.
pub const ATTRACTOR_WINDOW: f64 = 1000.0;

/// Target element size `h(x) = min(h_max, h_min + g·dist(x, attractors))`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SizeField {
    pub h_min: f64,
    pub h_max: f64,
    pub grading: f64,
    pub points: Vec<Point>,
    pub edges: Vec<[Point; 2]>,
}

/// Overrides applied on top of [`SizeField::for_params`].
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SizeFieldOverrides {
    pub h_min: Option<f64>,
    pub h_max: Option<f64>,
    pub grading: Option<f64>,
}

impl SizeField {
    /// A field with no attractors: uniform `h_max`.
    pub fn uniform(h: f64) -> Self {
        SizeField { h_min: h, h_max: h, grading: 1.3, points: Vec::new(), edges: Vec::new() }
    }

    /// The default field for a built cross-section: `h_min` a third of the
    /// thinnest oxide (1 nm without oxide), `h_max = gap/40`, grading 1.3,
    /// attracted to the corner markers and to the metal surfaces near them.
    pub fn for_params(p: &GeometryParams, cs: &CrossSection) -> Self {
        let dh = [p.top_oxide(), p.side_oxide()].into_iter().filter(|&d| d > 0.0).fold(f64::INFINITY, f64::min);
        let h_min = if dh.is_finite() { dh / 3.0 } else { 1.0 };
        let h_max = (p.gap * 1e3 / 40.0).max(h_min);
        let points: Vec<Point> = cs.corner_markers.iter().map(|m| m.point).collect();
        let near = |q: Point| points.iter().any(|m| m.dist(q) <= ATTRACTOR_WINDOW);
        let mut edges = Vec::new();
        for s in &cs.surfaces {
            for w in s.points.windows(2) {
                let (a, b) = (w[0], w[1]);
                let pieces = (a.dist(b) / (0.25 * ATTRACTOR_WINDOW)).ceil().max(1.0) as usize;
                for k in 0..pieces {
                    let (u, v) = (a.lerp(b, k as f64 / pieces as f64), a.lerp(b, (k + 1) as f64 / pieces as f64));
                    if near(u) || near(v) {
                        edges.push([u, v]);
                    }
                }
            }
        }
        SizeField { h_min, h_max, grading: 1.3, points, edges }
    }

    pub fn with_overrides(mut self, o: &SizeFieldOverrides) -> Self {
        if let Some(h) = o.h_min {
            self.h_min = h;
        }
        if let Some(h) = o.h_max {
            self.h_max = h;
        }
        if let Some(g) = o.grading {
            self.grading = g;
        }
        self
    }

    pub fn validate(&self) -> Result<(), MeshError> {
        let bad = |m: String| Err(MeshError::InvalidSizeField(m));
        if !(self.h_min > 0.0 && self.h_min.is_finite()) {
            return bad(format!("h_min must be positive, got {}", self.h_min));
        }
        if !(self.h_max >= self.h_min && self.h_max.is_finite()) {
            return bad(format!("h_max {} below h_min {}", self.h_max, self.h_min));
        }
        if !(self.grading > 1.0 && self.grading <= 2.0) {
            return bad(format!("grading must lie in (1, 2], got {}", self.grading));
        }
        Ok(())
    }

    pub fn distance(&self, p: Point) -> f64 {
        let d = self.points.iter().map(|q| q.dist(p)).fold(f64::INFINITY, f64::min);
        self.edges.iter().map(|[a, b]| dist_to_segment(p, *a, *b)).fold(d, f64::min)
    }

    pub fn h(&self, p: Point) -> f64 {
        let d = self.distance(p);
        if d.is_finite() {
            (self.h_min + self.grading * d).min(self.h_max)
        } else {
            self.h_max
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeshRegion {
    pub material: Material,
    pub eps_r: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundaryEdge {
    pub nodes: [u32; 2],
    pub tag: BoundaryTag,
}

/// A conforming triangulation of the non-metal part of a cross-section.
///
/// Node coordinates are in nm. `region_id` indexes `regions`, which mirrors
/// the regions of the source cross-section; metal regions are listed but
/// carry no triangles, their surfaces appearing as electrode boundary edges.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mesh {
    pub nodes: Vec<Point>,
    pub triangles: Vec<[u32; 3]>,
    pub region_id: Vec<u32>,
    pub regions: Vec<MeshRegion>,
    pub boundary_edges: Vec<BoundaryEdge>,
    pub generation: u32,
    /// Containing triangle of the previous generation; empty at generation 0.
    pub parent: Vec<u32>,
}

impl Mesh {
    pub fn corners(&self, t: usize) -> [Point; 3] {
        self.triangles[t].map(|i| self.nodes[i as usize])
    }

    pub fn area(&self, t: usize) -> f64 {
        let [a, b, c] = self.corners(t);
        0.5 * (b - a).cross(c - a)
    }

    pub fn material(&self, t: usize) -> Material {
        self.regions[self.region_id[t] as usize].material
    }

    pub fn eps(&self, t: usize) -> f64 {
        self.regions[self.region_id[t] as usize].eps_r
    }

    /// Nodes on edges carrying `tag`, sorted and deduplicated.
    pub fn tagged_nodes(&self, tag: BoundaryTag) -> Vec<u32> {
        let mut v: Vec<u32> = self.boundary_edges.iter().filter(|e| e.tag == tag).flat_map(|e| e.nodes).collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    /// Element count per material, in [`Material::ALL`] order.
    pub fn count_by_material(&self) -> Vec<(Material, usize)> {
        Material::ALL
            .iter()
            .map(|&m| (m, (0..self.triangles.len()).filter(|&t| self.material(t) == m).count()))
            .collect()
    }

    /// Plain-text dump: `nodes N triangles T`, the node coordinates, then
    /// one `i j k region_id` line per triangle.
    pub fn to_ascii(&self) -> String {
        let mut s = String::with_capacity(48 * (self.nodes.len() + self.triangles.len()));
        let _ = writeln!(s, "nodes {} triangles {}", self.nodes.len(), self.triangles.len());
        for p in &self.nodes {
            let _ = writeln!(s, "{} {}", p.x, p.y);
        }
        for (t, r) in self.triangles.iter().zip(&self.region_id) {
            let _ = writeln!(s, "{} {} {} {}", t[0], t[1], t[2], r);
        }
        s
    }

    /// Legacy-VTK unstructured grid with optional point and cell scalars.
    pub fn to_vtk(&self, point_data: &[(&str, &[f64])], cell_data: &[(&str, &[f64])]) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# vtk DataFile Version 3.0\nsidewall mesh\nASCII\nDATASET UNSTRUCTURED_GRID");
        let _ = writeln!(s, "POINTS {} double", self.nodes.len());
        for p in &self.nodes {
            let _ = writeln!(s, "{} {} 0", p.x, p.y);
        }
        let _ = writeln!(s, "CELLS {} {}", self.triangles.len(), 4 * self.triangles.len());
        for t in &self.triangles {
            let _ = writeln!(s, "3 {} {} {}", t[0], t[1], t[2]);
        }
        let _ = writeln!(s, "CELL_TYPES {}", self.triangles.len());
        for _ in &self.triangles {
            let _ = writeln!(s, "5");
        }
        let _ = writeln!(s, "CELL_DATA {}", self.triangles.len());
        let _ = writeln!(s, "SCALARS region_id int 1\nLOOKUP_TABLE default");
        for r in &self.region_id {
            let _ = writeln!(s, "{r}");
        }
        for (name, data) in cell_data {
            let _ = writeln!(s, "SCALARS {name} double 1\nLOOKUP_TABLE default");
            for v in *data {
                let _ = writeln!(s, "{v:e}");
            }
        }
        if !point_data.is_empty() {
            let _ = writeln!(s, "POINT_DATA {}", self.nodes.len());
            for (name, data) in point_data {
                let _ = writeln!(s, "SCALARS {name} double 1\nLOOKUP_TABLE default");
                for v in *data {
                    let _ = writeln!(s, "{v:e}");
                }
            }
        }
        s
    }

    /// Neighbour across the edge opposite each vertex, `u32::MAX` on the
    /// mesh boundary.
    pub fn neighbors(&self) -> Vec<[u32; 3]> {
        use std::collections::HashMap;
        let mut open: HashMap<(u32, u32), (u32, usize)> = HashMap::with_capacity(2 * self.triangles.len());
        let mut out = vec![[u32::MAX; 3]; self.triangles.len()];
        for (t, tri) in self.triangles.iter().enumerate() {
            for i in 0..3 {
                let (a, b) = (tri[(i + 1) % 3], tri[(i + 2) % 3]);
                if let Some((u, j)) = open.remove(&(b, a)) {
                    out[t][i] = u;
                    out[u as usize][j] = t as u32;
                } else {
                    open.insert((a, b), (t as u32, i));
                }
            }
        }
        out
    }

    /// The mirror image through x = 0 with the electrodes swapped.
    pub fn mirrored(&self) -> Mesh {
        Mesh {
            nodes: self.nodes.iter().map(|p| p.mirror()).collect(),
            triangles: self.triangles.iter().map(|t| [t[0], t[2], t[1]]).collect(),
            boundary_edges: self.boundary_edges.iter().map(|e| BoundaryEdge { nodes: e.nodes, tag: e.tag.swapped() }).collect(),
            ..self.clone()
        }
    }

    /// Checks conformity, orientation and boundary consistency by an
    /// exhaustive edge audit. Returns the first problem found.
    pub fn audit(&self) -> Result<(), String> {
        use std::collections::HashMap;
        let mut edges: HashMap<(u32, u32), Vec<usize>> = HashMap::new();
        for (t, tri) in self.triangles.iter().enumerate() {
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(format!("triangle {t} repeats a node"));
            }
            if self.area(t) <= 0.0 {
                return Err(format!("triangle {t} is not positively oriented"));
            }
            for i in 0..3 {
                let (a, b) = (tri[i], tri[(i + 1) % 3]);
                edges.entry((a, b)).or_default().push(t);
            }
        }
        let tagged: std::collections::HashSet<(u32, u32)> =
            self.boundary_edges.iter().map(|e| (e.nodes[0].min(e.nodes[1]), e.nodes[0].max(e.nodes[1]))).collect();
        let mut keys: Vec<_> = edges.keys().copied().collect();
        keys.sort_unstable();
        for (a, b) in keys {
            let here = &edges[&(a, b)];
            if here.len() > 1 {
                return Err(format!("directed edge {a}->{b} used twice"));
            }
            if !edges.contains_key(&(b, a)) && !tagged.contains(&(a.min(b), a.max(b))) {
                return Err(format!("edge {a}-{b} is on the mesh boundary but carries no tag"));
            }
        }
        // every boundary edge of the mesh region must be a single-sided edge
        for e in &self.boundary_edges {
            let [a, b] = e.nodes;
            let sides = edges.contains_key(&(a, b)) as u8 + edges.contains_key(&(b, a)) as u8;
            if sides != 1 {
                return Err(format!("boundary edge {a}-{b} has {sides} adjacent triangles"));
            }
        }
        // hanging nodes: a node strictly inside some edge
        let mut by_x: Vec<u32> = (0..self.nodes.len() as u32).collect();
        by_x.sort_by(|&i, &j| self.nodes[i as usize].x.total_cmp(&self.nodes[j as usize].x));
        let xs: Vec<f64> = by_x.iter().map(|&i| self.nodes[i as usize].x).collect();
        for &(a, b) in edges.keys() {
            if a > b && edges.contains_key(&(b, a)) {
                continue;
            }
            let (pa, pb) = (self.nodes[a as usize], self.nodes[b as usize]);
            let lo = xs.partition_point(|&x| x < pa.x.min(pb.x));
            let hi = xs.partition_point(|&x| x <= pa.x.max(pb.x));
            for &w in &by_x[lo..hi] {
                if w == a || w == b {
                    continue;
                }
                let q = self.nodes[w as usize];
                let len = pa.dist(pb);
                if dist_to_segment(q, pa, pb) <= 1e-9 * len && q.dist(pa) > 1e-9 * len && q.dist(pb) > 1e-9 * len {
                    return Err(format!("hanging node {w} on edge {a}-{b}"));
                }
            }
        }
        Ok(())
    }
}
