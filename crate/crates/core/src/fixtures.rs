//! Structured meshes of problems with closed-form answers: parallel plates
//! with dielectric stacks, a coaxial annulus and conductor wedges.

use std::f64::consts::PI;

use crate::fem::EPS0;
use crate::geometry::{BoundaryTag, Material, MetalSurface, Point, SurfaceKind};
use crate::mesh::{BoundaryEdge, Mesh, MeshRegion};

/// One dielectric slab of a plate stack, listed from the ground plate up.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Slab {
    pub material: Material,
    pub eps_r: f64,
    /// nm
    pub thickness: f64,
    /// Element rows across the slab.
    pub rows: usize,
}

fn quad(tris: &mut Vec<[u32; 3]>, region: &mut Vec<u32>, r: u32, a: u32, b: u32, c: u32, d: u32) {
    // a b c d counter-clockwise
    tris.push([a, b, c]);
    tris.push([a, c, d]);
    region.extend([r, r]);
}

fn finish(mut m: Mesh) -> Mesh {
    m.boundary_edges.sort_by_key(|e| (e.tag as u8, e.nodes));
    m
}

/// Parallel plates of width `width`: ground along `y = 0`, pad along the top
/// of the stack, natural conditions on the sides. Each slab is its own region.
pub fn plate_stack(width: f64, slabs: &[Slab], columns: usize) -> Mesh {
    let mut ys = vec![0.0];
    let mut row_region = Vec::new();
    for (k, s) in slabs.iter().enumerate() {
        let y0 = *ys.last().unwrap();
        for i in 1..=s.rows {
            ys.push(y0 + s.thickness * i as f64 / s.rows as f64);
            row_region.push(k as u32);
        }
    }
    let nx = columns + 1;
    let id = |i: usize, j: usize| (j * nx + i) as u32;
    let nodes = ys.iter().flat_map(|&y| (0..nx).map(move |i| Point::new(width * i as f64 / columns as f64, y))).collect();
    let (mut triangles, mut region_id) = (Vec::new(), Vec::new());
    for j in 0..ys.len() - 1 {
        for i in 0..columns {
            quad(&mut triangles, &mut region_id, row_region[j], id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
        }
    }
    let top = ys.len() - 1;
    let mut boundary_edges = Vec::new();
    for i in 0..columns {
        boundary_edges.push(BoundaryEdge { nodes: [id(i, 0), id(i + 1, 0)], tag: BoundaryTag::ElectrodeGround });
        boundary_edges.push(BoundaryEdge { nodes: [id(i, top), id(i + 1, top)], tag: BoundaryTag::ElectrodePad });
    }
    for j in 0..top {
        boundary_edges.push(BoundaryEdge { nodes: [id(0, j), id(0, j + 1)], tag: BoundaryTag::Outer });
        boundary_edges.push(BoundaryEdge { nodes: [id(columns, j), id(columns, j + 1)], tag: BoundaryTag::Outer });
    }
    let regions = slabs.iter().map(|s| MeshRegion { material: s.material, eps_r: s.eps_r }).collect();
    finish(Mesh { nodes, triangles, region_id, regions, boundary_edges, generation: 0, parent: Vec::new() })
}

/// Vacuum between plates `separation` apart.
pub fn parallel_plate(width: f64, separation: f64, columns: usize, rows: usize) -> Mesh {
    plate_stack(width, &[Slab { material: Material::Vacuum, eps_r: 1.0, thickness: separation, rows }], columns)
}

/// The pad plate's underside as a top surface, for thin-layer estimates.
pub fn plate_surfaces(width: f64, separation: f64) -> Vec<MetalSurface> {
    vec![MetalSurface { electrode: BoundaryTag::ElectrodePad, kind: SurfaceKind::Top, points: vec![Point::new(width, separation), Point::new(0.0, separation)] }]
}

/// Energy per unit length of a series stack under `v` volts over `width`, J/m.
pub fn stack_energies(width: f64, slabs: &[Slab], v: f64) -> Vec<f64> {
    // common displacement D = v / Σ t_i/(ε0 ε_i), nm-based lengths cancel
    let s: f64 = slabs.iter().map(|s| s.thickness / s.eps_r).sum();
    slabs.iter().map(|sl| 0.5 * EPS0 * sl.eps_r * (v / (sl.eps_r * s)).powi(2) * sl.thickness * width).collect()
}

/// Coaxial annulus: pad on `r = inner`, ground on `r = outer`, vacuum
/// between, `rings` radial and `sectors` angular divisions.
pub fn annulus(inner: f64, outer: f64, rings: usize, sectors: usize) -> Mesh {
    let id = |i: usize, j: usize| (i * sectors + j % sectors) as u32;
    let mut nodes = Vec::with_capacity((rings + 1) * sectors);
    for i in 0..=rings {
        let r = inner + (outer - inner) * i as f64 / rings as f64;
        nodes.extend((0..sectors).map(|j| Point::polar(360.0 * j as f64 / sectors as f64) * r));
    }
    let (mut triangles, mut region_id) = (Vec::new(), Vec::new());
    for i in 0..rings {
        for j in 0..sectors {
            quad(&mut triangles, &mut region_id, 0, id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
        }
    }
    let mut boundary_edges = Vec::new();
    for j in 0..sectors {
        boundary_edges.push(BoundaryEdge { nodes: [id(0, j), id(0, j + 1)], tag: BoundaryTag::ElectrodePad });
        boundary_edges.push(BoundaryEdge { nodes: [id(rings, j), id(rings, j + 1)], tag: BoundaryTag::ElectrodeGround });
    }
    let regions = vec![MeshRegion { material: Material::Vacuum, eps_r: 1.0 }];
    finish(Mesh { nodes, triangles, region_id, regions, boundary_edges, generation: 0, parent: Vec::new() })
}

/// Potential of the annulus at radius `r`.
pub fn annulus_potential(inner: f64, outer: f64, v: f64, r: f64) -> f64 {
    v * (outer / r).ln() / (outer / inner).ln()
}

/// Stored energy of the annulus, J/m.
pub fn annulus_energy(inner: f64, outer: f64, v: f64) -> f64 {
    PI * EPS0 * v * v / (outer / inner).ln()
}

/// A vacuum sector of opening `theta_deg` and radius `radius` around a
/// conductor corner at the origin: both rays grounded, the arc at 1 V.
/// Rings are spaced geometrically by `ratio` down to `radius·inner_frac`;
/// the innermost ring is fanned to the apex. Near the apex
/// `|E| ∝ r^(π/Θ − 1)`.
pub fn wedge(theta_deg: f64, radius: f64, sectors: usize, ratio: f64, inner_frac: f64) -> Mesh {
    let rings = ((1.0 / inner_frac).ln() / ratio.ln()).ceil() as usize;
    let cols = sectors + 1;
    let mut nodes = vec![Point::new(0.0, 0.0)];
    // ring 0 is the arc, ring `rings` the innermost
    for i in 0..=rings {
        let r = radius * ratio.powi(-(i as i32));
        nodes.extend((0..cols).map(|j| Point::polar(theta_deg * j as f64 / sectors as f64) * r));
    }
    let id = |i: usize, j: usize| (1 + i * cols + j) as u32;
    let (mut triangles, mut region_id) = (Vec::new(), Vec::new());
    for i in 0..rings {
        for j in 0..sectors {
            // ring i+1 is inside ring i
            quad(&mut triangles, &mut region_id, 0, id(i + 1, j), id(i, j), id(i, j + 1), id(i + 1, j + 1));
        }
    }
    for j in 0..sectors {
        triangles.push([0, id(rings, j), id(rings, j + 1)]);
        region_id.push(0);
    }
    let mut boundary_edges = Vec::new();
    for j in 0..sectors {
        boundary_edges.push(BoundaryEdge { nodes: [id(0, j), id(0, j + 1)], tag: BoundaryTag::ElectrodePad });
    }
    for i in 0..rings {
        boundary_edges.push(BoundaryEdge { nodes: [id(i + 1, 0), id(i, 0)], tag: BoundaryTag::ElectrodeGround });
        boundary_edges.push(BoundaryEdge { nodes: [id(i, sectors), id(i + 1, sectors)], tag: BoundaryTag::ElectrodeGround });
    }
    boundary_edges.push(BoundaryEdge { nodes: [0, id(rings, 0)], tag: BoundaryTag::ElectrodeGround });
    boundary_edges.push(BoundaryEdge { nodes: [id(rings, sectors), 0], tag: BoundaryTag::ElectrodeGround });
    let regions = vec![MeshRegion { material: Material::Vacuum, eps_r: 1.0 }];
    finish(Mesh { nodes, triangles, region_id, regions, boundary_edges, generation: 0, parent: Vec::new() })
}

/// Analytic corner exponent for a domain opening of `theta_deg`.
pub fn wedge_exponent(theta_deg: f64) -> f64 {
    180.0 / theta_deg - 1.0
}
