use serde::Serialize;

use super::Mesh;
use crate::geometry::{Material, Point};

/// Interior angles in degrees, opposite `a`, `b` and `c` respectively.
pub fn triangle_angles(a: Point, b: Point, c: Point) -> [f64; 3] {
    let (la, lb, lc) = (b.dist(c), c.dist(a), a.dist(b));
    let angle = |opp: f64, x: f64, y: f64| ((x * x + y * y - opp * opp) / (2.0 * x * y)).clamp(-1.0, 1.0).acos().to_degrees();
    [angle(la, lb, lc), angle(lb, lc, la), angle(lc, la, lb)]
}

/// Longest edge over `2√3 ×` inradius: 1 for an equilateral triangle.
fn aspect(a: Point, b: Point, c: Point) -> f64 {
    let (la, lb, lc) = (b.dist(c), c.dist(a), a.dist(b));
    let area = 0.5 * (b - a).cross(c - a).abs();
    let inradius = 2.0 * area / (la + lb + lc);
    la.max(lb).max(lc) / (2.0 * 3f64.sqrt() * inradius)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MeshQuality {
    pub nodes: usize,
    pub elements: usize,
    pub min_angle_deg: f64,
    pub max_aspect: f64,
    pub per_material: Vec<(Material, usize)>,
    pub generation: u32,
}

pub fn mesh_quality(mesh: &Mesh) -> MeshQuality {
    let mut min_angle = f64::INFINITY;
    let mut max_aspect: f64 = 0.0;
    for t in 0..mesh.triangles.len() {
        let [a, b, c] = mesh.corners(t);
        min_angle = triangle_angles(a, b, c).into_iter().fold(min_angle, f64::min);
        max_aspect = max_aspect.max(aspect(a, b, c));
    }
    MeshQuality {
        nodes: mesh.nodes.len(),
        elements: mesh.triangles.len(),
        min_angle_deg: min_angle,
        max_aspect,
        per_material: mesh.count_by_material(),
        generation: mesh.generation,
    }
}
