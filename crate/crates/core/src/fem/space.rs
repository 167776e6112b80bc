//! Lagrange P1/P2 spaces on a triangle mesh.

use crate::geometry::Point;
use crate::mesh::Mesh;

/// Degree-5 rule on the reference triangle: barycentric point and weight
/// (weights sum to one).
pub(crate) const QUAD7: [([f64; 3], f64); 7] = {
    const A1: f64 = 0.059_715_871_789_770;
    const B1: f64 = 0.470_142_064_105_115;
    const W1: f64 = 0.132_394_152_788_506;
    const A2: f64 = 0.797_426_985_353_087;
    const B2: f64 = 0.101_286_507_323_456;
    const W2: f64 = 0.125_939_180_544_827;
    [
        ([1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0], 0.225),
        ([A1, B1, B1], W1),
        ([B1, A1, B1], W1),
        ([B1, B1, A1], W1),
        ([A2, B2, B2], W2),
        ([B2, A2, B2], W2),
        ([B2, B2, A2], W2),
    ]
};

/// Degree-2 rule at the edge midpoints.
pub(crate) const QUAD3: [([f64; 3], f64); 3] =
    [([0.0, 0.5, 0.5], 1.0 / 3.0), ([0.5, 0.0, 0.5], 1.0 / 3.0), ([0.5, 0.5, 0.0], 1.0 / 3.0)];

/// Gradients of the barycentric coordinates and the area.
pub(crate) fn bary_gradients(p: [Point; 3]) -> ([Point; 3], f64) {
    let two_a = (p[1] - p[0]).cross(p[2] - p[0]);
    let g = |i: usize| {
        let (a, b) = (p[(i + 1) % 3], p[(i + 2) % 3]);
        Point::new((a.y - b.y) / two_a, (b.x - a.x) / two_a)
    };
    ([g(0), g(1), g(2)], 0.5 * two_a)
}

/// Shape-function gradients at barycentric point `l`: three vertex
/// functions, then the edge functions opposite vertices 0, 1, 2.
pub(crate) fn shape_gradients(order: u8, gl: &[Point; 3], l: [f64; 3]) -> ([Point; 6], usize) {
    let mut g = [Point::new(0.0, 0.0); 6];
    if order == 1 {
        g[..3].copy_from_slice(gl);
        return (g, 3);
    }
    for i in 0..3 {
        g[i] = gl[i] * (4.0 * l[i] - 1.0);
        let (a, b) = ((i + 1) % 3, (i + 2) % 3);
        g[3 + i] = (gl[b] * l[a] + gl[a] * l[b]) * 4.0;
    }
    (g, 6)
}

pub(crate) fn shape_values(order: u8, l: [f64; 3]) -> ([f64; 6], usize) {
    let mut v = [0.0; 6];
    if order == 1 {
        v[..3].copy_from_slice(&l);
        return (v, 3);
    }
    for i in 0..3 {
        v[i] = l[i] * (2.0 * l[i] - 1.0);
        v[3 + i] = 4.0 * l[(i + 1) % 3] * l[(i + 2) % 3];
    }
    (v, 6)
}

/// Degree-of-freedom numbering: mesh nodes first, then (for P2) one dof per
/// edge in sorted edge order.
#[derive(Clone, Debug)]
pub struct DofMap {
    pub order: u8,
    pub n_dofs: usize,
    pub elements: Vec<[u32; 6]>,
    /// Node pair of each edge dof, indexed from `nodes`.
    pub edges: Vec<(u32, u32)>,
}

impl DofMap {
    pub fn new(mesh: &Mesh, order: u8) -> Self {
        let n = mesh.nodes.len();
        let mut elements: Vec<[u32; 6]> = mesh.triangles.iter().map(|t| [t[0], t[1], t[2], 0, 0, 0]).collect();
        if order == 1 {
            return DofMap { order, n_dofs: n, elements, edges: Vec::new() };
        }
        let mut edges: Vec<(u32, u32)> = Vec::with_capacity(3 * mesh.triangles.len());
        for t in &mesh.triangles {
            for i in 0..3 {
                let (a, b) = (t[(i + 1) % 3], t[(i + 2) % 3]);
                edges.push((a.min(b), a.max(b)));
            }
        }
        edges.sort_unstable();
        edges.dedup();
        for (e, t) in elements.iter_mut().zip(&mesh.triangles) {
            for i in 0..3 {
                let (a, b) = (t[(i + 1) % 3], t[(i + 2) % 3]);
                let k = edges.binary_search(&(a.min(b), a.max(b))).unwrap();
                e[3 + i] = (n + k) as u32;
            }
        }
        DofMap { order, n_dofs: n + edges.len(), elements, edges }
    }

    pub fn local(&self) -> usize {
        if self.order == 1 {
            3
        } else {
            6
        }
    }

    /// Dof of the edge `a–b`, if it is an edge of the mesh (P2 only).
    pub fn edge_dof(&self, a: u32, b: u32, n_nodes: usize) -> Option<u32> {
        self.edges.binary_search(&(a.min(b), a.max(b))).ok().map(|k| (n_nodes + k) as u32)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rules_integrate_polynomials() {
        // mean of λ0² λ1 over a triangle = 2·2!·1!/5!
        let exact = 4.0 / 120.0;
        let q: f64 = QUAD7.iter().map(|(l, w)| w * l[0] * l[0] * l[1]).sum();
        assert!((q - exact).abs() < 1e-14);
        let q2: f64 = QUAD3.iter().map(|(l, w)| w * l[0] * l[1]).sum();
        assert!((q2 - 1.0 / 12.0).abs() < 1e-15);
    }

    #[test]
    fn p2_functions_form_a_partition_of_unity() {
        let p = [Point::new(0.0, 0.0), Point::new(2.0, 0.3), Point::new(0.4, 1.5)];
        let (gl, _) = bary_gradients(p);
        let l = [0.2, 0.5, 0.3];
        let (v, n) = shape_values(2, l);
        assert!((v[..n].iter().sum::<f64>() - 1.0).abs() < 1e-14);
        let (g, _) = shape_gradients(2, &gl, l);
        let s = g.iter().fold(Point::new(0.0, 0.0), |a, &b| a + b);
        assert!(s.norm() < 1e-13);
    }
}
