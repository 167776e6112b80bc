//! Longest-edge bisection with conformity closure.

use std::collections::HashMap;

use super::{BoundaryEdge, Mesh, MeshError};
use crate::geometry::BoundaryTag;

const NONE: u32 = u32::MAX;

fn key(a: u32, b: u32) -> (u32, u32) {
    (a.min(b), a.max(b))
}

struct Bisector {
    nodes: Vec<crate::geometry::Point>,
    tris: Vec<[u32; 3]>,
    region: Vec<u32>,
    parent: Vec<u32>,
    edges: HashMap<(u32, u32), [u32; 2]>,
    tags: HashMap<(u32, u32), BoundaryTag>,
}

impl Bisector {
    fn link(&mut self, a: u32, b: u32, t: u32) {
        let e = self.edges.entry(key(a, b)).or_insert([NONE; 2]);
        if e[0] == NONE {
            e[0] = t;
        } else {
            e[1] = t;
        }
    }

    fn unlink(&mut self, a: u32, b: u32, t: u32) {
        let k = key(a, b);
        let e = self.edges.get_mut(&k).unwrap();
        if e[0] == t {
            e[0] = e[1];
        }
        e[1] = NONE;
        if e[0] == NONE {
            self.edges.remove(&k);
        }
    }

    /// Local index of the longest edge, ties broken by node ids so the
    /// choice is a total order shared by both neighbours of an edge.
    fn longest(&self, t: u32) -> usize {
        let v = self.tris[t as usize];
        let rank = |i: usize| {
            let (a, b) = (v[(i + 1) % 3], v[(i + 2) % 3]);
            let l = self.nodes[a as usize].dist(self.nodes[b as usize]);
            (l, a.min(b), a.max(b))
        };
        (0..3).max_by(|&i, &j| rank(i).partial_cmp(&rank(j)).unwrap()).unwrap()
    }

    fn other(&self, t: u32, i: usize) -> u32 {
        let v = self.tris[t as usize];
        let e = self.edges[&key(v[(i + 1) % 3], v[(i + 2) % 3])];
        if e[0] == t {
            e[1]
        } else {
            e[0]
        }
    }

    /// Bisects the edge `a–b` in every triangle that has it.
    fn bisect(&mut self, a: u32, b: u32) {
        let m = self.nodes.len() as u32;
        self.nodes.push(self.nodes[a as usize].mid(self.nodes[b as usize]));
        if let Some(tag) = self.tags.remove(&key(a, b)) {
            self.tags.insert(key(a, m), tag);
            self.tags.insert(key(m, b), tag);
        }
        let sides = self.edges[&key(a, b)];
        for t in sides {
            if t == NONE {
                continue;
            }
            let v = self.tris[t as usize];
            let i = (0..3).find(|&i| key(v[(i + 1) % 3], v[(i + 2) % 3]) == key(a, b)).unwrap();
            let (c, x, y) = (v[i], v[(i + 1) % 3], v[(i + 2) % 3]);
            let u = self.tris.len() as u32;
            self.unlink(x, y, t);
            self.unlink(c, y, t);
            self.tris[t as usize] = [c, x, m];
            self.tris.push([c, m, y]);
            self.region.push(self.region[t as usize]);
            self.parent.push(self.parent[t as usize]);
            self.link(x, m, t);
            self.link(c, m, t);
            self.link(c, m, u);
            self.link(m, y, u);
            self.link(y, c, u);
        }
    }

    /// Refines until triangle `t` itself has been bisected.
    fn refine(&mut self, t: u32) {
        let original = self.tris[t as usize];
        while self.tris[t as usize] == original {
            let mut cur = t;
            loop {
                let i = self.longest(cur);
                let v = self.tris[cur as usize];
                let (a, b) = (v[(i + 1) % 3], v[(i + 2) % 3]);
                let nb = self.other(cur, i);
                if nb == NONE {
                    self.bisect(a, b);
                    break;
                }
                let j = self.longest(nb);
                let w = self.tris[nb as usize];
                if key(w[(j + 1) % 3], w[(j + 2) % 3]) == key(a, b) {
                    self.bisect(a, b);
                    break;
                }
                cur = nb;
            }
        }
    }
}

/// Bisects the `fraction` of elements with the largest indicators (only
/// those with a positive indicator), plus whatever longest-edge closure
/// keeps the mesh conforming. The result is one generation finer and
/// records each element's parent in the input mesh.
pub fn adapt_mesh(mesh: &Mesh, indicators: &[f64], fraction: f64) -> Result<Mesh, MeshError> {
    let n = mesh.triangles.len();
    if indicators.len() != n {
        return Err(MeshError::IndicatorLength { expected: n, got: indicators.len() });
    }
    let mut order: Vec<usize> = (0..n).filter(|&t| indicators[t] > 0.0).collect();
    order.sort_by(|&i, &j| indicators[j].total_cmp(&indicators[i]).then(i.cmp(&j)));
    order.truncate((fraction.clamp(0.0, 1.0) * n as f64).ceil() as usize);

    let mut b = Bisector {
        nodes: mesh.nodes.clone(),
        tris: mesh.triangles.clone(),
        region: mesh.region_id.clone(),
        parent: (0..n as u32).collect(),
        edges: HashMap::with_capacity(2 * n),
        tags: mesh.boundary_edges.iter().map(|e| (key(e.nodes[0], e.nodes[1]), e.tag)).collect(),
    };
    for t in 0..n as u32 {
        let v = b.tris[t as usize];
        for i in 0..3 {
            b.link(v[(i + 1) % 3], v[(i + 2) % 3], t);
        }
    }
    for &t in &order {
        b.refine(t as u32);
    }
    let mut boundary_edges: Vec<BoundaryEdge> = b.tags.iter().map(|(&(x, y), &tag)| BoundaryEdge { nodes: [x, y], tag }).collect();
    boundary_edges.sort_by_key(|e| (e.tag as u8, e.nodes));
    Ok(Mesh {
        nodes: b.nodes,
        triangles: b.tris,
        region_id: b.region,
        regions: mesh.regions.clone(),
        boundary_edges,
        generation: mesh.generation + 1,
        parent: b.parent,
    })
}
