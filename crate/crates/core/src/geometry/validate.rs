use serde::Serialize;

use super::point::{on_segment, orient, perimeter, point_in_ring, segments_cross, segments_touch, signed_area, Point};
use super::section::{CrossSection, Material};

/// Tolerance on vertex positions, nm.
pub const VERTEX_TOLERANCE: f64 = 1e-6;

/// A broken cross-section invariant.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    /// Fewer than three distinct vertices or zero area.
    Degenerate { region: usize },
    /// Two edges of one polygon meet away from their shared vertex.
    SelfIntersection { region: usize, edge: usize, other_edge: usize },
    NegativeOrientation { region: usize },
    OutsideBox { region: usize, vertex: usize },
    /// Interiors of two regions intersect.
    Overlap { region: usize, other: usize },
    /// Region areas fall short of the box area.
    Gap { missing_area: f64 },
    /// A metal edge without an electrode tag.
    UntaggedMetalEdge { region: usize, edge: usize },
    /// Part of the outer box not tagged `outer`.
    UntaggedOuterEdge { side: usize },
}

impl Violation {
    pub fn name(&self) -> &'static str {
        match self {
            Violation::Degenerate { .. } => "degenerate",
            Violation::SelfIntersection { .. } => "self_intersection",
            Violation::NegativeOrientation { .. } => "negative_orientation",
            Violation::OutsideBox { .. } => "outside_box",
            Violation::Overlap { .. } => "overlap",
            Violation::Gap { .. } => "gap",
            Violation::UntaggedMetalEdge { .. } => "untagged_metal_edge",
            Violation::UntaggedOuterEdge { .. } => "untagged_outer_edge",
        }
    }
}

fn is_simple(ring: &[Point]) -> Option<(usize, usize)> {
    let n = ring.len();
    let spike = |a: Point, b: Point, c: Point| orient(a, b, c) == 0.0 && (c - b).dot(a - b) > 0.0;
    for i in 0..n {
        let (a, b) = (ring[i], ring[(i + 1) % n]);
        if a == b || spike(a, b, ring[(i + 2) % n]) {
            return Some((i, (i + 1) % n));
        }
        for j in i + 2..n {
            if i == 0 && j == n - 1 {
                continue;
            }
            if segments_touch(a, b, ring[j], ring[(j + 1) % n]) {
                return Some((i, j));
            }
        }
    }
    None
}

/// Lists every broken invariant of `cs`; empty when it is valid.
pub fn validate_cross_section(cs: &CrossSection) -> Vec<Violation> {
    let mut out = Vec::new();
    let [lo, hi] = cs.bbox;
    let tol = VERTEX_TOLERANCE;
    let mut area_sum = 0.0;
    let mut perim_sum = 0.0;
    for (ri, r) in cs.regions.iter().enumerate() {
        let ring = &r.polygon;
        let area = signed_area(ring);
        if ring.len() < 3 || area.abs() <= tol * tol {
            out.push(Violation::Degenerate { region: ri });
            continue;
        }
        if area < 0.0 {
            out.push(Violation::NegativeOrientation { region: ri });
        }
        if let Some((edge, other_edge)) = is_simple(ring) {
            out.push(Violation::SelfIntersection { region: ri, edge, other_edge });
        }
        if let Some(vi) = ring.iter().position(|p| p.x < lo.x - tol || p.x > hi.x + tol || p.y < lo.y - tol || p.y > hi.y + tol) {
            out.push(Violation::OutsideBox { region: ri, vertex: vi });
        }
        area_sum += area.abs();
        perim_sum += perimeter(ring);
    }

    // pairwise interior-disjointness, with a bounding-box prefilter
    let boxes: Vec<[Point; 2]> = cs
        .regions
        .iter()
        .map(|r| {
            r.polygon.iter().fold([Point::new(f64::MAX, f64::MAX), Point::new(f64::MIN, f64::MIN)], |[a, b], p| {
                [Point::new(a.x.min(p.x), a.y.min(p.y)), Point::new(b.x.max(p.x), b.y.max(p.y))]
            })
        })
        .collect();
    for i in 0..cs.regions.len() {
        for j in i + 1..cs.regions.len() {
            let ([a0, a1], [b0, b1]) = (boxes[i], boxes[j]);
            if a1.x < b0.x - tol || b1.x < a0.x - tol || a1.y < b0.y - tol || b1.y < a0.y - tol {
                continue;
            }
            if overlaps(&cs.regions[i].polygon, &cs.regions[j].polygon) {
                out.push(Violation::Overlap { region: i, other: j });
            }
        }
    }

    // tiling: with disjoint interiors the areas must add up to the box
    let box_area = cs.box_area();
    let slack = tol * perim_sum + 1e-12 * box_area;
    if area_sum < box_area - slack {
        out.push(Violation::Gap { missing_area: box_area - area_sum });
    } else if area_sum > box_area + slack && !out.iter().any(|v| matches!(v, Violation::Overlap { .. })) {
        out.push(Violation::Overlap { region: usize::MAX, other: usize::MAX });
    }

    // electrode tags on every metal edge
    let electrode_segments: Vec<_> = cs.boundary_tags.iter().filter(|s| s.tag.is_electrode()).collect();
    for (ri, r) in cs.regions.iter().enumerate().filter(|(_, r)| r.material == Material::Metal) {
        let n = r.polygon.len();
        for e in 0..n {
            let (a, b) = (r.polygon[e], r.polygon[(e + 1) % n]);
            let covered = electrode_segments.iter().any(|s| on_segment(a, s.a, s.b, tol) && on_segment(b, s.a, s.b, tol));
            if !covered {
                out.push(Violation::UntaggedMetalEdge { region: ri, edge: e });
            }
        }
    }
    let corners = [lo, Point::new(hi.x, lo.y), hi, Point::new(lo.x, hi.y)];
    for side in 0..4 {
        let (a, b) = (corners[side], corners[(side + 1) % 4]);
        let covered = cs
            .boundary_tags
            .iter()
            .filter(|s| !s.tag.is_electrode())
            .any(|s| on_segment(a, s.a, s.b, tol) && on_segment(b, s.a, s.b, tol));
        if !covered {
            out.push(Violation::UntaggedOuterEdge { side });
        }
    }
    out
}

fn overlaps(p: &[Point], q: &[Point]) -> bool {
    let (n, m) = (p.len(), q.len());
    for i in 0..n {
        let (a, b) = (p[i], p[(i + 1) % n]);
        for j in 0..m {
            if segments_cross(a, b, q[j], q[(j + 1) % m]) {
                return true;
            }
        }
    }
    // one inside the other, or shared boundary with overlapping interiors:
    // probe vertices and edge midpoints nudged inward
    fn probes(ring: &[Point]) -> impl Iterator<Item = Point> + '_ {
        let k = ring.len();
        (0..k).flat_map(move |i| {
            let (a, b) = (ring[i], ring[(i + 1) % k]);
            let m = a.mid(b);
            let inward = (b - a).perp().unit() * (1e-3 * a.dist(b)).min(1e-3);
            [a, m + inward]
        })
    }
    let inside = |pt: Point, ring: &[Point]| point_in_ring(pt, ring, VERTEX_TOLERANCE * 1e-3);
    probes(p).any(|pt| inside(pt, q)) || probes(q).any(|pt| inside(pt, p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::section::{BoundaryTag, Region, TaggedSegment};

    fn square(x0: f64, y0: f64, s: f64) -> Vec<Point> {
        vec![Point::new(x0, y0), Point::new(x0 + s, y0), Point::new(x0 + s, y0 + s), Point::new(x0, y0 + s)]
    }

    fn section(polys: Vec<Vec<Point>>) -> CrossSection {
        let bbox = [Point::new(0.0, 0.0), Point::new(2.0, 1.0)];
        let c = [bbox[0], Point::new(2.0, 0.0), bbox[1], Point::new(0.0, 1.0)];
        CrossSection {
            regions: polys.into_iter().map(|polygon| Region { material: Material::Vacuum, polygon, eps_r: 1.0, electrode: None }).collect(),
            boundary_tags: (0..4).map(|i| TaggedSegment { a: c[i], b: c[(i + 1) % 4], tag: BoundaryTag::Outer }).collect(),
            corner_markers: vec![],
            layers: vec![],
            surfaces: vec![],
            bbox,
        }
    }

    #[test]
    fn two_squares_tile() {
        assert_eq!(validate_cross_section(&section(vec![square(0.0, 0.0, 1.0), square(1.0, 0.0, 1.0)])), vec![]);
    }

    #[test]
    fn overlap_detected() {
        let v = validate_cross_section(&section(vec![square(0.0, 0.0, 1.0), square(0.5, 0.0, 1.0)]));
        assert!(v.iter().any(|v| matches!(v, Violation::Overlap { .. })), "{v:?}");
        assert!(!v.iter().any(|v| matches!(v, Violation::Gap { .. })));
    }

    #[test]
    fn gap_detected() {
        let mut right = square(1.0, 0.0, 1.0);
        right[0].x += 1e-3;
        right[3].x += 1e-3;
        let v = validate_cross_section(&section(vec![square(0.0, 0.0, 1.0), right]));
        assert_eq!(v.len(), 1, "{v:?}");
        assert!(matches!(v[0], Violation::Gap { missing_area } if (missing_area - 1e-3).abs() < 1e-9));
    }

    #[test]
    fn orientation_and_self_intersection() {
        let mut cw = square(0.0, 0.0, 1.0);
        cw.reverse();
        let bow = vec![Point::new(1.0, 0.0), Point::new(2.0, 1.0), Point::new(2.0, 0.0), Point::new(1.0, 0.5)];
        let v = validate_cross_section(&section(vec![cw, bow]));
        assert!(v.iter().any(|v| matches!(v, Violation::NegativeOrientation { region: 0 })));
        assert!(v.iter().any(|v| matches!(v, Violation::SelfIntersection { region: 1, .. })));
    }
}
