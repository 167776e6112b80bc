use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

/// A point (or vector) in the cross-section plane, in nanometres.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    /// Unit vector at `deg` degrees from the +x axis.
    pub fn polar(deg: f64) -> Self {
        let (s, c) = deg.to_radians().sin_cos();
        Point::new(c, s)
    }

    pub fn dot(self, o: Point) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn cross(self, o: Point) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn norm2(self) -> f64 {
        self.dot(self)
    }

    pub fn dist(self, o: Point) -> f64 {
        (self - o).norm()
    }

    pub fn unit(self) -> Point {
        let n = self.norm();
        Point::new(self.x / n, self.y / n)
    }

    /// Rotated a quarter turn counter-clockwise.
    pub fn perp(self) -> Point {
        Point::new(-self.y, self.x)
    }

    pub fn lerp(self, o: Point, t: f64) -> Point {
        Point::new(self.x + (o.x - self.x) * t, self.y + (o.y - self.y) * t)
    }

    pub fn mid(self, o: Point) -> Point {
        Point::new(0.5 * (self.x + o.x), 0.5 * (self.y + o.y))
    }

    /// Reflection through the line x = 0.
    pub fn mirror(self) -> Point {
        Point::new(-self.x, self.y)
    }

    pub fn close_to(self, o: Point, tol: f64) -> bool {
        (self.x - o.x).abs() <= tol && (self.y - o.y).abs() <= tol
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, s: f64) -> Point {
        Point::new(self.x * s, self.y * s)
    }
}

impl Neg for Point {
    type Output = Point;
    fn neg(self) -> Point {
        Point::new(-self.x, -self.y)
    }
}

impl From<Point> for robust::Coord<f64> {
    fn from(p: Point) -> Self {
        robust::Coord { x: p.x, y: p.y }
    }
}

/// Exact orientation: > 0 when `a, b, c` turn counter-clockwise.
pub fn orient(a: Point, b: Point, c: Point) -> f64 {
    robust::orient2d(a.into(), b.into(), c.into())
}

/// Exact in-circle test: > 0 when `d` lies inside the circle through the
/// counter-clockwise triangle `a, b, c`.
pub fn incircle(a: Point, b: Point, c: Point, d: Point) -> f64 {
    robust::incircle(a.into(), b.into(), c.into(), d.into())
}

/// Twice the signed area enclosed by a closed ring.
pub fn signed_area2(ring: &[Point]) -> f64 {
    let n = ring.len();
    let mut s = 0.0;
    for i in 0..n {
        let (p, q) = (ring[i], ring[(i + 1) % n]);
        s += p.x * q.y - q.x * p.y;
    }
    s
}

pub fn signed_area(ring: &[Point]) -> f64 {
    0.5 * signed_area2(ring)
}

pub fn perimeter(ring: &[Point]) -> f64 {
    let n = ring.len();
    (0..n).map(|i| ring[i].dist(ring[(i + 1) % n])).sum()
}

/// Distance from `p` to the segment `ab`.
pub fn dist_to_segment(p: Point, a: Point, b: Point) -> f64 {
    let ab = b - a;
    let l2 = ab.norm2();
    if l2 == 0.0 {
        return p.dist(a);
    }
    let t = ((p - a).dot(ab) / l2).clamp(0.0, 1.0);
    p.dist(a + ab * t)
}

/// True when `p` lies on segment `ab` within `tol`.
pub fn on_segment(p: Point, a: Point, b: Point, tol: f64) -> bool {
    dist_to_segment(p, a, b) <= tol
}

/// Segments cross at a single point interior to both.
pub fn segments_cross(a: Point, b: Point, c: Point, d: Point) -> bool {
    let o1 = orient(a, b, c);
    let o2 = orient(a, b, d);
    let o3 = orient(c, d, a);
    let o4 = orient(c, d, b);
    o1 * o2 < 0.0 && o3 * o4 < 0.0
}

/// Closed segments share at least one point.
pub fn segments_touch(a: Point, b: Point, c: Point, d: Point) -> bool {
    let o1 = orient(a, b, c);
    let o2 = orient(a, b, d);
    let o3 = orient(c, d, a);
    let o4 = orient(c, d, b);
    if o1 * o2 < 0.0 && o3 * o4 < 0.0 {
        return true;
    }
    let within = |p: Point, q: Point, r: Point| {
        r.x >= p.x.min(q.x) && r.x <= p.x.max(q.x) && r.y >= p.y.min(q.y) && r.y <= p.y.max(q.y)
    };
    (o1 == 0.0 && within(a, b, c))
        || (o2 == 0.0 && within(a, b, d))
        || (o3 == 0.0 && within(c, d, a))
        || (o4 == 0.0 && within(c, d, b))
}

/// Intersection of the infinite lines through `a + s·u` and `b + t·v`.
pub fn line_intersection(a: Point, u: Point, b: Point, v: Point) -> Option<Point> {
    let den = u.cross(v);
    if den.abs() < 1e-300 {
        return None;
    }
    let s = (b - a).cross(v) / den;
    Some(a + u * s)
}

/// Winding-number containment; points on the boundary count as outside.
pub fn point_in_ring(p: Point, ring: &[Point], tol: f64) -> bool {
    let n = ring.len();
    for i in 0..n {
        if on_segment(p, ring[i], ring[(i + 1) % n], tol) {
            return false;
        }
    }
    let mut wn = 0i32;
    for i in 0..n {
        let (a, b) = (ring[i], ring[(i + 1) % n]);
        if a.y <= p.y {
            if b.y > p.y && orient(a, b, p) > 0.0 {
                wn += 1;
            }
        } else if b.y <= p.y && orient(a, b, p) < 0.0 {
            wn -= 1;
        }
    }
    wn != 0
}

/// Drops consecutive duplicates (within `tol`), including a closing repeat.
pub fn dedup_ring(pts: &mut Vec<Point>, tol: f64) {
    pts.dedup_by(|b, a| a.close_to(*b, tol));
    while pts.len() > 1 && pts[0].close_to(pts[pts.len() - 1], tol) {
        pts.pop();
    }
}

/// One-sided Hausdorff distance from polyline `a` to polyline `b`,
/// sampling `a` at its vertices and edge midpoints.
pub fn hausdorff_to(a: &[Point], b: &[Point]) -> f64 {
    let d = |p: Point| {
        b.windows(2)
            .map(|w| dist_to_segment(p, w[0], w[1]))
            .fold(f64::INFINITY, f64::min)
    };
    let mut worst: f64 = 0.0;
    for w in a.windows(2) {
        worst = worst.max(d(w[0])).max(d(w[0].mid(w[1])));
    }
    if let Some(&last) = a.last() {
        worst = worst.max(d(last));
    }
    worst
}

/// Symmetric Hausdorff distance between two polylines.
pub fn hausdorff(a: &[Point], b: &[Point]) -> f64 {
    hausdorff_to(a, b).max(hausdorff_to(b, a))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orientation_and_area() {
        let sq = [Point::new(0.0, 0.0), Point::new(2.0, 0.0), Point::new(2.0, 1.0), Point::new(0.0, 1.0)];
        assert_eq!(signed_area(&sq), 2.0);
        assert!(orient(sq[0], sq[1], sq[2]) > 0.0);
        assert_eq!(perimeter(&sq), 6.0);
        assert!(point_in_ring(Point::new(1.0, 0.5), &sq, 1e-9));
        assert!(!point_in_ring(Point::new(1.0, 0.0), &sq, 1e-9));
        assert!(!point_in_ring(Point::new(3.0, 0.5), &sq, 1e-9));
    }

    #[test]
    fn crossing_versus_touching() {
        let (a, b) = (Point::new(0.0, 0.0), Point::new(2.0, 0.0));
        assert!(segments_cross(a, b, Point::new(1.0, -1.0), Point::new(1.0, 1.0)));
        assert!(!segments_cross(a, b, Point::new(1.0, 0.0), Point::new(1.0, 1.0)));
        assert!(segments_touch(a, b, Point::new(1.0, 0.0), Point::new(1.0, 1.0)));
        assert!(!segments_touch(a, b, Point::new(3.0, 0.0), Point::new(4.0, 1.0)));
    }

    #[test]
    fn incircle_sign() {
        let (a, b, c) = (Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(0.0, 1.0));
        assert!(incircle(a, b, c, Point::new(0.5, 0.5)) > 0.0);
        assert!(incircle(a, b, c, Point::new(2.0, 2.0)) < 0.0);
    }

    #[test]
    fn lines_meet() {
        let p = line_intersection(Point::new(0.0, 1.0), Point::new(1.0, 0.0), Point::new(3.0, 0.0), Point::new(0.0, 1.0));
        assert_eq!(p, Some(Point::new(3.0, 1.0)));
    }
}
