//! Incremental constrained Delaunay triangulation.
//!
//! Triangles are stored counter-clockwise with neighbour links; edge `i` of
//! a triangle is the edge opposite its vertex `i`. Every local modification
//! goes through [`Cdt::replace`], which relinks a small patch from its
//! boundary description, so the topology code lives in one place.

use crate::geometry::{incircle, orient, Point};

pub(crate) const NONE: u32 = u32::MAX;

#[derive(Clone, Copy, Debug)]
pub(crate) struct Tri {
    pub v: [u32; 3],
    pub n: [u32; 3],
    /// Bit `i` set when edge `i` is constrained.
    pub c: u8,
    pub region: u32,
    pub alive: bool,
    /// Bumped whenever the slot is reused.
    pub stamp: u32,
}

impl Tri {
    pub fn edge(&self, i: usize) -> (u32, u32) {
        (self.v[(i + 1) % 3], self.v[(i + 2) % 3])
    }

    pub fn constrained(&self, i: usize) -> bool {
        self.c & (1 << i) != 0
    }

    pub fn index_of(&self, v: u32) -> Option<usize> {
        self.v.iter().position(|&w| w == v)
    }

    /// Local index of the edge `(a, b)` in either direction.
    pub fn edge_index(&self, a: u32, b: u32) -> Option<usize> {
        (0..3).find(|&i| {
            let (x, y) = self.edge(i);
            (x == a && y == b) || (x == b && y == a)
        })
    }
}

/// A directed edge on the boundary of a patch, seen from inside.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Rim {
    pub a: u32,
    pub b: u32,
    pub outer: u32,
    pub constrained: bool,
}

pub(crate) enum Location {
    Inside(u32),
    OnEdge(u32, usize),
    OnVertex(u32),
    Outside,
}

pub(crate) struct Cdt {
    pub pts: Vec<Point>,
    pub tris: Vec<Tri>,
    pub vtri: Vec<u32>,
    free: Vec<u32>,
    pub last: u32,
    /// Triangles created or relinked since the last drain.
    pub touched: Vec<u32>,
    walk_seed: u32,
}

impl Cdt {
    /// Two triangles covering the counter-clockwise rectangle `corners`.
    pub fn new(corners: [Point; 4]) -> Self {
        let mut cdt = Cdt { pts: corners.to_vec(), tris: Vec::new(), vtri: vec![NONE; 4], free: Vec::new(), last: 0, touched: Vec::new(), walk_seed: 0 };
        let t0 = Tri { v: [0, 1, 2], n: [NONE, 1, NONE], c: 0, region: NONE, alive: true, stamp: 0 };
        let t1 = Tri { v: [0, 2, 3], n: [NONE, NONE, 0], c: 0, region: NONE, alive: true, stamp: 0 };
        cdt.tris.push(t0);
        cdt.tris.push(t1);
        cdt.vtri = vec![0, 0, 0, 1];
        cdt
    }

    pub fn p(&self, v: u32) -> Point {
        self.pts[v as usize]
    }

    pub fn t(&self, t: u32) -> &Tri {
        &self.tris[t as usize]
    }

    pub fn corners(&self, t: u32) -> [Point; 3] {
        let v = self.tris[t as usize].v;
        [self.p(v[0]), self.p(v[1]), self.p(v[2])]
    }

    pub fn alive(&self) -> impl Iterator<Item = u32> + '_ {
        (0..self.tris.len() as u32).filter(|&t| self.tris[t as usize].alive)
    }

    fn alloc(&mut self) -> u32 {
        if let Some(t) = self.free.pop() {
            t
        } else {
            self.tris.push(Tri { v: [NONE; 3], n: [NONE; 3], c: 0, region: NONE, alive: false, stamp: 0 });
            (self.tris.len() - 1) as u32
        }
    }

    /// Replaces the triangles `old` by `new`, whose outer edges are listed
    /// in `rim`. Interior edges listed in `inner_constrained` are marked
    /// constrained. Returns the slots of the new triangles, in order.
    pub fn replace(&mut self, old: &[u32], new: &[([u32; 3], u32)], rim: &[Rim], inner_constrained: &[(u32, u32)]) -> Vec<u32> {
        for &t in old {
            let tri = &mut self.tris[t as usize];
            tri.alive = false;
        }
        let mut slots = Vec::with_capacity(new.len());
        let mut reuse = old.iter().copied();
        for _ in new {
            let s = match reuse.next() {
                Some(s) => s,
                None => self.alloc(),
            };
            slots.push(s);
        }
        // old slots not reused go back to the pool
        for s in reuse {
            self.free.push(s);
        }
        for (k, &(v, region)) in new.iter().enumerate() {
            let s = slots[k] as usize;
            let stamp = self.tris[s].stamp.wrapping_add(1);
            self.tris[s] = Tri { v, n: [NONE; 3], c: 0, region, alive: true, stamp };
        }
        for k in 0..new.len() {
            let s = slots[k];
            let v = new[k].0;
            for i in 0..3 {
                let (a, b) = (v[(i + 1) % 3], v[(i + 2) % 3]);
                if let Some(r) = rim.iter().find(|r| r.a == a && r.b == b) {
                    self.tris[s as usize].n[i] = r.outer;
                    if r.constrained {
                        self.tris[s as usize].c |= 1 << i;
                    }
                    if r.outer != NONE {
                        let o = &mut self.tris[r.outer as usize];
                        let j = o.edge_index(a, b).expect("rim neighbour lost its edge");
                        o.n[j] = s;
                    }
                } else {
                    let j = (0..new.len())
                        .find(|&m| m != k && {
                            let w = new[m].0;
                            (0..3).any(|q| w[(q + 1) % 3] == b && w[(q + 2) % 3] == a)
                        })
                        .expect("patch edge without a twin");
                    self.tris[s as usize].n[i] = slots[j];
                    if inner_constrained.iter().any(|&(x, y)| (x == a && y == b) || (x == b && y == a)) {
                        self.tris[s as usize].c |= 1 << i;
                    }
                }
            }
            for &w in &v {
                self.vtri[w as usize] = s;
            }
        }
        self.touched.extend_from_slice(&slots);
        if let Some(&s) = slots.first() {
            self.last = s;
        }
        slots
    }

    fn rim_of(&self, t: u32, i: usize) -> Rim {
        let tri = self.t(t);
        let (a, b) = tri.edge(i);
        Rim { a, b, outer: tri.n[i], constrained: tri.constrained(i) }
    }

    /// Locates `p` by a visibility walk from `start`.
    pub fn locate(&mut self, p: Point, start: u32) -> Location {
        let mut t = if start != NONE && self.t(start).alive { start } else { self.last };
        if !self.t(t).alive {
            t = self.alive().next().unwrap();
        }
        let mut steps = 0usize;
        'walk: loop {
            steps += 1;
            if steps > 4 * self.tris.len() + 16 {
                // pathological cycling: fall back to a scan
                return self.scan(p);
            }
            self.walk_seed = self.walk_seed.wrapping_mul(1_103_515_245).wrapping_add(12_345);
            let off = (self.walk_seed >> 16) as usize % 3;
            let tri = *self.t(t);
            for k in 0..3 {
                let i = (k + off) % 3;
                let (a, b) = tri.edge(i);
                if orient(self.p(a), self.p(b), p) < 0.0 {
                    if tri.n[i] == NONE {
                        return Location::Outside;
                    }
                    t = tri.n[i];
                    continue 'walk;
                }
            }
            return self.classify(t, p);
        }
    }

    fn classify(&self, t: u32, p: Point) -> Location {
        let tri = self.t(t);
        for k in 0..3 {
            if self.p(tri.v[k]) == p {
                return Location::OnVertex(tri.v[k]);
            }
        }
        for i in 0..3 {
            let (a, b) = tri.edge(i);
            if orient(self.p(a), self.p(b), p) == 0.0 {
                return Location::OnEdge(t, i);
            }
        }
        Location::Inside(t)
    }

    fn scan(&self, p: Point) -> Location {
        for t in self.alive() {
            let tri = self.t(t);
            if (0..3).all(|i| {
                let (a, b) = tri.edge(i);
                orient(self.p(a), self.p(b), p) >= 0.0
            }) {
                return self.classify(t, p);
            }
        }
        Location::Outside
    }

    pub fn add_point(&mut self, p: Point) -> u32 {
        self.pts.push(p);
        self.vtri.push(NONE);
        (self.pts.len() - 1) as u32
    }

    /// Splits triangle `t` at the new vertex `v` inside it.
    pub fn split_triangle(&mut self, t: u32, v: u32) -> Vec<u32> {
        let tri = *self.t(t);
        let [a, b, c] = tri.v;
        let rim = [self.rim_of(t, 2), self.rim_of(t, 0), self.rim_of(t, 1)];
        let r = tri.region;
        self.replace(&[t], &[([v, a, b], r), ([v, b, c], r), ([v, c, a], r)], &rim, &[])
    }

    /// Splits edge `i` of `t` (and its twin) at the new vertex `v`.
    pub fn split_edge(&mut self, t: u32, i: usize, v: u32) -> Vec<u32> {
        let tri = *self.t(t);
        let a = tri.v[i];
        let (b, c) = tri.edge(i);
        let constrained = tri.constrained(i);
        let u = tri.n[i];
        let mut rim = vec![self.rim_of(t, (i + 2) % 3), self.rim_of(t, (i + 1) % 3)];
        let mut new = vec![([v, a, b], tri.region), ([v, c, a], tri.region)];
        let mut old = vec![t];
        if u != NONE {
            let ut = *self.t(u);
            let j = ut.edge_index(b, c).unwrap();
            let d = ut.v[j];
            rim.push(self.rim_of(u, (j + 1) % 3));
            rim.push(self.rim_of(u, (j + 2) % 3));
            new.push(([v, b, d], ut.region));
            new.push(([v, d, c], ut.region));
            old.push(u);
        } else {
            // hull edge: the halves face the outside
            rim.push(Rim { a: b, b: v, outer: NONE, constrained });
            rim.push(Rim { a: v, b: c, outer: NONE, constrained });
        }
        let halves: Vec<(u32, u32)> = if constrained { vec![(v, b), (v, c)] } else { vec![] };
        self.replace(&old, &new, &rim, &halves)
    }

    /// Restores the (constrained) Delaunay property around `v` after it was
    /// inserted; `fresh` are the triangles incident to `v`.
    pub fn legalize(&mut self, v: u32, fresh: Vec<u32>) {
        let mut stack = fresh;
        while let Some(t) = stack.pop() {
            let tri = *self.t(t);
            if !tri.alive {
                continue;
            }
            let Some(k) = tri.index_of(v) else { continue };
            if tri.constrained(k) || tri.n[k] == NONE {
                continue;
            }
            let u = tri.n[k];
            let ut = *self.t(u);
            let (b, c) = tri.edge(k);
            let j = ut.edge_index(b, c).unwrap();
            let d = ut.v[j];
            let [p0, p1, p2] = self.corners(t);
            if incircle(p0, p1, p2, self.p(d)) > 0.0 {
                let new = self.flip(t, k);
                stack.extend(new);
            }
        }
    }

    /// Flips edge `i` of `t`. The new triangles both start at the vertex
    /// opposite the old edge in `t`.
    pub fn flip(&mut self, t: u32, i: usize) -> Vec<u32> {
        let tri = *self.t(t);
        let u = tri.n[i];
        let ut = *self.t(u);
        let a = tri.v[i];
        let (b, c) = tri.edge(i);
        let j = ut.edge_index(b, c).unwrap();
        let d = ut.v[j];
        let rim = [self.rim_of(t, (i + 2) % 3), self.rim_of(u, (j + 1) % 3), self.rim_of(u, (j + 2) % 3), self.rim_of(t, (i + 1) % 3)];
        self.replace(&[t, u], &[([a, b, d], tri.region), ([a, d, c], tri.region)], &rim, &[])
    }

    /// Inserts `p` with Lawson flips; returns its vertex id.
    pub fn insert(&mut self, p: Point, hint: u32) -> Option<u32> {
        match self.locate(p, hint) {
            Location::OnVertex(v) => Some(v),
            Location::Outside => None,
            Location::Inside(t) => {
                let v = self.add_point(p);
                let fresh = self.split_triangle(t, v);
                self.legalize(v, fresh);
                Some(v)
            }
            Location::OnEdge(t, i) => {
                let v = self.add_point(p);
                let fresh = self.split_edge(t, i, v);
                self.legalize(v, fresh);
                Some(v)
            }
        }
    }

    /// Triangles around `v`, counter-clockwise where possible.
    pub fn star(&self, v: u32) -> Vec<u32> {
        let t0 = self.vtri[v as usize];
        let mut out = vec![t0];
        let mut t = t0;
        // forward: across the edge (v, next)
        loop {
            let tri = self.t(t);
            let k = tri.index_of(v).unwrap();
            let nx = tri.n[(k + 2) % 3];
            if nx == NONE {
                break;
            }
            if nx == t0 {
                return out;
            }
            out.push(nx);
            t = nx;
        }
        t = t0;
        loop {
            let tri = self.t(t);
            let k = tri.index_of(v).unwrap();
            let nx = tri.n[(k + 1) % 3];
            if nx == NONE {
                break;
            }
            out.push(nx);
            t = nx;
        }
        out
    }

    /// The triangle holding the directed edge `a → b`, and the edge index.
    pub fn find_directed(&self, a: u32, b: u32) -> Option<(u32, usize)> {
        for t in self.star(a) {
            let tri = self.t(t);
            let k = tri.index_of(a).unwrap();
            if tri.v[(k + 1) % 3] == b {
                return Some((t, (k + 2) % 3));
            }
        }
        None
    }

    /// Any triangle with the undirected edge `(a, b)`.
    pub fn find_edge(&self, a: u32, b: u32) -> Option<(u32, usize)> {
        self.find_directed(a, b).or_else(|| self.find_directed(b, a))
    }

    fn set_constrained(&mut self, t: u32, i: usize) {
        let tri = self.tris[t as usize];
        self.tris[t as usize].c |= 1 << i;
        let u = tri.n[i];
        if u != NONE {
            let (a, b) = tri.edge(i);
            let j = self.t(u).edge_index(a, b).unwrap();
            self.tris[u as usize].c |= 1 << j;
        }
    }

    /// Forces the segment `a–b` into the triangulation by flipping the
    /// edges it crosses. Fails with the id of a vertex lying on the open
    /// segment, which the caller must split around.
    pub fn insert_segment(&mut self, a: u32, b: u32) -> Result<(), u32> {
        if let Some((t, i)) = self.find_edge(a, b) {
            self.set_constrained(t, i);
            return Ok(());
        }
        let (pa, pb) = (self.p(a), self.p(b));
        let mut crossing = self.crossed_edges(a, b)?;
        let mut created: Vec<(u32, u32)> = Vec::new();
        let mut guard = 0usize;
        while let Some((x, y)) = crossing.pop() {
            guard += 1;
            if guard > 1_000_000 {
                break;
            }
            let Some((t, i)) = self.find_edge(x, y) else { continue };
            let tri = *self.t(t);
            let u = tri.n[i];
            if u == NONE || tri.constrained(i) {
                continue;
            }
            let p = tri.v[i];
            let ut = *self.t(u);
            let j = ut.edge_index(x, y).unwrap();
            let q = ut.v[j];
            // the quad p-x-q-y is convex iff the diagonal p-q crosses x-y
            let (pp, pq, px, py) = (self.p(p), self.p(q), self.p(x), self.p(y));
            let convex = orient(pp, pq, px) * orient(pp, pq, py) < 0.0 && orient(px, py, pp) * orient(px, py, pq) < 0.0;
            if !convex {
                crossing.insert(0, (x, y));
                continue;
            }
            self.flip(t, i);
            let still = p != a && p != b && q != a && q != b && {
                let o1 = orient(pa, pb, pp);
                let o2 = orient(pa, pb, pq);
                o1 * o2 < 0.0
            };
            if still {
                crossing.insert(0, (p, q));
            } else {
                created.push((p, q));
            }
        }
        let (t, i) = self.find_edge(a, b).expect("segment recovery failed");
        self.set_constrained(t, i);
        // restore the Delaunay property on the new edges
        let mut changed = true;
        let mut rounds = 0;
        while changed && rounds < 64 {
            changed = false;
            rounds += 1;
            for k in 0..created.len() {
                let (x, y) = created[k];
                if (x == a && y == b) || (x == b && y == a) {
                    continue;
                }
                let Some((t, i)) = self.find_edge(x, y) else { continue };
                let tri = *self.t(t);
                if tri.constrained(i) || tri.n[i] == NONE {
                    continue;
                }
                let ut = *self.t(tri.n[i]);
                let j = ut.edge_index(x, y).unwrap();
                let [p0, p1, p2] = self.corners(t);
                let (pp, pq) = (self.p(tri.v[i]), self.p(ut.v[j]));
                let convex = orient(pp, pq, self.p(x)) * orient(pp, pq, self.p(y)) < 0.0;
                if convex && incircle(p0, p1, p2, self.p(ut.v[j])) > 0.0 {
                    created[k] = (tri.v[i], ut.v[j]);
                    self.flip(t, i);
                    changed = true;
                }
            }
        }
        Ok(())
    }

    fn crossed_edges(&self, a: u32, b: u32) -> Result<Vec<(u32, u32)>, u32> {
        let (pa, pb) = (self.p(a), self.p(b));
        let mut out = Vec::new();
        // find the triangle around a that the segment leaves through
        let mut current = None;
        for t in self.star(a) {
            let tri = self.t(t);
            let k = tri.index_of(a).unwrap();
            let (x, y) = (tri.v[(k + 1) % 3], tri.v[(k + 2) % 3]);
            let ox = orient(pa, pb, self.p(x));
            let oy = orient(pa, pb, self.p(y));
            if ox == 0.0 && (self.p(x) - pa).dot(pb - pa) > 0.0 {
                return Err(x);
            }
            if oy == 0.0 && (self.p(y) - pa).dot(pb - pa) > 0.0 {
                return Err(y);
            }
            if ox < 0.0 && oy > 0.0 {
                current = Some((t, x, y));
                break;
            }
        }
        let (mut t, mut x, mut y) = current.expect("segment start not found");
        loop {
            out.push((x, y));
            let tri = self.t(t);
            let i = tri.edge_index(x, y).unwrap();
            let u = tri.n[i];
            let ut = self.t(u);
            let j = ut.edge_index(x, y).unwrap();
            let z = ut.v[j];
            if z == b {
                break;
            }
            let oz = orient(pa, pb, self.p(z));
            if oz == 0.0 {
                return Err(z);
            }
            if oz > 0.0 {
                y = z;
            } else {
                x = z;
            }
            t = u;
        }
        out.reverse();
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check(cdt: &Cdt) {
        for t in cdt.alive() {
            let tri = cdt.t(t);
            let [a, b, c] = cdt.corners(t);
            assert!(orient(a, b, c) > 0.0, "triangle {t} not ccw");
            for i in 0..3 {
                let u = tri.n[i];
                if u == NONE {
                    continue;
                }
                let (x, y) = tri.edge(i);
                let ut = cdt.t(u);
                assert!(ut.alive);
                let j = ut.edge_index(x, y).expect("asymmetric link");
                assert_eq!(ut.n[j], t);
                assert_eq!(ut.constrained(j), tri.constrained(i));
            }
        }
    }

    fn delaunay(cdt: &Cdt) -> bool {
        cdt.alive().all(|t| {
            let tri = cdt.t(t);
            let [a, b, c] = cdt.corners(t);
            (0..3).all(|i| {
                let u = tri.n[i];
                if u == NONE || tri.constrained(i) {
                    return true;
                }
                let (x, y) = tri.edge(i);
                let ut = cdt.t(u);
                let d = ut.v[ut.edge_index(x, y).unwrap()];
                incircle(a, b, c, cdt.p(d)) <= 0.0
            })
        })
    }

    fn square() -> Cdt {
        Cdt::new([Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(1.0, 1.0), Point::new(0.0, 1.0)])
    }

    #[test]
    fn grid_insertion_is_delaunay() {
        let mut cdt = square();
        for i in 0..=10 {
            for j in 0..=10 {
                let p = Point::new(i as f64 / 10.0, j as f64 / 10.0 + 0.003 * ((i * 7 + j * 3) % 5) as f64 * ((j > 0 && j < 10) as u8 as f64));
                cdt.insert(p, NONE);
            }
        }
        check(&cdt);
        assert!(delaunay(&cdt));
        let area: f64 = cdt.alive().map(|t| {
            let [a, b, c] = cdt.corners(t);
            0.5 * orient(a, b, c)
        }).sum();
        assert!((area - 1.0).abs() < 1e-12);
    }

    #[test]
    fn segment_recovery() {
        let mut cdt = square();
        let mut ids = Vec::new();
        for k in 0..40 {
            let x = (k as f64 * 0.618_033_988_7).fract();
            let y = (k as f64 * 0.414_213_562_3).fract();
            ids.push(cdt.insert(Point::new(0.02 + 0.96 * x, 0.02 + 0.96 * y), NONE).unwrap());
        }
        let a = cdt.insert(Point::new(0.01, 0.5), NONE).unwrap();
        let b = cdt.insert(Point::new(0.99, 0.51), NONE).unwrap();
        cdt.insert_segment(a, b).unwrap();
        check(&cdt);
        let (t, i) = cdt.find_edge(a, b).unwrap();
        assert!(cdt.t(t).constrained(i));
        assert!(delaunay(&cdt));
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(48))]
        #[test]
        fn random_insertions_stay_delaunay(pts in proptest::collection::vec((0.001f64..0.999, 0.001f64..0.999), 1..120)) {
            let mut cdt = square();
            for (x, y) in pts {
                cdt.insert(Point::new(x, y), NONE);
            }
            check(&cdt);
            proptest::prop_assert!(delaunay(&cdt));
            let area: f64 = cdt.alive().map(|t| {
                let [a, b, c] = cdt.corners(t);
                0.5 * orient(a, b, c)
            }).sum();
            proptest::prop_assert!((area - 1.0).abs() < 1e-9);
        }
    }
}
