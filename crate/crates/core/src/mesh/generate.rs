//! Initial mesh generation: noding, boundary subdivision, constrained
//! Delaunay triangulation, Delaunay refinement and structured oxide strips.

use std::collections::{HashMap, VecDeque};

use super::cdt::{Cdt, NONE};
use super::{BoundaryEdge, Mesh, MeshError, MeshRegion, SizeField};
use crate::geometry::{dist_to_segment, incircle, orient, BoundaryTag, CrossSection, Material, Point};

/// Smallest angle the refinement aims for, degrees.
const QUALITY_ANGLE: f64 = 20.0;
/// An edge longer than this multiple of the local target size is split.
const SIZE_SLACK: f64 = 1.5;
/// Strip elements are at most this many strip thicknesses long.
const STRIP_ASPECT: f64 = 1.5;
const VERTEX_CAP: usize = 4_000_000;
/// Grid on which input vertices are merged, nm.
const SNAP: f64 = 1e-6;
const ON_SEGMENT: f64 = 1e-7;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Kind {
    /// May be split by the refinement.
    Free,
    /// Inner or outer edge of an oxide strip.
    Strip,
    /// Half of the end rung of a strip.
    Rung,
}

#[derive(Clone, Copy, Debug)]
struct Seg {
    kind: Kind,
    tag: Option<BoundaryTag>,
}

fn key(a: u32, b: u32) -> (u32, u32) {
    (a.min(b), a.max(b))
}

/// Parameters in (0, 1) that cut a unit interval of physical length `len`
/// into pieces of local size `h(s)`, by equal steps of ∫ ds / h.
fn march(len: f64, h_floor: f64, h: impl Fn(f64) -> f64) -> Vec<f64> {
    let samples = ((4.0 * len / h_floor).ceil() as usize).clamp(8, 400_000);
    let mut cum = Vec::with_capacity(samples + 1);
    cum.push(0.0);
    let mut prev = 1.0 / h(0.0);
    for k in 1..=samples {
        let cur = 1.0 / h(k as f64 / samples as f64);
        let last = *cum.last().unwrap();
        cum.push(last + 0.5 * (prev + cur) * len / samples as f64);
        prev = cur;
    }
    let total = cum[samples];
    let n = (total - 1e-9).ceil().max(1.0) as usize;
    let mut out = Vec::with_capacity(n.saturating_sub(1));
    let mut k = 0;
    for j in 1..n {
        let target = total * j as f64 / n as f64;
        while cum[k + 1] < target {
            k += 1;
        }
        let f = (target - cum[k]) / (cum[k + 1] - cum[k]);
        out.push((k as f64 + f) / samples as f64);
    }
    out
}

fn circumcenter(a: Point, b: Point, c: Point) -> Point {
    let (ba, ca) = (b - a, c - a);
    let d = 2.0 * ba.cross(ca);
    let (lb, lc) = (ba.norm2(), ca.norm2());
    a + Point::new((ca.y * lb - ba.y * lc) / d, (ba.x * lc - ca.x * lb) / d)
}

enum Walk {
    Blocked(u32, u32),
    Found(u32),
}

struct Builder<'a> {
    cs: &'a CrossSection,
    sf: &'a SizeField,
    pts: Vec<Point>,
    /// Vertex of the input polygons (as opposed to a Steiner point).
    input: Vec<bool>,
    index: HashMap<(i64, i64), u32>,
    segs: HashMap<(u32, u32), Seg>,
    strips: Vec<(usize, Vec<(u32, u32)>)>,
    rung_mid: HashMap<(u32, u32), u32>,
    seeds: Vec<(usize, u32, u32)>,
    refinable: Vec<bool>,
    cdt: Option<Cdt>,
}

/// Builds the initial mesh of `cs` graded by `sf`.
///
/// Substrate and vacuum are refined until every edge is within 1.5× the
/// local target size and no element angle is below 20° (except where two
/// input boundaries already meet at a smaller angle). Oxide strips are
/// meshed as two structured layers, with elements at most 1.5 strip
/// thicknesses long.
///
/// Fails with [`MeshError::MeshFailure`] when `sf.h_min` exceeds half the
/// thinnest oxide strip.
pub fn generate_mesh(cs: &CrossSection, sf: &SizeField) -> Result<Mesh, MeshError> {
    sf.validate()?;
    for l in &cs.layers {
        let t = l.min_thickness();
        if sf.h_min > 0.5 * t * (1.0 + 1e-9) {
            return Err(MeshError::MeshFailure(format!(
                "h_min = {} nm cannot resolve a {} nm oxide strip (needs h_min ≤ {} nm)",
                sf.h_min,
                t,
                0.5 * t
            )));
        }
    }
    let mut b = Builder {
        cs,
        sf,
        pts: Vec::new(),
        input: Vec::new(),
        index: HashMap::new(),
        segs: HashMap::new(),
        strips: Vec::new(),
        rung_mid: HashMap::new(),
        seeds: Vec::new(),
        refinable: cs.regions.iter().map(|r| matches!(r.material, Material::Substrate | Material::Vacuum)).collect(),
        cdt: None,
    };
    b.collect()?;
    b.subdivide();
    b.triangulate()?;
    b.classify()?;
    b.refine()?;
    Ok(b.output())
}

impl Builder<'_> {
    fn vertex(&mut self, p: Point) -> u32 {
        let k = ((p.x / SNAP).round() as i64, (p.y / SNAP).round() as i64);
        if let Some(&v) = self.index.get(&k) {
            return v;
        }
        let v = self.pts.len() as u32;
        self.pts.push(p);
        self.input.push(false);
        self.index.insert(k, v);
        v
    }

    fn lookup(&self, p: Point) -> Option<u32> {
        self.index.get(&((p.x / SNAP).round() as i64, (p.y / SNAP).round() as i64)).copied()
    }

    fn fresh_vertex(&mut self, p: Point) -> u32 {
        self.pts.push(p);
        self.input.push(false);
        (self.pts.len() - 1) as u32
    }

    /// Input vertices strictly inside the segment `a–b`, ordered from `a`.
    fn chain(&self, a: u32, b: u32) -> Vec<u32> {
        let (pa, pb) = (self.pts[a as usize], self.pts[b as usize]);
        let d = pb - pa;
        let len2 = d.norm2();
        let (lo, hi) = (Point::new(pa.x.min(pb.x), pa.y.min(pb.y)), Point::new(pa.x.max(pb.x), pa.y.max(pb.y)));
        let mut inner: Vec<(f64, u32)> = Vec::new();
        for (w, &q) in self.pts.iter().enumerate() {
            let w = w as u32;
            if w == a || w == b || q.x < lo.x - ON_SEGMENT || q.x > hi.x + ON_SEGMENT || q.y < lo.y - ON_SEGMENT || q.y > hi.y + ON_SEGMENT {
                continue;
            }
            let s = (q - pa).dot(d) / len2;
            if s > 0.0 && s < 1.0 && dist_to_segment(q, pa, pb) <= ON_SEGMENT {
                inner.push((s, w));
            }
        }
        inner.sort_by(|x, y| x.0.total_cmp(&y.0));
        let mut out = vec![a];
        out.extend(inner.into_iter().map(|(_, w)| w));
        out.push(b);
        out
    }

    fn collect(&mut self) -> Result<(), MeshError> {
        let [lo, hi] = self.cs.bbox;
        for p in [lo, Point::new(hi.x, lo.y), hi, Point::new(lo.x, hi.y)] {
            let v = self.vertex(p);
            self.input[v as usize] = true;
        }
        let mut raw: Vec<(u32, u32)> = Vec::new();
        let mut seen = std::collections::HashSet::new();
        for (r, region) in self.cs.regions.iter().enumerate() {
            let ids: Vec<u32> = region.polygon.iter().map(|&p| self.vertex(p)).collect();
            for &v in &ids {
                self.input[v as usize] = true;
            }
            self.seeds.push((r, ids[0], ids[1 % ids.len()]));
            for i in 0..ids.len() {
                let (a, b) = (ids[i], ids[(i + 1) % ids.len()]);
                if a != b && seen.insert(key(a, b)) {
                    raw.push((a, b));
                }
            }
        }
        for (a, b) in raw {
            let c = self.chain(a, b);
            for w in c.windows(2) {
                self.segs.entry(key(w[0], w[1])).or_insert(Seg { kind: Kind::Free, tag: None });
            }
        }
        for ts in &self.cs.boundary_tags {
            let (Some(a), Some(b)) = (self.lookup(ts.a), self.lookup(ts.b)) else {
                return Err(MeshError::Internal("tagged segment endpoint is not a region vertex".into()));
            };
            for w in self.chain(a, b).windows(2) {
                match self.segs.get_mut(&key(w[0], w[1])) {
                    Some(s) => s.tag = Some(ts.tag),
                    None => return Err(MeshError::Internal("tagged segment is not a region edge".into())),
                }
            }
        }
        for layer in &self.cs.layers {
            let mut st: Vec<(u32, u32)> = Vec::new();
            for s in &layer.stations {
                let (Some(i), Some(o)) = (self.lookup(s.inner), self.lookup(s.outer)) else {
                    return Err(MeshError::Internal("strip station is not a region vertex".into()));
                };
                if st.last() != Some(&(i, o)) {
                    st.push((i, o));
                }
            }
            let mut mark = |a: u32, b: u32, kind: Kind| match self.segs.get_mut(&key(a, b)) {
                Some(s) => {
                    s.kind = kind;
                    Ok(())
                }
                None => Err(MeshError::MeshFailure("an oxide strip edge is split by another region's vertex".into())),
            };
            for w in st.windows(2) {
                if w[0].0 != w[1].0 {
                    mark(w[0].0, w[1].0, Kind::Strip)?;
                }
                mark(w[0].1, w[1].1, Kind::Strip)?;
            }
            let (first, last) = (st[0], st[st.len() - 1]);
            mark(first.0, first.1, Kind::Rung)?;
            mark(last.0, last.1, Kind::Rung)?;
            self.strips.push((layer.region, st));
        }
        Ok(())
    }

    fn replace_segment(&mut self, a: u32, b: u32, chain: &[u32], kind: Kind) {
        let seg = self.segs.remove(&key(a, b)).expect("segment to subdivide exists");
        for w in chain.windows(2) {
            self.segs.insert(key(w[0], w[1]), Seg { kind, tag: seg.tag });
        }
    }

    fn subdivide(&mut self) {
        let sf = self.sf;
        for s in 0..self.strips.len() {
            let old = self.strips[s].1.clone();
            let mut st = vec![old[0]];
            for w in old.windows(2) {
                let ((i0, o0), (i1, o1)) = (w[0], w[1]);
                let p = |v: u32| self.pts[v as usize];
                let (pi0, po0, pi1, po1) = (p(i0), p(o0), p(i1), p(o1));
                let len = pi0.dist(pi1).max(po0.dist(po1));
                let (t0, t1) = (pi0.dist(po0), pi1.dist(po1));
                let h = |s: f64| {
                    let mid = pi0.lerp(pi1, s).mid(po0.lerp(po1, s));
                    sf.h(mid).min(STRIP_ASPECT * (t0 + (t1 - t0) * s))
                };
                let params = march(len, sf.h_min.min(STRIP_ASPECT * t0.min(t1)), h);
                let mut inner = vec![i0];
                let mut outer = vec![o0];
                for &s in &params {
                    let i = if i0 == i1 { i0 } else { self.fresh_vertex(pi0.lerp(pi1, s)) };
                    let o = self.fresh_vertex(po0.lerp(po1, s));
                    inner.push(i);
                    outer.push(o);
                    st.push((i, o));
                }
                inner.push(i1);
                outer.push(o1);
                st.push((i1, o1));
                if i0 != i1 && params.len() > 0 {
                    self.replace_segment(i0, i1, &inner, Kind::Strip);
                }
                if !params.is_empty() {
                    self.replace_segment(o0, o1, &outer, Kind::Strip);
                }
            }
            for end in [st[0], st[st.len() - 1]] {
                let k = key(end.0, end.1);
                if self.rung_mid.contains_key(&k) {
                    continue;
                }
                let m = self.pts[k.0 as usize].mid(self.pts[k.1 as usize]);
                let m = self.fresh_vertex(m);
                self.rung_mid.insert(k, m);
                self.replace_segment(end.0, end.1, &[end.0, m, end.1], Kind::Rung);
            }
            self.strips[s].1 = st;
        }
        let mut free: Vec<(u32, u32)> = self.segs.iter().filter(|(_, s)| s.kind == Kind::Free).map(|(&k, _)| k).collect();
        free.sort_unstable();
        for (a, b) in free {
            let (pa, pb) = (self.pts[a as usize], self.pts[b as usize]);
            let params = march(pa.dist(pb), sf.h_min, |s| sf.h(pa.lerp(pb, s)));
            if params.is_empty() {
                continue;
            }
            let mut chain = vec![a];
            for s in params {
                chain.push(self.fresh_vertex(pa.lerp(pb, s)));
            }
            chain.push(b);
            self.replace_segment(a, b, &chain, Kind::Free);
        }
    }

    fn triangulate(&mut self) -> Result<(), MeshError> {
        let mut cdt = Cdt::new([self.pts[0], self.pts[1], self.pts[2], self.pts[3]]);
        let mut hint = NONE;
        for v in 4..self.pts.len() {
            match cdt.insert(self.pts[v], hint) {
                Some(id) if id as usize == v => hint = cdt.last,
                Some(id) => return Err(MeshError::Internal(format!("vertex {v} coincides with vertex {id}"))),
                None => return Err(MeshError::Internal(format!("vertex {v} lies outside the box"))),
            }
        }
        let mut keys: Vec<(u32, u32)> = self.segs.keys().copied().collect();
        keys.sort_unstable();
        for (a, b) in keys {
            cdt.insert_segment(a, b).map_err(|w| MeshError::Internal(format!("vertex {w} lies on segment {a}-{b}")))?;
        }
        self.cdt = Some(cdt);
        Ok(())
    }

    fn classify(&mut self) -> Result<(), MeshError> {
        let cdt = self.cdt.as_mut().unwrap();
        for &(r, a, b) in &self.seeds {
            let (pa, pb) = (cdt.p(a), cdt.p(b));
            // the first constrained sub-edge of a→b, with the region on its left
            let mut best: Option<(f64, u32)> = None;
            for t in cdt.star(a) {
                let tri = cdt.t(t);
                let k = tri.index_of(a).unwrap();
                let next = tri.v[(k + 1) % 3];
                let q = cdt.p(next);
                if (q - pa).dot(pb - pa) > 0.0 && dist_to_segment(q, pa, pb) <= ON_SEGMENT {
                    let d = q.dist(pa);
                    if best.is_none_or(|(bd, _)| d < bd) {
                        best = Some((d, t));
                    }
                }
            }
            let Some((_, seed)) = best else {
                return Err(MeshError::Internal(format!("no seed triangle for region {r}")));
            };
            if cdt.tris[seed as usize].region != NONE {
                continue;
            }
            cdt.tris[seed as usize].region = r as u32;
            let mut stack = vec![seed];
            while let Some(t) = stack.pop() {
                let tri = cdt.tris[t as usize];
                for i in 0..3 {
                    let u = tri.n[i];
                    if u == NONE || tri.constrained(i) {
                        continue;
                    }
                    let ru = cdt.tris[u as usize].region;
                    if ru == NONE {
                        cdt.tris[u as usize].region = r as u32;
                        stack.push(u);
                    } else if ru != r as u32 {
                        return Err(MeshError::Internal(format!("regions {r} and {ru} touch across an open edge")));
                    }
                }
            }
        }
        if cdt.alive().any(|t| cdt.t(t).region == NONE) {
            return Err(MeshError::Internal("triangles outside every region".into()));
        }
        Ok(())
    }

    fn cdt(&self) -> &Cdt {
        self.cdt.as_ref().unwrap()
    }

    fn is_refinable(&self, t: u32) -> bool {
        let tri = self.cdt().t(t);
        tri.alive && self.refinable[tri.region as usize]
    }

    fn splittable(&self, a: u32, b: u32) -> bool {
        let floor = 0.1 * self.sf.h_min;
        self.segs.get(&key(a, b)).is_some_and(|s| s.kind == Kind::Free) && self.cdt().p(a).dist(self.cdt().p(b)) > floor
    }

    fn encroaches(&self, p: Point, a: u32, b: u32) -> bool {
        let (pa, pb) = (self.cdt().p(a), self.cdt().p(b));
        (pa - p).dot(pb - p) < 0.0
    }

    /// Encroached constrained edges seen from refinable triangles around `v`.
    fn encroached_around(&self, v: u32, out: &mut VecDeque<(u32, u32)>) {
        let cdt = self.cdt();
        for t in cdt.star(v) {
            if !self.is_refinable(t) {
                continue;
            }
            let tri = cdt.t(t);
            for i in 0..3 {
                if tri.constrained(i) {
                    let (a, b) = tri.edge(i);
                    if self.encroaches(cdt.p(tri.v[i]), a, b) {
                        out.push_back((a, b));
                    }
                }
            }
        }
    }

    fn split_segment(&mut self, a: u32, b: u32, segq: &mut VecDeque<(u32, u32)>) {
        let seg = self.segs.remove(&key(a, b)).unwrap();
        let cdt = self.cdt.as_mut().unwrap();
        let (pa, pb) = (cdt.p(a), cdt.p(b));
        let len = pa.dist(pb);
        // concentric shells around a single input endpoint stop the
        // cascade of splits at small input angles
        let (ia, ib) = (self.input[a as usize], self.input[b as usize]);
        let mut s = 0.5;
        if ia != ib {
            let d = 2f64.powf((0.5 * len).log2().round());
            if d > len / 3.0 && d < 2.0 * len / 3.0 {
                s = if ia { d / len } else { 1.0 - d / len };
            }
        }
        let v = cdt.add_point(pa.lerp(pb, s));
        self.input.push(false);
        let (t, i) = cdt.find_edge(a, b).expect("segment present in the triangulation");
        let fresh = cdt.split_edge(t, i, v);
        cdt.legalize(v, fresh);
        self.segs.insert(key(a, v), seg);
        self.segs.insert(key(v, b), seg);
        self.encroached_around(v, segq);
    }

    /// Whether triangle `t` is too large or too skinny.
    fn is_bad(&self, t: u32) -> bool {
        let cdt = self.cdt();
        let tri = cdt.t(t);
        let p = cdt.corners(t);
        let len = [p[1].dist(p[2]), p[2].dist(p[0]), p[0].dist(p[1])];
        for i in 0..3 {
            let m = p[(i + 1) % 3].mid(p[(i + 2) % 3]);
            if len[i] > SIZE_SLACK * self.sf.h(m) {
                return true;
            }
        }
        let k = (0..3).min_by(|&i, &j| len[i].total_cmp(&len[j])).unwrap();
        let (b, c) = (len[(k + 1) % 3], len[(k + 2) % 3]);
        let cos = ((b * b + c * c - len[k] * len[k]) / (2.0 * b * c)).clamp(-1.0, 1.0);
        if cos.acos().to_degrees() >= QUALITY_ANGLE {
            return false;
        }
        // an angle between two input boundaries cannot be improved
        if tri.constrained((k + 1) % 3) && tri.constrained((k + 2) % 3) {
            return false;
        }
        len[k] > 0.1 * self.sf.h_min
    }

    fn walk(&self, t: u32, c: Point) -> Walk {
        let cdt = self.cdt();
        let [a, b, d] = cdt.corners(t);
        let g = Point::new((a.x + b.x + d.x) / 3.0, (a.y + b.y + d.y) / 3.0);
        let mut cur = t;
        for _ in 0..cdt.tris.len() + 8 {
            let tri = cdt.t(cur);
            let mut exit = None;
            let mut any = None;
            for i in 0..3 {
                let (x, y) = tri.edge(i);
                let (px, py) = (cdt.p(x), cdt.p(y));
                if orient(px, py, c) < 0.0 {
                    any.get_or_insert(i);
                    let (ox, oy) = (orient(g, c, px), orient(g, c, py));
                    if exit.is_none() && ox * oy <= 0.0 {
                        exit = Some(i);
                    }
                }
            }
            let Some(i) = exit.or(any) else { return Walk::Found(cur) };
            if tri.constrained(i) || tri.n[i] == NONE {
                let (x, y) = tri.edge(i);
                return Walk::Blocked(x, y);
            }
            cur = tri.n[i];
        }
        Walk::Found(cur)
    }

    fn refine(&mut self) -> Result<(), MeshError> {
        let mut segq: VecDeque<(u32, u32)> = VecDeque::new();
        let mut keys: Vec<(u32, u32)> = self.segs.keys().copied().collect();
        keys.sort_unstable();
        for (a, b) in keys {
            let cdt = self.cdt();
            for (x, y) in [(a, b), (b, a)] {
                if let Some((t, i)) = cdt.find_directed(x, y) {
                    if self.is_refinable(t) && self.encroaches(cdt.p(cdt.t(t).v[i]), a, b) {
                        segq.push_back((a, b));
                    }
                }
            }
        }
        let mut triq: VecDeque<(u32, u32)> = self.cdt().alive().filter(|&t| self.is_refinable(t)).map(|t| (t, self.cdt().t(t).stamp)).collect();
        self.cdt.as_mut().unwrap().touched.clear();
        loop {
            while let Some((a, b)) = segq.pop_front() {
                if self.splittable(a, b) && self.cdt().find_edge(a, b).is_some() {
                    self.split_segment(a, b, &mut segq);
                }
            }
            self.requeue(&mut triq);
            let Some((t, stamp)) = triq.pop_front() else { break };
            if self.cdt().pts.len() > VERTEX_CAP {
                return Err(MeshError::MeshFailure(format!("refinement exceeded {VERTEX_CAP} vertices")));
            }
            let tri = *self.cdt().t(t);
            if !tri.alive || tri.stamp != stamp || !self.is_refinable(t) || !self.is_bad(t) {
                continue;
            }
            let [a, b, d] = self.cdt().corners(t);
            let c = circumcenter(a, b, d);
            let tc = match self.walk(t, c) {
                Walk::Blocked(x, y) => {
                    if self.splittable(x, y) {
                        segq.push_back((x, y));
                        triq.push_back((t, stamp));
                    }
                    continue;
                }
                Walk::Found(tc) => tc,
            };
            if !self.is_refinable(tc) {
                continue;
            }
            // c on an edge or vertex of tc
            let tct = *self.cdt().t(tc);
            let on: Vec<usize> = (0..3)
                .filter(|&i| {
                    let (x, y) = tct.edge(i);
                    orient(self.cdt().p(x), self.cdt().p(y), c) == 0.0
                })
                .collect();
            if on.len() > 1 {
                continue;
            }
            if let Some(&i) = on.first() {
                if tct.constrained(i) {
                    let (x, y) = tct.edge(i);
                    if self.splittable(x, y) {
                        segq.push_back((x, y));
                        triq.push_back((t, stamp));
                    }
                    continue;
                }
            }
            // segments the new vertex would encroach upon
            let enc = self.cavity_encroachments(tc, c);
            if !enc.is_empty() {
                let mut any = false;
                for (x, y) in enc {
                    if self.splittable(x, y) {
                        segq.push_back((x, y));
                        any = true;
                    }
                }
                if any {
                    triq.push_back((t, stamp));
                }
                continue;
            }
            let cdt = self.cdt.as_mut().unwrap();
            let v = cdt.add_point(c);
            self.input.push(false);
            let fresh = match on.first() {
                Some(&i) => cdt.split_edge(tc, i, v),
                None => cdt.split_triangle(tc, v),
            };
            cdt.legalize(v, fresh);
        }
        Ok(())
    }

    fn requeue(&mut self, triq: &mut VecDeque<(u32, u32)>) {
        let touched = std::mem::take(&mut self.cdt.as_mut().unwrap().touched);
        for t in touched {
            if self.is_refinable(t) {
                triq.push_back((t, self.cdt().t(t).stamp));
            }
        }
    }

    fn cavity_encroachments(&self, start: u32, c: Point) -> Vec<(u32, u32)> {
        let cdt = self.cdt();
        let mut seen = vec![start];
        let mut stack = vec![start];
        let mut out = Vec::new();
        while let Some(t) = stack.pop() {
            let tri = cdt.t(t);
            for i in 0..3 {
                let u = tri.n[i];
                if u == NONE || tri.constrained(i) {
                    let (a, b) = tri.edge(i);
                    if self.encroaches(c, a, b) {
                        out.push((a, b));
                    }
                    continue;
                }
                if seen.contains(&u) {
                    continue;
                }
                let [p0, p1, p2] = cdt.corners(u);
                if incircle(p0, p1, p2, c) > 0.0 {
                    seen.push(u);
                    stack.push(u);
                }
            }
        }
        out
    }

    fn output(self) -> Mesh {
        let cdt = self.cdt.as_ref().unwrap();
        let mut tris: Vec<([u32; 3], u32)> = Vec::new();
        for t in cdt.alive() {
            let tri = cdt.t(t);
            if self.refinable[tri.region as usize] {
                tris.push((tri.v, tri.region));
            }
        }
        let mut pts = cdt.pts.clone();
        for (region, st) in &self.strips {
            let r = *region as u32;
            let n = st.len();
            let mids: Vec<u32> = st
                .iter()
                .enumerate()
                .map(|(k, &(i, o))| {
                    if k == 0 || k == n - 1 {
                        self.rung_mid[&key(i, o)]
                    } else {
                        pts.push(pts[i as usize].mid(pts[o as usize]));
                        (pts.len() - 1) as u32
                    }
                })
                .collect();
            for k in 0..n - 1 {
                let (i0, o0) = st[k];
                let (i1, o1) = st[k + 1];
                for quad in [[i0, i1, mids[k + 1], mids[k]], [mids[k], mids[k + 1], o1, o0]] {
                    for tri in split_quad(&pts, quad) {
                        tris.push((tri, r));
                    }
                }
            }
        }
        let mut used = vec![false; pts.len()];
        for (t, _) in &tris {
            for &v in t {
                used[v as usize] = true;
            }
        }
        let mut map = vec![u32::MAX; pts.len()];
        let mut nodes = Vec::new();
        for (v, &u) in used.iter().enumerate() {
            if u {
                map[v] = nodes.len() as u32;
                nodes.push(pts[v]);
            }
        }
        let triangles: Vec<[u32; 3]> = tris.iter().map(|(t, _)| t.map(|v| map[v as usize])).collect();
        let region_id = tris.iter().map(|&(_, r)| r).collect();
        let mut boundary_edges: Vec<BoundaryEdge> = self
            .segs
            .iter()
            .filter_map(|(&(a, b), s)| {
                let tag = s.tag?;
                let (a, b) = (map[a as usize], map[b as usize]);
                (a != u32::MAX && b != u32::MAX).then(|| BoundaryEdge { nodes: [a.min(b), a.max(b)], tag })
            })
            .collect();
        boundary_edges.sort_by_key(|e| (e.tag as u8, e.nodes));
        Mesh {
            nodes,
            triangles,
            region_id,
            regions: self.cs.regions.iter().map(|r| MeshRegion { material: r.material, eps_r: r.eps_r }).collect(),
            boundary_edges,
            generation: 0,
            parent: Vec::new(),
        }
    }
}

/// Splits the quad `q` (possibly with `q[0] == q[1]`) along its shorter
/// diagonal, returning positively oriented triangles.
fn split_quad(pts: &[Point], q: [u32; 4]) -> Vec<[u32; 3]> {
    let p = |v: u32| pts[v as usize];
    let ccw = |t: [u32; 3]| if orient(p(t[0]), p(t[1]), p(t[2])) < 0.0 { [t[0], t[2], t[1]] } else { t };
    if q[0] == q[1] {
        return vec![ccw([q[0], q[2], q[3]])];
    }
    let ok = |t: [u32; 3]| orient(p(t[0]), p(t[1]), p(t[2])) != 0.0;
    let a = [[q[0], q[1], q[2]], [q[0], q[2], q[3]]];
    let b = [[q[0], q[1], q[3]], [q[1], q[2], q[3]]];
    let signs = |s: &[[u32; 3]; 2]| s.iter().map(|&t| orient(p(t[0]), p(t[1]), p(t[2])).signum()).collect::<Vec<_>>();
    let valid = |s: &[[u32; 3]; 2]| s.iter().all(|&t| ok(t)) && signs(s)[0] == signs(s)[1];
    let pick = if p(q[0]).dist(p(q[2])) <= p(q[1]).dist(p(q[3])) { (a, b) } else { (b, a) };
    let chosen = if valid(&pick.0) { pick.0 } else { pick.1 };
    chosen.iter().map(|&t| ccw(t)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn march_uniform_and_graded() {
        let s = march(10.0, 1.0, |_| 1.0);
        assert_eq!(s.len(), 9);
        assert!((s[4] - 0.5).abs() < 1e-9);
        // h growing along the segment: pieces grow too
        let s = march(100.0, 1.0, |s| 1.0 + 50.0 * s);
        assert!(s[0] < 1.0 - s[s.len() - 1]);
    }

    #[test]
    fn circumcenter_is_equidistant() {
        let (a, b, c) = (Point::new(0.0, 0.0), Point::new(4.0, 0.1), Point::new(1.0, 3.0));
        let o = circumcenter(a, b, c);
        assert!((o.dist(a) - o.dist(b)).abs() < 1e-12 && (o.dist(a) - o.dist(c)).abs() < 1e-12);
    }
}
