//! Construction of the pad-edge cross-section.
//!
//! Only the pad half (x < 0) is built explicitly; the ground half is its
//! mirror image through the gap midline x = 0. The metal profile runs from
//! the far end of the film along the top, around the top edge (radius
//! `r1`), down the vertical sidewall to the knee at `footer_fraction · t`,
//! then down the footer at `alpha` from vertical to the substrate, with an
//! optional concave fillet of radius `r2` into the foot.

use super::point::{dedup_ring, signed_area, Point};
use super::section::*;
use super::{GeometryError, GeometryParams};

/// Largest chord error of arc discretisations, nm.
pub const CHORD_TOLERANCE: f64 = 0.2;
/// Largest angular step of arc and corner-fan discretisations, degrees.
pub const MAX_ARC_STEP: f64 = 22.5;

const TOL: f64 = 1e-9;

fn arc_steps(radius: f64, sweep: f64) -> usize {
    let mut step = MAX_ARC_STEP;
    if radius > CHORD_TOLERANCE {
        step = step.min(2.0 * (1.0 - CHORD_TOLERANCE / radius).acos().to_degrees());
    }
    ((sweep / step).ceil() as usize).max(1)
}

/// Left-half polylines shared by the region builders.
struct Half {
    /// Metal profile from the far top corner to the end of the footprint.
    profile: Vec<Point>,
    /// Index in `profile` of the top/side split on the top edge.
    bisector: usize,
    top: Vec<Station>,
    side: Vec<Station>,
    /// Vacuum boundary from (-B, 0) to the midline.
    envelope: Vec<Point>,
    /// Substrate top from (-B, 0) to the midline.
    substrate_top: Vec<Point>,
    /// Metal bottom from the far end to the end of the footprint.
    metal_bottom: Vec<Point>,
    markers: Vec<CornerMarker>,
}

fn half(p: &GeometryParams, b: f64) -> Half {
    let t = p.film_thickness;
    let hf = p.footer_height();
    let xc = -0.5 * p.gap * 1e3;
    let xfar = xc - p.pad_extent * 1e3;
    let (dt, ds) = (p.top_oxide(), p.side_oxide());
    let has_top = dt > 0.0 && !(p.capped && p.exposed_length <= 0.0);
    let has_side = ds > 0.0;
    let top_eff = if has_top { dt } else { ds };
    let side_eff = if has_side { ds } else { dt };
    let x_start = if p.capped { xc - p.r1 - p.exposed_length } else { xfar };
    let alpha = p.alpha;
    let (sa, ca) = alpha.to_radians().sin_cos();
    let footer_normal = Point::new(ca, sa);
    let mut markers = Vec::new();

    // top edge: arc (or a fan of directions around the sharp corner) swept
    // from the top normal (90°) to the sidewall normal (0°)
    let centre = Point::new(xc - p.r1, t - p.r1);
    let n_corner = {
        let n = arc_steps(p.r1 + dt.max(ds), 90.0).max(4);
        n + n % 2
    };
    let corner: Vec<Station> = (0..=n_corner)
        .map(|k| {
            let theta = 90.0 * (1.0 - k as f64 / n_corner as f64);
            let u = Point::polar(theta);
            let thick = side_eff + (top_eff - side_eff) * theta / 90.0;
            Station { inner: centre + u * p.r1, outer: centre + u * (p.r1 + thick) }
        })
        .collect();
    let half_corner = n_corner / 2;
    if p.r1 > 0.0 {
        markers.push(CornerMarker { point: corner[half_corner].inner, exterior_angle: 180.0 });
    } else {
        markers.push(CornerMarker { point: centre, exterior_angle: 270.0 });
    }

    let mut top = Vec::new();
    if has_top {
        let x_s = x_start.max(xfar);
        if x_s < corner[0].inner.x - TOL {
            top.push(Station { inner: Point::new(x_s, t), outer: Point::new(x_s, t + dt) });
        }
        top.extend_from_slice(&corner[..=half_corner]);
    }

    // side: second half of the corner, sidewall, knee, footer, fillet
    let mut side_chain: Vec<Station> = corner[half_corner..].to_vec();
    let foot = Point::new(xc + hf * sa / ca, 0.0);
    if alpha > 0.0 {
        let knee = Point::new(xc, hf);
        let n1 = Point::new(1.0, 0.0);
        let miter = knee + (n1 + footer_normal) * (ds / (1.0 + n1.dot(footer_normal)));
        if side_chain.last().is_some_and(|s| s.inner.close_to(knee, 1e-9)) {
            side_chain.pop();
        }
        side_chain.push(Station { inner: knee, outer: miter });
        markers.push(CornerMarker { point: knee, exterior_angle: 180.0 - alpha });
    }
    let end = if p.r2 > 0.0 {
        let tan_len = p.r2 * (45.0 - 0.5 * alpha).to_radians().tan();
        let end = foot + Point::new(tan_len, 0.0);
        let cc = end + Point::new(0.0, p.r2);
        let sweep = 90.0 - alpha;
        let n = arc_steps(p.r2, sweep).max(2);
        for k in 0..=n {
            let phi = 180.0 + alpha + sweep * k as f64 / n as f64;
            let u = Point::polar(phi);
            let st = Station { inner: cc + u * p.r2, outer: cc + u * (p.r2 - ds) };
            if side_chain.last().is_some_and(|s| s.inner.close_to(st.inner, 1e-9)) {
                side_chain.pop();
            }
            side_chain.push(st);
        }
        markers.push(CornerMarker { point: end, exterior_angle: 180.0 });
        end
    } else {
        let outer = if p.trench_depth > 0.0 { foot + footer_normal * ds } else { Point::new(foot.x + ds / ca, 0.0) };
        side_chain.push(Station { inner: foot, outer });
        markers.push(CornerMarker { point: foot, exterior_angle: 270.0 + alpha });
        foot
    };
    // stations as placed on the last corner step already sit on the sidewall
    side_chain.dedup_by(|b, a| a.inner.close_to(b.inner, 1e-9) && a.outer.close_to(b.outer, 1e-9));
    let side = if has_side { side_chain.clone() } else { Vec::new() };

    // metal profile
    let mut profile = vec![Point::new(xfar, t)];
    if has_top && p.capped && x_start > xfar + TOL {
        profile.push(Point::new(x_start, t));
    }
    let corner_first = profile.len();
    for s in corner[..half_corner].iter().chain(&side_chain) {
        profile.push(s.inner);
    }
    // index of the bisector before dedup shifts things: find it by position
    let bis_point = corner[half_corner].inner;
    dedup_ring(&mut profile, TOL);
    let bisector = profile[corner_first.min(profile.len() - 1)..]
        .iter()
        .position(|q| q.close_to(bis_point, TOL))
        .map(|i| i + corner_first.min(profile.len() - 1))
        .unwrap_or(0);

    // vacuum envelope
    let mut env = vec![Point::new(-b, 0.0), Point::new(xfar, 0.0), Point::new(xfar, t)];
    // last profile index already on the envelope
    let walked;
    if has_top {
        // bare capped top up to the start of the exposed strip
        env.push(top[0].inner);
        env.extend(top.iter().map(|s| s.outer));
        walked = bisector;
        if !has_side {
            env.push(profile[bisector]);
        }
    } else if !has_side {
        walked = profile.len() - 1;
        env.extend_from_slice(&profile[1..]);
    } else {
        env.extend_from_slice(&profile[1..=bisector]);
        walked = bisector;
    }
    if has_side {
        env.extend(side.iter().map(|s| s.outer));
        if p.trench_depth > 0.0 || p.r2 > 0.0 {
            env.push(end);
        }
    } else if walked < profile.len() - 1 {
        env.extend_from_slice(&profile[walked + 1..]);
    }

    let mut substrate_top = vec![Point::new(-b, 0.0), Point::new(xfar, 0.0)];
    let mut metal_bottom = vec![Point::new(xfar, 0.0)];
    let d = p.trench_depth;
    let mid;
    if d > 0.0 {
        mid = Point::new(0.0, -d);
        if p.undercut_x > 0.0 {
            let s = Point::new(end.x - p.undercut_x, 0.0);
            metal_bottom.push(s);
            let beta = p.undercut_beta;
            let mut wall = Vec::new();
            let drop_at_end = if beta >= 90.0 { f64::INFINITY } else { p.undercut_x * beta.to_radians().tan() };
            if drop_at_end >= d - TOL {
                let run = if beta >= 90.0 { 0.0 } else { d / beta.to_radians().tan() };
                wall.push(Point::new(s.x + run, -d));
            } else {
                wall.push(Point::new(end.x, -drop_at_end));
                wall.push(Point::new(end.x, -d));
            }
            env.push(s);
            env.extend_from_slice(&wall);
            substrate_top.push(s);
            substrate_top.extend_from_slice(&wall);
            markers.push(CornerMarker { point: s, exterior_angle: 180.0 + beta });
            markers.push(CornerMarker { point: wall[0], exterior_angle: if wall.len() > 1 { 270.0 - beta } else { 180.0 + beta } });
        } else {
            let lip = Point::new(end.x, -d);
            env.push(lip);
            substrate_top.push(end);
            substrate_top.push(lip);
            markers.push(CornerMarker { point: end, exterior_angle: 270.0 });
        }
    } else {
        mid = Point::new(0.0, 0.0);
        substrate_top.push(end);
        if has_side && p.r2 <= 0.0 {
            substrate_top.push(side.last().unwrap().outer);
        }
    }
    metal_bottom.push(end);
    env.push(mid);
    substrate_top.push(mid);
    dedup_ring(&mut env, TOL);
    dedup_ring(&mut substrate_top, TOL);

    Half { profile, bisector, top, side, envelope: env, substrate_top, metal_bottom, markers }
}

fn mirror_all(pts: &[Point]) -> Vec<Point> {
    pts.iter().map(|p| p.mirror()).collect()
}

fn ccw(mut ring: Vec<Point>) -> Vec<Point> {
    dedup_ring(&mut ring, TOL);
    if signed_area(&ring) < 0.0 {
        ring.reverse();
    }
    ring
}

fn strip_ring(stations: &[Station]) -> Vec<Point> {
    let mut ring: Vec<Point> = stations.iter().map(|s| s.inner).collect();
    ring.extend(stations.iter().rev().map(|s| s.outer));
    ccw(ring)
}

/// Builds the tagged polygon set for `params`.
///
/// Regions are emitted in a fixed order: substrate, vacuum, pad metal,
/// ground metal, then the pad's top and side oxide and the ground's top and
/// side oxide (each only when present).
pub fn build_cross_section(params: &GeometryParams) -> Result<CrossSection, GeometryError> {
    params.validate()?;
    let b = 0.5 * params.domain_scale * params.gap * 1e3;
    let h = half(params, b);

    let mut substrate = vec![Point::new(-b, -b), Point::new(b, -b)];
    substrate.extend(mirror_all(&h.substrate_top));
    substrate.extend(h.substrate_top.iter().rev().skip(1).copied());

    let mut vacuum = h.envelope.clone();
    vacuum.extend(mirror_all(&h.envelope).into_iter().rev().skip(1));
    vacuum.push(Point::new(b, b));
    vacuum.push(Point::new(-b, b));

    let mut pad = h.metal_bottom.clone();
    pad.extend(h.profile.iter().rev().copied());
    let pad = ccw(pad);
    let ground = ccw(mirror_all(&pad));

    let region = |material, polygon, eps_r, electrode| Region { material, polygon, eps_r, electrode };
    let mut regions = vec![
        region(Material::Substrate, ccw(substrate), params.eps_substrate, None),
        region(Material::Vacuum, ccw(vacuum), 1.0, None),
        region(Material::Metal, pad.clone(), 1.0, Some(BoundaryTag::ElectrodePad)),
        region(Material::Metal, ground.clone(), 1.0, Some(BoundaryTag::ElectrodeGround)),
    ];
    let mut layers = Vec::new();
    let mirrored = |st: &[Station]| st.iter().map(|s| Station { inner: s.inner.mirror(), outer: s.outer.mirror() }).collect::<Vec<_>>();
    for (stations, material) in [
        (h.top.clone(), Material::OxideTop),
        (h.side.clone(), Material::OxideSide),
        (mirrored(&h.top), Material::OxideTop),
        (mirrored(&h.side), Material::OxideSide),
    ] {
        if stations.len() < 2 {
            continue;
        }
        layers.push(LayerStrip { region: regions.len(), stations: stations.clone() });
        regions.push(region(material, strip_ring(&stations), params.eps_oxide, None));
    }

    let mut boundary_tags = Vec::new();
    for (ring, tag) in [(&pad, BoundaryTag::ElectrodePad), (&ground, BoundaryTag::ElectrodeGround)] {
        for i in 0..ring.len() {
            boundary_tags.push(TaggedSegment { a: ring[i], b: ring[(i + 1) % ring.len()], tag });
        }
    }
    let corners = [Point::new(-b, -b), Point::new(b, -b), Point::new(b, b), Point::new(-b, b)];
    for i in 0..4 {
        boundary_tags.push(TaggedSegment { a: corners[i], b: corners[(i + 1) % 4], tag: BoundaryTag::Outer });
    }

    let mut corner_markers = h.markers.clone();
    corner_markers.extend(h.markers.iter().map(|m| CornerMarker { point: m.point.mirror(), ..*m }));

    let top_profile = h.profile[..=h.bisector].to_vec();
    let side_profile = h.profile[h.bisector..].to_vec();
    let flip = |pts: &[Point]| pts.iter().rev().map(|p| p.mirror()).collect::<Vec<_>>();
    let surfaces = vec![
        MetalSurface { electrode: BoundaryTag::ElectrodePad, kind: SurfaceKind::Top, points: top_profile.clone() },
        MetalSurface { electrode: BoundaryTag::ElectrodePad, kind: SurfaceKind::Side, points: side_profile.clone() },
        MetalSurface { electrode: BoundaryTag::ElectrodeGround, kind: SurfaceKind::Top, points: flip(&top_profile) },
        MetalSurface { electrode: BoundaryTag::ElectrodeGround, kind: SurfaceKind::Side, points: flip(&side_profile) },
    ];

    Ok(CrossSection { regions, boundary_tags, corner_markers, layers, surfaces, bbox: [Point::new(-b, -b), Point::new(b, b)] })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{hausdorff, validate_cross_section};

    fn build(p: GeometryParams) -> CrossSection {
        let cs = build_cross_section(&p).unwrap();
        let v = validate_cross_section(&cs);
        assert!(v.is_empty(), "{p:?}\n{v:?}");
        cs
    }

    #[test]
    fn rectangular_film_with_two_strips_per_edge() {
        let cs = build(GeometryParams::default());
        assert_eq!(cs.regions.len(), 8);
        let area: f64 = cs.regions.iter().map(Region::area).sum();
        assert!((area - cs.box_area()).abs() <= 1e-9 * cs.box_area());
        // each oxide strip is 5 nm thick along the whole top or side
        let top: f64 = cs.regions_of(Material::OxideTop).map(Region::area).sum();
        let side: f64 = cs.regions_of(Material::OxideSide).map(Region::area).sum();
        // the sharp corner is a fan of four 22.5° wedges
        let quarter = 2.0 * 25.0 * 22.5f64.to_radians().sin();
        assert!((top - 2.0 * (60_000.0 * 5.0 + 0.5 * quarter)).abs() < 0.05, "{top}");
        assert!((side - 2.0 * (160.0 * 5.0 + 0.5 * quarter)).abs() < 0.05, "{side}");
        assert_eq!(cs.corner_markers.iter().filter(|m| m.exterior_angle == 270.0).count(), 4);
    }

    #[test]
    fn no_oxide_drops_the_four_strips() {
        let cs = build(GeometryParams { dh: 0.0, ..Default::default() });
        assert_eq!(cs.regions.len(), 4);
        assert!(cs.layers.is_empty());
    }

    #[test]
    fn footer_and_trench() {
        let p = GeometryParams { alpha: 30.0, trench_depth: 100.0, ..Default::default() };
        let cs = build(p.clone());
        let pad = &cs.regions[2].polygon;
        let hf = p.footer_height();
        let knee = Point::new(-15_000.0, hf);
        let foot = Point::new(-15_000.0 + hf * 30f64.to_radians().tan(), 0.0);
        assert!(pad.iter().any(|q| q.close_to(knee, 1e-9)));
        assert!(pad.iter().any(|q| q.close_to(foot, 1e-9)));
        let slope = (foot - knee).unit();
        assert!((slope.x - 30f64.to_radians().sin()).abs() < 1e-12);
        let sub = &cs.regions[0].polygon;
        let floor = sub.iter().map(|q| q.y).filter(|y| *y > -1000.0).fold(0.0, f64::min);
        assert_eq!(floor, -100.0);
        let flat = build(GeometryParams { alpha: 30.0, ..Default::default() });
        let removed = flat.material_area(Material::Substrate) - cs.material_area(Material::Substrate);
        assert!((removed - 100.0 * 2.0 * foot.x.abs()).abs() < 1e-6 * removed);
    }

    #[test]
    fn rounded_edges_and_undercut_validate() {
        for p in [
            GeometryParams { r1: 40.0, r2: 20.0, alpha: 20.0, ..Default::default() },
            GeometryParams { r2: 30.0, trench_depth: 50.0, ..Default::default() },
            GeometryParams { trench_depth: 100.0, undercut_x: 60.0, undercut_beta: 20.0, ..Default::default() },
            GeometryParams { trench_depth: 100.0, undercut_x: 60.0, undercut_beta: 75.0, ..Default::default() },
            GeometryParams { trench_depth: 100.0, undercut_x: 60.0, undercut_beta: 90.0, alpha: 10.0, ..Default::default() },
            GeometryParams { capped: true, exposed_length: 100.0, ..Default::default() },
            GeometryParams { capped: true, ..Default::default() },
            GeometryParams { dh_top: Some(3.0), dh_side: Some(8.0), r1: 10.0, ..Default::default() },
            GeometryParams { dh_top: Some(0.0), ..Default::default() },
            GeometryParams { dh_side: Some(0.0), trench_depth: 20.0, ..Default::default() },
        ] {
            build(p);
        }
    }

    #[test]
    fn capped_film_has_no_top_oxide_outside_the_exposed_strip() {
        let cs = build(GeometryParams { capped: true, exposed_length: 100.0, ..Default::default() });
        let top = &cs.layers[0];
        assert_eq!(top.stations[0].inner, Point::new(-15_100.0, 160.0));
        let cs = build(GeometryParams { capped: true, ..Default::default() });
        assert_eq!(cs.regions_of(Material::OxideTop).count(), 0);
        assert_eq!(cs.regions_of(Material::OxideSide).count(), 2);
    }

    #[test]
    fn corner_rounding_converges_to_the_sharp_edge() {
        let sharp = build(GeometryParams::default());
        let profile = |cs: &CrossSection| cs.surfaces[0].points.iter().chain(&cs.surfaces[1].points).copied().collect::<Vec<_>>();
        let reference = profile(&sharp);
        let mut last = f64::INFINITY;
        for r1 in [40.0, 10.0, 2.5, 0.5, 0.1] {
            let d = hausdorff(&profile(&build(GeometryParams { r1, ..Default::default() })), &reference);
            assert!(d < last && d <= r1 * (2f64.sqrt() - 1.0) + 1e-9, "r1={r1} d={d}");
            last = d;
        }
    }

    #[test]
    fn geometry_is_mirror_symmetric() {
        let cs = build(GeometryParams { alpha: 15.0, r1: 20.0, trench_depth: 60.0, undercut_x: 30.0, undercut_beta: 45.0, ..Default::default() });
        let m = cs.mirrored();
        for p in m.vertices() {
            assert!(cs.vertices().any(|q| q.close_to(p, 1e-9)), "{p:?}");
        }
        assert!(validate_cross_section(&m).is_empty());
    }

    #[test]
    fn ascii_round_trip() {
        let cs = build(GeometryParams { trench_depth: 30.0, ..Default::default() });
        let parsed = CrossSection::regions_from_ascii(&cs.to_ascii()).unwrap();
        assert_eq!(parsed.len(), cs.regions.len());
        for ((m, pts), r) in parsed.iter().zip(&cs.regions) {
            assert_eq!(*m, r.material);
            assert_eq!(*pts, r.polygon);
        }
    }
}
