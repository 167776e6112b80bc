use sidewall::geometry::*;
use sidewall::mesh::*;

fn small(p: GeometryParams) -> GeometryParams {
    GeometryParams { gap: 3.0, pad_extent: 3.0, ..p }
}

fn mesh_of(p: &GeometryParams) -> Mesh {
    let cs = build_cross_section(p).unwrap();
    generate_mesh(&cs, &SizeField::for_params(p, &cs)).unwrap()
}

fn edge_lengths(m: &Mesh) -> impl Iterator<Item = f64> + '_ {
    (0..m.triangles.len()).flat_map(move |t| {
        let c = m.corners(t);
        (0..3).map(move |i| c[i].dist(c[(i + 1) % 3]))
    })
}

#[test]
fn uniform_square_has_edges_near_the_target() {
    let sq = vec![Point::new(0.0, 0.0), Point::new(100.0, 0.0), Point::new(100.0, 100.0), Point::new(0.0, 100.0)];
    let boundary_tags = (0..4).map(|i| TaggedSegment { a: sq[i], b: sq[(i + 1) % 4], tag: BoundaryTag::Outer }).collect();
    let cs = CrossSection {
        regions: vec![Region { material: Material::Vacuum, polygon: sq, eps_r: 1.0, electrode: None }],
        boundary_tags,
        corner_markers: vec![],
        layers: vec![],
        surfaces: vec![],
        bbox: [Point::new(0.0, 0.0), Point::new(100.0, 100.0)],
    };
    let h = 10.0;
    let m = generate_mesh(&cs, &SizeField::uniform(h)).unwrap();
    m.audit().unwrap();
    for l in edge_lengths(&m) {
        assert!((h / 2.0..=2.0 * h).contains(&l), "edge {l}");
    }
    let area: f64 = (0..m.triangles.len()).map(|t| m.area(t)).sum();
    assert!((area - 1e4).abs() < 1e-6);
    assert_eq!(m.boundary_edges.len(), 40);
}

#[test]
fn baseline_mesh_is_conforming_and_well_shaped() {
    let p = small(GeometryParams::default());
    let m = mesh_of(&p);
    m.audit().unwrap();
    let q = mesh_quality(&m);
    assert!(q.min_angle_deg >= 15.0, "{q:?}");
    // metal carries no elements; the rest tiles the box
    let cs = build_cross_section(&p).unwrap();
    let area: f64 = (0..m.triangles.len()).map(|t| m.area(t)).sum();
    assert!((area - (cs.box_area() - cs.material_area(Material::Metal))).abs() < 1e-6 * cs.box_area());
}

#[test]
fn oxide_is_at_least_two_elements_thick() {
    for p in [GeometryParams::default(), GeometryParams { dh: 2.0, alpha: 30.0, r1: 20.0, ..Default::default() }] {
        let p = small(p);
        let m = mesh_of(&p);
        let metal: Vec<[Point; 2]> = m
            .boundary_edges
            .iter()
            .filter(|e| e.tag.is_electrode())
            .map(|e| [m.nodes[e.nodes[0] as usize], m.nodes[e.nodes[1] as usize]])
            .collect();
        let depth = |q: Point| metal.iter().map(|[a, b]| dist_to_segment(q, *a, *b)).fold(f64::INFINITY, f64::min);
        let mut checked = 0;
        for t in (0..m.triangles.len()).filter(|&t| m.material(t).is_oxide()) {
            let d = m.corners(t).map(depth);
            let spread = d.iter().fold(0.0f64, |a, &b| a.max(b)) - d.iter().fold(f64::INFINITY, |a, &b| a.min(b));
            // a single layer would span the full thickness; mitred stations at
            // concave corners stretch a half layer by up to 1/cos 30°
            assert!(spread <= 0.6 * p.dh, "oxide element spans {spread} nm of a {} nm layer", p.dh);
            checked += 1;
        }
        assert!(checked > 100);
    }
}

#[test]
fn coarse_size_field_cannot_resolve_the_oxide() {
    let p = small(GeometryParams::default());
    let cs = build_cross_section(&p).unwrap();
    let sf = SizeField::for_params(&p, &cs).with_overrides(&SizeFieldOverrides { h_min: Some(10.0), ..Default::default() });
    assert!(matches!(generate_mesh(&cs, &sf), Err(MeshError::MeshFailure(_))));
}

#[test]
fn meshing_is_deterministic() {
    let p = small(GeometryParams { trench_depth: 40.0, ..Default::default() });
    assert_eq!(mesh_of(&p).to_ascii(), mesh_of(&p).to_ascii());
}

#[test]
fn zero_indicators_only_bump_the_generation() {
    let m = mesh_of(&small(GeometryParams::default()));
    let a = adapt_mesh(&m, &vec![0.0; m.triangles.len()], 0.2).unwrap();
    assert_eq!(a.generation, 1);
    assert_eq!((&a.nodes, &a.triangles, &a.region_id, &a.boundary_edges), (&m.nodes, &m.triangles, &m.region_id, &m.boundary_edges));
    assert!(matches!(adapt_mesh(&m, &[1.0], 0.2), Err(MeshError::IndicatorLength { .. })));
}

#[test]
fn refinement_is_local_nested_and_keeps_quality() {
    let m0 = mesh_of(&small(GeometryParams::default()));
    let centroid = |m: &Mesh, t: usize| {
        let c = m.corners(t);
        (c[0] + c[1] + c[2]) * (1.0 / 3.0)
    };
    // one marked element far from the electrodes
    let far = (0..m0.triangles.len()).max_by(|&a, &b| m0.area(a).total_cmp(&m0.area(b))).unwrap();
    let mut ind = vec![0.0; m0.triangles.len()];
    ind[far] = 1.0;
    let m1 = adapt_mesh(&m0, &ind, 1e-9).unwrap();
    let changed: Vec<usize> = (0..m0.triangles.len()).filter(|&t| m1.triangles[t] != m0.triangles[t]).collect();
    assert!(!changed.is_empty() && changed.len() < 40, "{} elements touched", changed.len());
    let reach = 20.0 * m0.area(far).sqrt();
    assert!(changed.iter().all(|&t| centroid(&m0, t).dist(centroid(&m0, far)) < reach));

    // three rounds of energy-like marking around the corners
    let corner = Point::new(-1500.0, 160.0);
    let mut m = m0;
    for _ in 0..3 {
        let ind: Vec<f64> = (0..m.triangles.len()).map(|t| m.area(t) / (centroid(&m, t).dist(corner) + 1.0).powf(4.0 / 3.0)).collect();
        let next = adapt_mesh(&m, &ind, 0.2).unwrap();
        for t in 0..next.triangles.len() {
            let parent = next.parent[t] as usize;
            let c = m.corners(parent);
            let g = centroid(&next, t);
            assert!((0..3).all(|i| orient(c[i], c[(i + 1) % 3], g) > -1e-9), "child {t} escapes parent {parent}");
        }
        m = next;
    }
    m.audit().unwrap();
    assert!(mesh_quality(&m).min_angle_deg >= 15.0);
    assert_eq!(m.generation, 3);
}
