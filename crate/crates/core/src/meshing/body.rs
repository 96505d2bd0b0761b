use super::{FacetLabel, MeshError, MeshFacet, Region, TriangleMesh};
use crate::geometry::{segment_divisions, vec2, BoundaryLabel, InsulatedPolyline, PolygonalDomain, Vec2};
use spade::handles::FixedVertexHandle;
use spade::{AngleLimit, ConstrainedDelaunayTriangulation, Point2, RefinementParameters, Triangulation};

type Cdt = ConstrainedDelaunayTriangulation<Point2<f64>>;

const MIN_ANGLE_DEG: f64 = 20.0;
const MAX_EDGE_FACTOR: f64 = 1.5;

fn insert(cdt: &mut Cdt, p: Vec2) -> Result<FixedVertexHandle, MeshError> {
    cdt.insert(Point2::new(p.x, p.y))
        .map_err(|e| MeshError::MeshFailure(format!("cannot insert ({}, {}): {e:?}", p.x, p.y)))
}

/// Constrained Delaunay mesh of the body with target edge length `h`.
///
/// Every boundary segment is split into `ceil(L / h)` equal pieces which are
/// kept as constraint edges, so the insulated boundary nodes are known in
/// advance and shared with the layer extrusion. The interior is seeded with
/// a triangular lattice and then refined until all angles exceed 20 degrees.
pub fn mesh_body(domain: &PolygonalDomain, h: f64) -> Result<TriangleMesh, MeshError> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(MeshError::MeshFailure(format!("target size must be positive, got {h}")));
    }
    let divisions = segment_divisions(domain, h);
    let mut cdt = Cdt::new();
    let corners = domain
        .vertices()
        .iter()
        .map(|&p| insert(&mut cdt, p))
        .collect::<Result<Vec<_>, _>>()?;
    let mut seg_nodes = Vec::with_capacity(domain.segments().len());
    for (s, seg) in domain.segments().iter().enumerate() {
        let n = divisions[s];
        let mut nodes = vec![corners[seg.start]];
        for k in 1..n {
            nodes.push(insert(&mut cdt, domain.point_on(s, k as f64 / n as f64))?);
        }
        nodes.push(corners[seg.end]);
        for w in nodes.windows(2) {
            cdt.add_constraint(w[0], w[1]);
        }
        seg_nodes.push(nodes);
    }

    let (mut lo, mut hi) = (vec2(f64::INFINITY, f64::INFINITY), vec2(f64::NEG_INFINITY, f64::NEG_INFINITY));
    for p in domain.vertices() {
        lo = lo.inf(p);
        hi = hi.sup(p);
    }
    let dy = h * 3f64.sqrt() / 2.0;
    let mut j = 0usize;
    loop {
        let y = lo.y + j as f64 * dy;
        if y > hi.y {
            break;
        }
        let mut x = lo.x + if j % 2 == 1 { 0.5 * h } else { 0.0 };
        while x <= hi.x {
            let p = vec2(x, y);
            if domain.contains(&p) && -domain.signed_distance(&p) >= 0.5 * h {
                insert(&mut cdt, p)?;
            }
            x += h;
        }
        j += 1;
    }

    let budget = 20 * cdt.num_vertices() + 1000;
    let result = cdt.refine(
        RefinementParameters::new()
            .with_angle_limit(AngleLimit::from_deg(MIN_ANGLE_DEG + 0.5))
            .with_max_allowed_area(0.5 * h * h)
            .with_max_additional_vertices(budget)
            .keep_constraint_edges()
            .exclude_outer_faces(true),
    );
    if !result.refinement_complete {
        return Err(MeshError::MeshFailure("refinement ran out of vertices".into()));
    }

    let mut triangles = Vec::new();
    for face in cdt.inner_faces() {
        let v = face.vertices();
        let p = v.map(|v| vec2(v.position().x, v.position().y));
        let centroid = (p[0] + p[1] + p[2]) / 3.0;
        if domain.contains(&centroid) {
            triangles.push(v.map(|v| v.fix().index()));
        }
    }
    let mut map = vec![usize::MAX; cdt.num_vertices()];
    let mut used = vec![false; cdt.num_vertices()];
    triangles.iter().flatten().for_each(|&i| used[i] = true);
    let mut nodes = Vec::new();
    for (i, v) in cdt.vertices().enumerate() {
        if used[i] {
            map[i] = nodes.len();
            nodes.push(vec2(v.position().x, v.position().y));
        }
    }
    let triangles: Vec<[usize; 3]> = triangles.into_iter().map(|t| t.map(|i| map[i])).collect();

    let mut facets = Vec::new();
    for (s, seg) in domain.segments().iter().enumerate() {
        let label = match seg.label {
            BoundaryLabel::Insulated => FacetLabel::Insulated,
            BoundaryLabel::Dirichlet => FacetLabel::Dirichlet,
            BoundaryLabel::Neumann => FacetLabel::Neumann,
        };
        for w in seg_nodes[s].windows(2) {
            facets.push(MeshFacet {
                nodes: [map[w[0].index()], map[w[1].index()]],
                label,
                segment: Some(s),
            });
        }
    }
    if facets.iter().any(|f| f.nodes.contains(&usize::MAX)) {
        return Err(MeshError::MeshFailure("boundary node not covered by any triangle".into()));
    }
    let insulated = InsulatedPolyline::from_divisions(domain, &divisions, |s, k| map[seg_nodes[s][k].index()]);
    let regions = vec![Region::Body; triangles.len()];
    let mesh = TriangleMesh {
        nodes,
        triangles,
        regions,
        facets,
        insulated,
    };

    mesh.check_conformity().map_err(MeshError::MeshFailure)?;
    let min_angle = mesh.min_angle_deg();
    if min_angle < MIN_ANGLE_DEG {
        return Err(MeshError::MeshFailure(format!(
            "minimum angle {min_angle:.2} deg is below {MIN_ANGLE_DEG} deg"
        )));
    }
    let max_edge = mesh.max_edge();
    if max_edge > MAX_EDGE_FACTOR * h {
        return Err(MeshError::MeshFailure(format!(
            "longest edge {max_edge:.4} exceeds {MAX_EDGE_FACTOR} h = {:.4}",
            MAX_EDGE_FACTOR * h
        )));
    }
    Ok(mesh)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::BoundaryLabel::*;

    fn l_shape() -> PolygonalDomain {
        PolygonalDomain::polygon(
            vec![
                vec2(0.0, 0.0),
                vec2(2.0, 0.0),
                vec2(2.0, 1.0),
                vec2(1.0, 1.0),
                vec2(1.0, 2.0),
                vec2(0.0, 2.0),
            ],
            &[Insulated, Neumann, Insulated, Insulated, Dirichlet, Neumann],
        )
        .unwrap()
    }

    #[test]
    fn coarse_square() {
        let d = PolygonalDomain::unit_square([Neumann, Insulated, Neumann, Dirichlet]).unwrap();
        let m = mesh_body(&d, 0.5).unwrap();
        assert!(m.triangles.len() >= 8);
        assert!((m.region_area(Region::Body) - 1.0).abs() < 1e-14);
        for label in [FacetLabel::Insulated, FacetLabel::Dirichlet] {
            assert!((m.label_length(label) - 1.0).abs() < 1e-14);
        }
        assert!((m.label_length(FacetLabel::Neumann) - 2.0).abs() < 1e-14);
        assert_eq!(m.facets.len(), 8);
    }

    #[test]
    fn halving_h_halves_edges() {
        let d = PolygonalDomain::unit_square([Insulated; 4]).unwrap();
        let mut prev = None;
        for h in [0.2, 0.1, 0.05, 0.025] {
            let m = mesh_body(&d, h).unwrap();
            let e = m.max_edge();
            assert!(e <= 1.5 * h);
            if let Some(p) = prev {
                let ratio: f64 = p / e;
                assert!((2.0 / 1.5..=2.0 * 1.5).contains(&ratio), "ratio {ratio}");
            }
            prev = Some(e);
        }
    }

    #[test]
    fn l_shape_euler_characteristic() {
        let m = mesh_body(&l_shape(), 0.1).unwrap();
        let v = m.node_count() as i64;
        let e = m.edge_counts().len() as i64;
        let f = m.triangles.len() as i64;
        assert_eq!(v - e + f, 1);
        assert!(m.min_angle_deg() >= 20.0);
        assert!((m.region_area(Region::Body) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn domain_with_hole() {
        let vertices = vec![
            vec2(0.0, 0.0),
            vec2(3.0, 0.0),
            vec2(3.0, 3.0),
            vec2(0.0, 3.0),
            vec2(1.0, 1.0),
            vec2(1.0, 2.0),
            vec2(2.0, 2.0),
            vec2(2.0, 1.0),
        ];
        let seg = |a, b, label| crate::geometry::Segment { start: a, end: b, label };
        let segments = vec![
            seg(0, 1, Dirichlet),
            seg(1, 2, Dirichlet),
            seg(2, 3, Dirichlet),
            seg(3, 0, Dirichlet),
            seg(4, 5, Insulated),
            seg(5, 6, Insulated),
            seg(6, 7, Insulated),
            seg(7, 4, Insulated),
        ];
        let d = PolygonalDomain::new(vertices, segments).unwrap();
        let m = mesh_body(&d, 0.2).unwrap();
        let v = m.node_count() as i64;
        let e = m.edge_counts().len() as i64;
        let f = m.triangles.len() as i64;
        assert_eq!(v - e + f, 0);
        assert!((m.region_area(Region::Body) - 8.0).abs() < 1e-12);
        assert_eq!(m.insulated.chains.len(), 1);
        assert!(m.insulated.chains[0].closed);
        assert_eq!(m.insulated.chains[0].nodes.len(), 20);
    }

    #[test]
    fn insulated_nodes_are_mesh_nodes() {
        let d = l_shape();
        let m = mesh_body(&d, 0.1).unwrap();
        let chains = d.insulated_chains();
        for (c, chain) in m.insulated.chains.iter().zip(&chains) {
            for n in &c.nodes {
                let p = d.point_on(chain.segments[n.pos], n.param);
                assert!((m.nodes[n.mesh_node] - p).norm() < 1e-14);
            }
        }
        let ins = m.label_nodes(FacetLabel::Insulated);
        let mut from_chain: Vec<usize> = m.insulated.chains.iter().flat_map(|c| c.nodes.iter().map(|n| n.mesh_node)).collect();
        from_chain.sort_unstable();
        assert_eq!(ins, from_chain);
    }

    #[test]
    fn meshing_is_deterministic() {
        let a = mesh_body(&l_shape(), 0.07).unwrap();
        let b = mesh_body(&l_shape(), 0.07).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn acute_input_angle_is_reported() {
        let d = PolygonalDomain::polygon(
            vec![vec2(0.0, 0.0), vec2(1.0, 0.0), vec2(1.0, 0.1)],
            &[Insulated, Neumann, Dirichlet],
        )
        .unwrap();
        assert!(matches!(mesh_body(&d, 0.1), Err(MeshError::MeshFailure(_))));
    }
}
