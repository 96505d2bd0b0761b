use super::{cross, GeometryError, InsulatedBoundary, Vec2};
use crate::models::DistributionProfile;

/// Thickness scale plus the boundary data it acts on.
#[derive(Debug, Clone, Copy)]
pub struct LayerSpec<'a> {
    pub epsilon: f64,
    pub boundary: &'a InsulatedBoundary,
    pub distribution: &'a DistributionProfile,
}

/// Structured node grid of one extruded chain, row-major (`row * columns + column`).
/// Row 0 is the chain itself, the last row is the outer surface.
#[derive(Debug, Clone, PartialEq)]
pub struct StripGrid {
    pub chain: usize,
    pub closed: bool,
    pub columns: usize,
    pub rows: usize,
    pub points: Vec<Vec2>,
    /// Flattened boundary node index of every column.
    pub boundary_nodes: Vec<usize>,
}

impl StripGrid {
    pub fn point(&self, column: usize, row: usize) -> Vec2 {
        self.points[row * self.columns + column]
    }

    pub fn quad_columns(&self) -> usize {
        if self.closed {
            self.columns
        } else {
            self.columns - 1
        }
    }

    /// Grid indices of a quad in counter-clockwise order.
    pub fn quad(&self, column: usize, row: usize) -> [(usize, usize); 4] {
        let next = (column + 1) % self.columns;
        [(column, row), (column, row + 1), (next, row + 1), (next, row)]
    }

    pub fn quad_points(&self, column: usize, row: usize) -> [Vec2; 4] {
        self.quad(column, row).map(|(c, r)| self.point(c, r))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerGrid {
    pub epsilon: f64,
    pub n_layers: usize,
    pub strips: Vec<StripGrid>,
}

fn quad_area(q: &[Vec2; 4]) -> f64 {
    0.5 * (0..4).map(|i| cross(&q[i], &q[(i + 1) % 4])).sum::<f64>()
}

impl LayerGrid {
    /// Area of the extruded layer.
    pub fn area(&self) -> f64 {
        let mut total = 0.0;
        for s in &self.strips {
            for c in 0..s.quad_columns() {
                for r in 0..s.rows - 1 {
                    total += quad_area(&s.quad_points(c, r));
                }
            }
        }
        total
    }

    /// Length of the outer surface.
    pub fn outer_length(&self) -> f64 {
        let mut total = 0.0;
        for s in &self.strips {
            let top = s.rows - 1;
            for c in 0..s.quad_columns() {
                total += (s.point((c + 1) % s.columns, top) - s.point(c, top)).norm();
            }
        }
        total
    }
}

/// Builds the layer `{s + t k(s) : 0 <= t < eps d(s)}` as structured strips
/// with `n_layers` rows of quads per chain.
pub fn extrude_layer(spec: &LayerSpec, n_layers: usize) -> Result<LayerGrid, GeometryError> {
    let b = spec.boundary;
    let d = spec.distribution.d();
    if !(spec.epsilon > 0.0) || !spec.epsilon.is_finite() {
        return Err(GeometryError::InvalidLayer(format!("epsilon must be positive, got {}", spec.epsilon)));
    }
    if n_layers == 0 {
        return Err(GeometryError::InvalidLayer("n_layers must be at least 1".into()));
    }
    if d.len() != b.node_count() {
        return Err(GeometryError::InvalidLayer("distribution does not match the boundary".into()));
    }
    if let Some(i) = d.iter().position(|v| !(*v > 0.0)) {
        return Err(GeometryError::InvalidLayer(format!("thickness must be positive, d = {} at node {i}", d[i])));
    }
    let mut strips = Vec::with_capacity(b.chains().len());
    for (ci, &(start, count, closed)) in b.chains().iter().enumerate() {
        let rows = n_layers + 1;
        let mut points = Vec::with_capacity(rows * count);
        for row in 0..rows {
            let frac = row as f64 / n_layers as f64;
            for j in 0..count {
                let node = start + j;
                points.push(b.points()[node] + b.k()[node] * (frac * spec.epsilon * d[node]));
            }
        }
        let strip = StripGrid {
            chain: ci,
            closed,
            columns: count,
            rows,
            points,
            boundary_nodes: (start..start + count).collect(),
        };
        for c in 0..strip.quad_columns() {
            for r in 0..n_layers {
                let q = strip.quad_points(c, r);
                // A bilinear quad has a positive Jacobian iff all corner turns are positive.
                let ok = (0..4).all(|i| cross(&(q[(i + 1) % 4] - q[i]), &(q[(i + 3) % 4] - q[i])) > 0.0);
                if !ok {
                    return Err(GeometryError::SelfIntersection {
                        epsilon: spec.epsilon,
                        strip: ci,
                        column: c,
                        row: r,
                    });
                }
            }
        }
        strips.push(strip);
    }
    Ok(LayerGrid {
        epsilon: spec.epsilon,
        n_layers,
        strips,
    })
}

/// Fiber coordinate `t` of a point `x = s + t k(s)` in the layer.
///
/// Inside each facet the layer is the bilinear image of
/// `(sigma, tau) -> P(sigma) + tau Q(sigma)` with `P` the facet and `Q` the
/// interpolated extrusion vector `eps d k`; the returned value is `tau eps d(sigma)`.
pub fn transversal_distance(spec: &LayerSpec, x: Vec2) -> Result<f64, GeometryError> {
    let b = spec.boundary;
    let d = spec.distribution.d();
    let eps = spec.epsilon;
    let tol = 1e-12;
    for f in b.facets() {
        let pa = b.points()[f.a];
        let e = b.points()[f.b] - pa;
        let qa = b.k()[f.a] * (eps * d[f.a]);
        let dq = b.k()[f.b] * (eps * d[f.b]) - qa;
        let w = x - pa;
        // cross(w - sigma e, qa + sigma dq) = 0
        let c0 = cross(&w, &qa);
        let c1 = cross(&w, &dq) - cross(&e, &qa);
        let c2 = -cross(&e, &dq);
        for sigma in quadratic_roots(c2, c1, c0) {
            if !(-tol..=1.0 + tol).contains(&sigma) {
                continue;
            }
            let sigma = sigma.clamp(0.0, 1.0);
            let q = qa + dq * sigma;
            let r = w - e * sigma;
            let tau = r.dot(&q) / q.norm_squared();
            if (-tol..1.0).contains(&tau) && (r - q * tau).norm() <= 1e-9 * (1.0 + e.norm()) {
                let ds = d[f.a] + (d[f.b] - d[f.a]) * sigma;
                return Ok(tau.max(0.0) * eps * ds);
            }
        }
    }
    Err(GeometryError::OutsideLayer)
}

fn quadratic_roots(a: f64, b: f64, c: f64) -> Vec<f64> {
    let scale = a.abs().max(b.abs()).max(c.abs());
    if scale == 0.0 {
        return vec![0.0];
    }
    if a.abs() <= 1e-14 * scale {
        return if b.abs() > 0.0 { vec![-c / b] } else { vec![] };
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return vec![];
    }
    // Numerically stable pair.
    let q = -0.5 * (b + b.signum() * disc.sqrt());
    let mut roots = vec![q / a];
    if q != 0.0 {
        roots.push(c / q);
    }
    roots
}

/// Largest `eps <= epsilon_max` for which the extrusion has positive quad
/// Jacobians, by bisection to relative tolerance 1e-3. Returns 0 if even a
/// vanishing thickness fails.
pub fn check_bilipschitz(boundary: &InsulatedBoundary, distribution: &DistributionProfile, epsilon_max: f64) -> f64 {
    let ok = |epsilon: f64| {
        extrude_layer(
            &LayerSpec {
                epsilon,
                boundary,
                distribution,
            },
            1,
        )
        .is_ok()
    };
    if ok(epsilon_max) {
        return epsilon_max;
    }
    if !ok(epsilon_max * 1e-12) {
        return 0.0;
    }
    let (mut lo, mut hi) = (epsilon_max * 1e-12, epsilon_max);
    while hi - lo > 1e-3 * hi {
        let mid = 0.5 * (lo + hi);
        if ok(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{
        build_transversal, vec2, BoundaryLabel::*, InsulatedPolyline, PolygonalDomain, TransversalMode,
    };
    use proptest::prelude::*;

    fn boundary(domain: &PolygonalDomain, mode: TransversalMode, h: f64) -> InsulatedBoundary {
        let p = build_transversal(domain, mode).unwrap();
        let poly = InsulatedPolyline::uniform(domain, h);
        InsulatedBoundary::new(domain, &p, &poly).unwrap()
    }

    fn right_edge() -> PolygonalDomain {
        PolygonalDomain::unit_square([Neumann, Insulated, Neumann, Dirichlet]).unwrap()
    }

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
            &[Insulated; 6],
        )
        .unwrap()
    }

    #[test]
    fn flat_edge_areas() {
        let dom = right_edge();
        let b = boundary(&dom, TransversalMode::NormalField, 0.25);
        let dist = DistributionProfile::constant_d(&b, 1.0).unwrap();
        let spec = LayerSpec {
            epsilon: 0.01,
            boundary: &b,
            distribution: &dist,
        };
        let grid = extrude_layer(&spec, 2).unwrap();
        assert!((grid.area() - 0.01).abs() < 1e-15);

        let k = vec2(0.8, 0.6);
        let b = boundary(&dom, TransversalMode::UserTable(vec![vec![k, k]]), 0.25);
        let dist = DistributionProfile::constant_d(&b, 1.0).unwrap();
        let spec = LayerSpec {
            epsilon: 0.01,
            boundary: &b,
            distribution: &dist,
        };
        let grid = extrude_layer(&spec, 3).unwrap();
        assert!((grid.area() - 0.008).abs() < 1e-15);
        assert!((grid.outer_length() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn reflex_corner_self_intersects() {
        let dom = l_shape();
        let b = boundary(&dom, TransversalMode::NormalField, 0.25);
        let dist = DistributionProfile::constant_d(&b, 1.0).unwrap();
        let spec = LayerSpec {
            epsilon: 1.0,
            boundary: &b,
            distribution: &dist,
        };
        assert!(matches!(extrude_layer(&spec, 2), Err(GeometryError::SelfIntersection { .. })));
        let e0 = check_bilipschitz(&b, &dist, 1.0);
        assert!(e0 > 0.0 && e0 < 1.0);
        let spec = LayerSpec { epsilon: e0, ..spec };
        assert!(extrude_layer(&spec, 2).is_ok());
        let spec = LayerSpec {
            epsilon: e0 * 1.01,
            ..spec
        };
        assert!(extrude_layer(&spec, 2).is_err());
    }

    #[test]
    fn convex_square_is_unconstrained() {
        let dom = PolygonalDomain::unit_square([Insulated; 4]).unwrap();
        let b = boundary(&dom, TransversalMode::NormalField, 0.1);
        let dist = DistributionProfile::constant_d(&b, 1.0).unwrap();
        assert_eq!(check_bilipschitz(&b, &dist, 10.0), 10.0);
    }

    #[test]
    fn steeper_ramp_shrinks_epsilon0() {
        let dom = l_shape();
        let b = boundary(&dom, TransversalMode::NormalField, 0.25);
        let mut last = f64::INFINITY;
        for slope in [0.0, 1.0, 2.0, 4.0, 8.0] {
            // d grows towards the reflex corner (1, 1).
            let dist = DistributionProfile::from_fn(&b, |x, y| {
                1.0 + slope * (1.0 - ((x - 1.0).powi(2) + (y - 1.0).powi(2)).sqrt()).max(0.0)
            })
            .unwrap();
            let e0 = check_bilipschitz(&b, &dist, 1.0);
            assert!(e0 < last, "slope {slope}: {e0} !< {last}");
            last = e0;
        }
    }

    #[test]
    fn fiber_coordinates() {
        let dom = right_edge();
        let b = boundary(&dom, TransversalMode::NormalField, 0.25);
        let dist = DistributionProfile::constant_d(&b, 1.0).unwrap();
        let spec = LayerSpec {
            epsilon: 0.01,
            boundary: &b,
            distribution: &dist,
        };
        assert_eq!(transversal_distance(&spec, vec2(1.0, 0.4)).unwrap(), 0.0);
        assert!((transversal_distance(&spec, vec2(1.004, 0.4)).unwrap() - 0.004).abs() < 1e-15);
        assert_eq!(
            transversal_distance(&spec, vec2(1.02, 0.4)),
            Err(GeometryError::OutsideLayer)
        );

        let k = vec2(0.8, 0.6);
        let b = boundary(&dom, TransversalMode::UserTable(vec![vec![k, k]]), 0.25);
        let dist = DistributionProfile::constant_d(&b, 1.0).unwrap();
        let spec = LayerSpec {
            epsilon: 0.01,
            boundary: &b,
            distribution: &dist,
        };
        let x = vec2(1.0, 0.3) + k * 0.003;
        let t = transversal_distance(&spec, x).unwrap();
        assert!((t - 0.003).abs() < 1e-15);
        assert!((dom.signed_distance(&x) - 0.0024).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn fiber_coordinate_is_bounded(
            col in 0usize..8, row in 0usize..4, u in 0.0f64..1.0, v in 0.0f64..1.0,
        ) {
            let dom = PolygonalDomain::unit_square([Insulated; 4]).unwrap();
            let b = boundary(&dom, TransversalMode::StarShaped(vec2(0.4, 0.55)), 0.5);
            let dist = DistributionProfile::from_fn(&b, |x, y| 0.5 + x + 0.5 * y).unwrap();
            let spec = LayerSpec { epsilon: 0.05, boundary: &b, distribution: &dist };
            let grid = extrude_layer(&spec, 4).unwrap();
            let q = grid.strips[0].quad_points(col, row);
            // bilinear sample inside the quad
            let x = q[0] * ((1.0 - u) * (1.0 - v)) + q[3] * (u * (1.0 - v)) + q[2] * (u * v) + q[1] * ((1.0 - u) * v);
            let t = transversal_distance(&spec, x).unwrap();
            prop_assert!(t >= 0.0);
            prop_assert!(t <= spec.epsilon * dist.d_max() * (1.0 + 1e-12));
        }
    }
}
