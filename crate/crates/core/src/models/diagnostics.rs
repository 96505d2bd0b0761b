//! Numerical checks of the layer identities and inequalities.
//!
//! Inside each insulated facet the layer is parametrized bilinearly by
//! `x(sigma, tau) = P(sigma) + tau Q(sigma)` with `P` the facet and
//! `Q = eps lerp(d k)`. Writing `Q = eps d_h k_h` with `d_h = lerp(d)` gives the
//! discrete transversal field `k_h` (with `|k_h| <= 1`) and the Jacobian
//! `L eps d_h (k_h . n + t R)`, where `t = tau eps d_h` and
//! `R = cross(k_h, d_b k_b - d_a k_a) / (L d_h)` does not depend on `eps`.

use super::ModelError;
use crate::fem::p1_gradients;
use crate::geometry::{cross, extrude_layer, GeometryError, InsulatedBoundary, LayerSpec, Vec2};
use crate::meshing::{FacetLabel, Region, ThickMesh};
use crate::models::DistributionProfile;

const GAUSS5: [(f64, f64); 5] = [
    (0.046_910_077_030_668_00, 0.118_463_442_528_094_5),
    (0.230_765_344_947_158_45, 0.239_314_335_249_683_2),
    (0.5, 0.284_444_444_444_444_4),
    (0.769_234_655_052_841_6, 0.239_314_335_249_683_2),
    (0.953_089_922_969_332, 0.118_463_442_528_094_5),
];

// Degree-5 rule on the reference triangle, barycentric points and weights.
const TRI7: [([f64; 3], f64); 7] = [
    ([1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0], 0.225),
    ([0.059_715_871_789_770, 0.470_142_064_105_115, 0.470_142_064_105_115], 0.132_394_152_788_506),
    ([0.470_142_064_105_115, 0.059_715_871_789_770, 0.470_142_064_105_115], 0.132_394_152_788_506),
    ([0.470_142_064_105_115, 0.470_142_064_105_115, 0.059_715_871_789_770], 0.132_394_152_788_506),
    ([0.797_426_985_353_087, 0.101_286_507_323_456, 0.101_286_507_323_456], 0.125_939_180_544_827),
    ([0.101_286_507_323_456, 0.797_426_985_353_087, 0.101_286_507_323_456], 0.125_939_180_544_827),
    ([0.101_286_507_323_456, 0.101_286_507_323_456, 0.797_426_985_353_087], 0.125_939_180_544_827),
];

/// Bilinear layer patch over one insulated facet.
#[derive(Debug, Clone, Copy)]
struct Patch {
    p: Vec2,
    e: Vec2,
    normal: Vec2,
    length: f64,
    qa: Vec2,
    dq: Vec2,
    da: f64,
    db: f64,
    eps: f64,
}

impl Patch {
    fn d(&self, sigma: f64) -> f64 {
        self.da + (self.db - self.da) * sigma
    }

    fn q(&self, sigma: f64) -> Vec2 {
        self.qa + self.dq * sigma
    }

    fn point(&self, sigma: f64, tau: f64) -> Vec2 {
        self.p + self.e * sigma + self.q(sigma) * tau
    }

    fn k(&self, sigma: f64) -> Vec2 {
        self.q(sigma) / (self.eps * self.d(sigma))
    }

    fn k_dot_n(&self, sigma: f64) -> f64 {
        self.k(sigma).dot(&self.normal)
    }

    fn remainder(&self, sigma: f64) -> f64 {
        cross(&self.k(sigma), &(self.dq / self.eps)) / (self.length * self.d(sigma))
    }

    /// `|det dx/d(sigma, tau)|`.
    fn jacobian(&self, sigma: f64, tau: f64) -> f64 {
        cross(&self.q(sigma), &(self.e + self.dq * tau))
    }

    fn top_length(&self) -> f64 {
        (self.e + self.dq).norm()
    }
}

fn patches(boundary: &InsulatedBoundary, distribution: &DistributionProfile, eps: f64) -> Vec<Patch> {
    let d = distribution.d();
    boundary
        .facets()
        .iter()
        .map(|f| {
            let p = boundary.points()[f.a];
            let qa = boundary.k()[f.a] * (eps * d[f.a]);
            Patch {
                p,
                e: boundary.points()[f.b] - p,
                normal: f.normal,
                length: f.length,
                qa,
                dq: boundary.k()[f.b] * (eps * d[f.b]) - qa,
                da: d[f.a],
                db: d[f.b],
                eps,
            }
        })
        .collect()
}

/// Least-squares slope of `log y` against `log x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateFit {
    pub rate: f64,
    /// Root mean square residual of the fit in log space.
    pub residual: f64,
}

fn fit_rate(xs: &[f64], ys: &[f64]) -> Option<RateFit> {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| **x > 0.0 && y.abs() > 0.0 && y.is_finite())
        .map(|(x, y)| (x.ln(), y.abs().ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let rate = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / sxx;
    let residual = (pts.iter().map(|p| (p.1 - my - rate * (p.0 - mx)).powi(2)).sum::<f64>() / n).sqrt();
    Some(RateFit { rate, residual })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransformRow {
    pub epsilon: f64,
    /// `int_{Sigma} v dx` by quadrature on the layer quads.
    pub volume_lhs: f64,
    /// Fiber integral `int_Gamma int_0^{eps d} v (k . n) dt ds`, i.e. with `R = 0`.
    pub volume_rhs: f64,
    /// `int_{Gamma^eps} v ds`.
    pub boundary_lhs: f64,
    /// `int_Gamma v(s + eps d k) ds`, i.e. with `r = 0`.
    pub boundary_rhs: f64,
    /// `max |R|` over the layer.
    pub volume_remainder: f64,
    /// `max |r|` with `r = (|Gamma^eps| / |Gamma| - 1) / sqrt(eps)` per facet.
    pub boundary_remainder: f64,
}

impl TransformRow {
    pub fn volume_gap(&self) -> f64 {
        (self.volume_lhs - self.volume_rhs).abs()
    }

    pub fn boundary_gap(&self) -> f64 {
        (self.boundary_lhs - self.boundary_rhs).abs()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransformCheckReport {
    pub rows: Vec<TransformRow>,
    /// `None` when fewer than two gaps are nonzero.
    pub volume_rate: Option<RateFit>,
    pub boundary_rate: Option<RateFit>,
}

/// Compares layer integrals with their fiber representations over an
/// `eps` sweep.
pub fn check_transformation_formula(
    boundary: &InsulatedBoundary,
    distribution: &DistributionProfile,
    epsilons: &[f64],
    n_layers: usize,
    v: impl Fn(Vec2) -> f64,
) -> Result<TransformCheckReport, GeometryError> {
    let mut rows = Vec::with_capacity(epsilons.len());
    for &epsilon in epsilons {
        let spec = LayerSpec {
            epsilon,
            boundary,
            distribution,
        };
        let grid = extrude_layer(&spec, n_layers)?;
        let mut volume_lhs = 0.0;
        for strip in &grid.strips {
            for c in 0..strip.quad_columns() {
                for r in 0..grid.n_layers {
                    let q = strip.quad_points(c, r);
                    for tri in [[q[0], q[1], q[2]], [q[0], q[2], q[3]]] {
                        let area = 0.5 * cross(&(tri[1] - tri[0]), &(tri[2] - tri[0]));
                        for (l, w) in TRI7 {
                            volume_lhs += area * w * v(tri[0] * l[0] + tri[1] * l[1] + tri[2] * l[2]);
                        }
                    }
                }
            }
        }
        let mut row = TransformRow {
            epsilon,
            volume_lhs,
            volume_rhs: 0.0,
            boundary_lhs: 0.0,
            boundary_rhs: 0.0,
            volume_remainder: 0.0,
            boundary_remainder: 0.0,
        };
        for p in patches(boundary, distribution, epsilon) {
            let top = p.top_length();
            for (s, ws) in GAUSS5 {
                let vt = v(p.point(s, 1.0));
                row.boundary_lhs += ws * top * vt;
                row.boundary_rhs += ws * p.length * vt;
                let fiber: f64 = GAUSS5.iter().map(|&(t, wt)| wt * v(p.point(s, t))).sum();
                row.volume_rhs += ws * p.length * epsilon * p.d(s) * p.k_dot_n(s) * fiber;
            }
            for i in 0..=16 {
                row.volume_remainder = row.volume_remainder.max(p.remainder(i as f64 / 16.0).abs());
            }
            row.boundary_remainder = row
                .boundary_remainder
                .max(((top / p.length - 1.0) / epsilon.sqrt()).abs());
        }
        rows.push(row);
    }
    let eps: Vec<f64> = rows.iter().map(|r| r.epsilon).collect();
    let vg: Vec<f64> = rows.iter().map(TransformRow::volume_gap).collect();
    let bg: Vec<f64> = rows.iter().map(TransformRow::boundary_gap).collect();
    Ok(TransformCheckReport {
        volume_rate: fit_rate(&eps, &vg),
        boundary_rate: fit_rate(&eps, &bg),
        rows,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LebesgueRow {
    pub epsilon: f64,
    /// `(1/eps) int_Sigma a |v|^p dx`.
    pub layer_average: f64,
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LebesgueReport {
    pub rows: Vec<LebesgueRow>,
    /// `int_Gamma d~ a |v|^p ds`.
    pub target: f64,
    pub rate: Option<RateFit>,
}

/// Layer averages `(1/eps) ||a^{1/p} v||^p_{p, Sigma}` against their
/// boundary limit. `a` is evaluated at the fiber foot, i.e. extended
/// constantly along fibers.
pub fn check_lebesgue_limit(
    boundary: &InsulatedBoundary,
    distribution: &DistributionProfile,
    epsilons: &[f64],
    a: impl Fn(Vec2) -> f64,
    v: impl Fn(Vec2) -> f64,
    p: f64,
) -> Result<LebesgueReport, ModelError> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(ModelError::InvalidProblem(format!("exponent must lie in [1, inf), got {p}")));
    }
    let unit = patches(boundary, distribution, 1.0);
    let target: f64 = unit
        .iter()
        .map(|q| {
            GAUSS5
                .iter()
                .map(|&(s, w)| {
                    let x = q.point(s, 0.0);
                    w * q.length * q.d(s) * q.k_dot_n(s) * a(x) * v(x).abs().powf(p)
                })
                .sum::<f64>()
        })
        .sum();
    let mut rows = Vec::with_capacity(epsilons.len());
    for &epsilon in epsilons {
        extrude_layer(
            &LayerSpec {
                epsilon,
                boundary,
                distribution,
            },
            1,
        )?;
        let mut total = 0.0;
        for q in patches(boundary, distribution, epsilon) {
            for (s, ws) in GAUSS5 {
                let af = a(q.point(s, 0.0));
                for (t, wt) in GAUSS5 {
                    total += ws * wt * q.jacobian(s, t) * af * v(q.point(s, t)).abs().powf(p);
                }
            }
        }
        let layer_average = total / epsilon;
        rows.push(LebesgueRow {
            epsilon,
            layer_average,
            gap: (layer_average - target).abs(),
        });
    }
    let eps: Vec<f64> = rows.iter().map(|r| r.epsilon).collect();
    let gaps: Vec<f64> = rows.iter().map(|r| r.gap).collect();
    Ok(LebesgueReport {
        rate: fit_rate(&eps, &gaps),
        rows,
        target,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoincareReport {
    pub epsilon: f64,
    /// `min k_h . n` on the insulated boundary.
    pub kappa: f64,
    /// Certified lower bound of `(k_h . n + t R) / |k_h|^2` over the layer,
    /// playing the role of `kappa - eps ||d|| ||R||`.
    pub kappa_effective: f64,
    /// `||d^{-1/2} (v(. + eps d k) - v)||^2_Gamma`.
    pub lhs: f64,
    /// `eps / kappa_effective ||grad v||^2_Sigma`, infinite if the bound degenerates.
    pub rhs: f64,
    /// `||v||^2_{Gamma^eps}`.
    pub trace_lhs: f64,
    /// `2 (1 + sqrt(eps) max r) (||d||_inf rhs + ||v||^2_Gamma)`.
    pub trace_rhs: f64,
}

impl PoincareReport {
    pub fn holds(&self) -> bool {
        self.lhs <= self.rhs * (1.0 + 1e-9) + 1e-300
    }

    pub fn trace_holds(&self) -> bool {
        self.trace_lhs <= self.trace_rhs * (1.0 + 1e-9) + 1e-300
    }
}

/// Evaluates both layer Poincare inequalities for a nodal field on a thick
/// mesh. `spec` must be the layer the mesh was extruded from.
pub fn check_poincare(thick: &ThickMesh, spec: &LayerSpec, v: &[f64]) -> Result<PoincareReport, ModelError> {
    let m = &thick.mesh;
    if v.len() != m.node_count() {
        return Err(ModelError::LengthMismatch {
            expected: m.node_count(),
            got: v.len(),
        });
    }
    let eps = spec.epsilon;
    let b = spec.boundary;
    let mut grad_layer = 0.0;
    for (t, tri) in m.triangles.iter().enumerate() {
        if m.regions[t] == Region::Layer {
            let (g, area) = p1_gradients(&m.triangle_points(t));
            grad_layer += area * (g[0] * v[tri[0]] + g[1] * v[tri[1]] + g[2] * v[tri[2]]).norm_squared();
        }
    }
    let all = patches(b, spec.distribution, eps);
    let mut kappa = f64::INFINITY;
    let mut kappa_effective = f64::INFINITY;
    let mut lhs = 0.0;
    let mut trace_outer = 0.0;
    let mut trace_inner = 0.0;
    let mut stretch: f64 = 1.0;
    let mut facet = 0;
    for strip in &thick.grid.strips {
        let top_row = strip.rows - 1;
        for c in 0..strip.quad_columns() {
            let p = &all[facet];
            facet += 1;
            let next = (c + 1) % strip.columns;
            let bot = [v[thick.node(strip.chain, c, 0)], v[thick.node(strip.chain, next, 0)]];
            let top = [
                v[thick.node(strip.chain, c, top_row)],
                v[thick.node(strip.chain, next, top_row)],
            ];
            for i in 0..=32 {
                let s = i as f64 / 32.0;
                let kn = p.k_dot_n(s);
                let k2 = p.k(s).norm_squared();
                kappa = kappa.min(kn);
                let at_top = kn + eps * p.d(s) * p.remainder(s);
                kappa_effective = kappa_effective.min(kn / k2).min(at_top / k2);
            }
            for (s, w) in GAUSS5 {
                let vb = bot[0] + (bot[1] - bot[0]) * s;
                let vt = top[0] + (top[1] - top[0]) * s;
                lhs += w * p.length * (vt - vb).powi(2) / p.d(s);
                trace_inner += w * p.length * vb * vb;
                trace_outer += w * p.top_length() * vt * vt;
            }
            stretch = stretch.max(p.top_length() / p.length);
        }
    }
    let rhs = if kappa_effective > 0.0 {
        eps / kappa_effective * grad_layer
    } else {
        f64::INFINITY
    };
    let trace_rhs = 2.0 * stretch * (spec.distribution.d_max() * rhs + trace_inner);
    Ok(PoincareReport {
        epsilon: eps,
        kappa,
        kappa_effective,
        lhs,
        rhs,
        trace_lhs: trace_outer,
        trace_rhs,
    })
}

/// Squared norms whose uniform boundedness is equi-coercivity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquicoercivityRow {
    pub epsilon: f64,
    /// `||v||^2_Omega`.
    pub l2_body: f64,
    /// `||grad v||^2_Omega`.
    pub grad_body: f64,
    /// `||v||^2_{Gamma^eps}`.
    pub trace_outer: f64,
    /// `eps ||grad v||^2_Sigma`.
    pub grad_layer: f64,
}

impl EquicoercivityRow {
    pub fn values(&self) -> [f64; 4] {
        [self.l2_body, self.grad_body, self.trace_outer, self.grad_layer]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquicoercivityReport {
    pub rows: Vec<EquicoercivityRow>,
    /// Per quantity, `max / min` across the sweep (1 if all vanish).
    pub spread: [f64; 4],
    /// Every entry is at most twice the median of its column.
    pub bounded: bool,
}

impl EquicoercivityReport {
    /// All four quantities lie within a factor two band.
    pub fn within_band(&self) -> bool {
        self.spread.iter().all(|s| *s <= 2.0)
    }
}

fn equicoercivity_row(thick: &ThickMesh, u: &[f64]) -> EquicoercivityRow {
    let m = &thick.mesh;
    let mut row = EquicoercivityRow {
        epsilon: thick.grid.epsilon,
        l2_body: 0.0,
        grad_body: 0.0,
        trace_outer: 0.0,
        grad_layer: 0.0,
    };
    for (t, tri) in m.triangles.iter().enumerate() {
        let (g, area) = p1_gradients(&m.triangle_points(t));
        let grad = (g[0] * u[tri[0]] + g[1] * u[tri[1]] + g[2] * u[tri[2]]).norm_squared();
        match m.regions[t] {
            Region::Body => {
                row.grad_body += area * grad;
                let [a, b, c] = tri.map(|i| u[i]);
                row.l2_body += area / 6.0 * (a * a + b * b + c * c + a * b + b * c + c * a);
            }
            Region::Layer => row.grad_layer += thick.grid.epsilon * area * grad,
        }
    }
    for f in &m.facets {
        if f.label == FacetLabel::IEps {
            let (a, b) = (u[f.nodes[0]], u[f.nodes[1]]);
            row.trace_outer += m.facet_length(f) / 3.0 * (a * a + a * b + b * b);
        }
    }
    row
}

/// Tabulates the equi-coercivity quantities for thick solutions across a sweep.
pub fn equicoercivity_report(solves: &[(&ThickMesh, &[f64])]) -> EquicoercivityReport {
    let rows: Vec<EquicoercivityRow> = solves.iter().map(|(t, u)| equicoercivity_row(t, u)).collect();
    let mut spread = [1.0; 4];
    let mut bounded = true;
    for (q, s) in spread.iter_mut().enumerate() {
        let mut col: Vec<f64> = rows.iter().map(|r| r.values()[q]).collect();
        col.sort_by(f64::total_cmp);
        if col.is_empty() {
            continue;
        }
        let (lo, hi) = (col[0], col[col.len() - 1]);
        let median = if col.len() % 2 == 1 {
            col[col.len() / 2]
        } else {
            0.5 * (col[col.len() / 2 - 1] + col[col.len() / 2])
        };
        bounded &= hi <= 2.0 * median + 1e-300;
        *s = if hi == 0.0 {
            1.0
        } else if lo <= 0.0 {
            f64::INFINITY
        } else {
            hi / lo
        };
    }
    EquicoercivityReport { rows, spread, bounded }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{
        build_transversal, BoundaryLabel::*, InsulatedPolyline, PolygonalDomain, TransversalMode,
    };
    use crate::meshing::{mesh_body, mesh_thick};

    fn setup(domain: &PolygonalDomain, h: f64) -> InsulatedBoundary {
        let p = build_transversal(domain, TransversalMode::NormalField).unwrap();
        InsulatedBoundary::new(domain, &p, &InsulatedPolyline::uniform(domain, h)).unwrap()
    }

    fn right_edge() -> PolygonalDomain {
        PolygonalDomain::unit_square([Neumann, Insulated, Neumann, Dirichlet]).unwrap()
    }

    #[test]
    fn flat_identities_are_exact() {
        let b = setup(&right_edge(), 0.25);
        let d = DistributionProfile::constant_d(&b, 1.0).unwrap();
        let r = check_transformation_formula(&b, &d, &[0.1, 0.05], 2, |_| 1.0).unwrap();
        for row in &r.rows {
            assert!(row.volume_gap() < 1e-12, "{row:?}");
            assert!(row.boundary_gap() < 1e-12, "{row:?}");
            assert!((row.volume_lhs - row.epsilon).abs() < 1e-12);
            assert_eq!(row.volume_remainder, 0.0);
        }
    }

    #[test]
    fn closed_polygon_gap_is_quadratic() {
        let sq = PolygonalDomain::unit_square([Insulated; 4]).unwrap();
        let b = setup(&sq, 0.25);
        let d = DistributionProfile::constant_d(&b, 1.0).unwrap();
        let r = check_transformation_formula(&b, &d, &[0.04, 0.02, 0.01, 0.005], 1, |_| 1.0).unwrap();
        let fit = r.volume_rate.unwrap();
        assert!((fit.rate - 2.0).abs() < 0.05, "{fit:?}");
    }

    #[test]
    fn lebesgue_limit_of_linear_field() {
        // Bottom edge, v = x, a = 1, d = 1: target int_0^1 x^2 dx.
        let dom = PolygonalDomain::unit_square([Insulated, Neumann, Neumann, Dirichlet]).unwrap();
        let b = setup(&dom, 0.25);
        let d = DistributionProfile::constant_d(&b, 1.0).unwrap();
        let r = check_lebesgue_limit(&b, &d, &[0.1, 0.05, 0.025], |_| 1.0, |x| x.x, 2.0).unwrap();
        assert!((r.target - 1.0 / 3.0).abs() < 1e-13);
        for row in &r.rows {
            assert!(row.gap < 1e-12, "{row:?}");
        }
        let two = check_lebesgue_limit(&b, &d, &[0.1], |_| 2.0, |x| x.x + x.y, 1.0).unwrap();
        let one = check_lebesgue_limit(&b, &d, &[0.1], |_| 1.0, |x| x.x + x.y, 1.0).unwrap();
        assert!((two.target - 2.0 * one.target).abs() < 1e-13);
        assert!((two.rows[0].layer_average - 2.0 * one.rows[0].layer_average).abs() < 1e-13);
    }

    #[test]
    fn lebesgue_rate_with_vertical_variation() {
        let dom = PolygonalDomain::unit_square([Insulated, Neumann, Neumann, Dirichlet]).unwrap();
        let b = setup(&dom, 0.25);
        let d = DistributionProfile::constant_d(&b, 1.0).unwrap();
        let r = check_lebesgue_limit(&b, &d, &[0.1, 0.05, 0.025], |_| 1.0, |x| 1.0 + x.y, 2.0).unwrap();
        assert!(r.rate.unwrap().rate > 0.9);
    }

    #[test]
    fn poincare_is_sharp_for_fiber_linear_field() {
        let dom = right_edge();
        let body = mesh_body(&dom, 0.25).unwrap();
        let p = build_transversal(&dom, TransversalMode::NormalField).unwrap();
        let b = InsulatedBoundary::new(&dom, &p, &body.insulated).unwrap();
        let d = DistributionProfile::constant_d(&b, 1.0).unwrap();
        let spec = LayerSpec {
            epsilon: 0.1,
            boundary: &b,
            distribution: &d,
        };
        let thick = mesh_thick(&body, &spec, 3).unwrap();
        let v: Vec<f64> = thick.mesh.nodes.iter().map(|x| (x.x - 1.0).max(0.0)).collect();
        let r = check_poincare(&thick, &spec, &v).unwrap();
        assert!((r.lhs - 0.01).abs() < 1e-12, "{r:?}");
        assert!((r.rhs - 0.01).abs() < 1e-12, "{r:?}");
        assert!(r.holds() && r.trace_holds());
        let c = vec![3.0; v.len()];
        let r = check_poincare(&thick, &spec, &c).unwrap();
        assert_eq!(r.lhs, 0.0);
        assert!(r.holds() && r.trace_holds());
    }

    #[test]
    fn rate_fit_recovers_power_law() {
        let x = [0.1, 0.05, 0.025];
        let y: Vec<f64> = x.iter().map(|e: &f64| 3.0 * e.powi(2)).collect();
        let f = fit_rate(&x, &y).unwrap();
        assert!((f.rate - 2.0).abs() < 1e-12 && f.residual < 1e-12);
        assert!(fit_rate(&x, &[0.0; 3]).is_none());
    }

    #[test]
    fn equicoercivity_of_constant_fields() {
        let dom = PolygonalDomain::unit_square([Insulated; 4]).unwrap();
        let body = mesh_body(&dom, 0.25).unwrap();
        let p = build_transversal(&dom, TransversalMode::NormalField).unwrap();
        let b = InsulatedBoundary::new(&dom, &p, &body.insulated).unwrap();
        let d = DistributionProfile::constant_d(&b, 1.0).unwrap();
        let thicks: Vec<ThickMesh> = [0.1, 0.05]
            .iter()
            .map(|&epsilon| {
                let spec = LayerSpec {
                    epsilon,
                    boundary: &b,
                    distribution: &d,
                };
                mesh_thick(&body, &spec, 2).unwrap()
            })
            .collect();
        let fields: Vec<Vec<f64>> = thicks.iter().map(|t| vec![2.0; t.mesh.node_count()]).collect();
        let solves: Vec<(&ThickMesh, &[f64])> = thicks.iter().zip(&fields).map(|(t, u)| (t, &u[..])).collect();
        let r = equicoercivity_report(&solves);
        assert!(r.bounded && r.within_band());
        for row in &r.rows {
            assert!((row.l2_body - 4.0).abs() < 1e-12);
            assert!(row.grad_body.abs() < 1e-20 && row.grad_layer.abs() < 1e-20);
        }
        let zeros: Vec<Vec<f64>> = thicks.iter().map(|t| vec![0.0; t.mesh.node_count()]).collect();
        let solves: Vec<(&ThickMesh, &[f64])> = thicks.iter().zip(&zeros).map(|(t, u)| (t, &u[..])).collect();
        let r = equicoercivity_report(&solves);
        assert!(r.rows.iter().all(|row| row.values() == [0.0; 4]));
        assert!(r.within_band());
    }
}
