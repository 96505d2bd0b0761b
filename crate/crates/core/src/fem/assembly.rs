use super::{CsrMatrix, FemError};
use crate::geometry::{cross, Vec2};
use crate::meshing::{FacetLabel, Region, TriangleMesh};

/// Per-region diffusion coefficient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionCoefficients {
    pub body: f64,
    pub layer: f64,
}

impl RegionCoefficients {
    pub fn get(&self, r: Region) -> f64 {
        match r {
            Region::Body => self.body,
            Region::Layer => self.layer,
        }
    }
}

/// Robin weight given at the two facet endpoints, linear in between.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobinFacet {
    pub nodes: [usize; 2],
    pub weight: [f64; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RobinQuadrature {
    /// Two-point Gauss rule, exact for linear weight times two hat functions.
    #[default]
    Consistent,
    /// Trapezoid rule; gives a diagonal boundary mass.
    Lumped,
}

const GAUSS2: [f64; 2] = [0.211_324_865_405_187_1, 0.788_675_134_594_812_9];

/// Gradients of the three hat functions and the triangle area.
pub fn p1_gradients(p: &[Vec2; 3]) -> ([Vec2; 3], f64) {
    let det = cross(&(p[1] - p[0]), &(p[2] - p[0]));
    let g = [0, 1, 2].map(|i| {
        let (a, b) = (p[(i + 1) % 3], p[(i + 2) % 3]);
        let e = b - a;
        Vec2::new(-e.y, e.x) / det
    });
    (g, 0.5 * det)
}

pub fn local_stiffness(p: &[Vec2; 3]) -> [[f64; 3]; 3] {
    let (g, area) = p1_gradients(p);
    let mut k = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            k[i][j] = area * g[i].dot(&g[j]);
        }
    }
    k
}

pub fn assemble_stiffness(mesh: &TriangleMesh, coeff: RegionCoefficients) -> CsrMatrix {
    let mut trip = Vec::with_capacity(9 * mesh.triangles.len());
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let c = coeff.get(mesh.regions[t]);
        let k = local_stiffness(&mesh.triangle_points(t));
        for i in 0..3 {
            for j in 0..3 {
                trip.push((tri[i], tri[j], c * k[i][j]));
            }
        }
    }
    CsrMatrix::from_triplets(mesh.node_count(), trip)
}

/// L2 mass matrix over the triangles of the given region (all if `None`).
pub fn assemble_mass(mesh: &TriangleMesh, region: Option<Region>) -> CsrMatrix {
    let mut trip = Vec::new();
    for (t, tri) in mesh.triangles.iter().enumerate() {
        if region.is_some_and(|r| r != mesh.regions[t]) {
            continue;
        }
        let a = mesh.signed_area(t) / 12.0;
        for i in 0..3 {
            for j in 0..3 {
                trip.push((tri[i], tri[j], if i == j { 2.0 * a } else { a }));
            }
        }
    }
    CsrMatrix::from_triplets(mesh.node_count(), trip)
}

/// Boundary mass `M_w` with `(M_w)_ij = int w phi_i phi_j` and load
/// `M_w u_inf` for nodal values of `u_inf`.
pub fn assemble_robin(
    mesh: &TriangleMesh,
    facets: &[RobinFacet],
    u_inf: &[f64],
    quadrature: RobinQuadrature,
) -> Result<(CsrMatrix, Vec<f64>), FemError> {
    let mut trip = Vec::with_capacity(4 * facets.len());
    for (fi, f) in facets.iter().enumerate() {
        if let Some(&value) = f.weight.iter().find(|w| !(**w >= 0.0) || !w.is_finite()) {
            return Err(FemError::NegativeWeight { facet: fi, value });
        }
        let len = (mesh.nodes[f.nodes[1]] - mesh.nodes[f.nodes[0]]).norm();
        let m = local_robin(len, f.weight, quadrature);
        for i in 0..2 {
            for j in 0..2 {
                trip.push((f.nodes[i], f.nodes[j], m[i][j]));
            }
        }
    }
    let m = CsrMatrix::from_triplets(mesh.node_count(), trip);
    let load = m.mul_vec(u_inf);
    Ok((m, load))
}

pub fn local_robin(len: f64, w: [f64; 2], quadrature: RobinQuadrature) -> [[f64; 2]; 2] {
    match quadrature {
        RobinQuadrature::Consistent => {
            let mut m = [[0.0; 2]; 2];
            for s in GAUSS2 {
                let phi = [1.0 - s, s];
                let ws = w[0] * phi[0] + w[1] * phi[1];
                for i in 0..2 {
                    for j in 0..2 {
                        m[i][j] += 0.5 * len * ws * phi[i] * phi[j];
                    }
                }
            }
            m
        }
        RobinQuadrature::Lumped => [[0.5 * len * w[0], 0.0], [0.0, 0.5 * len * w[1]]],
    }
}

/// `(f, phi_i)` over the triangles of `region` with the edge-midpoint rule
/// (exact for quadratic integrands).
pub fn assemble_source<E>(
    mesh: &TriangleMesh,
    region: Region,
    mut f: impl FnMut(Vec2) -> Result<f64, E>,
) -> Result<Vec<f64>, E> {
    let mut b = vec![0.0; mesh.node_count()];
    for (t, tri) in mesh.triangles.iter().enumerate() {
        if mesh.regions[t] != region {
            continue;
        }
        let p = mesh.triangle_points(t);
        let area = mesh.signed_area(t);
        // midpoint m_k is opposite vertex k
        let mut fm = [0.0; 3];
        for (k, v) in fm.iter_mut().enumerate() {
            *v = f(0.5 * (p[(k + 1) % 3] + p[(k + 2) % 3]))?;
        }
        for i in 0..3 {
            // phi_i = 1/2 at the two midpoints adjacent to vertex i, 0 opposite
            let s: f64 = (0..3).filter(|&k| k != i).map(|k| 0.5 * fm[k]).sum();
            b[tri[i]] += area / 3.0 * s;
        }
    }
    Ok(b)
}

/// `<g, phi_i>` over facets with the given label by two-point Gauss.
pub fn assemble_neumann<E>(
    mesh: &TriangleMesh,
    label: FacetLabel,
    mut g: impl FnMut(Vec2) -> Result<f64, E>,
) -> Result<Vec<f64>, E> {
    let mut b = vec![0.0; mesh.node_count()];
    for f in mesh.facets.iter().filter(|f| f.label == label) {
        let (a, c) = (mesh.nodes[f.nodes[0]], mesh.nodes[f.nodes[1]]);
        let len = (c - a).norm();
        for s in GAUSS2 {
            let gs = g(a + (c - a) * s)?;
            b[f.nodes[0]] += 0.5 * len * gs * (1.0 - s);
            b[f.nodes[1]] += 0.5 * len * gs * s;
        }
    }
    Ok(b)
}

/// Symmetric elimination of prescribed values: free rows get
/// `rhs -= A g`, constrained rows and columns become the identity.
pub fn apply_dirichlet(a: &CsrMatrix, rhs: &[f64], fixed: &[(usize, f64)]) -> (CsrMatrix, Vec<f64>) {
    let n = a.n();
    let mut value = vec![None; n];
    for &(i, v) in fixed {
        value[i] = Some(v);
    }
    let lift: Vec<f64> = value.iter().map(|v| v.unwrap_or(0.0)).collect();
    let a_lift = a.mul_vec(&lift);
    let mut b: Vec<f64> = rhs.iter().zip(&a_lift).map(|(r, l)| r - l).collect();
    let mut trip = Vec::with_capacity(a.nnz());
    for i in 0..n {
        if let Some(v) = value[i] {
            trip.push((i, i, 1.0));
            b[i] = v;
        } else {
            trip.extend(a.row(i).filter(|(j, _)| value[*j].is_none()).map(|(j, v)| (i, j, v)));
        }
    }
    (CsrMatrix::from_triplets(n, trip), b)
}
