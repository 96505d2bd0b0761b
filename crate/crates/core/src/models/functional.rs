use super::{DistributionProfile, EnergyBreakdown, ModelError, ProblemConfig, SolveOptions, SolveReport};
use crate::fem::{
    apply_dirichlet, assemble_neumann, assemble_robin, assemble_source, assemble_stiffness, p1_gradients, solve_cg,
    CsrMatrix, RegionCoefficients, RobinFacet, RobinQuadrature,
};
use crate::geometry::InsulatedBoundary;
use crate::meshing::{FacetLabel, Region, ThickMesh, TriangleMesh};
use std::collections::BTreeMap;

/// A quadratic energy
/// `1/2 sum_T c_T |grad u|^2 + 1/2 ||w^{1/2} (u - u_inf)||^2 - (f, u) - <g, u>`
/// on a mesh, with prescribed values on Dirichlet nodes.
#[derive(Debug, Clone)]
pub struct DiscreteFunctional<'m> {
    pub mesh: &'m TriangleMesh,
    pub coeff: RegionCoefficients,
    pub robin: Vec<RobinFacet>,
    pub quadrature: RobinQuadrature,
    /// Nodal ambient temperature (only read on Robin facet nodes).
    pub u_inf: Vec<f64>,
    pub source: Vec<f64>,
    pub neumann: Vec<f64>,
    pub dirichlet: Vec<(usize, f64)>,
}

const GAUSS3: [(f64, f64); 3] = [
    (0.112_701_665_379_258_3, 5.0 / 18.0),
    (0.5, 8.0 / 18.0),
    (0.887_298_334_620_741_7, 5.0 / 18.0),
];

fn build<'m>(
    mesh: &'m TriangleMesh,
    config: &ProblemConfig,
    coeff: RegionCoefficients,
    robin: Vec<RobinFacet>,
    quadrature: RobinQuadrature,
) -> Result<DiscreteFunctional<'m>, ModelError> {
    config.validate()?;
    let source = assemble_source(mesh, Region::Body, |p| config.eval("f", p))?;
    let neumann = assemble_neumann(mesh, FacetLabel::Neumann, |p| config.eval("g", p))?;
    let dirichlet = mesh
        .label_nodes(FacetLabel::Dirichlet)
        .into_iter()
        .map(|i| config.eval("u_d", mesh.nodes[i]).map(|v| (i, v)))
        .collect::<Result<Vec<_>, _>>()?;
    let mut u_inf = vec![0.0; mesh.node_count()];
    let mut seen = vec![false; mesh.node_count()];
    for f in &robin {
        for &i in &f.nodes {
            if !seen[i] {
                seen[i] = true;
                u_inf[i] = config.eval("u_inf", mesh.nodes[i])?;
            }
        }
    }
    Ok(DiscreteFunctional {
        mesh,
        coeff,
        robin,
        quadrature,
        u_inf,
        source,
        neumann,
        dirichlet,
    })
}

/// The reduced functional on the body mesh: Robin weight `beta / (1 + beta d~)`
/// on the insulated boundary.
pub fn reduced_functional<'m>(
    mesh: &'m TriangleMesh,
    boundary: &InsulatedBoundary,
    config: &ProblemConfig,
    distribution: &DistributionProfile,
    quadrature: RobinQuadrature,
) -> Result<DiscreteFunctional<'m>, ModelError> {
    let dt = distribution.d_tilde();
    if dt.len() != boundary.node_count() {
        return Err(ModelError::LengthMismatch {
            expected: boundary.node_count(),
            got: dt.len(),
        });
    }
    let w = |i: usize| config.beta / (1.0 + config.beta * dt[i]);
    let robin = boundary
        .facets()
        .iter()
        .map(|f| RobinFacet {
            nodes: [boundary.mesh_nodes()[f.a], boundary.mesh_nodes()[f.b]],
            weight: [w(f.a), w(f.b)],
        })
        .collect();
    build(
        mesh,
        config,
        RegionCoefficients {
            body: config.lambda,
            layer: 0.0,
        },
        robin,
        quadrature,
    )
}

/// The thick functional on body plus layer: conductivity `eps` in the layer
/// and Robin weight `beta` on its outer surface.
pub fn thick_functional<'m>(
    thick: &'m ThickMesh,
    config: &ProblemConfig,
    quadrature: RobinQuadrature,
) -> Result<DiscreteFunctional<'m>, ModelError> {
    let robin = thick
        .mesh
        .facets
        .iter()
        .filter(|f| f.label == FacetLabel::IEps)
        .map(|f| RobinFacet {
            nodes: f.nodes,
            weight: [config.beta; 2],
        })
        .collect();
    build(
        &thick.mesh,
        config,
        RegionCoefficients {
            body: config.lambda,
            layer: thick.grid.epsilon,
        },
        robin,
        quadrature,
    )
}

impl DiscreteFunctional<'_> {
    pub fn robin_system(&self) -> Result<(CsrMatrix, Vec<f64>), ModelError> {
        Ok(assemble_robin(self.mesh, &self.robin, &self.u_inf, self.quadrature)?)
    }

    /// Free nodes, i.e. those without a prescribed value.
    pub fn free_nodes(&self) -> Vec<usize> {
        let mut fixed = vec![false; self.mesh.node_count()];
        self.dirichlet.iter().for_each(|&(i, _)| fixed[i] = true);
        (0..self.mesh.node_count()).filter(|&i| !fixed[i]).collect()
    }

    /// Term-by-term energy of a nodal field by element and facet quadrature.
    pub fn energy(&self, u: &[f64]) -> EnergyBreakdown {
        let m = self.mesh;
        let mut e = EnergyBreakdown::default();
        for (t, tri) in m.triangles.iter().enumerate() {
            let (g, area) = p1_gradients(&m.triangle_points(t));
            let grad = g[0] * u[tri[0]] + g[1] * u[tri[1]] + g[2] * u[tri[2]];
            let val = 0.5 * self.coeff.get(m.regions[t]) * area * grad.norm_squared();
            match m.regions[t] {
                Region::Body => e.grad_body += val,
                Region::Layer => e.grad_layer += val,
            }
        }
        for f in &self.robin {
            let [a, b] = f.nodes;
            let len = (m.nodes[b] - m.nodes[a]).norm();
            let (ea, eb) = (u[a] - self.u_inf[a], u[b] - self.u_inf[b]);
            e.robin_boundary += 0.5
                * match self.quadrature {
                    RobinQuadrature::Consistent => GAUSS3
                        .iter()
                        .map(|&(s, wq)| {
                            let w = f.weight[0] * (1.0 - s) + f.weight[1] * s;
                            let d = ea * (1.0 - s) + eb * s;
                            wq * len * w * d * d
                        })
                        .sum::<f64>(),
                    RobinQuadrature::Lumped => 0.5 * len * (f.weight[0] * ea * ea + f.weight[1] * eb * eb),
                };
        }
        e.source = self.source.iter().zip(u).map(|(a, b)| a * b).sum();
        e.neumann = self.neumann.iter().zip(u).map(|(a, b)| a * b).sum();
        e.total = e.grad_body + e.grad_layer + e.robin_boundary - e.source - e.neumann;
        e
    }

    pub fn solve(&self, options: &SolveOptions) -> Result<SolveReport, ModelError> {
        if self.dirichlet.is_empty() && self.robin.iter().all(|f| f.weight == [0.0, 0.0]) {
            return Err(ModelError::SingularSystem);
        }
        let k = assemble_stiffness(self.mesh, self.coeff);
        let (mw, load) = self.robin_system()?;
        let a = k.add_scaled(&mw, 1.0);
        let rhs: Vec<f64> = (0..self.mesh.node_count())
            .map(|i| self.source[i] + self.neumann[i] + load[i])
            .collect();
        let (a, b) = apply_dirichlet(&a, &rhs, &self.dirichlet);
        let n = a.n();
        let sol = solve_cg(&a, &b, options.rel_tol, options.max_iter_factor * n)?;
        let energy = self.energy(&sol.x);
        Ok(SolveReport {
            u: sol.x,
            energy,
            iterations: sol.iterations,
            residual: sol.residual,
        })
    }
}

/// Minimizes the discrete reduced functional.
pub fn solve_reduced(
    mesh: &TriangleMesh,
    boundary: &InsulatedBoundary,
    config: &ProblemConfig,
    distribution: &DistributionProfile,
    options: &SolveOptions,
) -> Result<SolveReport, ModelError> {
    reduced_functional(mesh, boundary, config, distribution, options.quadrature)?.solve(options)
}

/// Minimizes the discrete thick functional.
pub fn solve_thick(thick: &ThickMesh, config: &ProblemConfig, options: &SolveOptions) -> Result<SolveReport, ModelError> {
    thick_functional(thick, config, options.quadrature)?.solve(options)
}

/// L2 norm over the interface of the facet-wise jump
/// `lambda grad u|_body . n - eps grad u|_layer . n`.
pub fn transmission_flux_jump(thick: &ThickMesh, config: &ProblemConfig, u: &[f64]) -> f64 {
    let m = &thick.mesh;
    let mut owners: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
    for (t, tri) in m.triangles.iter().enumerate() {
        for i in 0..3 {
            let (a, b) = (tri[i], tri[(i + 1) % 3]);
            owners.entry((a.min(b), a.max(b))).or_default().push(t);
        }
    }
    let grad = |t: usize| {
        let (g, _) = p1_gradients(&m.triangle_points(t));
        let tri = m.triangles[t];
        g[0] * u[tri[0]] + g[1] * u[tri[1]] + g[2] * u[tri[2]]
    };
    let mut total = 0.0;
    for strip in &thick.grid.strips {
        for c in 0..strip.quad_columns() {
            let a = thick.node(strip.chain, c, 0);
            let b = thick.node(strip.chain, (c + 1) % strip.columns, 0);
            let (pa, pb) = (m.nodes[a], m.nodes[b]);
            let t = pb - pa;
            let len = t.norm();
            let n = crate::geometry::vec2(t.y, -t.x) / len;
            let Some(ts) = owners.get(&(a.min(b), a.max(b))) else {
                continue;
            };
            let body = ts.iter().find(|&&t| m.regions[t] == Region::Body);
            let layer = ts.iter().find(|&&t| m.regions[t] == Region::Layer);
            if let (Some(&tb), Some(&tl)) = (body, layer) {
                let jump = config.lambda * grad(tb).dot(&n) - thick.grid.epsilon * grad(tl).dot(&n);
                total += len * jump * jump;
            }
        }
    }
    total.sqrt()
}
