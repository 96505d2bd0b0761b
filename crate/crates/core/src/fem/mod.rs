//! P1 assembly and sparse linear algebra.

mod assembly;
mod solver;
mod sparse;

pub use assembly::{
    apply_dirichlet, assemble_mass, assemble_neumann, assemble_robin, assemble_source, assemble_stiffness,
    local_robin, local_stiffness, p1_gradients, RegionCoefficients, RobinFacet, RobinQuadrature,
};
pub use solver::{generalized_max_eigenvalue, solve_cg, CgSolution};
pub use sparse::{dot, CsrMatrix};

use crate::meshing::TriangleMesh;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FemError {
    #[error("conjugate gradients did not converge after {iterations} iterations (relative residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("negative or non-finite boundary weight {value} on facet {facet}")]
    NegativeWeight { facet: usize, value: f64 },
}

/// Estimate of the smallest `C` with
/// `||v||^2 <= C (||grad v||^2 + ||w^{1/2} v||^2_Gamma)` on the mesh.
pub fn friedrichs_constant(mesh: &TriangleMesh, boundary: &[RobinFacet]) -> Result<f64, FemError> {
    let n = mesh.node_count();
    let k = assemble_stiffness(mesh, RegionCoefficients { body: 1.0, layer: 1.0 });
    let (mb, _) = assemble_robin(mesh, boundary, &vec![0.0; n], RobinQuadrature::Consistent)?;
    let a = k.add_scaled(&mb, 1.0);
    let m = assemble_mass(mesh, None);
    generalized_max_eigenvalue(&a, &m, 2000)
}
