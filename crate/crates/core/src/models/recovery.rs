use super::{ModelError, ProblemConfig};
use crate::geometry::LayerSpec;
use crate::meshing::ThickMesh;

/// Extends a body field into the layer with the linear cut-off
/// `v_eps = v phi + u_inf (1 - phi)`, `phi = 1 - beta d~ t / (eps (1 + beta d~) d)`.
///
/// `v` is constant along fibers, so on the outer surface
/// `v_eps - u_inf = (v - u_inf) / (1 + beta d~)`.
pub fn build_recovery_field(
    thick: &ThickMesh,
    config: &ProblemConfig,
    spec: &LayerSpec,
    v: &[f64],
) -> Result<Vec<f64>, ModelError> {
    if v.len() != thick.body_node_count {
        return Err(ModelError::LengthMismatch {
            expected: thick.body_node_count,
            got: v.len(),
        });
    }
    let b = spec.boundary;
    let (d, dt) = (spec.distribution.d(), spec.distribution.d_tilde());
    let eps = spec.epsilon;
    let mut out = v.to_vec();
    out.resize(thick.mesh.node_count(), 0.0);
    for strip in &thick.grid.strips {
        for c in 0..strip.columns {
            let bn = strip.boundary_nodes[c];
            let vbar = v[b.mesh_nodes()[bn]];
            for r in 1..strip.rows {
                let node = thick.node(strip.chain, c, r);
                let t = r as f64 / (strip.rows - 1) as f64 * eps * d[bn];
                let phi = 1.0 - config.beta * dt[bn] * t / (eps * (1.0 + config.beta * dt[bn]) * d[bn]);
                let u_inf = config.eval("u_inf", thick.mesh.nodes[node])?;
                out[node] = vbar * phi + u_inf * (1.0 - phi);
            }
        }
    }
    Ok(out)
}
