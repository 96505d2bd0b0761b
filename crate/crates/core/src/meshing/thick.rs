use super::{FacetLabel, MeshError, MeshFacet, Region, TriangleMesh};
use crate::geometry::{extrude_layer, GeometryError, LayerGrid, LayerSpec};

/// Body mesh glued to the extruded layer.
#[derive(Debug, Clone, PartialEq)]
pub struct ThickMesh {
    pub mesh: TriangleMesh,
    pub grid: LayerGrid,
    /// Mesh node of every grid point, per strip, in the grid's row-major order.
    pub layer_nodes: Vec<Vec<usize>>,
    /// Body nodes keep their indices; layer nodes follow.
    pub body_node_count: usize,
}

impl ThickMesh {
    pub fn node(&self, strip: usize, column: usize, row: usize) -> usize {
        self.layer_nodes[strip][row * self.grid.strips[strip].columns + column]
    }
}

/// Extrudes the insulated boundary of `body` and splits every layer quad
/// along its shorter diagonal. Row 0 of the layer reuses the body nodes, so
/// the two regions are conforming across the insulated boundary.
pub fn mesh_thick(body: &TriangleMesh, spec: &LayerSpec, n_layers: usize) -> Result<ThickMesh, MeshError> {
    let grid = extrude_layer(spec, n_layers)?;
    let b = spec.boundary;
    for (i, &m) in b.mesh_nodes().iter().enumerate() {
        if m >= body.node_count() || (body.nodes[m] - b.points()[i]).norm() > 1e-12 {
            return Err(GeometryError::InvalidLayer(format!(
                "insulated boundary node {i} does not match a body mesh node"
            ))
            .into());
        }
    }

    let mut nodes = body.nodes.clone();
    let mut triangles = body.triangles.clone();
    let mut regions = body.regions.clone();
    let mut facets: Vec<MeshFacet> = body
        .facets
        .iter()
        .filter(|f| f.label != FacetLabel::Insulated)
        .copied()
        .collect();

    let mut layer_nodes = Vec::with_capacity(grid.strips.len());
    for strip in &grid.strips {
        let mut ids = Vec::with_capacity(strip.points.len());
        for row in 0..strip.rows {
            for col in 0..strip.columns {
                if row == 0 {
                    ids.push(b.mesh_nodes()[strip.boundary_nodes[col]]);
                } else {
                    ids.push(nodes.len());
                    nodes.push(strip.point(col, row));
                }
            }
        }
        let id = |(c, r): (usize, usize)| ids[r * strip.columns + c];
        for c in 0..strip.quad_columns() {
            for r in 0..n_layers {
                let q = strip.quad(c, r).map(id);
                let p = strip.quad_points(c, r);
                if (p[2] - p[0]).norm() <= (p[3] - p[1]).norm() {
                    triangles.push([q[0], q[1], q[2]]);
                    triangles.push([q[0], q[2], q[3]]);
                } else {
                    triangles.push([q[0], q[1], q[3]]);
                    triangles.push([q[1], q[2], q[3]]);
                }
                regions.extend([Region::Layer, Region::Layer]);
            }
            let top = strip.rows - 1;
            facets.push(MeshFacet {
                nodes: [id((c, top)), id(((c + 1) % strip.columns, top))],
                label: FacetLabel::IEps,
                segment: None,
            });
        }
        if !strip.closed {
            let last = strip.columns - 1;
            for r in 0..n_layers {
                facets.push(MeshFacet {
                    nodes: [id((0, r)), id((0, r + 1))],
                    label: FacetLabel::Artificial,
                    segment: None,
                });
                facets.push(MeshFacet {
                    nodes: [id((last, r + 1)), id((last, r))],
                    label: FacetLabel::Artificial,
                    segment: None,
                });
            }
        }
        layer_nodes.push(ids);
    }

    Ok(ThickMesh {
        mesh: TriangleMesh {
            nodes,
            triangles,
            regions,
            facets,
            insulated: body.insulated.clone(),
        },
        grid,
        layer_nodes,
        body_node_count: body.node_count(),
    })
}
