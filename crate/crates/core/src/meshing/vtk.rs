use super::{Region, TriangleMesh};
use std::io::{self, Write};

/// Legacy ASCII VTK unstructured grid. Triangles are followed by boundary
/// facets as line cells; cell data `region` (0 body, 1 layer, -1 facet) and
/// `label` (facet label code, -1 for triangles) tell them apart.
pub fn write_vtk<W: Write>(
    out: &mut W,
    title: &str,
    mesh: &TriangleMesh,
    point_data: &[(&str, &[f64])],
) -> io::Result<()> {
    let nt = mesh.triangles.len();
    let nf = mesh.facets.len();
    writeln!(out, "# vtk DataFile Version 3.0")?;
    writeln!(out, "{}", title.lines().next().unwrap_or(""))?;
    writeln!(out, "ASCII")?;
    writeln!(out, "DATASET UNSTRUCTURED_GRID")?;
    writeln!(out, "POINTS {} double", mesh.node_count())?;
    for p in &mesh.nodes {
        writeln!(out, "{:e} {:e} 0", p.x, p.y)?;
    }
    writeln!(out, "CELLS {} {}", nt + nf, 4 * nt + 3 * nf)?;
    for t in &mesh.triangles {
        writeln!(out, "3 {} {} {}", t[0], t[1], t[2])?;
    }
    for f in &mesh.facets {
        writeln!(out, "2 {} {}", f.nodes[0], f.nodes[1])?;
    }
    writeln!(out, "CELL_TYPES {}", nt + nf)?;
    for _ in 0..nt {
        writeln!(out, "5")?;
    }
    for _ in 0..nf {
        writeln!(out, "3")?;
    }
    writeln!(out, "CELL_DATA {}", nt + nf)?;
    writeln!(out, "SCALARS region int 1")?;
    writeln!(out, "LOOKUP_TABLE default")?;
    for r in &mesh.regions {
        writeln!(out, "{}", if *r == Region::Body { 0 } else { 1 })?;
    }
    for _ in 0..nf {
        writeln!(out, "-1")?;
    }
    writeln!(out, "SCALARS label int 1")?;
    writeln!(out, "LOOKUP_TABLE default")?;
    for _ in 0..nt {
        writeln!(out, "-1")?;
    }
    for f in &mesh.facets {
        writeln!(out, "{}", f.label.code())?;
    }
    if !point_data.is_empty() {
        writeln!(out, "POINT_DATA {}", mesh.node_count())?;
        for (name, values) in point_data {
            if values.len() != mesh.node_count() {
                return Err(io::Error::new(
                    io::ErrorKind::InvalidInput,
                    format!("field {name} has {} values for {} nodes", values.len(), mesh.node_count()),
                ));
            }
            writeln!(out, "SCALARS {name} double 1")?;
            writeln!(out, "LOOKUP_TABLE default")?;
            for v in *values {
                writeln!(out, "{v:e}")?;
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{BoundaryLabel::*, PolygonalDomain};
    use crate::meshing::mesh_body;

    #[test]
    fn header_and_counts() {
        let d = PolygonalDomain::unit_square([Neumann, Insulated, Neumann, Dirichlet]).unwrap();
        let m = mesh_body(&d, 0.5).unwrap();
        let u: Vec<f64> = m.nodes.iter().map(|p| p.x).collect();
        let mut buf = Vec::new();
        write_vtk(&mut buf, "test", &m, &[("u", &u)]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# vtk DataFile Version 3.0");
        assert_eq!(lines[3], "DATASET UNSTRUCTURED_GRID");
        let cells = m.triangles.len() + m.facets.len();
        assert!(text.contains(&format!("CELL_TYPES {cells}\n")));
        assert!(text.contains(&format!("POINT_DATA {}\n", m.node_count())));
        let mut short = Vec::new();
        assert!(write_vtk(&mut short, "bad", &m, &[("u", &u[1..])]).is_err());
    }
}
