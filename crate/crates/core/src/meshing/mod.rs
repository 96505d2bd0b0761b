//! Conforming triangle meshes of the body and of body plus layer.

mod body;
mod thick;
mod vtk;

pub use body::mesh_body;
pub use thick::{mesh_thick, ThickMesh};
pub use vtk::write_vtk;

use crate::geometry::{cross, GeometryError, InsulatedPolyline, Vec2};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MeshError {
    #[error("mesh generation failed: {0}")]
    MeshFailure(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Region {
    Body,
    Layer,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FacetLabel {
    Insulated,
    Dirichlet,
    Neumann,
    /// Outer surface of the layer.
    IEps,
    /// Side cuts of the layer at the ends of an open insulated chain.
    Artificial,
}

impl FacetLabel {
    pub fn code(self) -> i32 {
        match self {
            FacetLabel::Insulated => 0,
            FacetLabel::Dirichlet => 1,
            FacetLabel::Neumann => 2,
            FacetLabel::IEps => 3,
            FacetLabel::Artificial => 4,
        }
    }
}

/// A boundary edge, oriented with the mesh on its left so the outward
/// normal is the clockwise rotation of the edge direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeshFacet {
    pub nodes: [usize; 2],
    pub label: FacetLabel,
    /// Domain segment the facet lies on (body facets only).
    pub segment: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TriangleMesh {
    pub nodes: Vec<Vec2>,
    /// Counter-clockwise node triples.
    pub triangles: Vec<[usize; 3]>,
    pub regions: Vec<Region>,
    pub facets: Vec<MeshFacet>,
    /// Discretization of the insulated boundary in terms of mesh nodes.
    pub insulated: InsulatedPolyline,
}

impl TriangleMesh {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn triangle_points(&self, t: usize) -> [Vec2; 3] {
        self.triangles[t].map(|i| self.nodes[i])
    }

    pub fn signed_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangle_points(t);
        0.5 * cross(&(b - a), &(c - a))
    }

    pub fn region_area(&self, region: Region) -> f64 {
        (0..self.triangles.len())
            .filter(|&t| self.regions[t] == region)
            .map(|t| self.signed_area(t))
            .sum()
    }

    pub fn facet_length(&self, f: &MeshFacet) -> f64 {
        (self.nodes[f.nodes[1]] - self.nodes[f.nodes[0]]).norm()
    }

    pub fn label_length(&self, label: FacetLabel) -> f64 {
        self.facets
            .iter()
            .filter(|f| f.label == label)
            .map(|f| self.facet_length(f))
            .sum()
    }

    /// Outward unit normal of a facet.
    pub fn facet_normal(&self, f: &MeshFacet) -> Vec2 {
        let t = self.nodes[f.nodes[1]] - self.nodes[f.nodes[0]];
        Vec2::new(t.y, -t.x) / t.norm()
    }

    /// Nodes on facets with the given label, sorted and deduplicated.
    pub fn label_nodes(&self, label: FacetLabel) -> Vec<usize> {
        let mut v: Vec<usize> = self
            .facets
            .iter()
            .filter(|f| f.label == label)
            .flat_map(|f| f.nodes)
            .collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    /// Undirected edges with the number of triangles using each.
    pub fn edge_counts(&self) -> BTreeMap<(usize, usize), usize> {
        let mut edges = BTreeMap::new();
        for t in &self.triangles {
            for i in 0..3 {
                let (a, b) = (t[i], t[(i + 1) % 3]);
                *edges.entry((a.min(b), a.max(b))).or_insert(0) += 1;
            }
        }
        edges
    }

    pub fn min_angle_deg(&self) -> f64 {
        let mut min = f64::INFINITY;
        for t in 0..self.triangles.len() {
            let p = self.triangle_points(t);
            for i in 0..3 {
                let u = p[(i + 1) % 3] - p[i];
                let v = p[(i + 2) % 3] - p[i];
                let ang = cross(&u, &v).abs().atan2(u.dot(&v));
                min = min.min(ang.to_degrees());
            }
        }
        min
    }

    pub fn max_edge(&self) -> f64 {
        self.edge_counts()
            .keys()
            .map(|&(a, b)| (self.nodes[a] - self.nodes[b]).norm())
            .fold(0.0, f64::max)
    }

    /// Checks positive areas, that every edge has one or two triangles, and
    /// that boundary edges coincide exactly with the facets. Returns a
    /// description of the first problem found.
    pub fn check_conformity(&self) -> Result<(), String> {
        for t in 0..self.triangles.len() {
            if !(self.signed_area(t) > 0.0) {
                return Err(format!("triangle {t} has non-positive area"));
            }
        }
        let edges = self.edge_counts();
        let mut boundary: Vec<(usize, usize)> = edges
            .iter()
            .filter_map(|(&e, &c)| (c == 1).then_some(e))
            .collect();
        if let Some((e, c)) = edges.iter().find(|(_, &c)| c > 2) {
            return Err(format!("edge {e:?} is shared by {c} triangles"));
        }
        let mut facets: Vec<(usize, usize)> = self
            .facets
            .iter()
            .map(|f| (f.nodes[0].min(f.nodes[1]), f.nodes[0].max(f.nodes[1])))
            .collect();
        boundary.sort_unstable();
        facets.sort_unstable();
        if boundary != facets {
            return Err(format!(
                "{} boundary edges but {} facets, or they differ",
                boundary.len(),
                facets.len()
            ));
        }
        // Facets must have the mesh on their left.
        let directed: std::collections::BTreeSet<(usize, usize)> = self
            .triangles
            .iter()
            .flat_map(|t| (0..3).map(move |i| (t[i], t[(i + 1) % 3])))
            .collect();
        for f in &self.facets {
            let [a, b] = f.nodes;
            if !directed.contains(&(a, b)) {
                return Err(format!("facet ({a}, {b}) is not oriented with the mesh on its left"));
            }
        }
        Ok(())
    }
}
