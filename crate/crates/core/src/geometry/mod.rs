//! Polygonal bodies, boundary partitions, distance queries, transversal
//! fields and the extruded insulating layer.

mod boundary;
mod domain;
mod layer;
mod transversal;

pub use boundary::{segment_divisions, BoundaryFacet, BoundaryNode, InsulatedBoundary, InsulatedPolyline, PolylineChain};
pub use domain::{BoundaryLabel, InsulatedChain, PolygonalDomain, Projection, Segment};
pub use layer::{check_bilipschitz, extrude_layer, transversal_distance, LayerGrid, LayerSpec, StripGrid};
pub use transversal::{build_transversal, TransversalMode, TransversalProfile};

use thiserror::Error;

pub type Vec2 = nalgebra::Vector2<f64>;

#[inline]
pub fn vec2(x: f64, y: f64) -> Vec2 {
    Vec2::new(x, y)
}

/// z-component of the 2D cross product.
#[inline]
pub fn cross(a: &Vec2, b: &Vec2) -> f64 {
    a.x * b.y - a.y * b.x
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    #[error("domain has no insulated segment")]
    NoInsulatedBoundary,
    #[error("transversal field is not transversal: min k.n = {min_dot:.6e}")]
    NonTransversal { min_dot: f64 },
    #[error("layer self-intersects at epsilon = {epsilon} (strip {strip}, column {column}, row {row})")]
    SelfIntersection {
        epsilon: f64,
        strip: usize,
        column: usize,
        row: usize,
    },
    #[error("point is outside the insulating layer")]
    OutsideLayer,
    #[error("invalid layer: {0}")]
    InvalidLayer(String),
}
