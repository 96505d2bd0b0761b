//! Thin insulating layers under convective heat transfer.
//!
//! The crate discretizes a polygonal body with an insulated boundary part,
//! solves the thick-layer problem and its reduced Robin limit with P1
//! finite elements, optimizes the distribution of a fixed amount of
//! insulation, and checks the limit behavior numerically.

pub mod expr;
pub mod fem;
pub mod geometry;
pub mod harness;
pub mod meshing;
pub mod models;
pub mod optimizer;
