//! Patch geometry maps and multi-patch topology.
//!
//! Topology is declared (interfaces with parametric sub-ranges on both sides)
//! and then checked geometrically. Vertices are the clustered interface
//! endpoints; a vertex lying strictly inside an edge of some patch is a
//! T-junction.

mod domain;
mod map;

pub use domain::{
    Interface, InterfaceView, MultiPatchDomain, Patch, PatchMetrics, Vertex, VertexIncidence, VertexKind,
};
pub use map::GeometryMap;
