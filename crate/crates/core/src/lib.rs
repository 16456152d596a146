//! Diffusion limited aggregation on transient graphs.

pub mod beurling;
pub mod bounds;
pub mod dla;
pub mod graph;
pub mod growth;
pub mod potential;
pub mod rng;

pub use graph::{Family, Graph, GraphError, VertexId};
