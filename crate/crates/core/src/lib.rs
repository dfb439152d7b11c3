//! Fully dynamic approximate maximum matching built on hierarchical
//! edge-degree constrained subgraphs.

pub mod engine;
pub mod graph;
pub mod matching;
pub mod sparsify;
pub mod verify;
