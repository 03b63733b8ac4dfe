//! Graph classification with aligned vertex grids and 1-D vertex
//! convolutions.
//!
//! The pipeline turns a set of labeled graphs into fixed-size numeric grids
//! and trains a convolutional classifier on them:
//!
//! 1. [`graph`] loads datasets stored as the usual tabular text files
//!    (`<NAME>_A.txt`, `<NAME>_graph_indicator.txt`, ...).
//! 2. [`depth`] describes each vertex by the entropies of its expansion
//!    subgraphs at depths `1..=k`, giving every vertex a k-dimensional
//!    vector regardless of graph size.
//! 3. [`align`] clusters all vertex vectors of the corpus into M prototypes,
//!    assigns each vertex to its nearest prototype, and accumulates vertex
//!    features per prototype. Every graph becomes an M x c grid whose rows
//!    follow a canonical prototype order, so row r means the same thing in
//!    every graph.
//! 4. [`neural`] trains parallel 1-D convolution branches over the grid rows
//!    followed by a dense classifier, with hand-written gradients and Adam.
//! 5. [`harness`] wires the stages into a seeded, reproducible
//!    cross-validation experiment with cached grids and text reports.
//!
//! All randomness flows from a single `u64` seed, and every stage is
//! deterministic given its inputs: two runs with the same configuration
//! produce byte-identical reports.

pub mod align;
pub mod depth;
pub mod error;
pub mod graph;
pub mod harness;
pub mod mat;
pub mod neural;

pub use error::{Error, Result};
