//! Sublinear-time spectral clustering oracle for bounded-degree graphs.
//!
//! The oracle preprocesses a `d`-bounded graph by running lazy random walks
//! from a small vertex sample, builds a spectral sketch from the walk
//! statistics, and then answers `which_cluster(x)` queries by running a few
//! more walks from `x`. All randomness is seeded so runs are reproducible.

pub mod cluster_oracle;
mod codec;
pub mod dot_oracle;
pub mod error;
pub mod eval;
pub mod exact_oracle;
pub mod graph;
pub mod rng;
pub mod stats;
pub mod walks;

pub use error::{Error, Result};
