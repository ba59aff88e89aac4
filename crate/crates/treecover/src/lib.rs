//! Random walks, local times and Gaussian fields on binary trees.

pub mod cluster;
pub mod config;
pub mod error;
pub mod experiments;
pub mod gff;
pub mod iso;
pub mod oracles;
pub mod report;
pub mod rng;
pub mod stats;
pub mod tree;
pub mod walk;

pub use error::{Error, Result};
pub use tree::{TreeKind, TreeShape, VertexRef};
