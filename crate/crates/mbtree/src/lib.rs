//! Markov branching trees: exact first-split laws for the classical models,
//! finite and ball-truncated infinite samplers, growth algorithms, local and
//! Gromov-Hausdorff-Prokhorov metrics, and a seeded statistical harness.

pub mod analysis;
pub mod dist;
pub mod error;
pub mod ghp;
pub mod growth;
mod fenwick;
pub mod mb_engine;
pub mod partition;
pub mod special;
pub mod split_laws;
pub mod tree;

pub use error::{Error, Result};
pub use partition::{Part, Partition};
pub use tree::Tree;
