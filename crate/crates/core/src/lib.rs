//! Compile MinXQuery to macro forest transducers, optimize and compose
//! them, and run them over XML event streams.

pub mod bench;
pub mod compile;
pub mod compose;
pub mod corpus;
pub mod error;
pub mod events;
pub mod forest;
pub mod gen;
pub mod mft;
pub mod optimize;
pub mod path;
pub mod query;
pub mod random;
pub mod stream;
pub mod term;

pub use error::{Error, Result};
pub use forest::{BinaryTree, Forest, Label, NodeKind, Tree};
pub use mft::Mft;
