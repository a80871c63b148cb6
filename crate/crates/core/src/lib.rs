//! Model of a partitioned separation kernel with inter-partition
//! communication, and an explicit-state checker for its information-flow
//! security properties.

pub mod checker;
pub mod cli;
pub mod config;
pub mod equivalence;
pub mod kernel;
pub mod model;
pub mod policy;
pub mod security;

pub use model::Model;
