//! Simulation and exact verification toolkit for the partial Steiner
//! `(n, r, ell)`-system random process.

pub mod clusters;
pub mod combinatorics;
pub mod error;
pub mod exact;
pub mod experiments;
pub mod formulas;
pub mod hypergraph;
pub mod process;
pub mod stats;
pub mod switching;

pub use combinatorics::{LogNumber, Params};
pub use error::{Error, Result};
pub use hypergraph::{GeneralGraph, Hypergraph, PartialSystem, RSet};
