//! Monte Carlo laboratory for the occupation front of many independent
//! random walkers on the triangular lattice.

pub mod constants;
pub mod error;
pub mod geometry;
pub mod grid;
pub mod harness;
pub mod lattice;
pub mod occupation;
pub mod percolation;
pub mod rng;
pub mod sampler;
pub mod walk_kernel;

pub use error::{Error, Result};
