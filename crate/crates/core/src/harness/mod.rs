//! Experiment orchestration, regression, rendering and the command line.

pub mod cli;
pub mod config;
pub mod experiments;
pub mod fit;
pub mod render;
