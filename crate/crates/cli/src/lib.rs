//! Configuration-driven sweeps over the `qcomp-core` library.

pub mod config;
pub mod experiments;
pub mod report;
