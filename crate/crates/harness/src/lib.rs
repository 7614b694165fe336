//! Monte Carlo harness, file formats and command-line front end for the
//! `rfusion-core` filters.
//!
//! * [`config_file`]: TOML scenario files.
//! * [`episode_io`]: columnar text format for synthesized episodes.
//! * [`runner`]: paired Monte Carlo runs and parameter sweeps.
//! * [`output`]: CSV artifacts with a provenance header.

pub mod config_file;
pub mod episode_io;
pub mod output;
pub mod runner;

pub use rfusion_core as core;
