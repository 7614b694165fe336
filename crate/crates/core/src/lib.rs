//! Outlier-robust information fusion for networked state estimation.
//!
//! The crate provides the numerical core of a centralized robust cubature
//! information filter and two consensus-based decentralized variants:
//!
//! * [`gauss`]: cubature rule, prediction, statistical linearization and
//!   additive information-form correction.
//! * [`vb`]: beta-Bernoulli outlier indicators and their mean-field updates.
//! * [`consensus`]: network graphs, Metropolis weights, neighborhood
//!   averaging and the overweighting correction `δ`.
//! * [`filters`]: one-step transitions for the robust filters and their
//!   clairvoyant baselines.
//! * [`scenario`]: coordinated-turn target, range/bearing sensors, outlier
//!   contamination and episode synthesis.
//! * [`config`]: scenario description and deployment.
//! * [`track`]: running a filter over an episode.
//! * [`metrics`]: RMSE / TRMSE aggregation.
//!
//! Everything here is `no_std` + `alloc`. File formats, the Monte Carlo
//! runner and the command line live in the `rfusion` companion crate.

#![cfg_attr(not(feature = "std"), no_std)]
// `!(x > 0.0)` is used on purpose to reject NaN alongside nonpositive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod config;
pub mod consensus;
mod error;
pub mod filters;
mod float;
pub mod gauss;
pub mod linalg;
pub mod metrics;
pub mod rng;
pub mod scenario;
pub mod track;
pub mod vb;

pub use error::{Error, Result};

pub use nalgebra::{DMatrix, DVector};
