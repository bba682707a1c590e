//! Capacity-maximizing radiation pattern design for pattern-reconfigurable
//! MIMO (PR-MIMO) links.
//!
//! The crate is organized bottom-up:
//!
//! - [`numerics`]: dense eigen/singular-value kernels and the log-det capacity kernel.
//! - [`channel`]: steering vectors, geometric multi-path channels and the
//!   cluster channel generator with good/ill condition profiles.
//! - [`pattern`]: pattern sampling matrices, pattern channels, capacity and the
//!   subchannel Gram matrix with its correlation-level indicator.
//! - [`sof`]: the sequential optimization framework that redesigns the
//!   correlation-modification vectors one subchannel at a time.
//! - [`cfpa`]: closed-form power allocation and the end-to-end design pipeline.
//! - [`eval`]: seeded Monte Carlo campaigns comparing physical, pattern and
//!   ideal channels.
//! - [`config`] and [`report`]: run configuration parsing and the CSV / metadata
//!   formats written by the `prmimo` command-line tool.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cfpa;
pub mod channel;
pub mod config;
mod error;
pub mod eval;
pub mod numerics;
pub mod pattern;
pub mod report;
pub mod sof;

pub use error::{Error, Result};
pub use num_complex::Complex64;
