//! Joint estimation of sparse Gaussian graphical models across related
//! sample groups, with stability-based selection of the sparsity penalty and
//! information-criterion selection of the similarity penalty.
//!
//! The crate exposes four layers:
//!
//! * [`model`] — validated containers: grouped data, covariance sets, fitted
//!   precision matrices, edge sets, penalty pairs.
//! * [`solver`] — the fused joint graphical lasso solved by ADMM, including
//!   the exact fused/soft proximal updates.
//! * [`stability`] and [`ebic`] — the two penalty-selection stages:
//!   subsample-stability selection of `lambda1`, extended-BIC selection of
//!   `lambda2`.
//! * [`pipeline`] — the end-to-end procedure gluing the stages together,
//!   plus [`synthetic`] data generation, [`metrics`] for recovery accuracy,
//!   and [`io`] for the CSV/TSV/JSON formats used by the CLI.

pub mod ebic;
pub mod error;
pub mod io;
pub mod metrics;
mod linalg;
pub mod model;
pub mod pipeline;
mod seed;
pub mod solver;
pub mod stability;
pub mod synthetic;

pub use error::{Error, Result};

/// Re-export of the array library whose types appear in this crate's API.
pub use ndarray;
