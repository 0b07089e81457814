//! Extended Kaczmarz solvers for inconsistent linear least-squares problems.
//!
//! The crate provides:
//!
//! * [`matrix`]: immutable dense / CSR matrices with cached row and column norms
//!   and Matrix Market I/O.
//! * [`solver`]: the REK, PREK, EMRK and MEMRK iterations together with their
//!   selection rules and the shared driver.
//! * [`problem`]: generators for dense and sparse Gaussian test systems and
//!   parallel-beam tomography matrices.
//! * [`oracle`]: an SVD-based least-squares oracle plus evaluators for the
//!   convergence constants and error bounds.
//! * [`harness`]: experiment specs, batch runs, convergence curves and PSNR
//!   scoring with CSV / JSON output.

// `!(x > 0.0)` is used deliberately so NaN takes the rejecting branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod harness;
pub mod matrix;
pub mod oracle;
pub mod problem;
pub mod solver;

pub use error::{Error, Result};

pub use matrix::{MatrixHandle, Storage};
pub use oracle::SpectralProfile;
pub use problem::{ProblemInstance, ProblemKind, TomoGeometry};

pub use harness::{ExperimentSpec, MethodSpec, ResultRow};
pub use solver::{Method, SolveReport, SolverConfig, TracePoint};

/// Library version, recorded in emitted metadata.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
