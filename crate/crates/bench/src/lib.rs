//! Shared fixtures for the benchmarks.

use memrk_core::problem::{self, GaussianOptions};
use memrk_core::ProblemInstance;

/// Dense Gaussian instance with an inconsistent right-hand side.
pub fn dense(m: usize, n: usize) -> ProblemInstance {
    problem::dense_instance(m, n, 1, GaussianOptions::default()).expect("dense instance")
}

/// Sparse Gaussian instance, density 0.1.
pub fn sparse(m: usize, n: usize) -> ProblemInstance {
    problem::sparse_instance(m, n, 0.1, 1, GaussianOptions::default()).expect("sparse instance")
}
