//! Iterative block sketching for straggler-resilient, encrypted distributed
//! least squares.

// `!(x > y)` comparisons are how NaN inputs are rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod coded_sim;
pub mod error;
pub mod extensions;
pub mod linalg;
pub mod security;
pub mod sketching;
pub mod solver;

pub use error::{Error, Result};
pub use linalg::{DenseMatrix, Partition};
