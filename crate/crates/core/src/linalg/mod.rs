//! Dense real linear algebra primitives.

pub mod hadamard;
pub mod io;
pub mod kron;
mod matrix;
mod ortho;

pub use hadamard::{fwht, fwht_in_place, fwht_rows};
pub use kron::{fold_count, kron_apply};
pub use matrix::{axpy, dot, norm, sub_vec, DenseMatrix, Partition};
pub use ortho::{
    orthonormalize_rows, pseudo_inverse, HaarOrthogonal, random_orthonormal, spectral_norm, symmetric_eigen,
    symmetric_spectral_norm, thin_basis, Qr,
};
