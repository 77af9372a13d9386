//! Normalized fast Walsh–Hadamard transform.
//!
//! `Ĥ_N = N^{-1/2} · H₂^{⊗log₂N}` with `H₂ = [[1, 1], [1, -1]]`. The
//! transform is symmetric and orthonormal, so it is its own inverse.

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

/// In-place `v ← Ĥ_N v`.
pub fn fwht_in_place(v: &mut [f64]) -> Result<()> {
    let n = v.len();
    if !n.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(n));
    }
    let mut h = 1;
    while h < n {
        for start in (0..n).step_by(2 * h) {
            let (lo, hi) = v[start..start + 2 * h].split_at_mut(h);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a, *b);
                *a = x + y;
                *b = x - y;
            }
        }
        h *= 2;
    }
    let s = 1.0 / (n as f64).sqrt();
    v.iter_mut().for_each(|x| *x *= s);
    Ok(())
}

/// Returns `Ĥ_N v`.
pub fn fwht(v: &[f64]) -> Result<Vec<f64>> {
    let mut out = v.to_vec();
    fwht_in_place(&mut out)?;
    Ok(out)
}

/// In-place `M ← Ĥ_N M`, butterflying whole rows.
pub fn fwht_rows(m: &mut DenseMatrix) -> Result<()> {
    let n = m.rows();
    if !n.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(n));
    }
    let cols = m.cols();
    let data = m.as_mut_slice();
    let mut h = 1;
    while h < n {
        for start in (0..n).step_by(2 * h) {
            let block = &mut data[start * cols..(start + 2 * h) * cols];
            let (lo, hi) = block.split_at_mut(h * cols);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a, *b);
                *a = x + y;
                *b = x - y;
            }
        }
        h *= 2;
    }
    let s = 1.0 / (n as f64).sqrt();
    data.iter_mut().for_each(|x| *x *= s);
    Ok(())
}

/// Dense `Ĥ_N` built from explicit Kronecker products. Test/oracle use only.
pub fn hadamard_dense(n: usize) -> Result<DenseMatrix> {
    if !n.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(n));
    }
    let mut h = DenseMatrix::identity(1);
    let h2 = DenseMatrix::from_rows(&[[1.0, 1.0], [1.0, -1.0]])?;
    while h.rows() < n {
        h = kronecker(&h2, &h);
    }
    Ok(h.scaled(1.0 / (n as f64).sqrt()))
}

/// Dense Kronecker product `a ⊗ b`.
pub fn kronecker(a: &DenseMatrix, b: &DenseMatrix) -> DenseMatrix {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    DenseMatrix::from_fn(ar * br, ac * bc, |i, j| a[(i / br, j / bc)] * b[(i % br, j % bc)])
}
