//! Applying Kronecker powers `B^{⊗p}` of a small orthonormal base without
//! materializing the `k^p × k^p` matrix.

use crate::error::{mismatch, Error, Result};
use crate::linalg::DenseMatrix;

const ORTHONORMAL_TOL: f64 = 1e-10;

/// Returns `(base^{⊗p}) · m`.
pub fn kron_apply(base: &DenseMatrix, p: u32, m: &DenseMatrix) -> Result<DenseMatrix> {
    let k = base.rows();
    if base.cols() != k || k == 0 {
        return Err(mismatch("square base", format!("{:?}", base.shape())));
    }
    let defect = base.orthonormality_defect();
    if defect > ORTHONORMAL_TOL {
        return Err(Error::NotOrthonormal(defect));
    }
    let n = checked_power(k, p)?;
    if m.rows() != n {
        return Err(mismatch(format!("{n} rows"), format!("{} rows", m.rows())));
    }
    let mut out = m.clone();
    kron_apply_in_place(base, p, &mut out);
    Ok(out)
}

pub(crate) fn checked_power(k: usize, p: u32) -> Result<usize> {
    k.checked_pow(p)
        .ok_or_else(|| Error::InvalidArgument(format!("{k}^{p} overflows")))
}

/// Mode-wise application; `m` must have exactly `k^p` rows.
pub(crate) fn kron_apply_in_place(base: &DenseMatrix, p: u32, m: &mut DenseMatrix) {
    let k = base.rows();
    let n = m.rows();
    let cols = m.cols();
    let mut scratch = vec![0.0; k * cols];
    let mut stride = 1;
    for _ in 0..p {
        let span = stride * k;
        for start in (0..n).step_by(span) {
            for offset in 0..stride {
                scratch.iter_mut().for_each(|x| *x = 0.0);
                for a in 0..k {
                    let dst = &mut scratch[a * cols..(a + 1) * cols];
                    for b in 0..k {
                        let w = base[(a, b)];
                        if w != 0.0 {
                            let src = m.row(start + offset + b * stride);
                            for (d, s) in dst.iter_mut().zip(src) {
                                *d += w * s;
                            }
                        }
                    }
                }
                for a in 0..k {
                    m.row_mut(start + offset + a * stride)
                        .copy_from_slice(&scratch[a * cols..(a + 1) * cols]);
                }
            }
        }
        stride = span;
    }
}

/// Smallest `p` with `k^p ≥ n`.
pub fn fold_count(k: usize, n: usize) -> u32 {
    let mut p = 0;
    let mut size = 1usize;
    while size < n {
        size = size.saturating_mul(k);
        p += 1;
    }
    p
}
