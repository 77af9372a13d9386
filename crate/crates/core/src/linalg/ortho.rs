//! Orthonormal bases, Householder least squares, and spectral estimates.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{mismatch, Error, Result};
use crate::linalg::{axpy, dot, norm, DenseMatrix};

/// Relative norm below which a vector is treated as linearly dependent.
const RANK_TOL: f64 = 1e-10;
const PANEL: usize = 32;
const POWER_ITER_CAP: usize = 10_000;

/// Orthonormalizes the rows of `m` in place with block classical
/// Gram–Schmidt, each projection performed twice.
///
/// Fails with [`Error::RankDeficient`] when a row is (numerically) in the
/// span of the rows before it.
pub fn orthonormalize_rows(m: &mut DenseMatrix) -> Result<()> {
    let (rows, n) = m.shape();
    if rows > n {
        return Err(Error::RankDeficient);
    }
    let data = m.as_mut_slice();
    let mut coeffs = vec![0.0; PANEL];
    let mut start = 0;
    while start < rows {
        let end = (start + PANEL).min(rows);
        let width = end - start;
        let (done, rest) = data.split_at_mut(start * n);
        let panel = &mut rest[..width * n];
        let orig_norms: Vec<f64> = panel.chunks(n).map(norm).collect();

        for _pass in 0..2 {
            for q in done.chunks(n) {
                for (c, row) in coeffs.iter_mut().zip(panel.chunks(n)) {
                    *c = dot(q, row);
                }
                for (&c, row) in coeffs.iter().zip(panel.chunks_mut(n)) {
                    axpy(-c, q, row);
                }
            }
        }

        for (i, &orig) in orig_norms.iter().enumerate().take(width) {
            let (before, cur) = panel.split_at_mut(i * n);
            let row = &mut cur[..n];
            for _pass in 0..2 {
                for q in before.chunks(n) {
                    let c = dot(q, row);
                    axpy(-c, q, row);
                }
            }
            let nr = norm(row);
            if !(nr > RANK_TOL * orig) || nr == 0.0 {
                return Err(Error::RankDeficient);
            }
            let inv = 1.0 / nr;
            row.iter_mut().for_each(|x| *x *= inv);
        }
        start = end;
    }
    Ok(())
}

/// Random `n × n` orthonormal matrix: Gram–Schmidt applied to an i.i.d.
/// Gaussian matrix drawn from `seed`.
pub fn random_orthonormal(n: usize, seed: u64) -> DenseMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let mut g = DenseMatrix::gaussian(n, n, &mut rng);
        // a Gaussian matrix is singular with probability zero
        if orthonormalize_rows(&mut g).is_ok() {
            return g;
        }
    }
}

/// Orthonormal basis `U` (`N × d`) of the column space of `a`.
pub fn thin_basis(a: &DenseMatrix) -> Result<DenseMatrix> {
    let mut t = a.transpose();
    orthonormalize_rows(&mut t)?;
    Ok(t.transpose())
}

/// Householder QR of a tall matrix, kept in factored form.
#[derive(Clone, Debug)]
pub struct Qr {
    rows: usize,
    cols: usize,
    /// Reflector vectors, one per column, stored as rows (length `rows - k`).
    reflectors: Vec<Vec<f64>>,
    /// Upper-triangular factor, `cols × cols` row-major.
    r: DenseMatrix,
}

impl Qr {
    pub fn new(a: &DenseMatrix) -> Result<Self> {
        let (rows, cols) = a.shape();
        if rows < cols {
            return Err(Error::RankDeficient);
        }
        // columns of `a` as contiguous rows
        let mut work = a.transpose();
        let mut reflectors = Vec::with_capacity(cols);
        let mut r = DenseMatrix::zeros(cols, cols);
        let mut max_diag: f64 = 0.0;
        for k in 0..cols {
            let col = &work.row(k)[k..];
            let alpha = norm(col);
            let mut v = col.to_vec();
            let sign = if v[0] >= 0.0 { 1.0 } else { -1.0 };
            v[0] += sign * alpha;
            let vnorm = norm(&v);
            if vnorm > 0.0 {
                v.iter_mut().for_each(|x| *x /= vnorm);
            }
            r[(k, k)] = -sign * alpha;
            max_diag = max_diag.max(alpha);
            for j in k + 1..cols {
                let cj = &mut work.row_mut(j)[k..];
                let w = 2.0 * dot(&v, cj);
                axpy(-w, &v, cj);
                r[(k, j)] = cj[0];
            }
            reflectors.push(v);
        }
        for k in 0..cols {
            if !(r[(k, k)].abs() > RANK_TOL * max_diag) {
                return Err(Error::RankDeficient);
            }
        }
        Ok(Self {
            rows,
            cols,
            reflectors,
            r,
        })
    }

    pub fn r(&self) -> &DenseMatrix {
        &self.r
    }

    /// `Qᵀ v` restricted to its first `cols` entries.
    fn apply_qt(&self, v: &[f64]) -> Vec<f64> {
        let mut y = v.to_vec();
        for (k, refl) in self.reflectors.iter().enumerate() {
            let tail = &mut y[k..];
            let w = 2.0 * dot(refl, tail);
            axpy(-w, refl, tail);
        }
        y.truncate(self.cols);
        y
    }

    /// Minimizer of `‖A x − b‖₂`.
    pub fn solve_least_squares(&self, b: &[f64]) -> Result<Vec<f64>> {
        if b.len() != self.rows {
            return Err(mismatch(format!("rhs of length {}", self.rows), b.len()));
        }
        let y = self.apply_qt(b);
        let d = self.cols;
        let mut x = vec![0.0; d];
        for i in (0..d).rev() {
            let s: f64 = (i + 1..d).map(|j| self.r[(i, j)] * x[j]).sum();
            x[i] = (y[i] - s) / self.r[(i, i)];
        }
        Ok(x)
    }
}

/// Power-iteration estimate of `σ_max(a)`.
///
/// Iterates on `aᵀa` from a fixed-seed start vector until the relative
/// change of the eigenvalue estimate falls below `tol`.
pub fn spectral_norm(a: &DenseMatrix, tol: f64) -> f64 {
    if a.cols() == 0 || a.rows() == 0 || a.as_slice().iter().all(|&v| v == 0.0) {
        return 0.0;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x05ee_d0f5_ca1e);
    let mut x = DenseMatrix::gaussian(a.cols(), 1, &mut rng).into_vec();
    let mut lambda = 0.0;
    for _ in 0..POWER_ITER_CAP {
        let nx = norm(&x);
        x.iter_mut().for_each(|v| *v /= nx);
        let ax = a.matvec(&x).expect("shape checked");
        let next = dot(&ax, &ax);
        let y = a.tr_matvec(&ax).expect("shape checked");
        if norm(&y) == 0.0 {
            // start vector landed in the null space; nudge it
            x = DenseMatrix::gaussian(a.cols(), 1, &mut rng).into_vec();
            continue;
        }
        let converged = (next - lambda).abs() <= tol * next;
        lambda = next;
        x = y;
        if converged {
            break;
        }
    }
    lambda.sqrt()
}

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Returns eigenvalues (unsorted) and a matrix whose columns are the
/// corresponding eigenvectors.
pub fn symmetric_eigen(m: &DenseMatrix) -> Result<(Vec<f64>, DenseMatrix)> {
    let n = m.rows();
    if m.cols() != n {
        return Err(mismatch("square matrix", format!("{:?}", m.shape())));
    }
    let mut a = m.clone();
    let mut v = DenseMatrix::identity(n);
    let scale = a.frobenius_norm().max(f64::MIN_POSITIVE);
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)] * a[(i, j)])
            .sum();
        if off.sqrt() <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq.abs() <= f64::MIN_POSITIVE {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    let values = (0..n).map(|i| a[(i, i)]).collect();
    Ok((values, v))
}

/// `‖m‖₂` for symmetric `m`, i.e. its largest absolute eigenvalue.
pub fn symmetric_spectral_norm(m: &DenseMatrix) -> Result<f64> {
    let (vals, _) = symmetric_eigen(m)?;
    Ok(vals.iter().fold(0.0f64, |acc, v| acc.max(v.abs())))
}

/// Moore–Penrose pseudo-inverse via the eigen-decomposition of the smaller
/// Gram matrix.
pub fn pseudo_inverse(g: &DenseMatrix) -> Result<DenseMatrix> {
    let wide = g.rows() <= g.cols();
    // small Gram matrix: G Gᵀ when wide, Gᵀ G when tall
    let small = if wide { g.transpose().gram() } else { g.gram() };
    let (vals, vecs) = symmetric_eigen(&small)?;
    let lmax = vals.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let k = small.rows();
    let mut inv = DenseMatrix::zeros(k, k);
    for (idx, &l) in vals.iter().enumerate() {
        if l > 1e-12 * lmax && l > 0.0 {
            for i in 0..k {
                for j in 0..k {
                    inv[(i, j)] += vecs[(i, idx)] * vecs[(j, idx)] / l;
                }
            }
        }
    }
    if wide {
        g.transpose().matmul(&inv)
    } else {
        inv.matmul(&g.transpose())
    }
}

/// Haar-distributed orthogonal matrix kept as a product of Householder
/// reflectors, `Q = H₀ H₁ ⋯ H_{n-2} · diag(s)`.
///
/// Each reflector is built from an independent Gaussian vector, which gives
/// the same distribution as orthonormalizing a Gaussian matrix while costing
/// `O(n²)` to sample and store and `O(n² c)` to apply to `n × c` inputs.
#[derive(Clone, Debug, PartialEq)]
pub struct HaarOrthogonal {
    n: usize,
    /// Reflector `k` acts on rows `k..n`; unit norm.
    reflectors: Vec<Vec<f64>>,
    signs: Vec<f64>,
}

impl HaarOrthogonal {
    pub fn sample(n: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut reflectors = Vec::with_capacity(n.saturating_sub(1));
        let mut signs = Vec::with_capacity(n);
        for k in 0..n {
            let mut v = DenseMatrix::gaussian(n - k, 1, &mut rng).into_vec();
            let s = if v[0] >= 0.0 { 1.0 } else { -1.0 };
            if k + 1 == n {
                // 1×1 remainder: only a sign
                signs.push(s);
                break;
            }
            // H x = -s‖x‖e₁, so the matching R diagonal has sign -s
            let alpha = norm(&v);
            v[0] += s * alpha;
            let vn = norm(&v);
            v.iter_mut().for_each(|x| *x /= vn);
            reflectors.push(v);
            signs.push(-s);
        }
        Self {
            n,
            reflectors,
            signs,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    fn reflect(v: &[f64], m: &mut DenseMatrix, k: usize) {
        let cols = m.cols();
        let mut w = vec![0.0; cols];
        for (i, &vi) in v.iter().enumerate() {
            axpy(vi, m.row(k + i), &mut w);
        }
        for (i, &vi) in v.iter().enumerate() {
            axpy(-2.0 * vi, &w, m.row_mut(k + i));
        }
    }

    fn scale_rows(&self, m: &mut DenseMatrix) {
        for (i, &s) in self.signs.iter().enumerate() {
            if s < 0.0 {
                m.row_mut(i).iter_mut().for_each(|x| *x = -*x);
            }
        }
    }

    /// `m ← Q m`.
    pub fn apply_in_place(&self, m: &mut DenseMatrix) -> Result<()> {
        if m.rows() != self.n {
            return Err(mismatch(format!("{} rows", self.n), m.rows()));
        }
        self.scale_rows(m);
        for (k, v) in self.reflectors.iter().enumerate().rev() {
            Self::reflect(v, m, k);
        }
        Ok(())
    }

    /// `m ← Qᵀ m`.
    pub fn apply_transpose_in_place(&self, m: &mut DenseMatrix) -> Result<()> {
        if m.rows() != self.n {
            return Err(mismatch(format!("{} rows", self.n), m.rows()));
        }
        for (k, v) in self.reflectors.iter().enumerate() {
            Self::reflect(v, m, k);
        }
        self.scale_rows(m);
        Ok(())
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut q = DenseMatrix::identity(self.n);
        self.apply_in_place(&mut q).expect("square");
        q
    }
}
