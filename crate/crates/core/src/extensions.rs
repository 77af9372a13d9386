//! Encrypted variants of other distributed tasks: logistic-regression
//! gradients, matrix products and matrix inversion.

use crate::error::{mismatch, Error, Result};
use crate::linalg::{dot, symmetric_eigen, DenseMatrix, Qr};
use crate::sketching::{make_projection, Projection, ProjectionKind};

/// Inversion refuses matrices with a larger 2-norm condition number.
pub const MAX_CONDITION: f64 = 1e6;

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `[1 A]`: samples with an intercept column.
pub fn augment(a: &DenseMatrix) -> DenseMatrix {
    DenseMatrix::from_fn(a.rows(), a.cols() + 1, |i, j| if j == 0 { 1.0 } else { a[(i, j - 1)] })
}

fn check_labels(b: &[f64], n: usize) -> Result<()> {
    if b.len() != n {
        return Err(mismatch(format!("{n} labels"), b.len()));
    }
    if b.iter().any(|&v| v != 0.0 && v != 1.0) {
        return Err(Error::InvalidArgument("labels must be 0 or 1".into()));
    }
    Ok(())
}

/// Negative log-likelihood of `x` (length `d+1`) on samples `a` and 0/1
/// labels `b`.
pub fn logistic_loss(a: &DenseMatrix, b: &[f64], x: &[f64]) -> Result<f64> {
    let z = augment(a).matvec(x)?;
    check_labels(b, z.len())?;
    // log(1 + e^z) − b z, stable for large |z|
    Ok(z.iter()
        .zip(b)
        .map(|(&z, &y)| z.max(0.0) + (-z.abs()).exp().ln_1p() - y * z)
        .sum())
}

/// Plaintext gradient `[1 A]ᵀ(μ − b)`.
pub fn logistic_gradient(a: &DenseMatrix, b: &[f64], x: &[f64]) -> Result<Vec<f64>> {
    let aug = augment(a);
    let z = aug.matvec(x)?;
    check_labels(b, z.len())?;
    let r: Vec<f64> = z.iter().zip(b).map(|(&z, &y)| sigmoid(z) - y).collect();
    aug.tr_matvec(&r)
}

/// Default keys for `d` features: random orthonormal `(d+1)`-dimensional
/// `Π₁, Π₂`.
pub fn logistic_keys(d: usize, seed: u64) -> Result<(Projection, Projection)> {
    let kind = ProjectionKind::RandomOrthonormal;
    Ok((
        make_projection(kind, d + 1, seed)?,
        make_projection(kind, d + 1, seed ^ 0x6b65_7932)?,
    ))
}

/// What the workers see: `À = [1 A]Π₁`, rows `àᵢ = Π₂[1 aᵢ]` and
/// `x̀ = Π₂x`.
#[derive(Clone, Debug)]
pub struct EncryptedLogisticState {
    features: DenseMatrix,
    samples: DenseMatrix,
    params: Vec<f64>,
    pi1: Projection,
    pi2: Projection,
}

impl EncryptedLogisticState {
    pub fn new(a: &DenseMatrix, x: &[f64], pi1: Projection, pi2: Projection) -> Result<Self> {
        let d1 = a.cols() + 1;
        for p in [&pi1, &pi2] {
            if p.dim() != d1 {
                return Err(mismatch(format!("{d1}-dimensional key"), p.dim()));
            }
            if !p.kind().is_orthonormal() {
                return Err(Error::InvalidArgument(format!("{} is not orthonormal", p.kind())));
            }
        }
        let at = augment(a).transpose();
        let features = pi1.apply_transpose(&at)?.transpose();
        let samples = pi2.apply(&at)?.transpose();
        let mut state = Self {
            features,
            samples,
            params: Vec::new(),
            pi1,
            pi2,
        };
        state.set_params(x)?;
        Ok(state)
    }

    /// Re-encrypts a new parameter vector.
    pub fn set_params(&mut self, x: &[f64]) -> Result<()> {
        if x.len() != self.pi2.dim() {
            return Err(mismatch(format!("x of length {}", self.pi2.dim()), x.len()));
        }
        self.params = self.pi2.apply_vec(x)?;
        Ok(())
    }

    pub fn encrypted_features(&self) -> &DenseMatrix {
        &self.features
    }

    pub fn encrypted_samples(&self) -> &DenseMatrix {
        &self.samples
    }

    pub fn encrypted_params(&self) -> &[f64] {
        &self.params
    }

    /// `⟨x̀, àᵢ⟩`, equal to `⟨x, [1 aᵢ]⟩`.
    pub fn margins(&self) -> Vec<f64> {
        (0..self.samples.rows())
            .map(|i| dot(self.samples.row(i), &self.params))
            .collect()
    }
}

/// Worker-side `ĝ = Àᵀ(μ − b)` from encrypted data, decrypted as `Π₁ĝ`.
pub fn logistic_encrypted_gradient(state: &EncryptedLogisticState, b: &[f64]) -> Result<Vec<f64>> {
    check_labels(b, state.features.rows())?;
    let r: Vec<f64> = state
        .margins()
        .into_iter()
        .zip(b)
        .map(|(z, &y)| sigmoid(z) - y)
        .collect();
    let g_enc = state.features.tr_matvec(&r)?;
    state.pi1.apply_vec(&g_enc)
}

#[derive(Clone, Debug, PartialEq)]
pub struct MatmulReport {
    pub product: DenseMatrix,
    /// Multiply-adds spent encrypting both factors.
    pub transform_ops: u64,
    /// What the same encryption would cost with a dense `Π`.
    pub dense_transform_ops: u64,
}

/// `(A₁Πᵀ)(ΠA₂)`, which equals `A₁A₂` for orthonormal `Π`.
pub fn encrypted_matmul(a1: &DenseMatrix, a2: &DenseMatrix, proj: &Projection) -> Result<MatmulReport> {
    if a1.cols() != a2.rows() {
        return Err(mismatch(format!("{} rows in the right factor", a1.cols()), a2.rows()));
    }
    if !proj.kind().is_orthonormal() {
        return Err(Error::InvalidArgument(format!("{} is not orthonormal", proj.kind())));
    }
    let left = proj.apply(&a1.transpose())?.transpose();
    let right = proj.apply(a2)?;
    let n = proj.dim() as u64;
    let cols = a1.rows() + a2.cols();
    Ok(MatmulReport {
        product: left.matmul(&right)?,
        transform_ops: proj.apply_cost(cols),
        dense_transform_ops: n * n * cols as u64,
    })
}

/// `A⁻¹` from the `N` encrypted column problems `min ‖AΠᵀβ − eᵢ‖`, whose
/// solutions form `ΠA⁻¹`.
pub fn encrypted_inverse(a: &DenseMatrix, proj: &Projection) -> Result<DenseMatrix> {
    let n = a.rows();
    if a.cols() != n {
        return Err(mismatch("square matrix", format!("{:?}", a.shape())));
    }
    if !proj.kind().is_orthonormal() {
        return Err(Error::InvalidArgument(format!("{} is not orthonormal", proj.kind())));
    }
    let (eig, _) = symmetric_eigen(&a.gram())?;
    let hi = eig.iter().copied().fold(0.0, f64::max);
    let lo = eig.iter().copied().fold(f64::INFINITY, f64::min);
    if !(lo > 0.0) {
        return Err(Error::RankDeficient);
    }
    let cond = (hi / lo).sqrt();
    if !(cond < MAX_CONDITION) {
        return Err(Error::IllConditioned(cond));
    }
    let enc = proj.apply(&a.transpose())?.transpose();
    let qr = Qr::new(&enc)?;
    let mut cols = DenseMatrix::zeros(n, n);
    let mut e = vec![0.0; n];
    for i in 0..n {
        e[i] = 1.0;
        let beta = qr.solve_least_squares(&e)?;
        e[i] = 0.0;
        for (r, v) in beta.into_iter().enumerate() {
            cols[(r, i)] = v;
        }
    }
    proj.apply_transpose(&cols)
}
