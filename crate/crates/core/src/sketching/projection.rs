use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{mismatch, Error, Result};
use crate::linalg::kron::kron_apply_in_place;
use crate::linalg::{fwht_rows, random_orthonormal, DenseMatrix, HaarOrthogonal};
use crate::security::{keyed_permutation, PermutationKey};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ProjectionKind {
    Identity,
    RandomOrthonormal,
    BlockSrht,
    GarbledBlockSrht,
    /// Kronecker power of a random `k × k` orthonormal base.
    Kronecker(usize),
    Rademacher,
    Gaussian,
}

impl ProjectionKind {
    pub fn is_orthonormal(self) -> bool {
        !matches!(self, Self::Rademacher | Self::Gaussian)
    }

    pub fn is_hadamard(self) -> bool {
        matches!(self, Self::BlockSrht | Self::GarbledBlockSrht)
    }

    /// Smallest dimension `≥ n` this kind can be built at.
    pub fn padded_dim(self, n: usize) -> usize {
        match self {
            Self::BlockSrht | Self::GarbledBlockSrht => n.next_power_of_two(),
            Self::Kronecker(k) if k >= 2 => {
                let mut size = 1;
                while size < n {
                    size *= k;
                }
                size
            }
            _ => n,
        }
    }
}

impl fmt::Display for ProjectionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Identity => f.write_str("identity"),
            Self::RandomOrthonormal => f.write_str("orthonormal"),
            Self::BlockSrht => f.write_str("block-srht"),
            Self::GarbledBlockSrht => f.write_str("garbled-block-srht"),
            Self::Kronecker(k) => write!(f, "kron-{k}"),
            Self::Rademacher => f.write_str("rademacher"),
            Self::Gaussian => f.write_str("gaussian"),
        }
    }
}

impl FromStr for ProjectionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "identity" => Self::Identity,
            "orthonormal" => Self::RandomOrthonormal,
            "block-srht" => Self::BlockSrht,
            "garbled-block-srht" => Self::GarbledBlockSrht,
            "rademacher" => Self::Rademacher,
            "gaussian" => Self::Gaussian,
            other => {
                let k = other
                    .strip_prefix("kron-")
                    .and_then(|k| k.parse::<usize>().ok())
                    .filter(|&k| k >= 2)
                    .ok_or_else(|| Error::InvalidArgument(format!("unknown projection kind {other:?}")))?;
                Self::Kronecker(k)
            }
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Payload {
    Identity,
    Haar(HaarOrthogonal),
    /// `P Ĥ D` with `P` absent for the plain block-SRHT.
    Hadamard {
        signs: Vec<f64>,
        perm: Option<Vec<usize>>,
    },
    Kron {
        base: DenseMatrix,
        p: u32,
    },
    Dense(DenseMatrix),
}

/// A keyed `N × N` transform `Π` with a fast apply.
#[derive(Clone, Debug, PartialEq)]
pub struct Projection {
    kind: ProjectionKind,
    dim: usize,
    payload: Payload,
}

/// `±1` diagonal of the randomized Hadamard transform for `seed`.
pub fn sign_diagonal(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
        .collect()
}

pub fn make_projection(kind: ProjectionKind, n: usize, seed: u64) -> Result<Projection> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("projection dimension {n} < 2")));
    }
    let payload = match kind {
        ProjectionKind::Identity => Payload::Identity,
        ProjectionKind::RandomOrthonormal => Payload::Haar(HaarOrthogonal::sample(n, seed)),
        ProjectionKind::BlockSrht | ProjectionKind::GarbledBlockSrht => {
            if !n.is_power_of_two() {
                return Err(Error::NotPowerOfTwo(n));
            }
            let perm = (kind == ProjectionKind::GarbledBlockSrht)
                .then(|| keyed_permutation(&PermutationKey::derive(seed), n));
            Payload::Hadamard {
                signs: sign_diagonal(n, seed),
                perm,
            }
        }
        ProjectionKind::Kronecker(k) => {
            if k < 2 || kind.padded_dim(n) != n {
                return Err(Error::InvalidArgument(format!("{n} is not a power of {k}")));
            }
            let p = n.ilog(k);
            Payload::Kron {
                base: random_orthonormal(k, seed),
                p,
            }
        }
        ProjectionKind::Rademacher => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let s = 1.0 / (n as f64).sqrt();
            Payload::Dense(DenseMatrix::from_fn(n, n, |_, _| {
                if rng.random::<bool>() {
                    s
                } else {
                    -s
                }
            }))
        }
        ProjectionKind::Gaussian => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let s = 1.0 / (n as f64).sqrt();
            Payload::Dense(DenseMatrix::from_fn(n, n, |_, _| {
                s * rng.sample::<f64, _>(StandardNormal)
            }))
        }
    };
    Ok(Projection { kind, dim: n, payload })
}

impl Projection {
    pub fn kind(&self) -> ProjectionKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// The `D` diagonal of Hadamard kinds.
    pub fn signs(&self) -> Option<&[f64]> {
        match &self.payload {
            Payload::Hadamard { signs, .. } => Some(signs),
            _ => None,
        }
    }

    /// Row permutation of the garbled kind: output row `i` is row `perm[i]`
    /// of `ĤD`.
    pub fn permutation(&self) -> Option<&[usize]> {
        match &self.payload {
            Payload::Hadamard { perm, .. } => perm.as_deref(),
            _ => None,
        }
    }

    /// Returns `Π m`.
    pub fn apply(&self, m: &DenseMatrix) -> Result<DenseMatrix> {
        self.check(m)?;
        let mut out = m.clone();
        match &self.payload {
            Payload::Identity => {}
            Payload::Haar(h) => h.apply_in_place(&mut out)?,
            Payload::Hadamard { signs, perm } => {
                scale_rows(&mut out, signs);
                fwht_rows(&mut out)?;
                if let Some(perm) = perm {
                    out = out.permute_rows(perm);
                }
            }
            Payload::Kron { base, p } => kron_apply_in_place(base, *p, &mut out),
            Payload::Dense(pi) => out = pi.matmul(m)?,
        }
        Ok(out)
    }

    /// Returns `Πᵀ m`.
    pub fn apply_transpose(&self, m: &DenseMatrix) -> Result<DenseMatrix> {
        self.check(m)?;
        let mut out = m.clone();
        match &self.payload {
            Payload::Identity => {}
            Payload::Haar(h) => h.apply_transpose_in_place(&mut out)?,
            Payload::Hadamard { signs, perm } => {
                if let Some(perm) = perm {
                    for (i, &src) in perm.iter().enumerate() {
                        out.row_mut(src).copy_from_slice(m.row(i));
                    }
                }
                fwht_rows(&mut out)?;
                scale_rows(&mut out, signs);
            }
            Payload::Kron { base, p } => kron_apply_in_place(&base.transpose(), *p, &mut out),
            Payload::Dense(pi) => out = pi.transpose().matmul(m)?,
        }
        Ok(out)
    }

    pub fn apply_vec(&self, v: &[f64]) -> Result<Vec<f64>> {
        Ok(self.apply(&DenseMatrix::column(v))?.into_vec())
    }

    pub fn apply_transpose_vec(&self, v: &[f64]) -> Result<Vec<f64>> {
        Ok(self.apply_transpose(&DenseMatrix::column(v))?.into_vec())
    }

    /// Multiply-adds spent by [`Self::apply`] on a matrix with `cols` columns.
    pub fn apply_cost(&self, cols: usize) -> u64 {
        let n = self.dim as u64;
        let per_col = match &self.payload {
            Payload::Identity => 0,
            // one rank-one update per reflector
            Payload::Haar(_) => 2 * n * n.saturating_sub(1),
            Payload::Hadamard { .. } => n * u64::from(n.trailing_zeros()) + n,
            Payload::Kron { base, p } => n * base.rows() as u64 * u64::from(*p),
            Payload::Dense(_) => n * n,
        };
        per_col * cols as u64
    }

    /// Dense `Π`; `O(N²)` memory.
    pub fn materialize(&self) -> DenseMatrix {
        self.apply(&DenseMatrix::identity(self.dim))
            .expect("identity has matching rows")
    }

    fn check(&self, m: &DenseMatrix) -> Result<()> {
        if m.rows() != self.dim {
            return Err(mismatch(format!("{} rows", self.dim), m.rows()));
        }
        Ok(())
    }

    /// Builds the garbled variant of a block-SRHT; see [`crate::security::garble`].
    pub(crate) fn with_permutation(&self, perm: Vec<usize>) -> Result<Projection> {
        match (&self.kind, &self.payload) {
            (ProjectionKind::BlockSrht, Payload::Hadamard { signs, .. }) => Ok(Projection {
                kind: ProjectionKind::GarbledBlockSrht,
                dim: self.dim,
                payload: Payload::Hadamard {
                    signs: signs.clone(),
                    perm: Some(perm),
                },
            }),
            _ => Err(Error::InvalidArgument(format!(
                "only a block-srht can be garbled, got {}",
                self.kind
            ))),
        }
    }
}

fn scale_rows(m: &mut DenseMatrix, signs: &[f64]) {
    for (i, &s) in signs.iter().enumerate() {
        if s < 0.0 {
            m.row_mut(i).iter_mut().for_each(|x| *x = -*x);
        }
    }
}
