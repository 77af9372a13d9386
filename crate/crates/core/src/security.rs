//! Keyed permutations, garbling, ensemble sizes and secrecy experiments.

use std::collections::HashMap;
use std::fmt;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::{ChaCha20Rng, ChaCha8Rng};
use statrs::function::gamma::ln_gamma;

use crate::error::{mismatch, Error, Result};
use crate::linalg::DenseMatrix;
use crate::sketching::{make_projection, Projection, ProjectionKind};

/// Entries with magnitude below this count as zero for the distinguisher.
const ZERO_TOL: f64 = 1e-12;
const DERIVE_STREAM: u64 = 0x7065_726d;

/// 256-bit secret for [`keyed_permutation`].
#[derive(Clone, Copy, PartialEq, Eq)]
pub struct PermutationKey([u8; 32]);

impl fmt::Debug for PermutationKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("PermutationKey(..)")
    }
}

impl PermutationKey {
    pub fn new(bytes: [u8; 32]) -> Self {
        Self(bytes)
    }

    /// Key stretched from a 64-bit seed with a dedicated ChaCha20 stream.
    pub fn derive(seed: u64) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        rng.set_stream(DERIVE_STREAM);
        let mut key = [0u8; 32];
        rng.fill_bytes(&mut key);
        Self(key)
    }

    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let mut key = [0u8; 32];
        rng.fill_bytes(&mut key);
        Self(key)
    }

    pub fn with_bit_flipped(&self, bit: usize) -> Self {
        let mut key = self.0;
        key[(bit / 8) % 32] ^= 1 << (bit % 8);
        Self(key)
    }
}

/// Fisher–Yates shuffle of `0..n` driven by ChaCha20 keyed with `key`.
pub fn keyed_permutation(key: &PermutationKey, n: usize) -> Vec<usize> {
    let mut rng = ChaCha20Rng::from_seed(key.0);
    let mut perm: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = rng.random_range(0..=i);
        perm.swap(i, j);
    }
    perm
}

/// Permutes the Hadamard rows of a block-SRHT with the keyed permutation.
pub fn garble(proj: &Projection, key: &PermutationKey) -> Result<Projection> {
    proj.with_permutation(keyed_permutation(key, proj.dim()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Family {
    BlockSrht,
    GarbledBlockSrht,
    Rademacher,
    /// The finite group of `N × N` signed permutation matrices.
    SignedPermutation,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnsembleDescriptor {
    pub family: Family,
    pub n: usize,
    pub log2_cardinality: f64,
}

fn log2_factorial(n: usize) -> f64 {
    ln_gamma(n as f64 + 1.0) / std::f64::consts::LN_2
}

/// `log₂` of the number of distinct keys in each family.
pub fn ensemble_size(family: Family, n: usize) -> EnsembleDescriptor {
    let n_f = n as f64;
    let log2_cardinality = match family {
        Family::BlockSrht => n_f,
        Family::GarbledBlockSrht | Family::SignedPermutation => n_f + log2_factorial(n),
        Family::Rademacher => n_f * n_f,
    };
    EnsembleDescriptor {
        family,
        n,
        log2_cardinality,
    }
}

pub fn zero_count(c: &DenseMatrix) -> usize {
    c.as_slice().iter().filter(|v| v.abs() < ZERO_TOL).count()
}

/// Guesses message 1 when the ciphertext contains a zero entry.
pub fn zero_count_distinguisher(c: &DenseMatrix) -> usize {
    usize::from(zero_count(c) > 0)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SrhtCounterexample {
    /// `Ĥ₂ D · I₂`.
    pub c0: DenseMatrix,
    /// `Ĥ₂ D · Ĥ₂`.
    pub c1: DenseMatrix,
    /// Distinguisher guesses for `c0` and `c1`.
    pub verdict: [usize; 2],
}

impl SrhtCounterexample {
    pub fn distinguished(&self) -> bool {
        self.verdict == [0, 1]
    }
}

pub fn hadamard2() -> DenseMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    DenseMatrix::from_rows(&[[s, s], [s, -s]]).expect("2x2")
}

/// Encrypts `I₂` and `Ĥ₂` with the SRHT key `D = diag(d1, d2)`.
pub fn srht_counterexample(d1: f64, d2: f64) -> Result<SrhtCounterexample> {
    if d1.abs() != 1.0 || d2.abs() != 1.0 {
        return Err(Error::InvalidArgument(format!("signs must be ±1, got ({d1}, {d2})")));
    }
    let h = hadamard2();
    let key = h.matmul(&DenseMatrix::diagonal(&[d1, d2]))?;
    let c0 = key.clone();
    let c1 = key.matmul(&h)?;
    let verdict = [zero_count_distinguisher(&c0), zero_count_distinguisher(&c1)];
    Ok(SrhtCounterexample { c0, c1, verdict })
}

/// All `2^N N!` signed permutation matrices.
pub fn signed_permutations(n: usize) -> Vec<DenseMatrix> {
    fn perms(prefix: &mut Vec<usize>, n: usize, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == n {
            out.push(prefix.clone());
            return;
        }
        for v in 0..n {
            if !prefix.contains(&v) {
                prefix.push(v);
                perms(prefix, n, out);
                prefix.pop();
            }
        }
    }
    let mut all = Vec::new();
    perms(&mut Vec::new(), n, &mut all);
    let mut out = Vec::with_capacity(all.len() << n);
    for p in &all {
        for mask in 0..(1usize << n) {
            let mut m = DenseMatrix::zeros(n, n);
            for (i, &j) in p.iter().enumerate() {
                m[(i, j)] = if mask >> i & 1 == 1 { -1.0 } else { 1.0 };
            }
            out.push(m);
        }
    }
    out
}

const EXHAUSTIVE_MAX_N: usize = 4;

fn exact_key(c: &DenseMatrix) -> Vec<i64> {
    c.as_slice().iter().map(|v| (v * 1e9).round() as i64).collect()
}

fn total_variation<K: std::hash::Hash + Eq>(p: &HashMap<K, f64>, q: &HashMap<K, f64>) -> f64 {
    let mut tv = 0.0;
    for (k, a) in p {
        tv += (a - q.get(k).copied().unwrap_or(0.0)).abs();
    }
    for (k, b) in q {
        if !p.contains_key(k) {
            tv += b;
        }
    }
    tv / 2.0
}

fn check_messages(n: usize, messages: (&DenseMatrix, &DenseMatrix)) -> Result<()> {
    for m in [messages.0, messages.1] {
        if m.rows() != n {
            return Err(mismatch(format!("{n} rows"), m.rows()));
        }
    }
    if messages.0.cols() != messages.1.cols() {
        return Err(mismatch(messages.0.cols(), messages.1.cols()));
    }
    Ok(())
}

fn sampled_key(family: Family, n: usize, seed: u64) -> Result<Projection> {
    let kind = match family {
        Family::BlockSrht => ProjectionKind::BlockSrht,
        Family::GarbledBlockSrht => ProjectionKind::GarbledBlockSrht,
        Family::Rademacher => ProjectionKind::Rademacher,
        Family::SignedPermutation => unreachable!("enumerated exhaustively"),
    };
    make_projection(kind, n, seed)
}

/// Estimated total-variation distance between the ciphertext distributions
/// of two messages.
///
/// `SignedPermutation` is enumerated exhaustively over its exact
/// ciphertexts (`N ≤ 4`, messages must be group elements) and `trials` is
/// ignored. The sampled families compare zero-count histograms over
/// `trials` random keys, a lower bound on the true distance.
pub fn indistinguishability_test(
    family: Family,
    n: usize,
    messages: (&DenseMatrix, &DenseMatrix),
    trials: usize,
    seed: u64,
) -> Result<f64> {
    check_messages(n, messages)?;
    if family == Family::SignedPermutation {
        let (p0, p1) = group_ciphertext_distributions(n, messages)?;
        return Ok(total_variation(&p0, &p1));
    }
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut h0: HashMap<usize, f64> = HashMap::new();
    let mut h1: HashMap<usize, f64> = HashMap::new();
    let w = 1.0 / trials as f64;
    for _ in 0..trials {
        let key = sampled_key(family, n, rng.random())?;
        *h0.entry(zero_count(&key.apply(messages.0)?)).or_default() += w;
        *h1.entry(zero_count(&key.apply(messages.1)?)).or_default() += w;
    }
    Ok(total_variation(&h0, &h1))
}

type CipherDistribution = HashMap<Vec<i64>, f64>;

/// Exact ciphertext distributions of both messages under a uniform key from
/// the signed permutation group.
pub fn group_ciphertext_distributions(
    n: usize,
    messages: (&DenseMatrix, &DenseMatrix),
) -> Result<(CipherDistribution, CipherDistribution)> {
    if n > EXHAUSTIVE_MAX_N {
        return Err(Error::InvalidArgument(format!(
            "exhaustive enumeration limited to N ≤ {EXHAUSTIVE_MAX_N}"
        )));
    }
    check_messages(n, messages)?;
    let group = signed_permutations(n);
    for m in [messages.0, messages.1] {
        if !group.iter().any(|g| g.max_abs_diff(m) < ZERO_TOL) {
            return Err(Error::InvalidArgument(
                "message is not an element of the key group".into(),
            ));
        }
    }
    let w = 1.0 / group.len() as f64;
    let mut out = (HashMap::new(), HashMap::new());
    for key in &group {
        *out.0.entry(exact_key(&key.matmul(messages.0)?)).or_default() += w;
        *out.1.entry(exact_key(&key.matmul(messages.1)?)).or_default() += w;
    }
    Ok(out)
}

/// Success probability of the zero-count distinguisher when the message is
/// a fair coin and the key is uniform in the family.
pub fn distinguisher_success_rate(
    family: Family,
    n: usize,
    messages: (&DenseMatrix, &DenseMatrix),
    trials: usize,
    seed: u64,
) -> Result<f64> {
    check_messages(n, messages)?;
    let pair = [messages.0, messages.1];
    if family == Family::SignedPermutation {
        if n > EXHAUSTIVE_MAX_N {
            return Err(Error::InvalidArgument(format!(
                "exhaustive enumeration limited to N ≤ {EXHAUSTIVE_MAX_N}"
            )));
        }
        let group = signed_permutations(n);
        let mut hits = 0usize;
        for key in &group {
            for (bit, m) in pair.iter().enumerate() {
                hits += usize::from(zero_count_distinguisher(&key.matmul(m)?) == bit);
            }
        }
        return Ok(hits as f64 / (2 * group.len()) as f64);
    }
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hits = 0usize;
    for _ in 0..trials {
        let key = sampled_key(family, n, rng.random())?;
        let bit = usize::from(rng.random::<bool>());
        hits += usize::from(zero_count_distinguisher(&key.apply(pair[bit])?) == bit);
    }
    Ok(hits as f64 / trials as f64)
}
