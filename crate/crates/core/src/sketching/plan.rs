use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{mismatch, Error, Result};
use crate::linalg::{DenseMatrix, Partition};
use crate::sketching::Projection;

/// One epoch's block selection `Ω̃`: `q` block indices and the rescale
/// `√(K/q)` applied to every selected block.
#[derive(Clone, Debug, PartialEq)]
pub struct SamplingPlan {
    k: usize,
    indices: Vec<usize>,
    rescale: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SamplingMode {
    /// i.i.d. uniform block indices.
    WithReplacement,
    /// A uniformly random `q`-subset, e.g. the first `q` responsive workers.
    WithoutReplacement,
    /// Every block exactly once, in order (`q` is ignored and equals `K`).
    Full,
}

impl SamplingPlan {
    pub fn new(k: usize, indices: Vec<usize>) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::InvalidArgument("a plan needs q ≥ 1 blocks".into()));
        }
        if let Some(&bad) = indices.iter().find(|&&i| i >= k) {
            return Err(Error::InvalidArgument(format!("block index {bad} ≥ K = {k}")));
        }
        let rescale = (k as f64 / indices.len() as f64).sqrt();
        Ok(Self { k, indices, rescale })
    }

    pub fn with_replacement<R: Rng + ?Sized>(k: usize, q: usize, rng: &mut R) -> Result<Self> {
        if k == 0 || q == 0 {
            return Err(Error::InvalidArgument(format!("need K, q ≥ 1 (K={k}, q={q})")));
        }
        Self::new(k, (0..q).map(|_| rng.random_range(0..k)).collect())
    }

    pub fn without_replacement<R: Rng + ?Sized>(k: usize, q: usize, rng: &mut R) -> Result<Self> {
        if q == 0 || q > k {
            return Err(Error::InvalidArgument(format!("need 1 ≤ q ≤ K (K={k}, q={q})")));
        }
        Self::new(k, sample_distinct(k, q, rng))
    }

    /// Each block once, rescale 1.
    pub fn full(k: usize) -> Self {
        Self {
            k,
            indices: (0..k).collect(),
            rescale: 1.0,
        }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn q(&self) -> usize {
        self.indices.len()
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn rescale(&self) -> f64 {
        self.rescale
    }

    /// Stacks the selected row blocks of `m`, each scaled by the rescale.
    pub fn stack(&self, m: &DenseMatrix, partition: &Partition) -> Result<DenseMatrix> {
        if partition.num_blocks() != self.k || m.rows() != partition.n() {
            return Err(mismatch(
                format!("{} rows in {} blocks", partition.n(), self.k),
                format!("{} rows in {} blocks", m.rows(), partition.num_blocks()),
            ));
        }
        let rows: usize = self.indices.iter().map(|&i| partition.block(i).len()).sum();
        let mut data = Vec::with_capacity(rows * m.cols());
        for &i in &self.indices {
            let r = partition.block(i);
            data.extend(
                m.as_slice()[r.start * m.cols()..r.end * m.cols()]
                    .iter()
                    .map(|v| v * self.rescale),
            );
        }
        DenseMatrix::from_vec(rows, m.cols(), data)
    }

    /// Materialized `S = Ω̃ Π` (test scale only).
    pub fn sketch_matrix(&self, proj: &Projection) -> Result<DenseMatrix> {
        let partition = Partition::balanced(proj.dim(), self.k)?;
        self.stack(&proj.materialize(), &partition)
    }
}

/// `q` i.i.d. uniform block indices in `0..k`, reproducible from `seed`.
pub fn sample_plan(k: usize, q: usize, seed: u64) -> Result<SamplingPlan> {
    SamplingPlan::with_replacement(k, q, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// `q` distinct values from `0..n` in draw order (partial Fisher–Yates).
pub fn sample_distinct<R: Rng + ?Sized>(n: usize, q: usize, rng: &mut R) -> Vec<usize> {
    let q = q.min(n);
    let mut pool: Vec<usize> = (0..n).collect();
    for i in 0..q {
        let j = rng.random_range(i..n);
        pool.swap(i, j);
    }
    pool.truncate(q);
    pool
}

/// Stream of per-epoch plans from one seeded generator.
#[derive(Clone, Debug)]
pub struct PlanSampler {
    mode: SamplingMode,
    k: usize,
    q: usize,
    rng: ChaCha8Rng,
}

impl PlanSampler {
    pub fn new(mode: SamplingMode, k: usize, q: usize, seed: u64) -> Result<Self> {
        match mode {
            SamplingMode::WithReplacement if k == 0 || q == 0 => {
                return Err(Error::InvalidArgument(format!("need K, q ≥ 1 (K={k}, q={q})")))
            }
            SamplingMode::WithoutReplacement if q == 0 || q > k => {
                return Err(Error::InvalidArgument(format!("need 1 ≤ q ≤ K (K={k}, q={q})")))
            }
            SamplingMode::Full if k == 0 => {
                return Err(Error::InvalidArgument("need K ≥ 1".into()))
            }
            _ => {}
        }
        let q = if mode == SamplingMode::Full { k } else { q };
        Ok(Self {
            mode,
            k,
            q,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn next_plan(&mut self) -> SamplingPlan {
        match self.mode {
            SamplingMode::WithReplacement => SamplingPlan::with_replacement(self.k, self.q, &mut self.rng),
            SamplingMode::WithoutReplacement => {
                SamplingPlan::without_replacement(self.k, self.q, &mut self.rng)
            }
            SamplingMode::Full => Ok(SamplingPlan::full(self.k)),
        }
        .expect("parameters validated at construction")
    }
}
