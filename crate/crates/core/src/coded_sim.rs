//! Simulated central server with `m` workers holding encoded blocks.
//!
//! Workers only ever see `(ΠA)ᵢ, (Πb)ᵢ`; the server keeps the plaintext
//! problem for step sizes and metrics.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{mismatch, Error, Result};
use crate::linalg::{
    axpy, norm, pseudo_inverse, sub_vec, symmetric_spectral_norm, thin_basis, DenseMatrix,
};
use crate::sketching::{embedding_error, sample_distinct, Projection, ProjectionKind, SamplingPlan};
use crate::solver::{partial_gradient, IterTrace, Problem, StepPolicy};

#[derive(Clone, Debug)]
struct Worker {
    blocks: Vec<usize>,
    data: Vec<(DenseMatrix, Vec<f64>)>,
}

#[derive(Clone, Debug)]
pub struct Network {
    k: usize,
    replication: usize,
    kind: ProjectionKind,
    workers: Vec<Worker>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RoundOutcome {
    /// Responsive worker ids in arrival order.
    pub responsive: Vec<usize>,
    /// `(worker id, 2 Σ Ãⱼᵀ(Ãⱼx − b̃ⱼ))` over the blocks each worker
    /// contributed, in worker-id order.
    pub partial_gradients: Vec<(usize, Vec<f64>)>,
    /// Blocks that entered the aggregate.
    pub blocks: Vec<usize>,
    /// Sum of the partial gradients (no `K/q` rescale).
    pub aggregated: Vec<f64>,
}

/// Block ids held by each worker under cyclic repetition for `s`
/// stragglers: blocks are grouped into `m` contiguous superblocks and worker
/// `w` holds superblocks `w, w+1, …, w+s (mod m)`.
pub fn replicated_assignment(k: usize, m: usize, s: usize) -> Result<Vec<Vec<usize>>> {
    if m == 0 || k == 0 {
        return Err(Error::InvalidArgument("need K, m ≥ 1".into()));
    }
    if s == 0 {
        if m != k {
            return Err(Error::InvalidArgument(format!(
                "without replication m must equal K (K={k}, m={m})"
            )));
        }
        return Ok((0..k).map(|i| vec![i]).collect());
    }
    if s >= m {
        return Err(Error::InvalidArgument(format!("s={s} stragglers need m > s (m={m})")));
    }
    if !k.is_multiple_of(m) {
        return Err(Error::InvalidArgument(format!("replication needs m | K (K={k}, m={m})")));
    }
    let width = k / m;
    Ok((0..m)
        .map(|w| {
            let mut blocks: Vec<usize> = (0..=s)
                .flat_map(|j| {
                    let sb = (w + j) % m;
                    sb * width..(sb + 1) * width
                })
                .collect();
            blocks.sort_unstable();
            blocks
        })
        .collect())
}

pub fn build_network(
    a: &DenseMatrix,
    b: &[f64],
    proj: &Projection,
    k: usize,
    m: usize,
    replication_s: usize,
) -> Result<Network> {
    if b.len() != a.rows() {
        return Err(mismatch(format!("rhs of length {}", a.rows()), b.len()));
    }
    let assignment = replicated_assignment(k, m, replication_s)?;
    let enc = crate::solver::EncodedSystem::new(proj.apply(a)?, proj.apply_vec(b)?, k)?;
    let workers = assignment
        .into_iter()
        .map(|blocks| {
            let data = blocks
                .iter()
                .map(|&i| {
                    let (ab, bb) = enc.block(i);
                    (ab.clone(), bb.to_vec())
                })
                .collect();
            Worker { blocks, data }
        })
        .collect();
    Ok(Network {
        k,
        replication: replication_s,
        kind: proj.kind(),
        workers,
    })
}

#[derive(Serialize)]
struct AssignmentLine<'a> {
    worker_id: usize,
    block_ids: &'a [usize],
}

impl Network {
    pub fn num_workers(&self) -> usize {
        self.workers.len()
    }

    pub fn num_blocks(&self) -> usize {
        self.k
    }

    pub fn replication(&self) -> usize {
        self.replication
    }

    pub fn projection_kind(&self) -> ProjectionKind {
        self.kind
    }

    pub fn assignment(&self, worker: usize) -> &[usize] {
        &self.workers[worker].blocks
    }

    /// Encoded pairs held by a worker, in the order of [`Self::assignment`].
    pub fn encoded_blocks(&self, worker: usize) -> &[(DenseMatrix, Vec<f64>)] {
        &self.workers[worker].data
    }

    /// One JSON object per line: `{"worker_id":…,"block_ids":[…]}`.
    pub fn write_assignments<W: Write>(&self, mut w: W) -> Result<()> {
        for (id, worker) in self.workers.iter().enumerate() {
            let line = serde_json::to_string(&AssignmentLine {
                worker_id: id,
                block_ids: &worker.blocks,
            })
            .map_err(|e| Error::Format(e.to_string()))?;
            writeln!(w, "{line}")?;
        }
        Ok(())
    }

    /// Aggregates the responses of `responsive` at `x`.
    ///
    /// Without replication every responder contributes its block. With
    /// replication each block is taken once, from its lowest-id responder.
    pub fn aggregate(&self, responsive: Vec<usize>, x: &[f64]) -> Result<RoundOutcome> {
        let mut ids = responsive.clone();
        ids.sort_unstable();
        ids.dedup();
        if let Some(&bad) = ids.iter().find(|&&w| w >= self.workers.len()) {
            return Err(Error::InvalidArgument(format!("no worker {bad}")));
        }
        let mut taken = vec![false; self.k];
        let mut partial_gradients = Vec::with_capacity(ids.len());
        let mut blocks = Vec::new();
        let mut aggregated = vec![0.0; x.len()];
        for &w in &ids {
            let worker = &self.workers[w];
            let mut g = vec![0.0; x.len()];
            let mut used = false;
            for (&blk, (ab, bb)) in worker.blocks.iter().zip(&worker.data) {
                if taken[blk] {
                    continue;
                }
                taken[blk] = true;
                used = true;
                blocks.push(blk);
                axpy(1.0, &partial_gradient(ab, bb, x)?, &mut g);
            }
            if used {
                axpy(1.0, &g, &mut aggregated);
                partial_gradients.push((w, g));
            }
        }
        Ok(RoundOutcome {
            responsive,
            partial_gradients,
            blocks,
            aggregated,
        })
    }

    /// One round with a uniformly random set of `q` responsive workers.
    pub fn simulate_round<R: Rng + ?Sized>(&self, x: &[f64], q: usize, rng: &mut R) -> Result<RoundOutcome> {
        let m = self.workers.len();
        if q == 0 || q > m {
            return Err(Error::InvalidArgument(format!("need 1 ≤ q ≤ m (m={m}, q={q})")));
        }
        self.aggregate(sample_distinct(m, q, rng), x)
    }
}

pub fn simulate_round(net: &Network, x: &[f64], q: usize, seed: u64) -> Result<RoundOutcome> {
    net.simulate_round(x, q, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// Runs the distributed protocol; `server` holds the plaintext problem used
/// for step sizes and trace metrics.
pub fn run_protocol(
    net: &Network,
    server: &Problem,
    x0: &[f64],
    q: usize,
    policy: StepPolicy,
    iters: usize,
    seed: u64,
) -> Result<IterTrace> {
    let m = net.num_workers();
    if q == 0 || q > m {
        return Err(Error::InvalidArgument(format!("need 1 ≤ q ≤ m (m={m}, q={q})")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    server.run_with(x0, policy, iters, |x, _| {
        let round = net.simulate_round(x, q, &mut rng)?;
        let blocks = if net.replication() == 0 {
            round.responsive.iter().map(|&w| net.assignment(w)[0]).collect()
        } else {
            round.blocks
        };
        Ok((round.aggregated, blocks))
    })
}

/// `‖I_K − G†G‖₂` for the `q × K` rows of the responsive workers.
pub fn gc_decoding_error(g: &DenseMatrix) -> Result<f64> {
    if g.rows() == 0 || g.cols() == 0 {
        return Err(Error::InvalidArgument("empty encoding matrix".into()));
    }
    let mut m = pseudo_inverse(g)?.matmul(g)?.scaled(-1.0);
    for i in 0..m.rows() {
        m[(i, i)] += 1.0;
    }
    symmetric_spectral_norm(&m)
}

/// `a* = 1⃗ G†`, the least-squares decoding vector.
pub fn optimal_decoding_vector(g: &DenseMatrix) -> Result<Vec<f64>> {
    let pinv = pseudo_inverse(g)?;
    pinv.tr_matvec(&vec![1.0; g.cols()])
}

/// `ε̂` of `S = Ω̃Π` on `span[A | b]`, which holds every residual `Ax − b`.
/// Falls back to `span A` when `b` lies in it.
pub fn residual_embedding_error(
    a: &DenseMatrix,
    b: &[f64],
    proj: &Projection,
    plan: &SamplingPlan,
) -> Result<f64> {
    if b.len() != a.rows() {
        return Err(mismatch(format!("rhs of length {}", a.rows()), b.len()));
    }
    let d = a.cols();
    let aug = DenseMatrix::from_fn(a.rows(), d + 1, |i, j| if j < d { a[(i, j)] } else { b[i] });
    let u = match thin_basis(&aug) {
        Ok(u) => u,
        Err(Error::RankDeficient) => thin_basis(a)?,
        Err(e) => return Err(e),
    };
    embedding_error(&u, proj, plan)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundCheck {
    pub holds: bool,
    /// `‖g − ĝ‖₂`.
    pub lhs: f64,
    /// `2 ε̂ ‖A‖₂ ‖Ax − b‖₂`.
    pub rhs: f64,
    pub slack: f64,
}

/// Checks `‖g − ĝ‖₂ ≤ 2 ε̂ ‖A‖₂ ‖Ax − b‖₂` with `ĝ = 2AᵀSᵀS(Ax − b)`.
pub fn verify_gradient_bound(
    g: &[f64],
    g_hat: &[f64],
    eps_hat: f64,
    a_norm: f64,
    residual: f64,
) -> BoundCheck {
    let lhs = norm(&sub_vec(g, g_hat));
    let rhs = 2.0 * eps_hat * a_norm * residual;
    // rounding floor: both gradients are sums of terms of size ‖A‖‖r‖
    let floor = 1e-10 * (norm(g) + norm(g_hat) + a_norm * residual);
    BoundCheck {
        holds: lhs <= rhs + floor,
        lhs,
        rhs,
        slack: rhs - lhs,
    }
}
