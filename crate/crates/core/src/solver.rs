//! Least squares by exact solve, steepest descent and iterative sketching.

use std::io::Write;

use crate::error::{mismatch, Error, Result};
use crate::linalg::{axpy, dot, norm, spectral_norm, sub_vec, DenseMatrix, Partition, Qr};
use crate::sketching::{sketch_pair, PlanSampler, Projection, SamplingMode, SamplingPlan};

/// Residuals and errors are clamped here once an iterate blows up.
pub const TRACE_CAP: f64 = 1e300;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StepPolicy {
    Fixed(f64),
    /// `base · factor`; with `factor = K/q` the sketched iterates are
    /// unbiased for the full-gradient ones.
    ScaledFixed { base: f64, factor: f64 },
    /// Exact line search of `‖Ax − b‖²` along the received gradient.
    Adaptive,
}

impl StepPolicy {
    pub fn unbiased(base: f64, k: usize, q: usize) -> Self {
        Self::ScaledFixed {
            base,
            factor: k as f64 / q as f64,
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            Self::Fixed(xi) => xi > 0.0 && xi.is_finite(),
            Self::ScaledFixed { base, factor } => {
                base > 0.0 && factor > 0.0 && (base * factor).is_finite()
            }
            Self::Adaptive => true,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("invalid step policy {self:?}")))
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IterRecord {
    pub t: usize,
    pub step_size: f64,
    /// `‖A x_t − b‖₂` after the update.
    pub residual: f64,
    /// `log₁₀(‖x* − x_t‖₂ / √N)` with the logical `N`.
    pub log_err: f64,
    pub grad_norm: f64,
    pub blocks: Vec<usize>,
    pub x: Vec<f64>,
    /// The gradient used for the update (raw aggregate for sketched runs).
    pub gradient: Vec<f64>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct IterTrace {
    pub records: Vec<IterRecord>,
    /// The iterate left the finite range and the run stopped early.
    pub diverged: bool,
}

impl IterTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn residuals(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.residual).collect()
    }

    pub fn final_log_err(&self) -> Option<f64> {
        self.records.last().map(|r| r.log_err)
    }

    pub fn final_x(&self) -> Option<&[f64]> {
        self.records.last().map(|r| r.x.as_slice())
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "t,step_size,residual,log_err,grad_norm,blocks")?;
        for r in &self.records {
            let blocks = r
                .blocks
                .iter()
                .map(|b| b.to_string())
                .collect::<Vec<_>>()
                .join(";");
            writeln!(
                w,
                "{},{},{},{},{},{}",
                r.t, r.step_size, r.residual, r.log_err, r.grad_norm, blocks
            )?;
        }
        Ok(())
    }
}

pub fn exact_lsq(a: &DenseMatrix, b: &[f64]) -> Result<Vec<f64>> {
    Qr::new(a)?.solve_least_squares(b)
}

/// `2 Aᵀ(Ax − b)`.
pub fn gradient(a: &DenseMatrix, b: &[f64], x: &[f64]) -> Result<Vec<f64>> {
    if b.len() != a.rows() {
        return Err(mismatch(format!("rhs of length {}", a.rows()), b.len()));
    }
    let r = sub_vec(&a.matvec(x)?, b);
    let mut g = a.tr_matvec(&r)?;
    g.iter_mut().for_each(|v| *v *= 2.0);
    Ok(g)
}

/// `⟨Ag, Ax − b⟩ / ‖Ag‖²`.
pub fn optimal_step(a: &DenseMatrix, b: &[f64], x: &[f64], g: &[f64]) -> Result<f64> {
    if b.len() != a.rows() {
        return Err(mismatch(format!("rhs of length {}", a.rows()), b.len()));
    }
    let ag = a.matvec(g)?;
    let den = dot(&ag, &ag);
    if !(den > 0.0) {
        return Err(Error::StationaryDirection);
    }
    let r = sub_vec(&a.matvec(x)?, b);
    Ok(dot(&ag, &r) / den)
}

/// `1/σ_max(A)²`: the largest fixed step with guaranteed descent for the
/// gradient `2Aᵀ(Ax − b)`.
pub fn descent_step_bound(a: &DenseMatrix) -> f64 {
    let s = spectral_norm(a, 1e-12);
    1.0 / (s * s)
}

/// A least-squares instance with the caches every run needs.
#[derive(Clone, Debug)]
pub struct Problem {
    a: DenseMatrix,
    b: Vec<f64>,
    ata: DenseMatrix,
    atb: Vec<f64>,
    x_star: Vec<f64>,
    logical_n: usize,
}

impl Problem {
    pub fn new(a: DenseMatrix, b: Vec<f64>) -> Result<Self> {
        if b.len() != a.rows() {
            return Err(mismatch(format!("rhs of length {}", a.rows()), b.len()));
        }
        let x_star = exact_lsq(&a, &b)?;
        let ata = a.gram();
        let atb = a.tr_matvec(&b)?;
        let logical_n = a.rows();
        Ok(Self {
            a,
            b,
            ata,
            atb,
            x_star,
            logical_n,
        })
    }

    /// Sets the `N` used by the error metric (rows before zero padding).
    pub fn with_logical_n(mut self, n: usize) -> Self {
        self.logical_n = n;
        self
    }

    pub fn a(&self) -> &DenseMatrix {
        &self.a
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn n(&self) -> usize {
        self.a.rows()
    }

    pub fn d(&self) -> usize {
        self.a.cols()
    }

    pub fn logical_n(&self) -> usize {
        self.logical_n
    }

    pub fn x_star(&self) -> &[f64] {
        &self.x_star
    }

    pub fn residual(&self, x: &[f64]) -> f64 {
        norm(&sub_vec(&self.a.matvec(x).expect("d entries"), &self.b))
    }

    pub fn log_err(&self, x: &[f64]) -> f64 {
        (norm(&sub_vec(&self.x_star, x)) / (self.logical_n as f64).sqrt()).log10()
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        gradient(&self.a, &self.b, x).expect("shapes fixed at construction")
    }

    /// [`optimal_step`] from the cached `AᵀA` and `Aᵀb`.
    pub fn optimal_step(&self, x: &[f64], g: &[f64]) -> Result<f64> {
        if x.len() != self.d() || g.len() != self.d() {
            return Err(mismatch(format!("vectors of length {}", self.d()), g.len()));
        }
        let atag = self.ata.matvec(g)?;
        let den = dot(g, &atag);
        if !(den > 0.0) {
            return Err(Error::StationaryDirection);
        }
        let half_grad = sub_vec(&self.ata.matvec(x)?, &self.atb);
        Ok(dot(g, &half_grad) / den)
    }

    fn step_size(&self, policy: StepPolicy, x: &[f64], g: &[f64]) -> f64 {
        match policy {
            StepPolicy::Fixed(xi) => xi,
            StepPolicy::ScaledFixed { base, factor } => base * factor,
            // a zero direction leaves the iterate unchanged whatever the step
            StepPolicy::Adaptive => self.optimal_step(x, g).unwrap_or(0.0),
        }
    }

    fn record(&self, t: usize, step: f64, x: &[f64], g: Vec<f64>, blocks: Vec<usize>) -> IterRecord {
        let cap = |v: f64| if v.is_nan() { TRACE_CAP } else { v.clamp(-TRACE_CAP, TRACE_CAP) };
        IterRecord {
            t,
            step_size: step,
            residual: cap(self.residual(x)),
            log_err: cap(self.log_err(x)),
            grad_norm: cap(norm(&g)),
            blocks,
            x: x.to_vec(),
            gradient: g,
        }
    }

    /// Full-gradient steepest descent for `iters` steps.
    pub fn run_sd(&self, x0: &[f64], policy: StepPolicy, iters: usize) -> Result<IterTrace> {
        self.run_with(x0, policy, iters, |x, _| Ok((self.gradient(x), Vec::new())))
    }

    /// Algorithm loop shared by every driver: `direction` returns the
    /// gradient to follow at `x` for epoch `t` and the blocks it used.
    pub fn run_with<F>(
        &self,
        x0: &[f64],
        policy: StepPolicy,
        iters: usize,
        mut direction: F,
    ) -> Result<IterTrace>
    where
        F: FnMut(&[f64], usize) -> Result<(Vec<f64>, Vec<usize>)>,
    {
        if x0.len() != self.d() {
            return Err(mismatch(format!("x0 of length {}", self.d()), x0.len()));
        }
        if iters == 0 {
            return Err(Error::InvalidArgument("need at least one iteration".into()));
        }
        policy.validate()?;
        let mut x = x0.to_vec();
        let mut trace = IterTrace::default();
        for t in 1..=iters {
            let (g, blocks) = direction(&x, t)?;
            let step = self.step_size(policy, &x, &g);
            axpy(-step, &g, &mut x);
            let finite = x.iter().all(|v| v.is_finite());
            trace.records.push(self.record(t, step, &x, g, blocks));
            if !finite {
                trace.diverged = true;
                break;
            }
        }
        Ok(trace)
    }

    /// `(ΠA, Πb)` split into `k` balanced row blocks.
    pub fn encode(&self, proj: &Projection, k: usize) -> Result<EncodedSystem> {
        EncodedSystem::new(proj.apply(&self.a)?, proj.apply_vec(&self.b)?, k)
    }

    /// Iterative sketching: a fresh plan per epoch, steps along the raw
    /// aggregate `2 Σ_{j∈plan} (ΠA)_jᵀ((ΠA)_j x − (Πb)_j)`.
    pub fn run_iterative_sketch(
        &self,
        x0: &[f64],
        proj: &Projection,
        cfg: &SketchConfig,
        policy: StepPolicy,
        iters: usize,
    ) -> Result<IterTrace> {
        let enc = self.encode(proj, cfg.k)?;
        let mut sampler = PlanSampler::new(cfg.mode, cfg.k, cfg.q, cfg.seed)?;
        self.run_with(x0, policy, iters, |x, _| {
            let plan = sampler.next_plan();
            let g = enc.gradient(&plan, x)?;
            Ok((g, plan.indices().to_vec()))
        })
    }
}

/// Block count, sample count and plan stream of an iterative-sketch run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SketchConfig {
    pub k: usize,
    pub q: usize,
    pub mode: SamplingMode,
    pub seed: u64,
}

impl SketchConfig {
    pub fn new(k: usize, q: usize, seed: u64) -> Self {
        Self {
            k,
            q,
            mode: SamplingMode::WithReplacement,
            seed,
        }
    }

    pub fn with_mode(mut self, mode: SamplingMode) -> Self {
        self.mode = mode;
        self
    }
}

/// `2 Aᵢᵀ(Aᵢ x − bᵢ)` for one block.
pub fn partial_gradient(a: &DenseMatrix, b: &[f64], x: &[f64]) -> Result<Vec<f64>> {
    gradient(a, b, x)
}

/// A transformed system `(ΠA, Πb)` cut into row blocks.
#[derive(Clone, Debug)]
pub struct EncodedSystem {
    blocks: Vec<(DenseMatrix, Vec<f64>)>,
    partition: Partition,
}

impl EncodedSystem {
    pub fn new(pa: DenseMatrix, pb: Vec<f64>, k: usize) -> Result<Self> {
        if pb.len() != pa.rows() {
            return Err(mismatch(format!("rhs of length {}", pa.rows()), pb.len()));
        }
        let partition = Partition::balanced(pa.rows(), k)?;
        let blocks = partition
            .blocks()
            .iter()
            .map(|r| (pa.row_block(r.clone()), pb[r.clone()].to_vec()))
            .collect();
        Ok(Self { blocks, partition })
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn block(&self, i: usize) -> (&DenseMatrix, &[f64]) {
        let (a, b) = &self.blocks[i];
        (a, b)
    }

    pub fn into_blocks(self) -> Vec<(DenseMatrix, Vec<f64>)> {
        self.blocks
    }

    pub fn partial_gradient(&self, i: usize, x: &[f64]) -> Result<Vec<f64>> {
        let (a, b) = self.block(i);
        partial_gradient(a, b, x)
    }

    /// Raw aggregate over the plan's blocks (with multiplicity), summed in
    /// ascending block order.
    pub fn gradient(&self, plan: &SamplingPlan, x: &[f64]) -> Result<Vec<f64>> {
        if plan.k() != self.num_blocks() {
            return Err(mismatch(format!("{} blocks", self.num_blocks()), plan.k()));
        }
        let mut order = plan.indices().to_vec();
        order.sort_unstable();
        let mut g = vec![0.0; x.len()];
        for i in order {
            let p = self.partial_gradient(i, x)?;
            axpy(1.0, &p, &mut g);
        }
        Ok(g)
    }

    /// `(K/q) ·` [`Self::gradient`], i.e. `2 AᵀSᵀS(Ax − b)`.
    pub fn rescaled_gradient(&self, plan: &SamplingPlan, x: &[f64]) -> Result<Vec<f64>> {
        let mut g = self.gradient(plan, x)?;
        let s = plan.rescale() * plan.rescale();
        g.iter_mut().for_each(|v| *v *= s);
        Ok(g)
    }
}

pub fn run_sd(
    a: &DenseMatrix,
    b: &[f64],
    x0: &[f64],
    policy: StepPolicy,
    iters: usize,
) -> Result<IterTrace> {
    Problem::new(a.clone(), b.to_vec())?.run_sd(x0, policy, iters)
}

#[allow(clippy::too_many_arguments)]
pub fn run_iterative_sketch(
    a: &DenseMatrix,
    b: &[f64],
    x0: &[f64],
    proj: &Projection,
    k: usize,
    q: usize,
    policy: StepPolicy,
    iters: usize,
    seed: u64,
) -> Result<IterTrace> {
    Problem::new(a.clone(), b.to_vec())?.run_iterative_sketch(
        x0,
        proj,
        &SketchConfig::new(k, q, seed),
        policy,
        iters,
    )
}

/// One-shot solve of the sketched system `min ‖S(Ax − b)‖`.
pub fn sketch_and_solve(
    a: &DenseMatrix,
    b: &[f64],
    proj: &Projection,
    plan: &SamplingPlan,
) -> Result<Vec<f64>> {
    let (sa, sb) = sketch_pair(proj, plan, a, b)?;
    exact_lsq(&sa, &sb)
}
