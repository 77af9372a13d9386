//! Projection families, per-epoch block sampling, leverage scores and
//! subspace-embedding diagnostics.

mod leverage;
mod plan;
mod projection;

pub use leverage::{
    block_leverage_scores, embedding_error, embedding_error_projected, flattening_report,
    leverage_scores, normalized_block_scores, FlatteningReport,
};
pub use plan::{sample_distinct, sample_plan, PlanSampler, SamplingMode, SamplingPlan};
pub use projection::{make_projection, sign_diagonal, Projection, ProjectionKind};

use crate::error::{mismatch, Result};
use crate::linalg::{DenseMatrix, Partition};

/// `(Ω̃ Π A, Ω̃ Π b)`: the plan's blocks of the transformed system, each
/// scaled by `√(K/q)`. Blocks follow [`Partition::balanced`] over `A`'s rows.
pub fn sketch_pair(
    proj: &Projection,
    plan: &SamplingPlan,
    a: &DenseMatrix,
    b: &[f64],
) -> Result<(DenseMatrix, Vec<f64>)> {
    if b.len() != a.rows() {
        return Err(mismatch(format!("rhs of length {}", a.rows()), b.len()));
    }
    let partition = Partition::balanced(a.rows(), plan.k())?;
    let sa = plan.stack(&proj.apply(a)?, &partition)?;
    let sb = plan
        .stack(&DenseMatrix::column(&proj.apply_vec(b)?), &partition)?
        .into_vec();
    Ok((sa, sb))
}
