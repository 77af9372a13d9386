use crate::error::{mismatch, Error, Result};
use crate::linalg::{symmetric_spectral_norm, thin_basis, DenseMatrix, Partition};
use crate::sketching::{Projection, SamplingPlan};

const ORTHONORMAL_TOL: f64 = 1e-8;

fn check_orthonormal(u: &DenseMatrix) -> Result<()> {
    let defect = u.orthonormality_defect();
    if defect > ORTHONORMAL_TOL {
        return Err(Error::NotOrthonormal(defect));
    }
    Ok(())
}

/// Squared row norms of an orthonormal `u`.
pub fn leverage_scores(u: &DenseMatrix) -> Result<Vec<f64>> {
    check_orthonormal(u)?;
    Ok((0..u.rows())
        .map(|i| u.row(i).iter().map(|v| v * v).sum())
        .collect())
}

/// Squared Frobenius norms of the row blocks of `u`.
pub fn block_leverage_scores(u: &DenseMatrix, partition: &Partition) -> Result<Vec<f64>> {
    if partition.n() != u.rows() {
        return Err(mismatch(format!("{} rows", partition.n()), u.rows()));
    }
    let scores = leverage_scores(u)?;
    Ok(partition
        .blocks()
        .iter()
        .map(|r| scores[r.clone()].iter().sum())
        .collect())
}

/// Block scores divided by `d`, so they sum to one.
pub fn normalized_block_scores(u: &DenseMatrix, partition: &Partition) -> Result<Vec<f64>> {
    let d = u.cols() as f64;
    Ok(block_leverage_scores(u, partition)?
        .into_iter()
        .map(|s| s / d)
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FlatteningReport {
    pub min: f64,
    pub max: f64,
    /// `max / min`; infinite when some block carries no leverage.
    pub ratio: f64,
    /// `max_ι |ℓ̀_ι − 1/K|`.
    pub max_deviation: f64,
}

impl FlatteningReport {
    pub fn from_scores(normalized: &[f64]) -> Self {
        let k = normalized.len() as f64;
        let min = normalized.iter().copied().fold(f64::INFINITY, f64::min);
        let max = normalized.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let max_deviation = normalized
            .iter()
            .map(|s| (s - 1.0 / k).abs())
            .fold(0.0, f64::max);
        let ratio = if min > 0.0 { max / min } else { f64::INFINITY };
        Self {
            min,
            max,
            ratio,
            max_deviation,
        }
    }
}

/// Normalized block scores of `Π a`'s column space.
pub fn flattening_report(
    a: &DenseMatrix,
    proj: &Projection,
    partition: &Partition,
) -> Result<FlatteningReport> {
    let u = thin_basis(&proj.apply(a)?)?;
    Ok(FlatteningReport::from_scores(&normalized_block_scores(&u, partition)?))
}

/// `‖I_d − (SU)ᵀ(SU)‖₂` for `S = Ω̃ Π`.
pub fn embedding_error(u: &DenseMatrix, proj: &Projection, plan: &SamplingPlan) -> Result<f64> {
    check_orthonormal(u)?;
    let partition = Partition::balanced(u.rows(), plan.k())?;
    embedding_error_projected(&proj.apply(u)?, &partition, plan)
}

/// As [`embedding_error`] with `ΠU` already computed.
pub fn embedding_error_projected(
    pu: &DenseMatrix,
    partition: &Partition,
    plan: &SamplingPlan,
) -> Result<f64> {
    let su = plan.stack(pu, partition)?;
    let mut m = su.gram().scaled(-1.0);
    for i in 0..m.rows() {
        m[(i, i)] += 1.0;
    }
    symmetric_spectral_norm(&m)
}
