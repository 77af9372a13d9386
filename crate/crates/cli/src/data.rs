use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, StandardNormal, StudentT};
use sketchgc::linalg::io::{read_csv, write_csv};
use sketchgc::DenseMatrix;

use crate::config::{DataModel, ExperimentConfig};
use crate::error::{CliError, Result};
use crate::output::write_with;

/// `A` from the model, `b = A x̄ + ε` with `x̄, ε` standard normal.
///
/// The `t` model draws Student-t entries and additionally divides each row
/// by `√(χ²_ν/ν)`, so row norms are heavy-tailed as well as entries; this is
/// what makes block leverage scores clearly non-uniform at τ = 20.
pub fn generate(model: &DataModel, n: usize, d: usize, seed: u64) -> Result<(DenseMatrix, Vec<f64>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = match model {
        DataModel::Gaussian => DenseMatrix::gaussian(n, d, &mut rng),
        DataModel::T { dof } => {
            let t = StudentT::new(*dof).map_err(|e| CliError::config(e.to_string()))?;
            let chi = ChiSquared::new(*dof).map_err(|e| CliError::config(e.to_string()))?;
            let mut a = DenseMatrix::from_fn(n, d, |_, _| rng.sample(t));
            for i in 0..n {
                let w = (rng.sample(chi) / dof).sqrt().max(f64::MIN_POSITIVE);
                a.row_mut(i).iter_mut().for_each(|v| *v /= w);
            }
            a
        }
        DataModel::File { a, b } => return load(a, b, n, d),
    };
    let x_bar: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
    let mut b = a.matvec(&x_bar)?;
    b.iter_mut().for_each(|v| *v += rng.sample::<f64, _>(StandardNormal));
    Ok((a, b))
}

fn read(path: &Path) -> Result<DenseMatrix> {
    let f = File::open(path).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
    read_csv(BufReader::new(f)).map_err(|e| CliError::config(format!("{}: {e}", path.display())))
}

fn load(a: &Path, b: &Path, n: usize, d: usize) -> Result<(DenseMatrix, Vec<f64>)> {
    let am = read(a)?;
    let bm = read(b)?;
    if am.shape() != (n, d) {
        return Err(CliError::config(format!(
            "{}: expected {n}×{d}, found {:?}",
            a.display(),
            am.shape()
        )));
    }
    if bm.shape() != (n, 1) {
        return Err(CliError::config(format!(
            "{}: expected {n}×1, found {:?}",
            b.display(),
            bm.shape()
        )));
    }
    Ok((am, bm.into_vec()))
}

/// Writes `A.seed<s>.csv` and `b.seed<s>.csv` under `dir` for every seed.
pub fn gen_data(cfg: &ExperimentConfig, dir: &Path) -> Result<Vec<std::path::PathBuf>> {
    let mut written = Vec::new();
    for &seed in &cfg.seeds {
        let (a, b) = generate(&cfg.data, cfg.n, cfg.d, seed)?;
        let pa = dir.join(format!("A.seed{seed}.csv"));
        let pb = dir.join(format!("b.seed{seed}.csv"));
        write_with(&pa, |w| write_csv(&a, w).map_err(std::io::Error::other))?;
        write_with(&pb, |w| write_csv(&DenseMatrix::column(&b), w).map_err(std::io::Error::other))?;
        written.extend([pa, pb]);
    }
    Ok(written)
}
