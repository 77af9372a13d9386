use std::io::Write;
use std::path::Path;

use sketchgc::linalg::Partition;
use sketchgc::security::{
    distinguisher_success_rate, ensemble_size, hadamard2, indistinguishability_test,
    keyed_permutation, signed_permutations, srht_counterexample, zero_count, Family,
    PermutationKey,
};
use sketchgc::sketching::{flattening_report, make_projection, FlatteningReport, ProjectionKind};
use sketchgc::DenseMatrix;

use crate::config::ExperimentConfig;
use crate::data::generate;
use crate::error::Result;
use crate::output::write_with;

#[derive(Clone, Debug, PartialEq)]
pub struct FlattenRow {
    pub kind: ProjectionKind,
    pub seed: u64,
    pub padded_n: usize,
    pub report: FlatteningReport,
}

/// Block-score flattening of every configured transform, plus the
/// untransformed data, for each seed.
pub fn flatten(cfg: &ExperimentConfig) -> Result<Vec<FlattenRow>> {
    cfg.validate()?;
    let mut kinds = vec![ProjectionKind::Identity];
    for k in cfg.methods.iter().filter_map(|m| m.kind()) {
        if !kinds.contains(&k) {
            kinds.push(k);
        }
    }
    let mut rows = Vec::new();
    for &seed in &cfg.seeds {
        let (a, _) = generate(&cfg.data, cfg.n, cfg.d, seed)?;
        for &kind in &kinds {
            let n = kind.padded_dim(cfg.n);
            let proj = make_projection(kind, n, seed)?;
            let part = Partition::balanced(n, cfg.k)?;
            let report = flattening_report(&a.pad_rows(n), &proj, &part)?;
            rows.push(FlattenRow {
                kind,
                seed,
                padded_n: n,
                report,
            });
        }
    }
    Ok(rows)
}

pub fn write_flatten(rows: &[FlattenRow], logical_n: usize, path: &Path) -> Result<()> {
    write_with(path, |w| {
        writeln!(w, "kind,seed,logical_n,padded_n,min,max,ratio,max_deviation")?;
        for r in rows {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{}",
                r.kind,
                r.seed,
                logical_n,
                r.padded_n,
                r.report.min,
                r.report.max,
                r.report.ratio,
                r.report.max_deviation
            )?;
        }
        Ok(())
    })
}

/// `(demo, family, n, param, value)` rows.
pub type DemoRow = (String, String, usize, String, f64);

fn family_name(f: Family) -> &'static str {
    match f {
        Family::BlockSrht => "block-srht",
        Family::GarbledBlockSrht => "garbled-block-srht",
        Family::Rademacher => "rademacher",
        Family::SignedPermutation => "signed-permutation",
    }
}

/// Counterexample, exhaustive group check, distinguisher rates and
/// permutation avalanche.
pub fn security_demo(seed: u64, trials: usize) -> Result<Vec<DemoRow>> {
    let mut rows: Vec<DemoRow> = Vec::new();
    let mut push = |demo: &str, fam: &str, n: usize, param: String, v: f64| {
        rows.push((demo.into(), fam.into(), n, param, v));
    };
    for d1 in [1.0, -1.0] {
        for d2 in [1.0, -1.0] {
            let ce = srht_counterexample(d1, d2)?;
            let key = format!("d=({d1};{d2})");
            push("counterexample", "block-srht", 2, format!("{key} zeros_c0"), zero_count(&ce.c0) as f64);
            push("counterexample", "block-srht", 2, format!("{key} zeros_c1"), zero_count(&ce.c1) as f64);
            push("counterexample", "block-srht", 2, format!("{key} distinguished"), f64::from(u8::from(ce.distinguished())));
        }
    }
    for n in 1..=3 {
        let id = DenseMatrix::identity(n);
        let other = signed_permutations(n).pop().expect("group is non-empty");
        let tv = indistinguishability_test(Family::SignedPermutation, n, (&id, &other), 0, seed)?;
        let rate = distinguisher_success_rate(Family::SignedPermutation, n, (&id, &other), 0, seed)?;
        push("group", "signed-permutation", n, "total_variation".into(), tv);
        push("group", "signed-permutation", n, "success_rate".into(), rate);
    }
    let i2 = DenseMatrix::identity(2);
    let h2 = hadamard2();
    for fam in [Family::BlockSrht, Family::GarbledBlockSrht, Family::Rademacher] {
        let rate = distinguisher_success_rate(fam, 2, (&i2, &h2), trials, seed)?;
        push("distinguisher", family_name(fam), 2, "success_rate".into(), rate);
    }
    let n = 256;
    let mut moved = 0.0;
    for t in 0..100u64 {
        let key = PermutationKey::derive(seed.wrapping_add(t));
        let a = keyed_permutation(&key, n);
        let b = keyed_permutation(&key.with_bit_flipped(t as usize), n);
        moved += a.iter().zip(&b).filter(|(x, y)| x != y).count() as f64 / n as f64;
    }
    push("avalanche", "keyed-permutation", n, "mean_moved_fraction".into(), moved / 100.0);
    Ok(rows)
}

pub fn ensemble(ns: &[usize]) -> Vec<DemoRow> {
    let fams = [
        Family::BlockSrht,
        Family::GarbledBlockSrht,
        Family::Rademacher,
        Family::SignedPermutation,
    ];
    ns.iter()
        .flat_map(|&n| {
            fams.iter().map(move |&f| {
                let e = ensemble_size(f, n);
                ("ensemble".to_string(), family_name(f).to_string(), n, "log2_cardinality".to_string(), e.log2_cardinality)
            })
        })
        .collect()
}

pub fn write_demo(rows: &[DemoRow], path: &Path) -> Result<()> {
    write_with(path, |w| {
        writeln!(w, "demo,family,n,param,value")?;
        for (demo, fam, n, param, v) in rows {
            writeln!(w, "{demo},{fam},{n},{param},{v}")?;
        }
        Ok(())
    })
}
