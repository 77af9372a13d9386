use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sketchgc::linalg::random_orthonormal;
use sketchgc::sketching::*;
use sketchgc::DenseMatrix;

#[test]
fn sketch_gram_mean_is_identity() {
    let p = make_projection(ProjectionKind::RandomOrthonormal, 32, 1).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let plans = 10_000;
    let mut acc = DenseMatrix::zeros(32, 32);
    // StS only depends on the multiset of blocks, so reuse per multiset is exact
    for _ in 0..plans {
        let plan = SamplingPlan::with_replacement(8, 4, &mut rng).unwrap();
        let s = plan.sketch_matrix(&p).unwrap();
        let sts = s.gram();
        for (a, b) in acc.as_mut_slice().iter_mut().zip(sts.as_slice()) {
            *a += b;
        }
    }
    let dev = acc.scaled(1.0 / plans as f64).max_abs_diff(&DenseMatrix::identity(32));
    assert!(dev < 0.05, "max deviation {dev}");
}

#[test]
fn full_plan_has_zero_embedding_error_for_orthonormal_kinds() {
    let u = random_orthonormal(64, 3).col_block(0..5);
    for kind in [
        ProjectionKind::Identity,
        ProjectionKind::RandomOrthonormal,
        ProjectionKind::BlockSrht,
        ProjectionKind::GarbledBlockSrht,
        ProjectionKind::Kronecker(2),
        ProjectionKind::Kronecker(4),
    ] {
        let p = make_projection(kind, 64, 4).unwrap();
        assert!(embedding_error(&u, &p, &SamplingPlan::full(16)).unwrap() < 1e-9, "{kind}");
    }
}

#[test]
fn gaussian_baseline_is_not_exact_at_full_plan() {
    let u = random_orthonormal(64, 3).col_block(0..5);
    let p = make_projection(ProjectionKind::Gaussian, 64, 4).unwrap();
    assert!(embedding_error(&u, &p, &SamplingPlan::full(16)).unwrap() > 1e-3);
}
