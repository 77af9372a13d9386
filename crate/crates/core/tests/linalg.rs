use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sketchgc::linalg::hadamard::{hadamard_dense, kronecker};
use sketchgc::linalg::{fwht, kron_apply, norm, random_orthonormal};
use sketchgc::DenseMatrix;

#[test]
fn fwht_matches_dense_for_all_small_sizes() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut n = 1;
    while n <= 256 {
        let h = hadamard_dense(n).unwrap();
        let v = DenseMatrix::gaussian(n, 1, &mut rng).into_vec();
        let dense = h.matvec(&v).unwrap();
        let fast = fwht(&v).unwrap();
        for (a, b) in dense.iter().zip(&fast) {
            assert!((a - b).abs() < 1e-12, "n={n}");
        }
        n *= 2;
    }
}

#[test]
fn kron_apply_matches_dense_powers() {
    for k in [2usize, 3, 4] {
        let base = random_orthonormal(k, k as u64);
        let mut dense = base.clone();
        let mut p = 1;
        while dense.rows() * k <= 256 {
            dense = kronecker(&dense, &base);
            p += 1;
            let mut rng = ChaCha8Rng::seed_from_u64(p as u64);
            let m = DenseMatrix::gaussian(dense.rows(), 3, &mut rng);
            let fast = kron_apply(&base, p, &m).unwrap();
            assert!(fast.max_abs_diff(&dense.matmul(&m).unwrap()) < 1e-12, "k={k} p={p}");
        }
    }
}

fn lu_det(m: &DenseMatrix) -> f64 {
    let mut a = m.clone();
    let n = a.rows();
    let mut det = 1.0;
    for c in 0..n {
        let piv = (c..n).max_by(|&i, &j| a[(i, c)].abs().total_cmp(&a[(j, c)].abs())).unwrap();
        if piv != c {
            for j in 0..n {
                let t = a[(c, j)];
                a[(c, j)] = a[(piv, j)];
                a[(piv, j)] = t;
            }
            det = -det;
        }
        det *= a[(c, c)];
        for i in c + 1..n {
            let f = a[(i, c)] / a[(c, c)];
            for j in c..n {
                a[(i, j)] -= f * a[(c, j)];
            }
        }
    }
    det
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fwht_is_isometric(log_n in 0u32..10, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = DenseMatrix::gaussian(1 << log_n, 1, &mut rng).into_vec();
        let w = fwht(&v).unwrap();
        prop_assert!((norm(&w) - norm(&v)).abs() < 1e-10);
        let back = fwht(&w).unwrap();
        prop_assert!(back.iter().zip(&v).all(|(a, b)| (a - b).abs() < 1e-10));
    }

    #[test]
    fn kron_apply_preserves_frobenius(k in 2usize..5, p in 1u32..4, seed in any::<u64>()) {
        let base = random_orthonormal(k, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = DenseMatrix::gaussian(k.pow(p), 2, &mut rng);
        let out = kron_apply(&base, p, &m).unwrap();
        prop_assert!((out.frobenius_norm() - m.frobenius_norm()).abs() < 1e-9);
    }

    #[test]
    fn random_orthonormal_has_unit_determinant(n in 1usize..=10, seed in any::<u64>()) {
        let q = random_orthonormal(n, seed);
        prop_assert!((lu_det(&q).abs() - 1.0).abs() < 1e-8);
    }
}
