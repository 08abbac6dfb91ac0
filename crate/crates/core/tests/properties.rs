//! Property tests for the sparse-core invariants, plus the dense eigenvalue
//! oracle for symmetric permutations.

use num_complex::Complex64;
use optoss::sparse::{CsrMatrix, Permutation};
use proptest::prelude::*;
use proptest::strategy::ValueTree;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Random triplet list over an `n x m` shape.
fn triplets_strategy(
    max_dim: usize,
    max_entries: usize,
) -> impl Strategy<Value = (usize, usize, Vec<(usize, usize, Complex64)>)> {
    (1..max_dim, 1..max_dim).prop_flat_map(move |(n, m)| {
        let entry = (0..n, 0..m, -1.0f64..1.0, -1.0f64..1.0)
            .prop_map(|(i, j, re, im)| (i, j, c(re, im)));
        proptest::collection::vec(entry, 0..max_entries)
            .prop_map(move |v| (n, m, v))
    })
}

fn square_strategy(
    max_dim: usize,
    max_entries: usize,
) -> impl Strategy<Value = (usize, Vec<(usize, usize, Complex64)>)> {
    (2..max_dim).prop_flat_map(move |n| {
        let entry = (0..n, 0..n, -1.0f64..1.0, -1.0f64..1.0)
            .prop_map(|(i, j, re, im)| (i, j, c(re, im)));
        proptest::collection::vec(entry, 1..max_entries).prop_map(move |v| (n, v))
    })
}

fn permutation_strategy(n: usize) -> impl Strategy<Value = Permutation> {
    Just(()).prop_perturb(move |_, mut rng| {
        let mut fw: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            let j = (rng.next_u64() % (i as u64 + 1)) as usize;
            fw.swap(i, j);
        }
        Permutation::from_forward(fw).unwrap()
    })
}

proptest! {
    #[test]
    fn canonicalization_is_idempotent((n, m, t) in triplets_strategy(8, 24)) {
        let a = CsrMatrix::from_triplets(n, m, &t).unwrap();
        let again: Vec<_> = a.iter().collect();
        let b = CsrMatrix::from_triplets(n, m, &again).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn kron_is_structurally_associative(
        (n1, t1) in square_strategy(4, 8),
        (n2, t2) in square_strategy(4, 8),
        (n3, t3) in square_strategy(4, 8),
    ) {
        let a = CsrMatrix::from_triplets(n1, n1, &t1).unwrap();
        let b = CsrMatrix::from_triplets(n2, n2, &t2).unwrap();
        let x = CsrMatrix::from_triplets(n3, n3, &t3).unwrap();
        let left = a.kron(&b).unwrap().kron(&x).unwrap();
        let right = a.kron(&b.kron(&x).unwrap()).unwrap();
        prop_assert_eq!(left.row_offsets(), right.row_offsets());
        prop_assert_eq!(left.col_indices(), right.col_indices());
    }

    #[test]
    fn permute_preserves_nnz_and_diagonal((n, t) in square_strategy(9, 40)) {
        let a = CsrMatrix::from_triplets(n, n, &t).unwrap();
        let p_test = permutation_strategy(n);
        let mut runner = proptest::test_runner::TestRunner::deterministic();
        let p = p_test.new_tree(&mut runner).unwrap().current();
        let b = a.permute_symmetric(&p).unwrap();
        prop_assert_eq!(a.nnz(), b.nnz());
        let key = |v: &Complex64| (v.re.to_bits(), v.im.to_bits());
        let mut da: Vec<_> = a.diagonal().iter().map(key).collect();
        let mut db: Vec<_> = b.diagonal().iter().map(key).collect();
        da.sort_unstable();
        db.sort_unstable();
        prop_assert_eq!(da, db);
        if a.nnz() > 0 {
            // metrics on the permuted matrix exist and nnz matches
            let m = b.structure_metrics().unwrap();
            prop_assert_eq!(m.nnz, a.nnz());
        }
    }

    #[test]
    fn matrix_market_round_trip_is_bit_exact((n, m, t) in triplets_strategy(8, 24)) {
        let a = CsrMatrix::from_triplets(n, m, &t).unwrap();
        let mut buf = Vec::new();
        a.write_matrix_market(&mut buf).unwrap();
        let b = CsrMatrix::read_matrix_market(&buf[..]).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn symmetrized_pattern_is_union((n, t) in square_strategy(8, 30)) {
        let a = CsrMatrix::from_triplets(n, n, &t).unwrap();
        let s = a.symmetrized_pattern().unwrap();
        // every entry of a and of a^T appears; every pattern entry has a source
        for (i, j, _) in a.iter() {
            prop_assert_eq!(s.get(i, j), c(1.0, 0.0));
            prop_assert_eq!(s.get(j, i), c(1.0, 0.0));
        }
        for (i, j, _) in s.iter() {
            let present = a.get(i, j) != c(0.0, 0.0) || a.get(j, i) != c(0.0, 0.0);
            prop_assert!(present, "pattern entry ({}, {}) has no source", i, j);
        }
    }
}

#[test]
fn matvec_matches_dense_product() {
    // random 50x50, fixed seeds; 1e-13 relative against the dense product
    for seed in [1u64, 7, 42] {
        let mut state = seed;
        let mut rnd = move || {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((state >> 33) as f64) / (1u64 << 31) as f64 - 1.0
        };
        let n = 50;
        let mut t = Vec::new();
        for i in 0..n {
            for _ in 0..6 {
                let j = ((rnd().abs() * n as f64) as usize).min(n - 1);
                t.push((i, j, c(rnd(), rnd())));
            }
        }
        let a = CsrMatrix::from_triplets(n, n, &t).unwrap();
        let d = optoss::dense::DenseMatrix::from_sparse(&a);
        let x: Vec<Complex64> = (0..n).map(|k| c(rnd(), 0.5 * (k as f64) / n as f64)).collect();
        let mut y = vec![c(0.0, 0.0); n];
        a.matvec(&x, &mut y).unwrap();
        let mut scale = 0.0f64;
        let mut err = 0.0f64;
        for i in 0..n {
            let mut acc = c(0.0, 0.0);
            for j in 0..n {
                acc += d.get(i, j) * x[j];
            }
            err = err.max((acc - y[i]).norm());
            scale = scale.max(acc.norm());
        }
        assert!(err <= 1e-13 * scale.max(1.0), "seed {seed}: err {err:.3e}");
    }
}

#[test]
fn symmetric_permutation_preserves_eigenvalues() {
    // similarity invariance checked with a dense eigensolver on 6x6 instances
    for seed in [5u64, 23, 99] {
        let mut state = seed;
        let mut rnd = move || {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((state >> 33) as f64) / (1u64 << 31) as f64 - 1.0
        };
        let n = 6;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, c(rnd() * 2.0, rnd())));
            for _ in 0..3 {
                let j = ((rnd().abs() * n as f64) as usize).min(n - 1);
                t.push((i, j, c(rnd(), rnd())));
            }
        }
        let a = CsrMatrix::from_triplets(n, n, &t).unwrap();
        let mut fw: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            let j = ((rnd().abs() * (i + 1) as f64) as usize).min(i);
            fw.swap(i, j);
        }
        let p = Permutation::from_forward(fw).unwrap();
        let b = a.permute_symmetric(&p).unwrap();

        let eig = |m: &CsrMatrix| -> Vec<(f64, f64)> {
            let mut dm = nalgebra::DMatrix::<Complex64>::zeros(n, n);
            for (i, j, v) in m.iter() {
                dm[(i, j)] = v;
            }
            let schur = dm.schur();
            let vals = schur
                .eigenvalues()
                .expect("complex Schur always yields eigenvalues");
            let mut out: Vec<(f64, f64)> = vals.iter().map(|z| (z.re, z.im)).collect();
            out.sort_by(|x, y| x.partial_cmp(y).unwrap());
            out
        };
        let ea = eig(&a);
        let eb = eig(&b);
        for (x, y) in ea.iter().zip(&eb) {
            let d = ((x.0 - y.0).powi(2) + (x.1 - y.1).powi(2)).sqrt();
            assert!(d <= 1e-12, "seed {seed}: eigenvalue moved by {d:.3e}");
        }
    }
}
