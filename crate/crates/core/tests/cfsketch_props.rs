//! Properties of the hashed factor sketch.

use fhash::cfsketch::{frobenius_error_sweep, sketch_factors, trial_configs, FactorMatrix};
use proptest::prelude::*;

fn factor(rows: usize, cols: usize) -> impl Strategy<Value = FactorMatrix> {
    prop::collection::vec(-3.0..3.0f64, rows * cols).prop_map(move |d| FactorMatrix::new(rows, cols, d).unwrap())
}

proptest! {
    #[test]
    fn estimate_is_bilinear(u1 in factor(3, 4), u2 in factor(3, 4), w in factor(3, 5), a in -2.0..2.0f64, seed: u64) {
        let (cu, cw) = trial_configs(4, seed).unwrap();
        let est = |u: &FactorMatrix| sketch_factors(u, &w, cu, cw).unwrap().estimate_matrix();
        let combined = est(&u1.scaled(a).add(&u2).unwrap());
        let separate = est(&u1).scaled(a).add(&est(&u2)).unwrap();
        for (x, y) in combined.data().iter().zip(separate.data()) {
            prop_assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn storage_is_two_m(rows in 1usize..6, du in 1usize..40, dw in 1usize..40, bits in 1u32..10, seed: u64) {
        let (cu, cw) = trial_configs(bits, seed).unwrap();
        let s = sketch_factors(&FactorMatrix::gaussian(rows, du, 1), &FactorMatrix::gaussian(rows, dw, 2), cu, cw).unwrap();
        prop_assert_eq!(s.storage_len(), 2 * (1usize << bits));
    }

    #[test]
    fn entry_and_matrix_agree(u in factor(4, 3), w in factor(4, 3), seed: u64) {
        let (cu, cw) = trial_configs(3, seed).unwrap();
        let s = sketch_factors(&u, &w, cu, cw).unwrap();
        let full = s.estimate_matrix();
        for i in 0..3 {
            for j in 0..3 {
                prop_assert_eq!(s.estimate_entry(i, j, 4).unwrap(), full.get(i, j));
            }
        }
    }
}

#[test]
fn entries_are_unbiased() {
    let (u, w) = (FactorMatrix::gaussian(4, 4, 10), FactorMatrix::gaussian(4, 4, 11));
    let exact = u.transpose_mul(&w).unwrap();
    let n = 4000;
    let samples: Vec<FactorMatrix> = (0..n)
        .map(|s| {
            let (cu, cw) = trial_configs(4, s).unwrap();
            sketch_factors(&u, &w, cu, cw).unwrap().estimate_matrix()
        })
        .collect();
    for e in 0..16 {
        let xs: Vec<f64> = samples.iter().map(|m| m.data()[e]).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!((mean - exact.data()[e]).abs() <= 4.0 * (var / n as f64).sqrt(), "entry {e}");
    }
}

#[test]
fn zero_factors_give_zero_and_absolute_error() {
    let z = FactorMatrix::zeros(3, 3);
    let (cu, cw) = trial_configs(4, 0).unwrap();
    assert!(sketch_factors(&z, &z, cu, cw).unwrap().estimate_matrix().data().iter().all(|&x| x == 0.0));
    let rows = frobenius_error_sweep(&z, &z, &[2, 4], 3, 0).unwrap();
    assert!(rows.iter().all(|r| r.mean_rel_err == 0.0));
}

#[test]
fn error_shrinks_with_table_size() {
    let (u, w) = (FactorMatrix::gaussian(4, 32, 1), FactorMatrix::gaussian(4, 32, 2));
    let rows = frobenius_error_sweep(&u, &w, &[2, 4, 6, 8], 50, 100).unwrap();
    assert!(rows.windows(2).all(|p| p[1].mean_rel_err < p[0].mean_rel_err), "{rows:?}");
}

#[test]
fn mismatched_factors_and_equal_seeds_are_rejected() {
    let (cu, cw) = trial_configs(4, 0).unwrap();
    let (a, b) = (FactorMatrix::gaussian(3, 2, 0), FactorMatrix::gaussian(4, 2, 0));
    assert!(sketch_factors(&a, &b, cu, cw).is_err());
    assert!(sketch_factors(&a, &a, cu, cu).is_err());
    let s = sketch_factors(&a, &a, cu, cw).unwrap();
    assert!(s.estimate_entry(2, 0, 3).is_err());
    assert!(s.estimate_entry(0, 0, 4).is_err());
}
