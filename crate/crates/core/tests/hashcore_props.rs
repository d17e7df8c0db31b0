//! Statistical and algebraic properties of the hash feature map.

use fhash::hashcore::{
    feature_map, hash_token, pair_hash, personalize, replicate, replicated_self_variance, variance_closed_form,
    HashConfig, ReplicationParams, SparseVector,
};
use proptest::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF};

#[test]
fn signs_are_balanced() {
    let cfg = HashConfig::new(10, 17).unwrap();
    let n = 100_000;
    let plus = (0..n)
        .filter(|i| hash_token(format!("tok{i}").as_bytes(), &cfg).unwrap().sign == 1)
        .count();
    let sd = (0.25 / n as f64).sqrt();
    assert!((plus as f64 / n as f64 - 0.5).abs() < 4.0 * sd, "{plus} of {n} positive");
}

#[test]
fn buckets_pass_chi_square() {
    let cfg = HashConfig::new(6, 99).unwrap();
    let (m, n) = (cfg.m(), 100_000usize);
    let mut counts = vec![0usize; m];
    for i in 0..n {
        counts[hash_token(format!("word{i}").as_bytes(), &cfg).unwrap().bucket] += 1;
    }
    let expected = n as f64 / m as f64;
    let stat: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    let p = 1.0 - ChiSquared::new((m - 1) as f64).unwrap().cdf(stat);
    assert!(p > 1e-4, "chi-square {stat:.1}, p = {p:.2e}");
}

#[test]
fn pair_hash_collision_rate_is_one_over_m() {
    let cfg = HashConfig::new(8, 5).unwrap();
    let m = cfg.m() as f64;
    let n = 200_000;
    let collisions = (0..n)
        .filter(|i| {
            let a = pair_hash(format!("t{i}").as_bytes(), b"alice", &cfg).unwrap();
            let b = pair_hash(format!("t{i}").as_bytes(), b"bob", &cfg).unwrap();
            a.bucket == b.bucket
        })
        .count();
    let rate = collisions as f64 / n as f64;
    assert!(rate > 0.7 / m && rate < 1.3 / m, "rate {rate} vs 1/m = {}", 1.0 / m);
}

#[test]
fn pair_hash_is_hash_of_personalized_token() {
    let cfg = HashConfig::new(12, 3).unwrap();
    for t in ["a", "cash", "w123"] {
        let direct = hash_token(&personalize(b"u7", t.as_bytes()), &cfg).unwrap();
        assert_eq!(pair_hash(t.as_bytes(), b"u7", &cfg).unwrap(), direct);
    }
}

#[test]
fn kernel_mean_and_variance_match_closed_form() {
    // x = (1, 1, 0) / sqrt(2), x' = (1, 0, 1) / sqrt(2) over shared tokens
    let x = SparseVector::from_pairs([("a", 1.0), ("b", 1.0)]).unwrap().scaled(0.5f64.sqrt());
    let y = SparseVector::from_pairs([("a", 1.0), ("c", 1.0)]).unwrap().scaled(0.5f64.sqrt());
    let bits = 2;
    let n = 40_000u64;
    let samples: Vec<f64> = (0..n)
        .map(|s| {
            let cfg = HashConfig::for_trial(bits, s).unwrap();
            feature_map(&x, &cfg).dot(&feature_map(&y, &cfg)).unwrap()
        })
        .collect();
    let mean = samples.iter().sum::<f64>() / n as f64;
    let var = samples.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    assert!((mean - x.dot(&y)).abs() < 4.0 * (var / n as f64).sqrt());
    let closed = variance_closed_form(&x, &y, 4).unwrap();
    assert!((var / closed - 1.0).abs() < 0.05, "{var} vs {closed}");
}

fn sparse_vector(max_len: usize) -> impl Strategy<Value = SparseVector> {
    prop::collection::btree_map("[a-z]{1,6}", -5.0..5.0f64, 1..max_len)
        .prop_map(|m| SparseVector::from_pairs(m).unwrap())
        .prop_filter("nonzero", |x| !x.is_empty())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn replication_preserves_l2_and_shrinks_linf(x in sparse_vector(12), c in 1usize..10, bits in 2u32..12) {
        let xr = replicate(&x, ReplicationParams::new(c).unwrap());
        prop_assert_eq!(xr.len(), x.len() * c);
        prop_assert!((xr.l2() - x.l2()).abs() <= 1e-12 * x.l2());
        prop_assert!((xr.linf() - x.linf() / (c as f64).sqrt()).abs() <= 1e-12 * x.linf());
        let m = 1usize << bits;
        let direct = variance_closed_form(&xr, &xr, m).unwrap();
        let predicted = replicated_self_variance(variance_closed_form(&x, &x, m).unwrap(), x.l2(), c, m);
        prop_assert!((direct - predicted).abs() <= 1e-9 * direct.max(1.0));
    }
}

proptest! {
    #[test]
    fn feature_map_is_linear(x in sparse_vector(20), y in sparse_vector(20), a in -3.0..3.0f64, b in -3.0..3.0f64, seed: u32) {
        let cfg = HashConfig::new(5, seed).unwrap();
        let lhs = feature_map(&x.combine(a, &y, b), &cfg).to_dense();
        let (px, py) = (feature_map(&x, &cfg).to_dense(), feature_map(&y, &cfg).to_dense());
        for i in 0..cfg.m() {
            prop_assert!((lhs[i] - (a * px[i] + b * py[i])).abs() < 1e-9);
        }
    }

    #[test]
    fn sparse_and_dense_forms_agree(x in sparse_vector(40), y in sparse_vector(40), bits in 1u32..9, seed: u32) {
        let cfg = HashConfig::new(bits, seed).unwrap();
        let (hx, hy) = (feature_map(&x, &cfg), feature_map(&y, &cfg));
        let dense = hx.clone().into_dense().dot(&hy.clone().into_dense()).unwrap();
        let sparse = hx.clone().into_sparse().dot(&hy.clone().into_sparse()).unwrap();
        let mixed = hx.clone().into_sparse().dot(&hy.into_dense()).unwrap();
        prop_assert!((dense - sparse).abs() < 1e-9 && (dense - mixed).abs() < 1e-9);
        prop_assert!((hx.l1() - hx.clone().into_dense().l1()).abs() < 1e-9);
    }

    #[test]
    fn closed_form_variance_at_most_two_over_m(x in sparse_vector(30), y in sparse_vector(30), bits in 1u32..16) {
        let (x, y) = (x.scaled(1.0 / x.l2()), y.scaled(1.0 / y.l2()));
        let m = 1usize << bits;
        prop_assert!(variance_closed_form(&x, &y, m).unwrap() <= 2.0 / m as f64 + 1e-12);
    }

    #[test]
    fn hashing_preserves_l1_bound(x in sparse_vector(30), seed: u32) {
        let cfg = HashConfig::new(4, seed).unwrap();
        prop_assert!(feature_map(&x, &cfg).l1() <= x.l1() + 1e-9);
    }
}
