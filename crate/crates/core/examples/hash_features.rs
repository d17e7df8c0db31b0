//! Hash a bag of words into 2^bits signed buckets and compare the hashed
//! inner product with the exact one.
//!
//! cargo run --example hash_features

use fhash::hashcore::{feature_map, hash_token, personalize, HashConfig, SparseVector};

pub fn main() {
    let doc = SparseVector::from_pairs([("cheap", 2.0), ("pills", 1.0), ("online", 1.0), ("now", 1.0)]).unwrap();
    let query = SparseVector::from_pairs([("cheap", 1.0), ("flights", 1.0), ("now", 1.0)]).unwrap();

    let cfg = HashConfig::new(4, 42).unwrap();
    for (token, _) in doc.iter() {
        let slot = hash_token(token, &cfg).unwrap();
        println!("{:>8} -> bucket {:>2}, sign {:+}", String::from_utf8_lossy(token), slot.bucket, slot.sign);
    }

    let (hd, hq) = (feature_map(&doc, &cfg), feature_map(&query, &cfg));
    println!("exact <x, x'> = {}", doc.dot(&query));
    println!("hashed <x, x'> at m = {}: {}", cfg.m(), hd.dot(&hq).unwrap());

    // Averaging over hash seeds recovers the exact value.
    let trials = 20_000;
    let mean = (0..trials)
        .map(|s| {
            let cfg = HashConfig::for_trial(4, s).unwrap();
            feature_map(&doc, &cfg).dot(&feature_map(&query, &cfg)).unwrap()
        })
        .sum::<f64>()
        / trials as f64;
    println!("mean over {trials} seeds: {mean:.4}");

    // A user-specific copy of a token lands in an unrelated bucket.
    let personal = personalize(b"alice", b"cheap");
    println!("'cheap' for alice -> bucket {}", hash_token(&personal, &cfg).unwrap().bucket);
}
