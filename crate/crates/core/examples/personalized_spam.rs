//! Train a global and a personalized hashed spam filter on a synthetic
//! corpus where users disagree on borderline topics, then compare uncaught
//! spam at 1% false positives per user-activity bucket.
//!
//! cargo run --release --example personalized_spam

use fhash::corpus::{generate, time_split, GeneratorConfig, TRAIN_FRACTION};
use fhash::hashcore::HashConfig;
use fhash::learner::{evaluate, score_hashed, train, training_counts, FeatureOptions, TrainOptions, DEFAULT_FP_RATE};

pub fn main() {
    let cfg = GeneratorConfig { n_users: 1000, n_emails: 20_000, vocab_size: 10_000, ..GeneratorConfig::default() };
    let lines = generate(&cfg).unwrap().into_iter().map(|e| e.line).collect();
    let split = time_split(lines, TRAIN_FRACTION).unwrap();
    let counts = training_counts(&split.train);
    println!("{} training and {} test emails", split.train.len(), split.test.len());

    let hash = HashConfig::new(18, 0).unwrap();
    let report = |features: FeatureOptions| {
        let opts = TrainOptions { features, lr0: 0.05, epochs: 1 };
        let model = train(&split.train, hash, &opts).unwrap();
        evaluate(&score_hashed(&model, &split.test, features).unwrap(), &counts, DEFAULT_FP_RATE).unwrap()
    };
    let global = report(FeatureOptions::global());
    let mut personal = report(FeatureOptions::personalized());
    personal.compare_to(&global);

    println!("bucket     users  spam  global  personal  ratio");
    for b in personal.buckets.iter().chain(std::iter::once(&personal.overall)) {
        let g = global.buckets.iter().chain(std::iter::once(&global.overall)).find(|g| g.bucket == b.bucket);
        let rate = |r: Option<f64>| r.map(|v| format!("{v:.3}")).unwrap_or_else(|| "-".into());
        println!(
            "{:<10} {:>5} {:>5}  {:>6}  {:>8}  {:>5}",
            b.bucket,
            b.users,
            b.spam,
            rate(g.and_then(|g| g.uncaught_rate)),
            rate(b.uncaught_rate),
            rate(b.ratio)
        );
    }
}
