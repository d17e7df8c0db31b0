//! Split the error of a hashed personalized model into self-collision
//! (distortion) and cross-user (interference) parts, against explicitly
//! tracked un-hashed weights.
//!
//! cargo run --example error_decomposition

use fhash::corpus::{generate, GeneratorConfig};
use fhash::hashcore::HashConfig;
use fhash::learner::{decompose_errors, train_oracle, FeatureOptions, ReferenceWeights, TrainOptions};

pub fn main() {
    let cfg = GeneratorConfig { n_users: 30, n_emails: 1500, vocab_size: 600, ..GeneratorConfig::default() };
    let emails: Vec<_> = generate(&cfg).unwrap().into_iter().map(|e| e.line).collect();
    let features = FeatureOptions::personalized();
    let oracle = train_oracle(&emails, &TrainOptions { features, lr0: 0.05, epochs: 1 }).unwrap();
    let reference = ReferenceWeights::from_oracle(&oracle).unwrap();
    println!("{} distinct tokens, {} users", reference.vocabulary(), reference.tasks.len());

    println!("bits  mean|eps_d|  mean|eps_i|  mean|hashed - exact|");
    for bits in [6, 8, 10, 12, 14, 16] {
        let model = reference.hashed_model(HashConfig::new(bits, 3).unwrap(), 0.05).unwrap();
        let (mut d, mut i, mut total) = (0.0, 0.0, 0.0);
        for e in &emails[..300] {
            let parts = decompose_errors(e, &model, &reference, features).unwrap();
            d += parts.eps_d.abs();
            i += parts.eps_i.abs();
            total += (parts.hashed_score - parts.exact_score).abs();
        }
        println!("{bits:<5} {:>11.5}  {:>11.5}  {:>11.5}", d / 300.0, i / 300.0, total / 300.0);
    }
}
