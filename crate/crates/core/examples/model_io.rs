//! Train a small hashed model, write it to disk, read it back and score
//! with it.
//!
//! cargo run --example model_io

use fhash::corpus::{CorpusLine, Label};
use fhash::hashcore::HashConfig;
use fhash::learner::{load_model, save_model, score_hashed, train, FeatureOptions, TrainOptions};

fn email(label: Label, user: &str, timestamp: i64, text: &str) -> CorpusLine {
    CorpusLine { label, user: user.into(), timestamp, tokens: text.split_whitespace().map(String::from).collect() }
}

pub fn main() {
    let mut data = Vec::new();
    for t in 0..200 {
        data.push(email(Label::Spam, "ann", 2 * t, "win cash now click"));
        data.push(email(Label::Ham, "bob", 2 * t + 1, "meeting notes for the quarterly report"));
    }
    let opts = TrainOptions { features: FeatureOptions::personalized(), ..TrainOptions::default() };
    let model = train(&data, HashConfig::new(12, 1).unwrap(), &opts).unwrap();

    let dir = std::env::temp_dir().join(format!("fhash-model-io-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("spam.model");
    save_model(&model, &path).unwrap();
    let loaded = load_model(&path).unwrap();
    println!(
        "{} bytes on disk, {} examples seen, {} nonzero buckets",
        std::fs::metadata(&path).unwrap().len(),
        loaded.examples_seen(),
        loaded.nonzero_buckets()
    );

    let probe = [email(Label::Spam, "cy", 0, "click to win cash"), email(Label::Ham, "cy", 1, "quarterly meeting notes")];
    for s in score_hashed(&loaded, &probe, opts.features).unwrap() {
        println!("{} ({:?}) -> {:+.3}", s.user, s.label, s.score);
    }
    std::fs::remove_dir_all(&dir).unwrap();
}
