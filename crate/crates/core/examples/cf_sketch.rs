//! Compress the factors of M = U^T W into two hashed vectors of length m and
//! estimate entries of M from them.
//!
//! cargo run --release --example cf_sketch

use fhash::cfsketch::{frobenius_error_sweep, sketch_factors, sweep_csv, trial_configs, FactorMatrix};

pub fn main() {
    // 2 x 4 x 5000 factor entries held in 2 x 2^13 reals.
    let (u, w) = (FactorMatrix::gaussian(4, 5000, 1), FactorMatrix::gaussian(4, 5000, 2));
    let (cu, cw) = trial_configs(13, 0).unwrap();
    let sketch = sketch_factors(&u, &w, cu, cw).unwrap();
    println!(
        "{} factor entries stored in {} reals",
        u.data().len() + w.data().len(),
        sketch.storage_len()
    );
    let (mut err2, mut norm2) = (0.0, 0.0);
    for i in (0..5000).step_by(97) {
        for j in (0..5000).step_by(89) {
            let exact: f64 = (0..4).map(|k| u.get(k, i) * w.get(k, j)).sum();
            err2 += (sketch.estimate_entry(i, j, 4).unwrap() - exact).powi(2);
            norm2 += exact * exact;
        }
    }
    // With more entries than buckets every estimate carries collision noise.
    println!("relative RMS error over sampled entries: {:.2}", (err2 / norm2).sqrt());

    // Relative Frobenius error of the whole product shrinks as m grows.
    let (u, w) = (FactorMatrix::gaussian(4, 32, 1), FactorMatrix::gaussian(4, 32, 2));
    let rows = frobenius_error_sweep(&u, &w, &[4, 6, 8, 10, 12], 50, 0).unwrap();
    print!("{}", sweep_csv(&rows));
}
