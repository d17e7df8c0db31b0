//! Monte Carlo checks of hashing tail bounds: run a small suite in-process
//! and print one line per experiment. `fhash verify --suite default` runs the
//! full-size version.
//!
//! cargo run --release --example tail_bounds

use fhash::hashcore::bernstein_interference_bound;
use fhash::verify::{run_suite, Runner, SuiteConfig};

const SUITE: &str = r#"{
  "schema_version": 1,
  "base_seed": 7,
  "experiments": [
    {"kind": "norm_concentration", "name": "norm", "bits": 10, "eps": 0.5, "delta": 0.05, "trials": 2000,
     "x": {"uniform": {"prefix": "w", "n": 4096, "replicate": 10}}},
    {"kind": "inner_concentration", "name": "inner", "bits": 10, "eps": 0.5, "delta": 0.05, "trials": 2000,
     "x": {"uniform": {"prefix": "a", "n": 4096}}, "x2": {"uniform": {"prefix": "b", "n": 4096}}},
    {"kind": "interference", "name": "interference", "bits": 12, "delta": 0.1, "trials": 2000, "task": "me",
     "x": {"uniform": {"prefix": "w", "n": 256}},
     "others": {"count": 10, "tokens_per_task": 50, "task_prefix": "t", "token_prefix": "w"},
     "target_bound": 0.1},
    {"kind": "balls_and_bins", "name": "balls", "bits": 8, "delta": 0.1, "trials": 2000,
     "x": {"uniform": {"prefix": "w", "n": 8192}}},
    {"kind": "norm_concentration", "name": "too_small_m", "bits": 6, "eps": 0.5, "delta": 0.05, "trials": 2000,
     "x": {"uniform": {"prefix": "w", "n": 4096}}}
  ]
}"#;

pub fn main() {
    let cfg: SuiteConfig = serde_json::from_str(SUITE).unwrap();
    let report = run_suite(&cfg, &Runner::new(1).unwrap());
    for r in &report.reports {
        match &r.error {
            Some(e) => println!("{:<14} {:?}: {e}", r.name, r.status),
            None => println!(
                "{:<14} {:?}: {}/{} events, tail <= {:.4} vs bound {:.4}",
                r.name, r.status, r.events, r.trials_used, r.empirical_tail, r.bound
            ),
        }
    }
    let b = bernstein_interference_bound(1.0, 0.1, 1.0, 0.1, 1024, 0.2).unwrap();
    println!("interference bound at unit norms, l_inf 0.1, m 1024, eps 0.2: {:.4e}", b.raw);
}
