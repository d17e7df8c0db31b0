//! Monte Carlo checks of the probabilistic guarantees of feature hashing.
//!
//! Each check draws `trials` independent hash configs (trial `k` uses seed
//! `base_seed + k`), counts how often the tail event fires, and compares the
//! upper end of the 99% Wilson interval of that frequency against the
//! closed-form bound.

mod experiments;
mod runner;
mod stats;
mod suite;

pub use experiments::{
    check_balls_and_bins, check_inner_concentration, check_interference, check_norm_concentration,
    check_union_bound, max_bucket_mass, personalized_vector, DistortionParams, InterferenceRecipe,
    Status, TailExperiment, TailExperimentEcho, TailReport, MIN_EXPECTED_EVENTS,
};
pub use runner::{Runner, TrialTally};
pub use stats::{wilson_upper, RunningStats, Z_99};
pub use suite::{
    default_suite, run_report, run_suite, Common, ExperimentSpec, OtherTasks, SuiteConfig,
    SuiteReport, VectorRecipe, VectorSet, SCHEMA_VERSION,
};
