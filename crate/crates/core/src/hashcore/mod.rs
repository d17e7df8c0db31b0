//! Signed feature hashing: the map `phi^(h, xi)`, its inner products, and
//! closed-form bounds on how much hashing distorts them.

mod bounds;
mod config;
mod hashed;
mod map;
mod prepared;
mod sparse;

pub use bounds::{
    balls_bins_max_linf, bernstein_interference_bound, interference_eps_for_bound,
    max_eta_for_inner_bound, max_linf_for_concentration, min_buckets, replicated_self_variance,
    variance_closed_form, InterferenceBound,
};
pub use config::{splitmix64, HashConfig, MAX_BITS, MIN_BITS, SIGN_SEED_XOR};
pub use hashed::{hashed_inner, HashedVector};
pub use map::{
    feature_map, find_injective_config, hash_token, is_injective, pair_hash, personalize,
    replica_token, replicate, ReplicationParams, Slot, TASK_SEPARATOR,
};
pub use prepared::{PreparedVector, Projection};
pub use sparse::SparseVector;
