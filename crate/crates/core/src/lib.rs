//! Feature hashing with signed buckets, a multitask SGD learner that keeps
//! every per-user model inside one hashed weight vector, a hashed sketch of
//! factor matrices, and a Monte Carlo harness for the tail bounds of all of
//! the above.

pub mod cfsketch;
pub mod cli;
pub mod corpus;
pub mod error;
pub mod hashcore;
pub mod learner;
pub mod murmur3;
pub mod verify;

pub use error::{Error, Result};
