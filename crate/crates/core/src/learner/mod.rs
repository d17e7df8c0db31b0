//! Square-loss SGD in the hashed space, with a global model and optional
//! per-user models sharing one weight vector.

mod decompose;
mod eval;
mod features;
mod model;
mod train;

pub use decompose::{decompose_errors, ErrorDecomposition, ReferenceWeights, ORACLE_CAPACITY};
pub use eval::{
    bucket_index, bucket_label, bucket_range, calibrate_threshold, evaluate, evaluate_at, BucketStats,
    EvalReport, Scored, DEFAULT_FP_RATE,
};
pub use features::{featurize, featurize_with, token_features, token_vector, Example, FeatureOptions, BIAS_TOKEN};
pub use model::{load_model, save_model, HashedModel, DEFAULT_LR0, MODEL_MAGIC, MODEL_VERSION};
pub use train::{score_hashed, score_oracle, train, train_oracle, training_counts, OracleModel, TrainOptions};
