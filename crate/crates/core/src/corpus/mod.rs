//! Multi-user email corpora: the line format, the synthetic generator and
//! the chronological train/test split.

mod generate;
mod line;
mod split;

pub use crate::hashcore::personalize;
pub use generate::{
    consensus_label, disagrees, emails_per_user, generate, token_name, user_id, GeneratedEmail,
    GeneratorConfig, Topic, DAYS, SECONDS_PER_DAY,
};
pub use line::{read_corpus, write_corpus, CorpusLine, Label};
pub use split::{time_split, TimeSplit, TRAIN_FRACTION};
