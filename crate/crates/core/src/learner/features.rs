use serde::{Deserialize, Serialize};

use crate::corpus::{personalize, CorpusLine};
use crate::error::Result;
use crate::hashcore::{feature_map, HashConfig, HashedVector, SparseVector};

/// A training or test email. Labels are `+1` for spam, `-1` otherwise.
pub type Example = CorpusLine;

/// Reserved token carrying the global bias. It is hashed like any other
/// feature but never personalized.
pub const BIAS_TOKEN: &str = "__BIAS__";

/// How an email is turned into features.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct FeatureOptions {
    /// Add a user-specific copy of every token.
    pub personalized: bool,
    /// Token presence instead of term frequency.
    pub binary: bool,
    /// Add [`BIAS_TOKEN`] with value 1.
    pub bias: bool,
}

impl FeatureOptions {
    pub fn global() -> Self {
        FeatureOptions {
            personalized: false,
            binary: false,
            bias: true,
        }
    }

    pub fn personalized() -> Self {
        FeatureOptions {
            personalized: true,
            ..Self::global()
        }
    }
}

/// The un-hashed token vectors of an email: the global part `x` (with the
/// bias token if requested) and, in personalized mode, the user-specific
/// part whose tokens are `user ++ 0x1F ++ token`.
pub fn token_features(ex: &Example, opts: FeatureOptions) -> Result<(SparseVector, SparseVector)> {
    let mut global = SparseVector::from_pairs(ex.tokens.iter().map(|t| (t.as_bytes(), 1.0)))?;
    if opts.binary {
        global = SparseVector::from_pairs(global.tokens().map(|t| (t.to_vec(), 1.0)))?;
    }
    let personal = if opts.personalized {
        SparseVector::from_pairs(
            global
                .iter()
                .map(|(t, v)| (personalize(ex.user.as_bytes(), t), v)),
        )?
    } else {
        SparseVector::new()
    };
    if opts.bias {
        global = global.combine(1.0, &SparseVector::one_hot(BIAS_TOKEN)?, 1.0);
    }
    Ok((global, personal))
}

/// All features of an email as one token vector (global and personal
/// tokens never clash because personal tokens contain 0x1F).
pub fn token_vector(ex: &Example, opts: FeatureOptions) -> Result<SparseVector> {
    let (global, personal) = token_features(ex, opts)?;
    Ok(global.combine(1.0, &personal, 1.0))
}

/// `phi_0(x)` in global mode, `phi_0(x) + phi_u(x)` in personalized mode,
/// with raw term-frequency values and no bias.
pub fn featurize(ex: &Example, cfg: &HashConfig, personalized: bool) -> Result<HashedVector> {
    featurize_with(
        ex,
        cfg,
        FeatureOptions {
            personalized,
            binary: false,
            bias: false,
        },
    )
}

pub fn featurize_with(ex: &Example, cfg: &HashConfig, opts: FeatureOptions) -> Result<HashedVector> {
    let (global, personal) = token_features(ex, opts)?;
    let phi = feature_map(&global, cfg);
    if personal.is_empty() {
        Ok(phi)
    } else {
        phi.add(&feature_map(&personal, cfg))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Label;

    fn ex(tokens: &[&str]) -> Example {
        Example {
            label: Label::Spam,
            user: "alice".into(),
            timestamp: 0,
            tokens: tokens.iter().map(|s| s.to_string()).collect(),
        }
    }

    #[test]
    fn one_token_one_bucket() {
        let cfg = HashConfig::new(10, 3).unwrap();
        let phi = featurize(&ex(&["viagra"]), &cfg, false).unwrap();
        assert_eq!(phi.nnz(), 1);
        assert_eq!(phi.l1(), 1.0);
    }

    #[test]
    fn personalized_at_most_twice_the_buckets() {
        let cfg = HashConfig::new(4, 3).unwrap();
        let e = ex(&["a", "b", "c", "a", "d"]);
        let p = featurize(&e, &cfg, true).unwrap();
        assert!(p.nnz() <= 8);
    }

    #[test]
    fn personalized_is_sum_of_two_maps() {
        let cfg = HashConfig::new(12, 77).unwrap();
        let e = ex(&["a", "b", "b", "c"]);
        let x = SparseVector::from_pairs([("a", 1.0), ("b", 2.0), ("c", 1.0)]).unwrap();
        let xu = SparseVector::from_pairs(x.iter().map(|(t, v)| (personalize(b"alice", t), v))).unwrap();
        let expected = feature_map(&x, &cfg).add(&feature_map(&xu, &cfg)).unwrap();
        assert_eq!(featurize(&e, &cfg, true).unwrap(), expected);
    }

    #[test]
    fn term_frequency_and_binary() {
        let e = ex(&["a", "a", "a"]);
        let (g, _) = token_features(&e, FeatureOptions::default()).unwrap();
        assert_eq!(g.get(b"a"), 3.0);
        let opts = FeatureOptions {
            binary: true,
            ..FeatureOptions::default()
        };
        assert_eq!(token_features(&e, opts).unwrap().0.get(b"a"), 1.0);
    }

    #[test]
    fn bias_is_global_only() {
        let (g, p) = token_features(&ex(&["a"]), FeatureOptions::personalized()).unwrap();
        assert_eq!(g.get(BIAS_TOKEN.as_bytes()), 1.0);
        assert_eq!(p.len(), 1);
        assert_eq!(p.get(&personalize(b"alice", b"a")), 1.0);
    }
}
