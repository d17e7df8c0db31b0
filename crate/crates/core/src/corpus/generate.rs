//! Seeded synthetic multi-user spam corpus.
//!
//! Every email is drawn from one topic: the core spam topic, the core ham
//! topic, or one of several borderline topics (newsletters, promotions, ...)
//! whose label is a matter of taste. Each borderline topic carries a
//! consensus label; every user independently disagrees with the consensus
//! on each borderline topic with probability `disagreement_rate`. User
//! activity follows a Zipf law, so a handful of users write most of the
//! mail and many users write none.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Zipf};
use serde::{Deserialize, Serialize};

use super::{CorpusLine, Label};
use crate::error::{Error, Result};
use crate::hashcore::splitmix64;

pub const SECONDS_PER_DAY: i64 = 86_400;
pub const DAYS: i64 = 14;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub n_users: usize,
    pub n_emails: usize,
    pub vocab_size: usize,
    /// Probability that a non-borderline email is spam.
    pub spam_prior: f64,
    /// Exponent of the Zipf law over user activity.
    pub zipf_exponent: f64,
    /// Per-user, per-borderline-topic probability of disagreeing with the
    /// consensus label.
    pub disagreement_rate: f64,
    pub seed: u64,
    #[serde(default = "defaults::topics")]
    pub topics: usize,
    /// Fraction of emails drawn from a borderline topic.
    #[serde(default = "defaults::borderline_share")]
    pub borderline_share: f64,
    /// Mean number of tokens per email.
    #[serde(default = "defaults::email_len")]
    pub email_len: usize,
    /// Probability that a token comes from the email's topic rather than the
    /// shared background vocabulary.
    #[serde(default = "defaults::topic_purity")]
    pub topic_purity: f64,
    /// Zipf exponent of word frequencies within each vocabulary block.
    #[serde(default = "defaults::word_zipf")]
    pub word_zipf: f64,
}

mod defaults {
    pub fn topics() -> usize {
        24
    }
    pub fn borderline_share() -> f64 {
        0.3
    }
    pub fn email_len() -> usize {
        16
    }
    pub fn topic_purity() -> f64 {
        0.8
    }
    pub fn word_zipf() -> f64 {
        1.0
    }
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            n_users: 10_000,
            n_emails: 100_000,
            vocab_size: 50_000,
            spam_prior: 0.5,
            zipf_exponent: 1.1,
            disagreement_rate: 0.3,
            seed: 1,
            topics: defaults::topics(),
            borderline_share: defaults::borderline_share(),
            email_len: defaults::email_len(),
            topic_purity: defaults::topic_purity(),
            word_zipf: defaults::word_zipf(),
        }
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("n_users", self.n_users),
            ("n_emails", self.n_emails),
            ("topics", self.topics),
            ("email_len", self.email_len),
        ];
        if let Some((name, _)) = positive.iter().find(|(_, v)| *v == 0) {
            return Err(Error::input(format!("{name} must be positive")));
        }
        if self.vocab_size < 4 * (self.topics + 3) {
            return Err(Error::input(format!(
                "vocab_size {} too small for {} topics",
                self.vocab_size, self.topics
            )));
        }
        let unit = |name: &str, v: f64, lo_open: bool, hi_open: bool| -> Result<()> {
            let lo_ok = if lo_open { v > 0.0 } else { v >= 0.0 };
            let hi_ok = if hi_open { v < 1.0 } else { v <= 1.0 };
            if lo_ok && hi_ok {
                Ok(())
            } else {
                Err(Error::input(format!("{name} = {v} out of range")))
            }
        };
        unit("spam_prior", self.spam_prior, true, true)?;
        unit("disagreement_rate", self.disagreement_rate, false, true)?;
        unit("borderline_share", self.borderline_share, false, false)?;
        unit("topic_purity", self.topic_purity, false, false)?;
        if !(self.zipf_exponent > 0.0) || !(self.word_zipf > 0.0) {
            return Err(Error::input("Zipf exponents must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Topic {
    Spam,
    Ham,
    Borderline(usize),
}

/// A generated email with its ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedEmail {
    /// The email as its user labeled it.
    pub line: CorpusLine,
    pub topic: Topic,
    /// The label the email would get under the global consensus.
    pub consensus: Label,
}

/// Consensus label of borderline topic `k`: even topics are spam.
pub fn consensus_label(k: usize) -> Label {
    if k.is_multiple_of(2) {
        Label::Spam
    } else {
        Label::Ham
    }
}

/// A contiguous block of the vocabulary with Zipf word frequencies.
struct Block {
    start: usize,
    zipf: Zipf<f64>,
}

impl Block {
    fn new(start: usize, len: usize, s: f64) -> Result<Self> {
        let zipf = Zipf::new(len as u64, s).map_err(|e| Error::input(format!("zipf: {e}")))?;
        Ok(Block { start, zipf })
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> usize {
        self.start + self.zipf.sample(rng) as usize - 1
    }
}

struct Vocabulary {
    background: Block,
    spam: Block,
    ham: Block,
    borderline: Vec<Block>,
}

impl Vocabulary {
    /// 40% background, 15% spam, 15% ham, 30% split across borderline topics.
    fn new(cfg: &GeneratorConfig) -> Result<Self> {
        let v = cfg.vocab_size;
        let bg = v * 2 / 5;
        let core = v * 3 / 20;
        let per_topic = (v - bg - 2 * core) / cfg.topics;
        let mut start = 0;
        let mut take = |len: usize| {
            let b = Block::new(start, len, cfg.word_zipf);
            start += len;
            b
        };
        Ok(Vocabulary {
            background: take(bg)?,
            spam: take(core)?,
            ham: take(core)?,
            borderline: (0..cfg.topics).map(|_| take(per_topic)).collect::<Result<_>>()?,
        })
    }

    fn block(&self, topic: Topic) -> &Block {
        match topic {
            Topic::Spam => &self.spam,
            Topic::Ham => &self.ham,
            Topic::Borderline(k) => &self.borderline[k],
        }
    }
}

pub fn user_id(rank: usize) -> String {
    format!("u{rank}")
}

pub fn token_name(id: usize) -> String {
    format!("w{id}")
}

/// Whether user `rank` disagrees with the consensus on borderline topic `k`.
pub fn disagrees(cfg: &GeneratorConfig, rank: usize, k: usize) -> bool {
    let h = splitmix64(cfg.seed ^ splitmix64((rank as u64) << 20 | k as u64));
    ((h >> 11) as f64 / (1u64 << 53) as f64) < cfg.disagreement_rate
}

/// Generates `cfg.n_emails` emails sorted by timestamp.
pub fn generate(cfg: &GeneratorConfig) -> Result<Vec<GeneratedEmail>> {
    cfg.validate()?;
    let vocab = Vocabulary::new(cfg)?;
    let users = Zipf::new(cfg.n_users as u64, cfg.zipf_exponent)
        .map_err(|e| Error::input(format!("zipf: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let horizon = DAYS * SECONDS_PER_DAY;
    let (len_lo, len_hi) = ((cfg.email_len / 2).max(1), cfg.email_len * 3 / 2);

    let mut out = Vec::with_capacity(cfg.n_emails);
    for _ in 0..cfg.n_emails {
        let rank = users.sample(&mut rng) as usize - 1;
        let topic = if rng.gen::<f64>() < cfg.borderline_share {
            Topic::Borderline(rng.gen_range(0..cfg.topics))
        } else if rng.gen::<f64>() < cfg.spam_prior {
            Topic::Spam
        } else {
            Topic::Ham
        };
        let consensus = match topic {
            Topic::Spam => Label::Spam,
            Topic::Ham => Label::Ham,
            Topic::Borderline(k) => consensus_label(k),
        };
        let label = match topic {
            Topic::Borderline(k) if disagrees(cfg, rank, k) => consensus.flipped(),
            _ => consensus,
        };
        let len = rng.gen_range(len_lo..=len_hi.max(len_lo));
        let block = vocab.block(topic);
        let tokens = (0..len)
            .map(|_| {
                let id = if rng.gen::<f64>() < cfg.topic_purity {
                    block.sample(&mut rng)
                } else {
                    vocab.background.sample(&mut rng)
                };
                token_name(id)
            })
            .collect();
        let timestamp = rng.gen_range(0..horizon);
        out.push(GeneratedEmail {
            line: CorpusLine {
                label,
                user: user_id(rank),
                timestamp,
                tokens,
            },
            topic,
            consensus,
        });
    }
    out.sort_by_key(|e| e.line.timestamp);
    Ok(out)
}

/// Number of emails per user in `lines`.
pub fn emails_per_user<'a, I>(lines: I) -> BTreeMap<String, usize>
where
    I: IntoIterator<Item = &'a CorpusLine>,
{
    let mut counts = BTreeMap::new();
    for l in lines {
        *counts.entry(l.user.clone()).or_insert(0) += 1;
    }
    counts
}
