use std::collections::{BTreeMap, HashSet};

use super::{HashConfig, HashedVector, SparseVector};
use crate::error::{Error, Result};
use crate::murmur3::murmur3_x86_32;

/// Byte joining a task id to a token in personalized features (ASCII unit
/// separator; never produced by whitespace tokenization).
pub const TASK_SEPARATOR: u8 = 0x1F;

/// Where a token lands: its bucket `h(t)` and sign `xi(t)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Slot {
    pub bucket: usize,
    pub sign: i8,
}

impl Slot {
    pub fn sign_f64(self) -> f64 {
        self.sign as f64
    }
}

#[inline]
pub(crate) fn slot_of(token: &[u8], cfg: &HashConfig) -> Slot {
    let bucket = (murmur3_x86_32(token, cfg.bucket_seed()) & cfg.mask()) as usize;
    let sign = if murmur3_x86_32(token, cfg.sign_seed()) & 1 == 1 {
        1
    } else {
        -1
    };
    Slot { bucket, sign }
}

pub fn hash_token(token: &[u8], cfg: &HashConfig) -> Result<Slot> {
    if token.is_empty() {
        return Err(Error::input("cannot hash an empty token"));
    }
    Ok(slot_of(token, cfg))
}

/// The canonical task-specific token: `task ++ 0x1F ++ token`.
pub fn personalize(task: &[u8], token: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(task.len() + 1 + token.len());
    out.extend_from_slice(task);
    out.push(TASK_SEPARATOR);
    out.extend_from_slice(token);
    out
}

/// `h` and `xi` applied to the pair `(token, task)`.
pub fn pair_hash(token: &[u8], task: &[u8], cfg: &HashConfig) -> Result<Slot> {
    if token.is_empty() || task.is_empty() {
        return Err(Error::input("pair_hash needs a nonempty token and task"));
    }
    Ok(slot_of(&personalize(task, token), cfg))
}

/// `phi_i(x) = sum_{t: h(t) = i} xi(t) x_t`.
///
/// Contributions are added in ascending token order. The output is sparse
/// when `nnz(x) < m / 4`.
pub fn feature_map(x: &SparseVector, cfg: &HashConfig) -> HashedVector {
    let m = cfg.m();
    if x.len() < m / 4 {
        let mut acc: BTreeMap<usize, f64> = BTreeMap::new();
        for (token, value) in x.iter() {
            let s = slot_of(token, cfg);
            *acc.entry(s.bucket).or_insert(0.0) += s.sign_f64() * value;
        }
        acc.retain(|_, v| *v != 0.0);
        HashedVector::from_sparse(m, acc).expect("buckets are masked into range")
    } else {
        let mut dense = vec![0.0; m];
        for (token, value) in x.iter() {
            let s = slot_of(token, cfg);
            dense[s.bucket] += s.sign_f64() * value;
        }
        HashedVector::from_dense(dense)
    }
}

/// Replication count `c` for [`replicate`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReplicationParams {
    c: usize,
}

impl ReplicationParams {
    pub fn new(c: usize) -> Result<Self> {
        if c == 0 {
            return Err(Error::input("replication count must be at least 1"));
        }
        Ok(ReplicationParams { c })
    }

    pub fn c(&self) -> usize {
        self.c
    }

    pub fn scale(&self) -> f64 {
        1.0 / (self.c as f64).sqrt()
    }
}

/// Name of replica `index` of `token`: `#` in the token is doubled, then
/// `#<index>` is appended, so distinct `(token, index)` pairs never clash.
pub fn replica_token(token: &[u8], index: usize) -> Vec<u8> {
    let mut out = Vec::with_capacity(token.len() + 4);
    for &b in token {
        out.push(b);
        if b == b'#' {
            out.push(b'#');
        }
    }
    out.push(b'#');
    out.extend_from_slice(index.to_string().as_bytes());
    out
}

/// `x' = c^{-1/2} (x, ..., x)`: every entry is split into `c` copies under
/// derived token names.
pub fn replicate(x: &SparseVector, p: ReplicationParams) -> SparseVector {
    let root = (p.c as f64).sqrt();
    let pairs = x.iter().flat_map(|(token, value)| {
        (0..p.c).map(move |i| (replica_token(token, i), value / root))
    });
    SparseVector::from_pairs(pairs).expect("replica tokens are nonempty and finite")
}

/// Whether `h` is injective on `tokens`.
pub fn is_injective<'a, I>(tokens: I, cfg: &HashConfig) -> bool
where
    I: IntoIterator<Item = &'a [u8]>,
{
    let mut seen = HashSet::new();
    tokens
        .into_iter()
        .all(|t| seen.insert(slot_of(t, cfg).bucket))
}

/// Searches bucket seeds `start, start + 1, ...` for a config that is
/// injective on `tokens`.
pub fn find_injective_config(
    tokens: &[Vec<u8>],
    bits: u32,
    start_seed: u32,
    max_tries: u32,
) -> Result<Option<HashConfig>> {
    for k in 0..max_tries {
        let cfg = HashConfig::new(bits, start_seed.wrapping_add(k))?;
        if is_injective(tokens.iter().map(|t| t.as_slice()), &cfg) {
            return Ok(Some(cfg));
        }
    }
    Ok(None)
}
