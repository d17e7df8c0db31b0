use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// A real vector indexed by byte-string tokens.
///
/// Entries are kept in ascending byte order of the token, which fixes the
/// summation order of every reduction over the vector. Zero values are never
/// stored.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SparseVector {
    entries: BTreeMap<Vec<u8>, f64>,
    l2: f64,
    linf: f64,
}

impl SparseVector {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a vector from `(token, value)` pairs; repeated tokens are summed.
    pub fn from_pairs<I, T>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (T, f64)>,
        T: AsRef<[u8]>,
    {
        let mut entries = BTreeMap::new();
        for (token, value) in pairs {
            let token = token.as_ref();
            if token.is_empty() {
                return Err(Error::input("empty token"));
            }
            if !value.is_finite() {
                return Err(Error::input(format!(
                    "non-finite value for token {:?}",
                    String::from_utf8_lossy(token)
                )));
            }
            *entries.entry(token.to_vec()).or_insert(0.0) += value;
        }
        Ok(Self::from_map(entries))
    }

    fn from_map(mut entries: BTreeMap<Vec<u8>, f64>) -> Self {
        entries.retain(|_, v| *v != 0.0);
        let mut v = SparseVector {
            entries,
            l2: 0.0,
            linf: 0.0,
        };
        v.refresh_norms();
        v
    }

    fn refresh_norms(&mut self) {
        let (sq, max) = self
            .entries
            .values()
            .fold((0.0f64, 0.0f64), |(s, m), &v| (s + v * v, m.max(v.abs())));
        self.l2 = sq.sqrt();
        self.linf = max;
    }

    /// `n` tokens `"{prefix}{i}"`, each with value `n^{-1/2}`.
    pub fn uniform(prefix: &str, n: usize) -> Self {
        if n == 0 {
            return Self::new();
        }
        let v = 1.0 / (n as f64).sqrt();
        Self::from_pairs((0..n).map(|i| (format!("{prefix}{i}"), v)))
            .expect("generated tokens are nonempty")
    }

    pub fn one_hot(token: &str) -> Result<Self> {
        Self::from_pairs([(token, 1.0)])
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, token: &[u8]) -> f64 {
        self.entries.get(token).copied().unwrap_or(0.0)
    }

    /// Entries in ascending token order.
    pub fn iter(&self) -> impl Iterator<Item = (&[u8], f64)> + '_ {
        self.entries.iter().map(|(k, &v)| (k.as_slice(), v))
    }

    pub fn tokens(&self) -> impl Iterator<Item = &[u8]> + '_ {
        self.entries.keys().map(|k| k.as_slice())
    }

    pub fn l2(&self) -> f64 {
        self.l2
    }

    pub fn l2_squared(&self) -> f64 {
        self.entries.values().map(|v| v * v).sum()
    }

    pub fn linf(&self) -> f64 {
        self.linf
    }

    pub fn l1(&self) -> f64 {
        self.entries.values().map(|v| v.abs()).sum()
    }

    pub fn dot(&self, other: &SparseVector) -> f64 {
        let (small, large) = if self.len() <= other.len() {
            (self, other)
        } else {
            (other, self)
        };
        small
            .entries
            .iter()
            .map(|(k, v)| v * large.entries.get(k).copied().unwrap_or(0.0))
            .sum()
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self::from_map(self.entries.iter().map(|(k, v)| (k.clone(), a * v)).collect())
    }

    /// `a * self + b * other`.
    pub fn combine(&self, a: f64, other: &SparseVector, b: f64) -> Self {
        let mut out: BTreeMap<Vec<u8>, f64> =
            self.entries.iter().map(|(k, v)| (k.clone(), a * v)).collect();
        for (k, v) in &other.entries {
            *out.entry(k.clone()).or_insert(0.0) += b * v;
        }
        Self::from_map(out)
    }

    pub fn sub(&self, other: &SparseVector) -> Self {
        self.combine(1.0, other, -1.0)
    }

    /// `|x|_inf / |x|_2`, or 0 for the zero vector.
    pub fn spikiness(&self) -> f64 {
        if self.l2 == 0.0 {
            0.0
        } else {
            self.linf / self.l2
        }
    }
}
