use std::collections::BTreeMap;

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
enum Repr {
    Dense(Vec<f64>),
    Sparse(BTreeMap<usize, f64>),
}

/// An element of `R^m`, the image of a feature map.
///
/// Stored densely or as an ordered index map. Every reduction walks the
/// coordinates in ascending index order, so results do not depend on the
/// representation.
#[derive(Debug, Clone)]
pub struct HashedVector {
    m: usize,
    repr: Repr,
}

impl HashedVector {
    pub fn zeros(m: usize) -> Self {
        HashedVector {
            m,
            repr: Repr::Sparse(BTreeMap::new()),
        }
    }

    pub fn from_dense(values: Vec<f64>) -> Self {
        HashedVector {
            m: values.len(),
            repr: Repr::Dense(values),
        }
    }

    pub fn from_sparse(m: usize, entries: BTreeMap<usize, f64>) -> Result<Self> {
        if let Some((&i, _)) = entries.iter().next_back() {
            if i >= m {
                return Err(Error::Dimension { left: i + 1, right: m });
            }
        }
        Ok(HashedVector {
            m,
            repr: Repr::Sparse(entries),
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn is_dense(&self) -> bool {
        matches!(self.repr, Repr::Dense(_))
    }

    pub fn get(&self, i: usize) -> f64 {
        match &self.repr {
            Repr::Dense(v) => v.get(i).copied().unwrap_or(0.0),
            Repr::Sparse(map) => map.get(&i).copied().unwrap_or(0.0),
        }
    }

    /// Nonzero coordinates in ascending index order.
    pub fn nonzeros(&self) -> Vec<(usize, f64)> {
        match &self.repr {
            Repr::Dense(v) => v
                .iter()
                .enumerate()
                .filter(|(_, x)| **x != 0.0)
                .map(|(i, &x)| (i, x))
                .collect(),
            Repr::Sparse(map) => map
                .iter()
                .filter(|(_, x)| **x != 0.0)
                .map(|(&i, &x)| (i, x))
                .collect(),
        }
    }

    pub fn nnz(&self) -> usize {
        match &self.repr {
            Repr::Dense(v) => v.iter().filter(|x| **x != 0.0).count(),
            Repr::Sparse(map) => map.values().filter(|x| **x != 0.0).count(),
        }
    }

    pub fn to_dense(&self) -> Vec<f64> {
        match &self.repr {
            Repr::Dense(v) => v.clone(),
            Repr::Sparse(map) => {
                let mut out = vec![0.0; self.m];
                for (&i, &x) in map {
                    out[i] = x;
                }
                out
            }
        }
    }

    pub fn into_dense(self) -> Self {
        HashedVector::from_dense(self.to_dense())
    }

    pub fn into_sparse(self) -> Self {
        let m = self.m;
        HashedVector {
            m,
            repr: Repr::Sparse(self.nonzeros().into_iter().collect()),
        }
    }

    pub fn l1(&self) -> f64 {
        self.nonzeros().iter().map(|(_, x)| x.abs()).sum()
    }

    pub fn l2_squared(&self) -> f64 {
        self.nonzeros().iter().map(|(_, x)| x * x).sum()
    }

    pub fn l2(&self) -> f64 {
        self.l2_squared().sqrt()
    }

    pub fn linf(&self) -> f64 {
        self.nonzeros().iter().map(|(_, x)| x.abs()).fold(0.0, f64::max)
    }

    /// Entrywise `self + other`.
    pub fn add(&self, other: &HashedVector) -> Result<HashedVector> {
        self.check_dim(other)?;
        let mut acc: BTreeMap<usize, f64> = self.nonzeros().into_iter().collect();
        for (i, x) in other.nonzeros() {
            *acc.entry(i).or_insert(0.0) += x;
        }
        acc.retain(|_, x| *x != 0.0);
        Ok(HashedVector {
            m: self.m,
            repr: Repr::Sparse(acc),
        })
    }

    pub fn scaled(&self, a: f64) -> HashedVector {
        match &self.repr {
            Repr::Dense(v) => HashedVector::from_dense(v.iter().map(|x| a * x).collect()),
            Repr::Sparse(map) => HashedVector {
                m: self.m,
                repr: Repr::Sparse(map.iter().map(|(&i, &x)| (i, a * x)).collect()),
            },
        }
    }

    /// `sum_i self[i] * other[i]`, accumulated in ascending index order.
    pub fn dot(&self, other: &HashedVector) -> Result<f64> {
        self.check_dim(other)?;
        let a = self.nonzeros();
        let b = other.nonzeros();
        let (mut i, mut j) = (0, 0);
        let mut sum = 0.0;
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    sum += a[i].1 * b[j].1;
                    i += 1;
                    j += 1;
                }
            }
        }
        Ok(sum)
    }

    /// Dot product against a dense weight slice of the same length.
    pub fn dot_dense(&self, weights: &[f64]) -> Result<f64> {
        if weights.len() != self.m {
            return Err(Error::Dimension {
                left: self.m,
                right: weights.len(),
            });
        }
        Ok(self
            .nonzeros()
            .iter()
            .map(|&(i, x)| x * weights[i])
            .sum())
    }

    fn check_dim(&self, other: &HashedVector) -> Result<()> {
        if self.m != other.m {
            return Err(Error::Dimension {
                left: self.m,
                right: other.m,
            });
        }
        Ok(())
    }
}

impl PartialEq for HashedVector {
    fn eq(&self, other: &Self) -> bool {
        self.m == other.m && self.nonzeros() == other.nonzeros()
    }
}

/// Inner product of two hashed images.
pub fn hashed_inner(a: &HashedVector, b: &HashedVector) -> Result<f64> {
    a.dot(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dense_and_sparse_compare_equal() {
        let d = HashedVector::from_dense(vec![0.0, 1.5, 0.0, -2.0]);
        let s = d.clone().into_sparse();
        assert!(!s.is_dense());
        assert_eq!(d, s);
        assert_eq!(s.clone().into_dense(), d);
        assert_eq!(d.nnz(), 2);
    }

    #[test]
    fn inner_is_symmetric_and_checks_dims() {
        let a = HashedVector::from_dense(vec![1.0, 2.0, 3.0]);
        let b = HashedVector::from_dense(vec![-1.0, 0.5, 2.0]);
        assert_eq!(hashed_inner(&a, &b).unwrap(), hashed_inner(&b, &a).unwrap());
        assert_eq!(hashed_inner(&a, &b).unwrap(), 6.0);
        let c = HashedVector::zeros(4);
        assert!(matches!(hashed_inner(&a, &c), Err(Error::Dimension { .. })));
    }

    #[test]
    fn inner_with_zero_is_zero() {
        let a = HashedVector::from_dense(vec![1.0, 2.0, 3.0]);
        assert_eq!(hashed_inner(&a, &HashedVector::zeros(3)).unwrap(), 0.0);
    }

    #[test]
    fn sparse_rejects_out_of_range() {
        let mut m = BTreeMap::new();
        m.insert(4usize, 1.0);
        assert!(HashedVector::from_sparse(4, m).is_err());
    }
}
