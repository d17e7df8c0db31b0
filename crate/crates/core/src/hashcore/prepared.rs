use super::{HashConfig, SparseVector};
use crate::murmur3::PreparedKey;

/// A sparse vector with its tokens pre-mixed for repeated hashing under
/// many configs. Projections are bit-identical to
/// [`feature_map`](super::feature_map).
#[derive(Debug, Clone)]
pub struct PreparedVector {
    keys: Vec<PreparedKey>,
    values: Vec<f64>,
}

impl PreparedVector {
    pub fn new(x: &SparseVector) -> Self {
        let (keys, values) = x.iter().map(|(t, v)| (PreparedKey::new(t), v)).unzip();
        PreparedVector { keys, values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `(bucket, sign)` of entry `k` under `cfg`.
    #[inline]
    pub fn slot(&self, k: usize, cfg: &HashConfig) -> (usize, f64) {
        let key = &self.keys[k];
        let bucket = (key.hash(cfg.bucket_seed()) & cfg.mask()) as usize;
        let sign = if key.hash(cfg.sign_seed()) & 1 == 1 { 1.0 } else { -1.0 };
        (bucket, sign)
    }

    #[inline]
    pub fn bucket(&self, k: usize, cfg: &HashConfig) -> usize {
        (self.keys[k].hash(cfg.bucket_seed()) & cfg.mask()) as usize
    }

    /// Adds `scale * phi(x)` into `out`.
    pub fn project_into(&self, cfg: &HashConfig, scale: f64, out: &mut Projection) {
        for (k, &v) in self.values.iter().enumerate() {
            let (b, s) = self.slot(k, cfg);
            out.add(b, s * v * scale);
        }
    }
}

/// A reusable dense `R^m` buffer that remembers which coordinates were
/// written, so clearing costs `O(touched)` rather than `O(m)`.
#[derive(Debug, Clone)]
pub struct Projection {
    values: Vec<f64>,
    touched: Vec<usize>,
    marked: Vec<bool>,
}

impl Projection {
    pub fn new(m: usize) -> Self {
        Projection {
            values: vec![0.0; m],
            touched: Vec::new(),
            marked: vec![false; m],
        }
    }

    #[inline]
    pub fn add(&mut self, i: usize, v: f64) {
        if !self.marked[i] {
            self.marked[i] = true;
            self.touched.push(i);
        }
        self.values[i] += v;
    }

    pub fn get(&self, i: usize) -> f64 {
        self.values[i]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn touched(&self) -> &[usize] {
        &self.touched
    }

    pub fn clear(&mut self) {
        for &i in &self.touched {
            self.values[i] = 0.0;
            self.marked[i] = false;
        }
        self.touched.clear();
    }

    pub fn norm_squared(&self) -> f64 {
        self.touched.iter().map(|&i| self.values[i] * self.values[i]).sum()
    }

    pub fn linf(&self) -> f64 {
        self.touched
            .iter()
            .map(|&i| self.values[i].abs())
            .fold(0.0, f64::max)
    }

    pub fn dot(&self, other: &Projection) -> f64 {
        let (a, b) = if self.touched.len() <= other.touched.len() {
            (self, other)
        } else {
            (other, self)
        };
        a.touched.iter().map(|&i| a.values[i] * b.values[i]).sum()
    }

    /// `|self - other|^2`.
    pub fn distance_squared(&self, other: &Projection) -> f64 {
        let mut sum = 0.0;
        for &i in &self.touched {
            let d = self.values[i] - other.values[i];
            sum += d * d;
        }
        for &i in &other.touched {
            if !self.marked[i] {
                sum += other.values[i] * other.values[i];
            }
        }
        sum
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hashcore::feature_map;

    #[test]
    fn projection_matches_feature_map_bitwise() {
        let x = SparseVector::from_pairs((0..300).map(|i| (format!("tok{i}"), (i as f64).sin())))
            .unwrap();
        let p = PreparedVector::new(&x);
        for seed in 0..5u64 {
            let cfg = HashConfig::for_trial(6, seed).unwrap();
            let mut proj = Projection::new(cfg.m());
            p.project_into(&cfg, 1.0, &mut proj);
            let reference = feature_map(&x, &cfg).to_dense();
            assert_eq!(proj.values(), reference.as_slice());
            proj.clear();
            assert!(proj.values().iter().all(|v| *v == 0.0));
        }
    }

    #[test]
    fn distance_covers_both_supports() {
        let mut a = Projection::new(8);
        let mut b = Projection::new(8);
        a.add(1, 2.0);
        b.add(1, 1.0);
        b.add(5, 3.0);
        assert_eq!(a.distance_squared(&b), 1.0 + 9.0);
        assert_eq!(b.distance_squared(&a), 10.0);
        assert_eq!(a.dot(&b), 2.0);
    }
}
