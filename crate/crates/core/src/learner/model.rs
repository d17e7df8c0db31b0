use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use crate::corpus::Label;
use crate::error::{Error, Result};
use crate::hashcore::{HashConfig, HashedVector};

pub const MODEL_MAGIC: &[u8; 4] = b"FHMT";
pub const MODEL_VERSION: u32 = 1;
pub const DEFAULT_LR0: f64 = 0.5;
const HEADER_LEN: usize = 4 + 4 + 4 + 4 + 4 + 8 + 4;

/// One hashed weight vector `w_h` holding the global model and every
/// per-user model at once.
#[derive(Debug, Clone, PartialEq)]
pub struct HashedModel {
    cfg: HashConfig,
    weights: Vec<f64>,
    examples_seen: u64,
    lr0: f64,
}

impl HashedModel {
    pub fn new(cfg: HashConfig, lr0: f64) -> Result<Self> {
        if !(lr0.is_finite() && lr0 > 0.0) {
            return Err(Error::input(format!("lr0 must be positive and finite, got {lr0}")));
        }
        Ok(HashedModel {
            weights: vec![0.0; cfg.m()],
            cfg,
            examples_seen: 0,
            lr0,
        })
    }

    /// Wraps explicit weights, e.g. the hashed image of un-hashed weights.
    pub fn from_weights(cfg: HashConfig, weights: Vec<f64>, lr0: f64) -> Result<Self> {
        if weights.len() != cfg.m() {
            return Err(Error::Dimension {
                left: weights.len(),
                right: cfg.m(),
            });
        }
        if let Some(i) = weights.iter().position(|w| !w.is_finite()) {
            return Err(Error::input(format!("weight {i} is not finite")));
        }
        let mut model = Self::new(cfg, lr0)?;
        model.weights = weights;
        Ok(model)
    }

    pub fn cfg(&self) -> &HashConfig {
        &self.cfg
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn examples_seen(&self) -> u64 {
        self.examples_seen
    }

    pub fn lr0(&self) -> f64 {
        self.lr0
    }

    pub fn nonzero_buckets(&self) -> usize {
        self.weights.iter().filter(|w| **w != 0.0).count()
    }

    /// Learning rate of the next step, `lr0 / sqrt(t)` with
    /// `t = examples_seen + 1`.
    pub fn next_rate(&self) -> f64 {
        self.lr0 / ((self.examples_seen + 1) as f64).sqrt()
    }

    /// Raw score `<phi, w_h>`; spam if above the calibrated threshold.
    pub fn predict(&self, phi: &HashedVector) -> Result<f64> {
        phi.dot_dense(&self.weights)
    }

    /// One square-loss SGD step. Only `phi`'s nonzero buckets are touched.
    /// On a non-finite prediction or update the model is left unchanged.
    pub fn sgd_update(&mut self, phi: &HashedVector, label: Label) -> Result<f64> {
        let t = self.examples_seen + 1;
        let y_hat = self.predict(phi)?;
        if !y_hat.is_finite() {
            return Err(Error::Divergence { step: t, bucket: None });
        }
        let step = self.next_rate() * (label.as_f64() - y_hat);
        let nonzeros = phi.nonzeros();
        let mut updated = Vec::with_capacity(nonzeros.len());
        for (i, x) in nonzeros {
            let w = self.weights[i] + step * x;
            if !w.is_finite() {
                return Err(Error::Divergence {
                    step: t,
                    bucket: Some(i),
                });
            }
            updated.push((i, w));
        }
        for (i, w) in updated {
            self.weights[i] = w;
        }
        self.examples_seen = t;
        Ok(y_hat)
    }

    /// Multiplies every weight by `a`.
    pub fn scale(&mut self, a: f64) {
        self.weights.iter_mut().for_each(|w| *w *= a);
    }

    /// Little-endian: magic, u32 version, u32 bits, u32 bucket seed, u32 sign
    /// seed, u64 examples seen, f32 lr0, then `m` f32 weights.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + 4 * self.weights.len());
        out.extend_from_slice(MODEL_MAGIC);
        out.extend_from_slice(&MODEL_VERSION.to_le_bytes());
        out.extend_from_slice(&self.cfg.bits().to_le_bytes());
        out.extend_from_slice(&self.cfg.bucket_seed().to_le_bytes());
        out.extend_from_slice(&self.cfg.sign_seed().to_le_bytes());
        out.extend_from_slice(&self.examples_seen.to_le_bytes());
        out.extend_from_slice(&(self.lr0 as f32).to_le_bytes());
        for w in &self.weights {
            out.extend_from_slice(&(*w as f32).to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let corrupt = |msg: String| Error::CorruptModel(msg);
        if bytes.len() < HEADER_LEN {
            return Err(corrupt(format!(
                "{} bytes is shorter than the {HEADER_LEN}-byte header",
                bytes.len()
            )));
        }
        if &bytes[..4] != MODEL_MAGIC {
            return Err(corrupt("bad magic".into()));
        }
        let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
        let version = u32_at(4);
        if version != MODEL_VERSION {
            return Err(corrupt(format!("unsupported version {version}")));
        }
        let cfg = HashConfig::with_seeds(u32_at(8), u32_at(12), u32_at(16))
            .map_err(|e| corrupt(format!("bad hash config: {e}")))?;
        let examples_seen = u64::from_le_bytes(bytes[20..28].try_into().unwrap());
        let lr0 = f32::from_le_bytes(bytes[28..32].try_into().unwrap()) as f64;
        let body = &bytes[HEADER_LEN..];
        if body.len() != 4 * cfg.m() {
            return Err(corrupt(format!(
                "expected {} weight bytes for m = {}, found {}",
                4 * cfg.m(),
                cfg.m(),
                body.len()
            )));
        }
        let weights = body
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
            .collect();
        let mut model = Self::from_weights(cfg, weights, lr0).map_err(|e| corrupt(e.to_string()))?;
        model.examples_seen = examples_seen;
        Ok(model)
    }
}

pub fn save_model(model: &HashedModel, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    w.write_all(&model.to_bytes()).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn load_model(path: &Path) -> Result<HashedModel> {
    let mut bytes = Vec::new();
    File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;
    HashedModel::from_bytes(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    fn cfg() -> HashConfig {
        HashConfig::new(6, 11).unwrap()
    }

    fn phi(entries: &[(usize, f64)]) -> HashedVector {
        HashedVector::from_sparse(64, entries.iter().copied().collect::<BTreeMap<_, _>>()).unwrap()
    }

    #[test]
    fn first_step_adds_half_label_times_phi() {
        let mut m = HashedModel::new(cfg(), 0.5).unwrap();
        let x = phi(&[(3, 1.0), (9, -1.0), (40, 2.0)]);
        m.sgd_update(&x, Label::Ham).unwrap();
        assert_eq!(m.weights()[3], -0.5);
        assert_eq!(m.weights()[9], 0.5);
        assert_eq!(m.weights()[40], -1.0);
        assert_eq!(m.nonzero_buckets(), 3);
        assert_eq!(m.examples_seen(), 1);
    }

    #[test]
    fn zero_residual_is_noop() {
        let mut w = vec![0.0; 64];
        w[1] = 1.0;
        let mut m = HashedModel::from_weights(cfg(), w.clone(), 0.5).unwrap();
        m.sgd_update(&phi(&[(1, 1.0)]), Label::Spam).unwrap();
        assert_eq!(m.weights(), w.as_slice());
        assert_eq!(m.examples_seen(), 1);
    }

    #[test]
    fn score_after_one_step() {
        let mut m = HashedModel::new(cfg(), 0.5).unwrap();
        let x = phi(&[(2, 1.0), (5, 3.0)]);
        m.sgd_update(&x, Label::Spam).unwrap();
        assert_eq!(m.predict(&x).unwrap(), 0.5 * x.l2_squared());
        assert_eq!(m.predict(&x.clone().into_dense()).unwrap(), m.predict(&x).unwrap());
    }

    #[test]
    fn dimension_mismatch() {
        let m = HashedModel::new(cfg(), 0.5).unwrap();
        assert!(matches!(
            m.predict(&HashedVector::zeros(8)),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn divergence_leaves_model_untouched() {
        let mut m = HashedModel::new(cfg(), 0.5).unwrap();
        let x = phi(&[(7, 1e300), (8, 1.0)]);
        m.sgd_update(&x, Label::Spam).unwrap();
        let snapshot = m.clone();
        match m.sgd_update(&x, Label::Spam) {
            Err(Error::Divergence { step, .. }) => assert_eq!(step, 2),
            other => panic!("{other:?}"),
        }
        assert_eq!(m, snapshot);
    }

    #[test]
    fn bytes_round_trip_and_corruption() {
        let mut m = HashedModel::new(cfg(), 0.25).unwrap();
        m.sgd_update(&phi(&[(0, 1.0), (63, -2.0)]), Label::Spam).unwrap();
        let bytes = m.to_bytes();
        assert_eq!(bytes.len(), 32 + 4 * 64);
        let back = HashedModel::from_bytes(&bytes).unwrap();
        assert_eq!(back.to_bytes(), bytes);
        assert_eq!(back.examples_seen(), 1);
        assert!(matches!(
            HashedModel::from_bytes(&bytes[..bytes.len() - 1]),
            Err(Error::CorruptModel(_))
        ));
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(HashedModel::from_bytes(&bad).is_err());
        let mut bad = bytes;
        bad[4] = 9;
        assert!(HashedModel::from_bytes(&bad).is_err());
    }

    #[test]
    fn rejects_bad_lr0() {
        assert!(HashedModel::new(cfg(), 0.0).is_err());
        assert!(HashedModel::new(cfg(), f64::NAN).is_err());
    }
}
