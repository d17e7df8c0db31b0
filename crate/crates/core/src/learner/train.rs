use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::eval::Scored;
use super::features::{featurize_with, token_vector, Example, FeatureOptions};
use super::model::{HashedModel, DEFAULT_LR0};
use crate::corpus::Label;
use crate::error::{Error, Result};
use crate::hashcore::{HashConfig, SparseVector};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainOptions {
    pub features: FeatureOptions,
    pub lr0: f64,
    pub epochs: usize,
}

impl Default for TrainOptions {
    fn default() -> Self {
        TrainOptions {
            features: FeatureOptions::global(),
            lr0: DEFAULT_LR0,
            epochs: 1,
        }
    }
}

/// Examples in timestamp order (stable for equal timestamps). Training
/// examples must carry at least one token.
fn chronological(examples: &[Example]) -> Result<Vec<&Example>> {
    if let Some(e) = examples.iter().find(|e| !e.is_trainable()) {
        return Err(Error::input(format!(
            "training email of user {} at {} has no tokens",
            e.user, e.timestamp
        )));
    }
    let mut order: Vec<&Example> = examples.iter().collect();
    order.sort_by_key(|e| e.timestamp);
    Ok(order)
}

/// Trains a hashed model with SGD, visiting examples in timestamp order.
pub fn train(examples: &[Example], cfg: HashConfig, opts: &TrainOptions) -> Result<HashedModel> {
    let mut model = HashedModel::new(cfg, opts.lr0)?;
    let order = chronological(examples)?;
    let phis = order
        .iter()
        .map(|e| featurize_with(e, &cfg, opts.features))
        .collect::<Result<Vec<_>>>()?;
    for _ in 0..opts.epochs {
        for (phi, e) in phis.iter().zip(&order) {
            model.sgd_update(phi, e.label)?;
        }
    }
    Ok(model)
}

pub fn score_hashed(model: &HashedModel, test: &[Example], features: FeatureOptions) -> Result<Vec<Scored>> {
    test.iter()
        .map(|e| {
            let phi = featurize_with(e, model.cfg(), features)?;
            Ok(Scored {
                user: e.user.clone(),
                label: e.label,
                score: model.predict(&phi)?,
            })
        })
        .collect()
}

/// Number of training emails per user.
pub fn training_counts(train: &[Example]) -> BTreeMap<String, usize> {
    crate::corpus::emails_per_user(train)
}

/// The same learner without hashing: one weight per distinct (global or
/// personal) token. Equivalent to a hashed model whose hash is injective.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleModel {
    weights: HashMap<Vec<u8>, f64>,
    examples_seen: u64,
    lr0: f64,
}

impl OracleModel {
    pub fn new(lr0: f64) -> Result<Self> {
        if !(lr0.is_finite() && lr0 > 0.0) {
            return Err(Error::input(format!("lr0 must be positive and finite, got {lr0}")));
        }
        Ok(OracleModel {
            weights: HashMap::new(),
            examples_seen: 0,
            lr0,
        })
    }

    pub fn predict(&self, x: &SparseVector) -> f64 {
        x.iter()
            .map(|(t, v)| v * self.weights.get(t).copied().unwrap_or(0.0))
            .sum()
    }

    pub fn sgd_update(&mut self, x: &SparseVector, label: Label) -> Result<f64> {
        let t = self.examples_seen + 1;
        let y_hat = self.predict(x);
        let step = self.lr0 / (t as f64).sqrt() * (label.as_f64() - y_hat);
        if !(y_hat.is_finite() && step.is_finite()) {
            return Err(Error::Divergence { step: t, bucket: None });
        }
        for (token, v) in x.iter() {
            *self.weights.entry(token.to_vec()).or_insert(0.0) += step * v;
        }
        self.examples_seen = t;
        Ok(y_hat)
    }

    pub fn examples_seen(&self) -> u64 {
        self.examples_seen
    }

    /// Nonzero weights as a token vector.
    pub fn weights(&self) -> SparseVector {
        SparseVector::from_pairs(self.weights.iter().map(|(t, w)| (t.as_slice(), *w)))
            .expect("oracle weights are finite with nonempty tokens")
    }
}

pub fn train_oracle(examples: &[Example], opts: &TrainOptions) -> Result<OracleModel> {
    let mut model = OracleModel::new(opts.lr0)?;
    let order = chronological(examples)?;
    let xs = order
        .iter()
        .map(|e| token_vector(e, opts.features))
        .collect::<Result<Vec<_>>>()?;
    for _ in 0..opts.epochs {
        for (x, e) in xs.iter().zip(&order) {
            model.sgd_update(x, e.label)?;
        }
    }
    Ok(model)
}

pub fn score_oracle(model: &OracleModel, test: &[Example], features: FeatureOptions) -> Result<Vec<Scored>> {
    test.iter()
        .map(|e| {
            Ok(Scored {
                user: e.user.clone(),
                label: e.label,
                score: model.predict(&token_vector(e, features)?),
            })
        })
        .collect()
}
