//! Splitting the error of a hashed prediction into self-collision
//! (distortion) and cross-task (interference) parts, using explicitly
//! tracked un-hashed weights.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::features::{token_features, Example, FeatureOptions};
use super::model::HashedModel;
use super::train::OracleModel;
use crate::corpus::personalize;
use crate::error::{Error, Result};
use crate::hashcore::{feature_map, HashConfig, HashedVector, SparseVector, TASK_SEPARATOR};

/// Largest `vocabulary * (users + 1)` for which un-hashed weights are tracked.
pub const ORACLE_CAPACITY: usize = 1_000_000;

/// Un-hashed weights: the global `w_0` and one `w_u` per user, all indexed by
/// raw tokens.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ReferenceWeights {
    pub global: SparseVector,
    pub tasks: BTreeMap<String, SparseVector>,
}

impl ReferenceWeights {
    /// Splits an oracle's weights into `w_0` (plain tokens) and `w_u`
    /// (tokens of the form `u ++ 0x1F ++ t`).
    pub fn from_oracle(oracle: &OracleModel) -> Result<Self> {
        let mut global = Vec::new();
        let mut tasks: BTreeMap<String, Vec<(Vec<u8>, f64)>> = BTreeMap::new();
        for (token, w) in oracle.weights().iter() {
            match token.iter().position(|&b| b == TASK_SEPARATOR) {
                Some(at) => {
                    let user = String::from_utf8_lossy(&token[..at]).into_owned();
                    tasks.entry(user).or_default().push((token[at + 1..].to_vec(), w));
                }
                None => global.push((token.to_vec(), w)),
            }
        }
        Ok(ReferenceWeights {
            global: SparseVector::from_pairs(global)?,
            tasks: tasks
                .into_iter()
                .map(|(u, pairs)| Ok((u, SparseVector::from_pairs(pairs)?)))
                .collect::<Result<_>>()?,
        })
    }

    /// Distinct raw tokens across `w_0` and every `w_u`.
    pub fn vocabulary(&self) -> usize {
        let mut seen: BTreeSet<&[u8]> = self.global.tokens().collect();
        for w in self.tasks.values() {
            seen.extend(w.tokens());
        }
        seen.len()
    }

    pub fn oracle_mode(&self) -> bool {
        self.vocabulary()
            .checked_mul(self.tasks.len() + 1)
            .is_some_and(|n| n <= ORACLE_CAPACITY)
    }

    fn task_hashed(&self, user: &str, cfg: &HashConfig) -> Result<HashedVector> {
        match self.tasks.get(user) {
            Some(w) => Ok(feature_map(&personal(user, w)?, cfg)),
            None => Ok(HashedVector::zeros(cfg.m())),
        }
    }

    /// `w_h = phi_0(w_0) + sum_u phi_u(w_u)`.
    pub fn hashed(&self, cfg: &HashConfig) -> Result<Vec<f64>> {
        let mut w = feature_map(&self.global, cfg).to_dense();
        for user in self.tasks.keys() {
            for (i, v) in self.task_hashed(user, cfg)?.nonzeros() {
                w[i] += v;
            }
        }
        Ok(w)
    }

    pub fn hashed_model(&self, cfg: HashConfig, lr0: f64) -> Result<HashedModel> {
        HashedModel::from_weights(cfg, self.hashed(&cfg)?, lr0)
    }
}

fn personal(user: &str, x: &SparseVector) -> Result<SparseVector> {
    SparseVector::from_pairs(x.iter().map(|(t, v)| (personalize(user.as_bytes(), t), v)))
}

/// `<phi_0(x) + phi_u(x), w_h> = <x, w_0 + w_u> + eps_d + eps_i`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorDecomposition {
    /// Signed self-collision error `sum_{v in {0,u}} <phi_v(x), phi_v(w_v)> - <x, w_v>`.
    pub eps_d: f64,
    /// Remainder of the identity, `hashed - exact - eps_d`.
    pub eps_i: f64,
    /// `sum_{v in {0,u}} |<phi_v(x), phi_v(w_v)> - <x, w_v>|`.
    pub eps_d_abs: f64,
    /// Cross-task collisions summed term by term; equals `eps_i` up to
    /// rounding when the model is the hashed image of the reference weights.
    pub eps_i_direct: f64,
    pub hashed_score: f64,
    pub exact_score: f64,
}

/// Decomposes the hashed score of `ex` under `model` against the
/// un-hashed `reference` weights.
pub fn decompose_errors(
    ex: &Example,
    model: &HashedModel,
    reference: &ReferenceWeights,
    opts: FeatureOptions,
) -> Result<ErrorDecomposition> {
    if !reference.oracle_mode() {
        return Err(Error::UnsupportedMode(format!(
            "reference weights span {} tokens and {} users; tracking them exceeds {ORACLE_CAPACITY}",
            reference.vocabulary(),
            reference.tasks.len()
        )));
    }
    let cfg = model.cfg();
    let (x, _) = token_features(ex, FeatureOptions { personalized: false, ..opts })?;
    let phi0_x = feature_map(&x, cfg);
    let phi0_w0 = feature_map(&reference.global, cfg);
    let d0 = phi0_x.dot(&phi0_w0)? - x.dot(&reference.global);

    let mut exact = x.dot(&reference.global);
    let mut hashed_x = phi0_x.clone();
    let mut du = 0.0;
    let mut cross = 0.0;
    let users: Vec<&String> = reference.tasks.keys().collect();
    for v in &users {
        cross += phi0_x.dot(&reference.task_hashed(v, cfg)?)?;
    }
    if opts.personalized {
        // The personal copy covers the email's tokens but not the bias.
        let (plain, _) = token_features(ex, FeatureOptions::default())?;
        let plain = if opts.binary {
            SparseVector::from_pairs(plain.tokens().map(|t| (t.to_vec(), 1.0)))?
        } else {
            plain
        };
        let wu = reference.tasks.get(&ex.user).cloned().unwrap_or_default();
        let phiu_x = feature_map(&personal(&ex.user, &plain)?, cfg);
        let phiu_wu = reference.task_hashed(&ex.user, cfg)?;
        exact += plain.dot(&wu);
        du = phiu_x.dot(&phiu_wu)? - plain.dot(&wu);
        cross += phiu_x.dot(&phi0_w0)?;
        for v in users.iter().filter(|v| ***v != ex.user) {
            cross += phiu_x.dot(&reference.task_hashed(v, cfg)?)?;
        }
        hashed_x = hashed_x.add(&phiu_x)?;
    }
    let hashed = model.predict(&hashed_x)?;
    let eps_d = d0 + du;
    Ok(ErrorDecomposition {
        eps_d,
        eps_i: hashed - exact - eps_d,
        eps_d_abs: d0.abs() + du.abs(),
        eps_i_direct: cross,
        hashed_score: hashed,
        exact_score: exact,
    })
}
