//! Hashed compression of factor matrices `U` (n x d_U) and `W` (n x d_W)
//! of a matrix `M = U^T W`, and the entry estimator
//! `M^phi_ij = sum_k xi(k,i) xi'(k,j) u[h(k,i)] w[h'(k,j)]`.
//!
//! Entry `(j, k)` of a factor is hashed as the token `"j:k"` (decimal row,
//! colon, decimal column).

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hashcore::{hash_token, HashConfig, Slot};
use crate::verify::RunningStats;

/// A dense `rows x cols` real matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl FactorMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension {
                left: data.len(),
                right: rows * cols,
            });
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::input(format!(
                "entry ({}, {}) is not finite",
                i / cols.max(1),
                i % cols.max(1)
            )));
        }
        Ok(FactorMatrix { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        FactorMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    /// Entries i.i.d. standard normal.
    pub fn gaussian(rows: usize, cols: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = (0..rows * cols).map(|_| rng.sample(StandardNormal)).collect();
        FactorMatrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn scaled(&self, a: f64) -> Self {
        FactorMatrix {
            data: self.data.iter().map(|v| a * v).collect(),
            ..self.clone()
        }
    }

    pub fn add(&self, other: &FactorMatrix) -> Result<Self> {
        if (self.rows, self.cols) != (other.rows, other.cols) {
            return Err(Error::Dimension {
                left: self.data.len(),
                right: other.data.len(),
            });
        }
        Ok(FactorMatrix {
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
            ..self.clone()
        })
    }

    /// `self^T other`, the `cols x other.cols` product over the shared rows.
    pub fn transpose_mul(&self, other: &FactorMatrix) -> Result<FactorMatrix> {
        if self.rows != other.rows {
            return Err(Error::Dimension {
                left: self.rows,
                right: other.rows,
            });
        }
        let mut out = Self::zeros(self.cols, other.cols);
        for i in 0..self.cols {
            for j in 0..other.cols {
                out.data[i * other.cols + j] =
                    (0..self.rows).map(|k| self.get(k, i) * other.get(k, j)).sum();
            }
        }
        Ok(out)
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Reads `row<TAB>col<TAB>value` triples; `#` starts a comment line.
    /// Missing entries are zero; dimensions are one past the largest indices.
    pub fn read_triples(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_triples(&text)
    }

    pub fn parse_triples(text: &str) -> Result<Self> {
        let mut triples = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |msg: String| Error::Parse { line: n + 1, msg };
            let f: Vec<&str> = line.split('\t').collect();
            if f.len() != 3 {
                return Err(err(format!("expected 3 tab-separated fields, got {}", f.len())));
            }
            let r: usize = f[0].parse().map_err(|e| err(format!("bad row {:?}: {e}", f[0])))?;
            let c: usize = f[1].parse().map_err(|e| err(format!("bad column {:?}: {e}", f[1])))?;
            let v: f64 = f[2].parse().map_err(|e| err(format!("bad value {:?}: {e}", f[2])))?;
            if !v.is_finite() {
                return Err(err(format!("value {v} is not finite")));
            }
            triples.push((r, c, v));
        }
        let rows = triples.iter().map(|t| t.0 + 1).max().unwrap_or(0);
        let cols = triples.iter().map(|t| t.1 + 1).max().unwrap_or(0);
        let mut m = Self::zeros(rows, cols);
        for (r, c, v) in triples {
            m.data[r * cols + c] += v;
        }
        Ok(m)
    }

    /// Nonzero entries as `row<TAB>col<TAB>value` lines.
    pub fn to_triples(&self) -> String {
        let mut out = String::new();
        for r in 0..self.rows {
            for c in 0..self.cols {
                let v = self.get(r, c);
                if v != 0.0 {
                    let _ = writeln!(out, "{r}\t{c}\t{v:?}");
                }
            }
        }
        out
    }
}

/// The hashed token of factor entry `(row, col)`.
pub fn pair_token(row: usize, col: usize) -> String {
    format!("{row}:{col}")
}

fn pair_slot(row: usize, col: usize, cfg: &HashConfig) -> Slot {
    hash_token(pair_token(row, col).as_bytes(), cfg).expect("pair tokens are nonempty")
}

/// Slots of every entry of an `rows x cols` factor, row-major.
fn slots(rows: usize, cols: usize, cfg: &HashConfig) -> Vec<Slot> {
    (0..rows)
        .flat_map(|r| (0..cols).map(move |c| (r, c)))
        .map(|(r, c)| pair_slot(r, c, cfg))
        .collect()
}

fn compress(f: &FactorMatrix, slots: &[Slot], m: usize) -> Vec<f64> {
    let mut out = vec![0.0; m];
    for (v, s) in f.data.iter().zip(slots) {
        out[s.bucket] += s.sign_f64() * v;
    }
    out
}

/// Two hashed vectors `u, w` of length `m` standing in for `U` and `W`.
#[derive(Debug, Clone, PartialEq)]
pub struct CfSketch {
    cfg_u: HashConfig,
    cfg_w: HashConfig,
    inner: usize,
    d_u: usize,
    d_w: usize,
    u: Vec<f64>,
    w: Vec<f64>,
}

/// Compresses `U` under `cfg_u` and `W` under `cfg_w`. The two configs
/// must share `m` and differ in at least one seed.
pub fn sketch_factors(
    u: &FactorMatrix,
    w: &FactorMatrix,
    cfg_u: HashConfig,
    cfg_w: HashConfig,
) -> Result<CfSketch> {
    if u.rows != w.rows {
        return Err(Error::Dimension {
            left: u.rows,
            right: w.rows,
        });
    }
    if cfg_u.bits() != cfg_w.bits() {
        return Err(Error::input("both factors must be hashed into the same m"));
    }
    if cfg_u == cfg_w {
        return Err(Error::input("the two factors need independently seeded hashes"));
    }
    Ok(CfSketch {
        u: compress(u, &slots(u.rows, u.cols, &cfg_u), cfg_u.m()),
        w: compress(w, &slots(w.rows, w.cols, &cfg_w), cfg_w.m()),
        cfg_u,
        cfg_w,
        inner: u.rows,
        d_u: u.cols,
        d_w: w.cols,
    })
}

impl CfSketch {
    pub fn m(&self) -> usize {
        self.u.len()
    }

    /// Number of stored reals: `2m`, independent of the factor sizes.
    pub fn storage_len(&self) -> usize {
        self.u.len() + self.w.len()
    }

    pub fn u(&self) -> &[f64] {
        &self.u
    }

    pub fn w(&self) -> &[f64] {
        &self.w
    }

    pub fn cfg_u(&self) -> &HashConfig {
        &self.cfg_u
    }

    pub fn cfg_w(&self) -> &HashConfig {
        &self.cfg_w
    }

    /// `M^phi_ij = sum_k xi(k,i) xi'(k,j) u[h(k,i)] w[h'(k,j)]` over the
    /// `inner_dim` shared rows.
    pub fn estimate_entry(&self, i: usize, j: usize, inner_dim: usize) -> Result<f64> {
        if i >= self.d_u || j >= self.d_w {
            return Err(Error::input(format!(
                "entry ({i}, {j}) outside the {} x {} product",
                self.d_u, self.d_w
            )));
        }
        if inner_dim != self.inner {
            return Err(Error::Dimension {
                left: inner_dim,
                right: self.inner,
            });
        }
        Ok(self.entry(i, j, |k, i| pair_slot(k, i, &self.cfg_u), |k, j| {
            pair_slot(k, j, &self.cfg_w)
        }))
    }

    fn entry<A, B>(&self, i: usize, j: usize, slot_u: A, slot_w: B) -> f64
    where
        A: Fn(usize, usize) -> Slot,
        B: Fn(usize, usize) -> Slot,
    {
        (0..self.inner)
            .map(|k| {
                let a = slot_u(k, i);
                let b = slot_w(k, j);
                a.sign_f64() * b.sign_f64() * self.u[a.bucket] * self.w[b.bucket]
            })
            .sum()
    }

    /// Every entry of `M^phi`. Hashes each factor position once.
    pub fn estimate_matrix(&self) -> FactorMatrix {
        let su = slots(self.inner, self.d_u, &self.cfg_u);
        let sw = slots(self.inner, self.d_w, &self.cfg_w);
        let data = (0..self.d_u)
            .flat_map(|i| (0..self.d_w).map(move |j| (i, j)))
            .map(|(i, j)| {
                self.entry(i, j, |k, i| su[k * self.d_u + i], |k, j| sw[k * self.d_w + j])
            })
            .collect();
        FactorMatrix {
            rows: self.d_u,
            cols: self.d_w,
            data,
        }
    }
}

/// The config pair of sweep trial `seed`.
pub fn trial_configs(bits: u32, seed: u64) -> Result<(HashConfig, HashConfig)> {
    Ok((
        HashConfig::for_trial(bits, seed)?,
        HashConfig::for_trial_secondary(bits, seed)?,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub bits: u32,
    /// Mean over trials of `|M^phi - M|_F / |M|_F`, or of the absolute
    /// error `|M^phi - M|_F` when `M = 0`.
    pub mean_rel_err: f64,
    pub stddev: f64,
}

/// For each `bits`, the mean and standard deviation of the Frobenius error
/// of `M^phi` over `trials` seed pairs `base_seed, base_seed + 1, ...`.
pub fn frobenius_error_sweep(
    u: &FactorMatrix,
    w: &FactorMatrix,
    bits: &[u32],
    trials: u64,
    base_seed: u64,
) -> Result<Vec<SweepRow>> {
    if trials == 0 {
        return Err(Error::input("need at least one trial"));
    }
    let exact = u.transpose_mul(w)?;
    let norm = exact.frobenius();
    let denom = if norm > 0.0 { norm } else { 1.0 };
    bits.iter()
        .map(|&b| {
            let errors = (0..trials)
                .into_par_iter()
                .map(|t| {
                    let (cu, cw) = trial_configs(b, base_seed.wrapping_add(t))?;
                    let est = sketch_factors(u, w, cu, cw)?.estimate_matrix();
                    Ok(est.add(&exact.scaled(-1.0))?.frobenius() / denom)
                })
                .collect::<Result<Vec<f64>>>()?;
            let mut stats = RunningStats::new();
            errors.iter().for_each(|&e| stats.push(e));
            Ok(SweepRow {
                bits: b,
                mean_rel_err: stats.mean(),
                stddev: stats.std_dev(),
            })
        })
        .collect()
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("bits,mean_rel_err,stddev\n");
    for r in rows {
        let _ = writeln!(out, "{},{:.9},{:.9}", r.bits, r.mean_rel_err, r.stddev);
    }
    out
}
