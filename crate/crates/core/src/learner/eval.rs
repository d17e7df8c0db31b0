use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::Label;
use crate::error::{Error, Result};

/// Not-spam false-positive rate at which thresholds are calibrated.
pub const DEFAULT_FP_RATE: f64 = 0.01;

/// Smallest threshold `theta` with `|{s > theta}| / N <= fp_rate`, where the
/// scores are those of the not-spam test emails.
///
/// With `k = floor(fp_rate * N)` emails allowed above the threshold, this is
/// the `(N - k)`-th smallest score. Ties make the realized rate smaller, never
/// larger, because the comparison is strict.
pub fn calibrate_threshold(scores_on_ham: &[f64], fp_rate: f64) -> Result<f64> {
    if scores_on_ham.is_empty() {
        return Err(Error::input("cannot calibrate a threshold without not-spam scores"));
    }
    if !(fp_rate > 0.0 && fp_rate < 1.0) {
        return Err(Error::input(format!("fp rate must be in (0, 1), got {fp_rate}")));
    }
    if scores_on_ham.iter().any(|s| s.is_nan()) {
        return Err(Error::input("NaN among not-spam scores"));
    }
    let mut sorted = scores_on_ham.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    // The small slack keeps products like 0.29 * 100 from rounding down.
    let k = ((fp_rate * n as f64) + 1e-9).floor() as usize;
    Ok(sorted[n - 1 - k.min(n - 1)])
}

/// Index of the exponential bucket holding a user with `count` training
/// emails: `[0]`, `[1]`, `[2,3]`, `[4,7]`, `[8,15]`, ...
pub fn bucket_index(count: usize) -> usize {
    if count == 0 {
        0
    } else {
        (usize::BITS - count.leading_zeros()) as usize
    }
}

/// Inclusive range `(lo, hi)` of bucket `index`.
pub fn bucket_range(index: usize) -> (usize, usize) {
    match index {
        0 => (0, 0),
        i => (1 << (i - 1), (1 << i) - 1),
    }
}

pub fn bucket_label(index: usize) -> String {
    match bucket_range(index) {
        (lo, hi) if lo == hi => format!("[{lo}]"),
        (lo, hi) => format!("[{lo},{hi}]"),
    }
}

/// A scored test email.
#[derive(Debug, Clone, PartialEq)]
pub struct Scored {
    pub user: String,
    pub label: Label,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BucketStats {
    pub bucket: String,
    /// Distinct test users in the bucket.
    pub users: usize,
    pub spam: usize,
    pub uncaught_spam: usize,
    pub ham: usize,
    pub false_positives: usize,
    /// `uncaught_spam / spam`; absent when the bucket holds no spam.
    pub uncaught_rate: Option<f64>,
    /// `uncaught_rate` divided by the baseline's rate for the same bucket.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ratio: Option<f64>,
}

impl BucketStats {
    fn new(bucket: String) -> Self {
        BucketStats {
            bucket,
            users: 0,
            spam: 0,
            uncaught_spam: 0,
            ham: 0,
            false_positives: 0,
            uncaught_rate: None,
            ratio: None,
        }
    }

    fn record(&mut self, s: &Scored, threshold: f64) {
        let flagged = s.score > threshold;
        match s.label {
            Label::Spam => {
                self.spam += 1;
                self.uncaught_spam += usize::from(!flagged);
            }
            Label::Ham => {
                self.ham += 1;
                self.false_positives += usize::from(flagged);
            }
        }
    }

    fn finish(&mut self) {
        self.uncaught_rate = (self.spam > 0).then(|| self.uncaught_spam as f64 / self.spam as f64);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub threshold: f64,
    pub fp_rate: f64,
    pub overall: BucketStats,
    /// Exponential user buckets by training-email count, in increasing
    /// order; empty buckets are omitted.
    pub buckets: Vec<BucketStats>,
}

/// Spam-catch statistics at a fixed threshold. Users absent from
/// `train_counts` contributed no training emails.
pub fn evaluate_at(
    scored: &[Scored],
    train_counts: &BTreeMap<String, usize>,
    threshold: f64,
    fp_rate: f64,
) -> EvalReport {
    let mut overall = BucketStats::new("all".into());
    let mut buckets: BTreeMap<usize, (BucketStats, BTreeSet<&str>)> = BTreeMap::new();
    for s in scored {
        overall.record(s, threshold);
        let b = bucket_index(train_counts.get(&s.user).copied().unwrap_or(0));
        let (stats, users) = buckets
            .entry(b)
            .or_insert_with(|| (BucketStats::new(bucket_label(b)), BTreeSet::new()));
        stats.record(s, threshold);
        users.insert(&s.user);
    }
    overall.users = scored.iter().map(|s| s.user.as_str()).collect::<BTreeSet<_>>().len();
    overall.finish();
    let buckets = buckets
        .into_values()
        .map(|(mut stats, users)| {
            stats.users = users.len();
            stats.finish();
            stats
        })
        .collect();
    EvalReport {
        threshold,
        fp_rate,
        overall,
        buckets,
    }
}

/// Calibrates the threshold on the not-spam emails of `scored`, then
/// reports uncaught spam overall and per bucket.
pub fn evaluate(
    scored: &[Scored],
    train_counts: &BTreeMap<String, usize>,
    fp_rate: f64,
) -> Result<EvalReport> {
    let ham: Vec<f64> = scored
        .iter()
        .filter(|s| s.label == Label::Ham)
        .map(|s| s.score)
        .collect();
    let threshold = calibrate_threshold(&ham, fp_rate)?;
    Ok(evaluate_at(scored, train_counts, threshold, fp_rate))
}

fn ratio(rate: Option<f64>, base: Option<f64>) -> Option<f64> {
    match (rate, base) {
        (Some(r), Some(b)) if b > 0.0 => Some(r / b),
        (Some(0.0), Some(_)) => Some(1.0),
        _ => None,
    }
}

impl EvalReport {
    /// Fills in `ratio` against `baseline`, matching buckets by label. Zero
    /// over zero counts as a ratio of 1.
    pub fn compare_to(&mut self, baseline: &EvalReport) {
        self.overall.ratio = ratio(self.overall.uncaught_rate, baseline.overall.uncaught_rate);
        for b in &mut self.buckets {
            let base = baseline.buckets.iter().find(|x| x.bucket == b.bucket);
            b.ratio = ratio(b.uncaught_rate, base.and_then(|x| x.uncaught_rate));
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    /// One CSV row per bucket plus an `all` row.
    pub fn to_csv(&self) -> String {
        let fmt = |x: Option<f64>| x.map(|v| format!("{v:.6}")).unwrap_or_default();
        let mut out = String::from("bucket,users,spam,uncaught_spam,ham,false_positives,uncaught_rate,ratio\n");
        for b in self.buckets.iter().chain(std::iter::once(&self.overall)) {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                b.bucket,
                b.users,
                b.spam,
                b.uncaught_spam,
                b.ham,
                b.false_positives,
                fmt(b.uncaught_rate),
                fmt(b.ratio)
            );
        }
        out
    }
}
