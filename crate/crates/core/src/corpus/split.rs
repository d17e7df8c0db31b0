use super::CorpusLine;
use crate::error::{Error, Result};

/// Fraction of the observed time range used for training: 10 of 14 days.
pub const TRAIN_FRACTION: f64 = 10.0 / 14.0;

#[derive(Debug, Clone)]
pub struct TimeSplit {
    /// Lines strictly before `cutoff`, in timestamp order.
    pub train: Vec<CorpusLine>,
    /// Lines at or after `cutoff`, in timestamp order.
    pub test: Vec<CorpusLine>,
    pub cutoff: f64,
    pub warning: Option<String>,
}

/// Splits at `min_t + fraction * (max_t - min_t)`. Both halves come back
/// sorted by timestamp; equal timestamps keep their input order.
pub fn time_split(mut lines: Vec<CorpusLine>, fraction: f64) -> Result<TimeSplit> {
    if lines.is_empty() {
        return Err(Error::input("cannot split an empty corpus"));
    }
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::input(format!("train fraction must be in (0, 1], got {fraction}")));
    }
    lines.sort_by_key(|l| l.timestamp);
    let lo = lines[0].timestamp;
    let hi = lines[lines.len() - 1].timestamp;
    if lo == hi {
        return Ok(TimeSplit {
            cutoff: lo as f64,
            train: lines,
            test: Vec::new(),
            warning: Some(format!(
                "all timestamps equal ({lo}); everything goes to training and the test set is empty"
            )),
        });
    }
    let cutoff = lo as f64 + fraction * (hi - lo) as f64;
    let at = lines.partition_point(|l| (l.timestamp as f64) < cutoff);
    let test = lines.split_off(at);
    Ok(TimeSplit {
        train: lines,
        test,
        cutoff,
        warning: None,
    })
}
