use rayon::prelude::*;
use rayon::ThreadPool;

use crate::error::{Error, Result};

/// Trials per work unit. Fixed so that partial sums are merged in the same
/// order whatever the number of workers.
const CHUNK: u64 = 1024;

/// Executes Monte Carlo trials over disjoint seed ranges.
#[derive(Default)]
pub struct Runner {
    pool: Option<ThreadPool>,
}

/// Per-chunk totals: number of trials where the event fired, and the sum of
/// an auxiliary per-trial quantity.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct TrialTally {
    pub events: u64,
    pub aux_sum: f64,
    pub trials: u64,
}

impl Runner {
    pub fn new(jobs: usize) -> Result<Self> {
        if jobs <= 1 {
            return Ok(Runner::default());
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| Error::input(format!("cannot start {jobs} workers: {e}")))?;
        Ok(Runner { pool: Some(pool) })
    }

    /// Runs `trials` trials; trial `k` receives seed `base_seed + k`.
    ///
    /// `init` builds per-worker scratch state; `trial` returns whether the
    /// tail event occurred plus an auxiliary value to be summed.
    pub fn run<S, I, F>(&self, base_seed: u64, trials: u64, init: I, trial: F) -> TrialTally
    where
        I: Fn() -> S + Sync,
        F: Fn(u64, &mut S) -> (bool, f64) + Sync,
    {
        let chunks: Vec<(u64, u64)> = (0..trials.div_ceil(CHUNK))
            .map(|c| (c * CHUNK, ((c + 1) * CHUNK).min(trials)))
            .collect();
        let do_chunk = |&(lo, hi): &(u64, u64)| {
            let mut state = init();
            let mut tally = TrialTally::default();
            for k in lo..hi {
                let (event, aux) = trial(base_seed.wrapping_add(k), &mut state);
                tally.events += event as u64;
                tally.aux_sum += aux;
                tally.trials += 1;
            }
            tally
        };
        let partials: Vec<TrialTally> = match &self.pool {
            Some(pool) => pool.install(|| chunks.par_iter().map(do_chunk).collect()),
            None => chunks.iter().map(do_chunk).collect(),
        };
        partials.iter().fold(TrialTally::default(), |mut acc, p| {
            acc.events += p.events;
            acc.aux_sum += p.aux_sum;
            acc.trials += p.trials;
            acc
        })
    }
}
