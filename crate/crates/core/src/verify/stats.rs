/// Two-sided 99% standard normal quantile; the upper end of the 99% Wilson
/// interval is used as the empirical tail estimate.
pub const Z_99: f64 = 2.575_829_303_548_900_4;

/// Upper limit of the Wilson score interval for `successes` out of `n`.
pub fn wilson_upper(successes: u64, n: u64, z: f64) -> f64 {
    if n == 0 {
        return 1.0;
    }
    let n = n as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let centre = p + z2 / (2.0 * n);
    let spread = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    ((centre + spread) / (1.0 + z2 / n)).min(1.0)
}

/// Streaming mean and variance (Welford).
#[derive(Debug, Clone, Copy, Default)]
pub struct RunningStats {
    n: u64,
    mean: f64,
    m2: f64,
}

impl RunningStats {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    /// Combines two partial accumulators (Chan et al.).
    pub fn merge(&mut self, other: &RunningStats) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *other;
            return;
        }
        let n = self.n + other.n;
        let d = other.mean - self.mean;
        self.mean += d * other.n as f64 / n as f64;
        self.m2 += other.m2 + d * d * self.n as f64 * other.n as f64 / n as f64;
        self.n = n;
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }

    pub fn std_dev(&self) -> f64 {
        self.variance().sqrt()
    }

    /// Standard error of the mean.
    pub fn std_error(&self) -> f64 {
        if self.n == 0 {
            f64::INFINITY
        } else {
            self.std_dev() / (self.n as f64).sqrt()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilson_reference_values() {
        // z = 2.5758, 0 of 100 000: z^2 / (n + z^2).
        let u = wilson_upper(0, 100_000, Z_99);
        assert!((u - 6.634_456e-5).abs() < 1e-10, "{u}");
        // 50 of 100 at z = 1.96: 0.59617.
        assert!((wilson_upper(50, 100, 1.96) - 0.596_17).abs() < 1e-5);
        assert_eq!(wilson_upper(0, 0, Z_99), 1.0);
        assert_eq!(wilson_upper(10, 10, Z_99), 1.0);
    }

    #[test]
    fn running_stats_match_two_pass() {
        let xs: Vec<f64> = (0..1000).map(|i| ((i * 37) % 101) as f64 * 0.1 - 3.0).collect();
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (xs.len() - 1) as f64;
        let mut all = RunningStats::new();
        let mut a = RunningStats::new();
        let mut b = RunningStats::new();
        for (i, &x) in xs.iter().enumerate() {
            all.push(x);
            if i < 300 { a.push(x) } else { b.push(x) }
        }
        a.merge(&b);
        for s in [all, a] {
            assert!((s.mean() - mean).abs() < 1e-12);
            assert!((s.variance() - var).abs() < 1e-10);
        }
    }
}
