//! Closed-form moments and tail bounds of the signed hash kernel.

use std::collections::BTreeSet;

use super::SparseVector;
use crate::error::{Error, Result};

/// Variance of `<x, x'>_phi` over random `(h, xi)`:
///
/// `(1/m) * sum_{i != j} (x_i^2 x'_j^2 + x_i x'_i x_j x'_j)`
///
/// The double sum is evaluated as `(sum a)(sum b) - sum a b` over the union
/// support.
pub fn variance_closed_form(x: &SparseVector, x2: &SparseVector, m: usize) -> Result<f64> {
    if m == 0 {
        return Err(Error::input("m must be positive"));
    }
    let support: BTreeSet<&[u8]> = x.tokens().chain(x2.tokens()).collect();
    let (mut sa, mut sb, mut sab, mut sp, mut spp) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for t in support {
        let (u, v) = (x.get(t), x2.get(t));
        let (a, b, p) = (u * u, v * v, u * v);
        sa += a;
        sb += b;
        sab += a * b;
        sp += p;
        spp += p * p;
    }
    let cross_sq = sa * sb - sab;
    let cross_prod = sp * sp - spp;
    Ok((cross_sq + cross_prod) / m as f64)
}

/// Variance of `|x'|^2_phi` predicted for `x' = replicate(x, c)` from the
/// variance of `x` itself: `sigma^2 / c + ((c - 1) / c) * (2 / m) * |x|^4`.
pub fn replicated_self_variance(sigma2_x: f64, l2_x: f64, c: usize, m: usize) -> f64 {
    let c = c as f64;
    sigma2_x / c + (c - 1.0) / c * 2.0 * l2_x.powi(4) / m as f64
}

/// Right-hand side of the Bernstein bound on the interference
/// `Pr{|<w, phi_u(x)>| > eps}` between a task vector `x` and a hashed
/// parameter vector `w` built from other tasks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterferenceBound {
    /// `2 exp(-(eps^2 / 2) / (|w|_2^2 |x|_2^2 / m + eps |w|_inf |x|_inf / 3))`
    pub raw: f64,
    /// `raw` clamped to `[0, 1]`.
    pub probability: f64,
}

impl InterferenceBound {
    pub fn is_vacuous(&self) -> bool {
        self.raw >= 1.0
    }
}

pub fn bernstein_interference_bound(
    w_l2: f64,
    w_linf: f64,
    x_l2: f64,
    x_linf: f64,
    m: usize,
    eps: f64,
) -> Result<InterferenceBound> {
    for (name, v) in [("w_l2", w_l2), ("w_linf", w_linf), ("x_l2", x_l2), ("x_linf", x_linf)] {
        if !(v >= 0.0) || !v.is_finite() {
            return Err(Error::input(format!("{name} must be a finite non-negative number, got {v}")));
        }
    }
    if !(eps > 0.0) {
        return Err(Error::input(format!("eps must be positive, got {eps}")));
    }
    if m == 0 {
        return Err(Error::input("m must be positive"));
    }
    let denom = w_l2 * w_l2 * x_l2 * x_l2 / m as f64 + eps * w_linf * x_linf / 3.0;
    let raw = if denom == 0.0 {
        0.0
    } else {
        2.0 * (-(eps * eps / 2.0) / denom).exp()
    };
    Ok(InterferenceBound {
        raw,
        probability: raw.clamp(0.0, 1.0),
    })
}

/// The `eps` at which [`bernstein_interference_bound`] equals `target`.
pub fn interference_eps_for_bound(
    target: f64,
    w_l2: f64,
    w_linf: f64,
    x_l2: f64,
    x_linf: f64,
    m: usize,
) -> Result<f64> {
    if !(target > 0.0 && target < 2.0) {
        return Err(Error::input("target bound must be in (0, 2)"));
    }
    if m == 0 {
        return Err(Error::input("m must be positive"));
    }
    // eps^2 / 2 = L (a + b eps), L = ln(2 / target)
    let l = (2.0 / target).ln();
    let a = w_l2 * w_l2 * x_l2 * x_l2 / m as f64;
    let b = w_linf * x_linf / 3.0;
    Ok(l * b + (l * l * b * b + 2.0 * l * a).sqrt())
}

/// Smallest `m` admitted by the norm-concentration bound:
/// `72 ln(k / delta) / eps^2` (`k = 1` for a single vector, `k = n` for a
/// set of `n` vectors).
pub fn min_buckets(eps: f64, delta: f64, k: f64) -> f64 {
    72.0 * (k / delta).ln() / (eps * eps)
}

/// Largest `|x|_inf` admitted by the norm-concentration bound for a unit
/// vector: `eps / (18 sqrt(ln(1/delta) ln(m/delta)))`.
pub fn max_linf_for_concentration(eps: f64, delta: f64, m: usize) -> f64 {
    eps / (18.0 * ((1.0 / delta).ln() * (m as f64 / delta).ln()).sqrt())
}

/// Largest spikiness `eta` used as the concrete gate for the inner-product and union bounds:
/// `eps / ln(m / delta)`.
pub fn max_eta_for_inner_bound(eps: f64, delta: f64, m: usize) -> f64 {
    eps / (m as f64 / delta).ln()
}

/// `1 / (2 sqrt(m ln(m / delta)))`, the `|x|_inf` ceiling of the
/// balls-and-bins bound.
pub fn balls_bins_max_linf(m: usize, delta: f64) -> f64 {
    1.0 / (2.0 * (m as f64 * (m as f64 / delta).ln()).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_hot_has_zero_variance() {
        let x = SparseVector::one_hot("a").unwrap();
        assert_eq!(variance_closed_form(&x, &x, 16).unwrap(), 0.0);
    }

    #[test]
    fn two_equal_halves_give_one_over_m() {
        let h = 1.0 / 2f64.sqrt();
        let x = SparseVector::from_pairs([("a", h), ("b", h)]).unwrap();
        for m in [1usize, 8, 1024] {
            let v = variance_closed_form(&x, &x, m).unwrap();
            assert!((v - 1.0 / m as f64).abs() < 1e-15);
        }
        assert!(variance_closed_form(&x, &x, 0).is_err());
    }

    #[test]
    fn bernstein_reference_point() {
        // 2 exp(-0.02 / (1/1024 + 0.2 * 0.01 / 3)), evaluated independently.
        let b = bernstein_interference_bound(1.0, 0.1, 1.0, 0.1, 1024, 0.2).unwrap();
        assert!((b.raw - 1.035_532_5e-5).abs() / 1.035_532_5e-5 < 0.01, "{}", b.raw);
    }

    #[test]
    fn bernstein_monotone_in_eps_and_m() {
        let mut prev = f64::INFINITY;
        for k in 1..40 {
            let b = bernstein_interference_bound(1.0, 0.1, 1.0, 0.1, 1024, 0.05 * k as f64)
                .unwrap()
                .raw;
            assert!(b < prev);
            prev = b;
        }
        assert!(prev < 1e-30);
        let mut prev = f64::INFINITY;
        for bits in 4..14 {
            let b = bernstein_interference_bound(1.0, 0.1, 1.0, 0.1, 1 << bits, 0.2)
                .unwrap()
                .raw;
            assert!(b < prev, "bits {bits}");
            prev = b;
        }
    }

    #[test]
    fn bernstein_rejects_negative_and_clamps() {
        assert!(bernstein_interference_bound(-1.0, 0.1, 1.0, 0.1, 16, 0.2).is_err());
        assert!(bernstein_interference_bound(1.0, 0.1, 1.0, 0.1, 16, 0.0).is_err());
        let b = bernstein_interference_bound(10.0, 1.0, 1.0, 1.0, 1, 0.01).unwrap();
        assert!(b.raw > 1.0 && b.probability == 1.0 && b.is_vacuous());
        let z = bernstein_interference_bound(0.0, 0.0, 1.0, 1.0, 16, 0.1).unwrap();
        assert_eq!(z.raw, 0.0);
    }

    #[test]
    fn eps_solver_inverts_bound() {
        let eps = interference_eps_for_bound(0.1, 7.0, 0.3, 1.0, 1.0 / 32.0, 1 << 16).unwrap();
        let b = bernstein_interference_bound(7.0, 0.3, 1.0, 1.0 / 32.0, 1 << 16, eps).unwrap();
        assert!((b.raw - 0.1).abs() < 1e-12);
    }

    #[test]
    fn bound_constants() {
        assert!((min_buckets(0.5, 0.05, 1.0) - 862.771).abs() < 1e-3);
        assert!(max_linf_for_concentration(0.5, 0.05, 1024) < 1.0 / 64.0);
    }
}
