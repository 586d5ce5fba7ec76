//! Finite-`n` indicators for the growth-rate conditions on `(n, k)` under
//! which consistency and the Bahadur limits are known to hold.
//!
//! A condition of the form `a_n → ∞` is flagged when `a_n ≥ 1/threshold`,
//! and `a_n → 0` when `a_n ≤ threshold`. `None` marks a condition that does
//! not apply to the given order.

use serde::Serialize;

use crate::bahadur::c_sequence;

pub const DEFAULT_RATE_THRESHOLD: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateFlags {
    /// `k ≤ n`.
    pub a1: bool,
    /// `n/k → ∞`.
    pub n_over_k: bool,
    /// `n/k → ∞` for `0 < α ≤ 2` (strong consistency).
    pub strong_consistency: Option<bool>,
    /// `n/(k ln k) → ∞` for `α > 2` (consistency).
    pub consistency_high_order: Option<bool>,
    /// `n/(k ln n) → ∞` for `0 < α ≤ 1`.
    pub bahadur_low_order: Option<bool>,
    /// `n/(c_α(n) k ln n) → ∞` for `α > 1`.
    pub bahadur_high_order: Option<bool>,
    /// `k ln n/n → 0` for `0 < α ≤ 1`.
    pub efficiency_low_order: Option<bool>,
    /// `k^{2−1/α} ln n/n → 0` for `α > 1`.
    pub efficiency_high_order: Option<bool>,
}

impl RateFlags {
    /// Flags in a fixed order with stable names.
    pub fn named(&self) -> [(&'static str, Option<bool>); 8] {
        [
            ("a1", Some(self.a1)),
            ("n_over_k", Some(self.n_over_k)),
            ("strong_consistency", self.strong_consistency),
            ("consistency_high_order", self.consistency_high_order),
            ("bahadur_low_order", self.bahadur_low_order),
            ("bahadur_high_order", self.bahadur_high_order),
            ("efficiency_low_order", self.efficiency_low_order),
            ("efficiency_high_order", self.efficiency_high_order),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateReport {
    pub n: u64,
    pub k: u64,
    pub alpha: f64,
    pub threshold: f64,
    pub n_over_k: f64,
    /// `None` when `k < 2`.
    pub n_over_k_ln_k: Option<f64>,
    pub k_ln_n_over_n: f64,
    /// `k^{2−1/α} ln n/n`, which equals `k^{b(α)+1} ln n/n` for
    /// `b(α) = (α−1)/α`.
    pub k_power_ln_n_over_n: f64,
    /// `n/(c_α(n) k ln n)`; `None` when `c_α` is undefined.
    pub n_over_c_k_ln_n: Option<f64>,
    pub flags: RateFlags,
}

pub fn check_rate_conditions(n: u64, k: u64, alpha: f64) -> RateReport {
    check_rate_conditions_with(n, k, alpha, DEFAULT_RATE_THRESHOLD)
}

pub fn check_rate_conditions_with(n: u64, k: u64, alpha: f64, threshold: f64) -> RateReport {
    let nf = n.max(1) as f64;
    let kf = k.max(1) as f64;
    let ln_n = nf.ln();
    let big = 1.0 / threshold;

    let n_over_k = nf / kf;
    let n_over_k_ln_k = (k >= 2).then(|| nf / (kf * kf.ln()));
    let k_ln_n_over_n = kf * ln_n / nf;
    let k_power_ln_n_over_n = kf.powf(2.0 - 1.0 / alpha) * ln_n / nf;
    let n_over_c_k_ln_n = c_sequence(alpha, n, k)
        .ok()
        .filter(|_| n >= 2)
        .map(|c| nf / (c * kf * ln_n));

    let low = alpha <= 1.0;
    let high = alpha > 1.0;
    let flags = RateFlags {
        a1: k <= n,
        n_over_k: n_over_k >= big,
        strong_consistency: (alpha <= 2.0).then_some(n_over_k >= big),
        consistency_high_order: (alpha > 2.0).then(|| n_over_k_ln_k.is_some_and(|v| v >= big)),
        bahadur_low_order: low.then_some(n >= 2 && nf / (kf * ln_n) >= big),
        bahadur_high_order: high.then(|| n_over_c_k_ln_n.is_some_and(|v| v >= big)),
        efficiency_low_order: low.then_some(k_ln_n_over_n <= threshold),
        efficiency_high_order: high.then_some(k_power_ln_n_over_n <= threshold),
    };
    RateReport {
        n,
        k,
        alpha,
        threshold,
        n_over_k,
        n_over_k_ln_k,
        k_ln_n_over_n,
        k_power_ln_n_over_n,
        n_over_c_k_ln_n,
        flags,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comfortable_regime() {
        let r = check_rate_conditions(1_000_000, 10, 2.0);
        for (name, flag) in r.flags.named() {
            assert_ne!(flag, Some(false), "{name}");
        }
        assert_eq!(r.flags.consistency_high_order, None);
        assert_eq!(r.flags.bahadur_high_order, Some(true));
    }

    #[test]
    fn boundary_of_a1() {
        let r = check_rate_conditions(50, 50, 1.0);
        assert_eq!(r.n_over_k, 1.0);
        assert!(r.flags.a1);
        assert!(!r.flags.n_over_k);
    }

    #[test]
    fn kl_order_scopes() {
        let r = check_rate_conditions(1000, 10, 1.0);
        assert_eq!(r.flags.consistency_high_order, None);
        assert_eq!(r.flags.bahadur_high_order, None);
        assert_eq!(r.flags.efficiency_high_order, None);
        assert!(r.flags.bahadur_low_order.is_some());
    }
}
