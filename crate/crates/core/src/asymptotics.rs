//! Matching sample sizes and the growth of generating-sequence ratios.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bahadur::{c_sequence, g_closed_form};
use crate::error::{Error, Result};

/// Largest sample size [`matching_sample_size`] will search.
pub const MATCHING_CAP: u64 = 1_000_000_000_000_000;

/// Cell-count schedule `k(n)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum KRule {
    Constant {
        k: u64,
    },
    /// `⌊scale · n^exponent⌋`, at least 1.
    Power {
        exponent: f64,
        scale: f64,
    },
}

impl KRule {
    pub fn power(exponent: f64) -> Self {
        KRule::Power {
            exponent,
            scale: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            KRule::Constant { k: 0 } => Err(Error::invalid("constant k rule needs k ≥ 1")),
            KRule::Power { exponent, scale }
                if !(exponent.is_finite()
                    && exponent >= 0.0
                    && scale > 0.0
                    && scale.is_finite()) =>
            {
                Err(Error::invalid(format!(
                    "power k rule needs exponent ≥ 0 and scale > 0, got {exponent}, {scale}"
                )))
            }
            _ => Ok(()),
        }
    }

    pub fn eval(&self, n: u64) -> u64 {
        match *self {
            KRule::Constant { k } => k,
            KRule::Power { exponent, scale } => {
                // The relative nudge keeps exact powers such as 10^{10·0.3} from
                // rounding down.
                let x = scale * (n as f64).powf(exponent) * (1.0 + 1e-12);
                (x.floor() as u64).max(1)
            }
        }
    }

    /// `k(n)` without flooring, for analytic evaluation.
    pub fn eval_continuous(&self, n: f64) -> f64 {
        match *self {
            KRule::Constant { k } => k as f64,
            KRule::Power { exponent, scale } => scale * n.powf(exponent),
        }
    }
}

/// Smallest `m` with `m/c_{α₂}(m, k(m)) ≥ (g_{α₁}(Δ₁)/g_{α₂}(Δ₂))·n/c_{α₁}(n, k(n))`.
///
/// Exponential bracketing followed by integer bisection; the result is the
/// smallest solution whenever `m ↦ m/c_{α₂}(m)` is nondecreasing past the
/// bracket's lower end.
pub fn matching_sample_size(
    alpha1: f64,
    delta1: f64,
    alpha2: f64,
    delta2: f64,
    n: u64,
    k_rule: &KRule,
) -> Result<u64> {
    k_rule.validate()?;
    if n == 0 {
        return Err(Error::invalid("sample size n must be ≥ 1"));
    }
    let g1 = g_closed_form(alpha1, delta1)?;
    let g2 = g_closed_form(alpha2, delta2)?;
    if !(g1 > 0.0 && g2 > 0.0) {
        return Err(Error::domain("Bahadur functions must be positive"));
    }
    let c1 = c_sequence(alpha1, n, k_rule.eval(n))?;
    let target = (g1 / g2) * (n as f64 / c1);
    let reaches = |m: u64| -> bool {
        c_sequence(alpha2, m, k_rule.eval(m))
            .map(|c2| m as f64 / c2 >= target)
            .unwrap_or(false)
    };
    let mut hi = 1u64;
    while !reaches(hi) {
        if hi > MATCHING_CAP / 2 {
            return Err(Error::Capacity {
                what: "matching sample size",
                required: f64::INFINITY,
                budget: MATCHING_CAP as f64,
            });
        }
        hi *= 2;
    }
    let mut lo = hi / 2;
    if lo == 0 || reaches(lo) {
        return Ok(if lo == 0 { hi } else { lo });
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if reaches(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SequenceForm {
    /// `c(n) = 1`.
    ConstantOne,
    /// `c(n) = d · n^b`.
    PowerOfNPlain,
    /// `c(n) = α n^b / ln n`.
    PowerOfNOverLn,
    /// `c(n) = α k^b / ln k` with `k = k(n)`.
    PowerOfKOverLn,
}

/// Parametric generating sequence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SequenceSpec {
    pub form: SequenceForm,
    pub b: f64,
    pub d: f64,
    pub alpha: f64,
}

impl SequenceSpec {
    pub fn new(form: SequenceForm, b: f64, d: f64, alpha: f64) -> Result<Self> {
        let spec = Self { form, b, d, alpha };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::domain(format!(
                "order must be > 0, got {}",
                self.alpha
            )));
        }
        let ok = match self.form {
            SequenceForm::ConstantOne => true,
            SequenceForm::PowerOfNPlain => self.b > 0.0 && self.b < 1.0 && self.d > 0.0,
            SequenceForm::PowerOfNOverLn => self.b > 0.0 && self.b < 1.0,
            SequenceForm::PowerOfKOverLn => self.b > 0.0 && self.b.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!(
                "exponent b = {} or scale d = {} out of range for {:?}",
                self.b, self.d, self.form
            )))
        }
    }

    /// `c(n)` with a continuous cell count `k`; `None` where undefined.
    pub fn eval(&self, n: f64, k: f64) -> Option<f64> {
        let v = match self.form {
            SequenceForm::ConstantOne => 1.0,
            SequenceForm::PowerOfNPlain => self.d * n.powf(self.b),
            SequenceForm::PowerOfNOverLn => {
                if n <= 1.0 {
                    return None;
                }
                self.alpha * n.powf(self.b) / n.ln()
            }
            SequenceForm::PowerOfKOverLn => {
                if k <= 1.0 {
                    return None;
                }
                self.alpha * k.powf(self.b) / k.ln()
            }
        };
        (v.is_finite() && v > 0.0).then_some(v)
    }
}

const PROBE_LN_CAP: f64 = 690.0;

/// `c₂(m_n)/c₁(n)` along `n_grid`, where `m_n` is the real solution of
/// `m/c₂(m) = (g₁/g₂)·n/c₁(n)` and cell counts follow `k_rule` without
/// flooring.
pub fn ratio_limit_probe(
    spec1: &SequenceSpec,
    spec2: &SequenceSpec,
    deltas: (f64, f64),
    n_grid: &[f64],
    k_rule: &KRule,
) -> Result<Vec<f64>> {
    spec1.validate()?;
    spec2.validate()?;
    k_rule.validate()?;
    if n_grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::invalid("n grid must be strictly increasing"));
    }
    let g1 = g_closed_form(spec1.alpha, deltas.0)?;
    let g2 = g_closed_form(spec2.alpha, deltas.1)?;
    if !(g1 > 0.0 && g2 > 0.0) {
        return Err(Error::domain("Bahadur functions must be positive"));
    }
    let ratio = g1 / g2;
    n_grid
        .par_iter()
        .map(|&n| {
            let c1 = spec1
                .eval(n, k_rule.eval_continuous(n))
                .ok_or_else(|| Error::domain(format!("c₁ undefined at n = {n}")))?;
            let target = ratio * n / c1;
            let h = |ln_m: f64| -> Option<f64> {
                let m = ln_m.exp();
                spec2.eval(m, k_rule.eval_continuous(m)).map(|c2| m / c2)
            };
            let reaches = |ln_m: f64| h(ln_m).is_some_and(|v| v >= target);
            let mut hi = 2f64.ln();
            while !reaches(hi) {
                hi += std::f64::consts::LN_2;
                if hi > PROBE_LN_CAP {
                    return Err(Error::Capacity {
                        what: "probe matching size",
                        required: f64::INFINITY,
                        budget: PROBE_LN_CAP.exp(),
                    });
                }
            }
            let mut lo = hi - std::f64::consts::LN_2;
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if reaches(mid) {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            let m = hi.exp();
            let c2 = spec2
                .eval(m, k_rule.eval_continuous(m))
                .ok_or_else(|| Error::domain(format!("c₂ undefined at m = {m}")))?;
            Ok(c2 / c1)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alternatives::delta_half_support;
    use std::f64::consts::LN_2;

    #[test]
    fn identical_sides_match_n() {
        for &n in &[1u64, 17, 1000, 123_456] {
            let m = matching_sample_size(0.5, 0.3, 0.5, 0.3, n, &KRule::power(0.3)).unwrap();
            assert_eq!(m, n);
            let m = matching_sample_size(2.0, 0.3, 2.0, 0.3, n.max(2), &KRule::Constant { k: 10 })
                .unwrap();
            assert_eq!(m, n.max(2));
        }
    }

    #[test]
    fn linear_relation_for_low_orders() {
        let d = delta_half_support(0.5).unwrap();
        let n = 1000;
        let m = matching_sample_size(1.0, 0.5, 0.5, d, n, &KRule::power(0.3)).unwrap();
        let expected = (0.5 / LN_2 * n as f64).ceil() as u64;
        assert_eq!(m, expected);
    }

    #[test]
    fn k_rule_flooring() {
        assert_eq!(KRule::power(0.3).eval(10_000_000_000), 1000);
        assert_eq!(KRule::power(0.3).eval(1), 1);
        assert_eq!(KRule::Constant { k: 7 }.eval(3), 7);
    }

    #[test]
    fn empty_grid() {
        let s = SequenceSpec::new(SequenceForm::ConstantOne, 0.0, 1.0, 1.0).unwrap();
        let out = ratio_limit_probe(&s, &s, (0.1, 0.1), &[], &KRule::power(0.3)).unwrap();
        assert!(out.is_empty());
    }

    #[test]
    fn plain_power_growth_exponent() {
        let s1 = SequenceSpec::new(SequenceForm::PowerOfNPlain, 0.3, 1.0, 1.0).unwrap();
        let s2 = SequenceSpec::new(SequenceForm::PowerOfNPlain, 0.6, 1.0, 1.0).unwrap();
        let grid = [1e6, 1e8];
        let r = ratio_limit_probe(&s1, &s2, (0.2, 0.2), &grid, &KRule::power(0.3)).unwrap();
        let slope = (r[1] / r[0]).ln() / (grid[1] / grid[0]).ln();
        assert!((slope - 0.75).abs() < 1e-6, "{slope}");
    }
}
