//! The error function `e_{α,n}(Δ) = P(D_α(P̂_n, Q) > Δ)`, computed exactly by
//! walking the lattice of types or estimated by Monte Carlo.
//!
//! The exceedance is strict (`> Δ`). Lattice types produce ties at rational
//! thresholds, so `Δ` sitting exactly on an attainable value is excluded.

use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::factorial::ln_factorial;

use crate::divergence::{power_divergence_raw, Order, ProbVec};
use crate::error::{Error, Result};
use crate::numeric::{binomial_f64, LogSumExp};
use crate::sampling::{simulate_statistics, Counts, Seed};

/// Default cap on the number of types an exact computation may visit.
pub const DEFAULT_ENUMERATION_BUDGET: u64 = 100_000_000;

/// Default confidence level of Monte Carlo intervals.
pub const DEFAULT_CONFIDENCE: f64 = 0.95;

/// Minimum replicate count accepted by [`mc_tail`].
pub const MIN_MC_REPS: u64 = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TailMethod {
    Exact,
    MonteCarlo,
}

impl TailMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            TailMethod::Exact => "exact",
            TailMethod::MonteCarlo => "monte_carlo",
        }
    }
}

/// A value of the error function with its provenance.
///
/// `log_value` carries the natural log of the tail; for exact tails it stays
/// finite even when `value` underflows to zero.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailEstimate {
    pub value: f64,
    pub log_value: f64,
    pub method: TailMethod,
    pub ci_low: f64,
    pub ci_high: f64,
    pub confidence: f64,
    pub reps: u64,
    pub delta: f64,
    pub n: u64,
    pub k: usize,
    pub alpha: f64,
}

/// Number of types `C(n + k − 1, k − 1)` in `M(k|n)`, as a float.
pub fn type_count(k: usize, n: u64) -> f64 {
    if k == 0 {
        return 0.0;
    }
    binomial_f64(n + k as u64 - 1, k as u64 - 1)
}

fn check_budget(k: usize, n: u64, budget: u64) -> Result<f64> {
    if k == 0 {
        return Err(Error::invalid("k must be ≥ 1"));
    }
    let count = type_count(k, n);
    if count > budget as f64 {
        return Err(Error::Capacity {
            what: "type enumeration",
            required: count,
            budget: budget as f64,
        });
    }
    Ok(count)
}

/// In-place lexicographic walk over compositions of `n` into `k` parts.
#[derive(Debug, Clone)]
struct CompositionWalker {
    current: Vec<u64>,
    started: bool,
    done: bool,
}

impl CompositionWalker {
    fn new(k: usize, n: u64) -> Self {
        let mut current = vec![0; k];
        current[k - 1] = n;
        Self {
            current,
            started: false,
            done: false,
        }
    }

    /// Moves to the next composition; the first call yields `(0, …, 0, n)`.
    fn advance(&mut self) -> bool {
        if self.done {
            return false;
        }
        if !self.started {
            self.started = true;
            return true;
        }
        let k = self.current.len();
        let last = match self.current.iter().rposition(|&x| x > 0) {
            Some(j) if j > 0 => j,
            _ => {
                self.done = true;
                return false;
            }
        };
        let rest = self.current[last] - 1;
        self.current[last - 1] += 1;
        self.current[last] = 0;
        self.current[k - 1] = rest;
        true
    }

    fn current(&self) -> &[u64] {
        &self.current
    }
}

/// Streaming iterator over `n · M(k|n)` in lexicographic order.
#[derive(Debug, Clone)]
pub struct TypeEnumerator {
    walker: CompositionWalker,
    n: u64,
}

impl Iterator for TypeEnumerator {
    type Item = Counts;

    fn next(&mut self) -> Option<Counts> {
        if self.walker.advance() {
            Some(Counts::new(self.walker.current().to_vec()).expect("nonempty composition"))
        } else {
            None
        }
    }
}

impl TypeEnumerator {
    pub fn n(&self) -> u64 {
        self.n
    }
}

pub fn enumerate_types(k: usize, n: u64) -> Result<TypeEnumerator> {
    enumerate_types_with_budget(k, n, DEFAULT_ENUMERATION_BUDGET)
}

pub fn enumerate_types_with_budget(k: usize, n: u64, budget: u64) -> Result<TypeEnumerator> {
    check_budget(k, n, budget)?;
    Ok(TypeEnumerator {
        walker: CompositionWalker::new(k, n),
        n,
    })
}

/// `ln[n!/∏x_j! ∏p_j^{x_j}]`; `−∞` when a positive count meets `p_j = 0`.
pub fn log_multinomial_pmf(counts: &Counts, p: &ProbVec) -> Result<f64> {
    if counts.k() != p.k() {
        return Err(Error::DimensionMismatch {
            left: counts.k(),
            right: p.k(),
        });
    }
    let mut acc = ln_factorial(counts.n());
    for (&x, &pj) in counts.counts().iter().zip(p.probs()) {
        if x == 0 {
            continue;
        }
        if pj == 0.0 {
            return Ok(f64::NEG_INFINITY);
        }
        acc += x as f64 * pj.ln() - ln_factorial(x);
    }
    Ok(acc)
}

fn check_tail_inputs(q_null: &ProbVec, p_true: &ProbVec, n: u64, delta: f64) -> Result<()> {
    if q_null.k() != p_true.k() {
        return Err(Error::DimensionMismatch {
            left: q_null.k(),
            right: p_true.k(),
        });
    }
    q_null.ensure_strictly_positive()?;
    if n == 0 {
        return Err(Error::invalid("sample size n must be ≥ 1"));
    }
    if delta.is_nan() {
        return Err(Error::invalid("threshold Δ is NaN"));
    }
    Ok(())
}

/// Exact tail with the default enumeration budget.
pub fn exact_tail(
    q_null: &ProbVec,
    p_true: &ProbVec,
    order: Order,
    n: u64,
    delta: f64,
) -> Result<TailEstimate> {
    exact_tail_with_budget(q_null, p_true, order, n, delta, DEFAULT_ENUMERATION_BUDGET)
}

/// `Σ_{T : D_α(T/n, Q) > Δ} P_true(T)` over every type `T` of size `n`.
///
/// The lattice is split by the first coordinate; the slices are evaluated
/// in parallel and merged in slice order.
pub fn exact_tail_with_budget(
    q_null: &ProbVec,
    p_true: &ProbVec,
    order: Order,
    n: u64,
    delta: f64,
    budget: u64,
) -> Result<TailEstimate> {
    check_tail_inputs(q_null, p_true, n, delta)?;
    let k = q_null.k();
    let estimate = |log_value: f64| {
        let value = log_value.exp().clamp(0.0, 1.0);
        TailEstimate {
            value,
            log_value: log_value.min(0.0),
            method: TailMethod::Exact,
            ci_low: value,
            ci_high: value,
            confidence: 1.0,
            reps: 0,
            delta,
            n,
            k,
            alpha: order.alpha(),
        }
    };
    if delta < 0.0 {
        // D ≥ 0 > Δ for every type.
        return Ok(estimate(0.0));
    }
    check_budget(k, n, budget)?;

    let ln_fact: Vec<f64> = (0..=n).map(ln_factorial).collect();
    let ln_p: Vec<f64> = p_true.probs().iter().map(|p| p.ln()).collect();
    let q = q_null.probs();
    let nf = n as f64;

    let slice = |first: u64| -> LogSumExp {
        let mut acc = LogSumExp::new();
        let mut p_hat = vec![0.0; k];
        let mut visit = |x: &[u64]| {
            for (dst, &c) in p_hat.iter_mut().zip(x) {
                *dst = c as f64 / nf;
            }
            if power_divergence_raw(&p_hat, q, order) > delta {
                let mut lp = ln_fact[n as usize];
                for (j, &c) in x.iter().enumerate() {
                    if c > 0 {
                        lp += c as f64 * ln_p[j] - ln_fact[c as usize];
                    }
                }
                acc.add_log(lp);
            }
        };
        if k == 1 {
            visit(&[n]);
            return acc;
        }
        let mut walker = CompositionWalker::new(k - 1, n - first);
        let mut full = vec![0u64; k];
        full[0] = first;
        while walker.advance() {
            full[1..].copy_from_slice(walker.current());
            visit(&full);
        }
        acc
    };

    let parts: Vec<LogSumExp> = if k == 1 {
        vec![slice(n)]
    } else {
        (0..=n).into_par_iter().map(slice).collect()
    };
    let mut total = LogSumExp::new();
    for part in &parts {
        total.merge(part);
    }
    Ok(estimate(total.ln()))
}

/// Two-sided normal quantile for the given confidence level.
fn z_value(confidence: f64) -> Result<f64> {
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(Error::invalid(format!(
            "confidence must lie in (0, 1), got {confidence}"
        )));
    }
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    Ok(normal.inverse_cdf(1.0 - (1.0 - confidence) / 2.0))
}

/// Wilson score interval for `successes` out of `trials`.
pub fn wilson_interval(successes: u64, trials: u64, confidence: f64) -> Result<(f64, f64)> {
    if trials == 0 {
        return Err(Error::invalid("Wilson interval needs at least one trial"));
    }
    if successes > trials {
        return Err(Error::invalid("successes exceed trials"));
    }
    let z = z_value(confidence)?;
    let t = trials as f64;
    let p = successes as f64 / t;
    let z2 = z * z;
    let denom = 1.0 + z2 / t;
    let center = (p + z2 / (2.0 * t)) / denom;
    let half = z / denom * (p * (1.0 - p) / t + z2 / (4.0 * t * t)).sqrt();
    let low = (center - half).max(0.0).min(p);
    let high = (center + half).min(1.0).max(p);
    Ok((low, high))
}

/// Monte Carlo tail with a 95% Wilson interval.
pub fn mc_tail(
    q_null: &ProbVec,
    p_true: &ProbVec,
    order: Order,
    n: u64,
    delta: f64,
    reps: u64,
    seed: Seed,
) -> Result<TailEstimate> {
    mc_tail_with_confidence(
        q_null,
        p_true,
        order,
        n,
        delta,
        reps,
        seed,
        DEFAULT_CONFIDENCE,
    )
}

/// Fraction of `reps` simulated statistics strictly above `Δ`, with a Wilson
/// interval at `confidence`.
#[allow(clippy::too_many_arguments)]
pub fn mc_tail_with_confidence(
    q_null: &ProbVec,
    p_true: &ProbVec,
    order: Order,
    n: u64,
    delta: f64,
    reps: u64,
    seed: Seed,
    confidence: f64,
) -> Result<TailEstimate> {
    check_tail_inputs(q_null, p_true, n, delta)?;
    if reps < MIN_MC_REPS {
        return Err(Error::invalid(format!(
            "Monte Carlo tails need reps ≥ {MIN_MC_REPS}, got {reps}"
        )));
    }
    let stats = simulate_statistics(p_true, q_null, order, n, reps, seed)?;
    let hits = stats.iter().filter(|&&d| d > delta).count() as u64;
    let (ci_low, ci_high) = wilson_interval(hits, reps, confidence)?;
    let value = hits as f64 / reps as f64;
    Ok(TailEstimate {
        value,
        log_value: value.ln(),
        method: TailMethod::MonteCarlo,
        ci_low,
        ci_high,
        confidence,
        reps,
        delta,
        n,
        k: q_null.k(),
        alpha: order.alpha(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn all_types(k: usize, n: u64) -> Vec<Vec<u64>> {
        enumerate_types(k, n)
            .unwrap()
            .map(|c| c.counts().to_vec())
            .collect()
    }

    #[test]
    fn small_enumerations() {
        assert_eq!(all_types(2, 2), vec![vec![0, 2], vec![1, 1], vec![2, 0]]);
        assert_eq!(all_types(3, 2).len(), 6);
        assert_eq!(all_types(1, 5), vec![vec![5]]);
        assert_eq!(all_types(3, 0), vec![vec![0, 0, 0]]);
    }

    #[test]
    fn enumeration_is_lexicographic_and_complete() {
        let types = all_types(4, 6);
        assert_eq!(types.len() as f64, type_count(4, 6));
        for pair in types.windows(2) {
            assert!(pair[0] < pair[1]);
        }
        assert!(types.iter().all(|t| t.iter().sum::<u64>() == 6));
    }

    #[test]
    fn budget_is_enforced() {
        let err = enumerate_types_with_budget(10, 100, 1000).unwrap_err();
        match err {
            Error::Capacity { required, .. } => assert_eq!(required, type_count(10, 100)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn pmf_examples() {
        let p = ProbVec::new(vec![1.0, 0.0]).unwrap();
        let c = Counts::new(vec![2, 0]).unwrap();
        assert_eq!(log_multinomial_pmf(&c, &p).unwrap(), 0.0);
        let c = Counts::new(vec![0, 2]).unwrap();
        assert_eq!(log_multinomial_pmf(&c, &p).unwrap(), f64::NEG_INFINITY);
        let u = ProbVec::uniform(2).unwrap();
        let c = Counts::new(vec![1, 1]).unwrap();
        assert_relative_eq!(
            log_multinomial_pmf(&c, &u).unwrap(),
            0.5f64.ln(),
            max_relative = 1e-14
        );
    }

    #[test]
    fn exact_tail_examples() {
        let u2 = ProbVec::uniform(2).unwrap();
        let t = exact_tail(&u2, &u2, Order::PEARSON, 2, 0.25).unwrap();
        assert_relative_eq!(t.value, 0.5, max_relative = 1e-14);
        assert_eq!(t.method, TailMethod::Exact);
        assert_eq!((t.ci_low, t.ci_high, t.reps), (t.value, t.value, 0));

        let q = ProbVec::new(vec![0.2, 0.3, 0.5]).unwrap();
        assert_eq!(exact_tail(&q, &q, Order::KL, 10, -0.1).unwrap().value, 1.0);

        let u3 = ProbVec::uniform(3).unwrap();
        let t = exact_tail(&u3, &u3, Order::KL, 30, 3f64.ln() + 1e-9).unwrap();
        assert_eq!(t.value, 0.0);
    }

    #[test]
    fn wilson_edges() {
        let (lo, hi) = wilson_interval(0, 1000, 0.95).unwrap();
        assert_eq!(lo, 0.0);
        assert!(hi > 0.0 && hi < 0.01);
        let (lo, hi) = wilson_interval(1000, 1000, 0.95).unwrap();
        assert_eq!(hi, 1.0);
        assert!(lo > 0.99);
        // Reference value: 95% Wilson for 10/100.
        let (lo, hi) = wilson_interval(10, 100, 0.95).unwrap();
        assert!((lo - 0.05522914).abs() < 1e-6, "{lo}");
        assert!((hi - 0.17436566).abs() < 1e-6, "{hi}");
        assert!(wilson_interval(1, 0, 0.95).is_err());
        assert!(wilson_interval(1, 10, 1.0).is_err());
    }

    #[test]
    fn mc_tail_trivial_thresholds() {
        let u = ProbVec::uniform(3).unwrap();
        let t = mc_tail(&u, &u, Order::PEARSON, 30, -1.0, 1000, Seed::new(1)).unwrap();
        assert_eq!(t.value, 1.0);
        assert_eq!(t.ci_high, 1.0);
        let t = mc_tail(&u, &u, Order::KL, 30, 1e6, 1000, Seed::new(1)).unwrap();
        assert_eq!(t.value, 0.0);
        assert_eq!(t.ci_low, 0.0);
        assert!(mc_tail(&u, &u, Order::KL, 30, 0.1, 99, Seed::new(1)).is_err());
    }
}
