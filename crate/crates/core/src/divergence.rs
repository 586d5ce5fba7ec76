//! Power functions, power and Rényi divergences, and the classical
//! goodness-of-fit statistics built from them.
//!
//! For `α > 0` the power function is
//!
//! ```text
//! φ_α(t) = (t^α − α(t − 1) − 1) / (α(α − 1)),   α ≠ 1
//! φ_1(t) = t ln t − t + 1
//! ```
//!
//! and the power divergence is the Csiszár sum `D_α(P, Q) = Σ q_j φ_α(p_j/q_j)`,
//! which for normalized `P` equals `(Σ p_j^α q_j^{1−α} − 1)/(α(α − 1))`.
//! The Rényi divergence of the same order is a monotone transform:
//!
//! ```text
//! D_α(P‖Q) = ln(1 + α(α − 1) D_α(P, Q)) / (α − 1)
//! ```
//!
//! Every term `q_j φ_α(p_j/q_j)` is nonnegative, so the divergence sum is
//! accumulated without cancellation. `φ_α` itself is evaluated through
//! `expm1`/`ln_1p`, which keeps orders close to 1 accurate; orders within
//! [`Order::LOG_TOLERANCE`] of 1 switch to the logarithmic limit.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::numeric::{compensated_sum, CompensatedSum};
use crate::sampling::Counts;

/// A finite probability distribution over `k ≥ 1` cells.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbVec {
    probs: Vec<f64>,
}

impl ProbVec {
    /// Absolute tolerance per cell on the normalization `Σ p_j = 1`.
    pub const SUM_TOLERANCE_PER_CELL: f64 = 1e-12;

    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidProbVec("no cells".into()));
        }
        for (j, &p) in probs.iter().enumerate() {
            if !p.is_finite() || p < 0.0 {
                return Err(Error::InvalidProbVec(format!(
                    "entry {j} is {p}, expected a finite nonnegative value"
                )));
            }
        }
        let sum = compensated_sum(probs.iter().copied());
        let tol = Self::SUM_TOLERANCE_PER_CELL * probs.len() as f64;
        if (sum - 1.0).abs() > tol {
            return Err(Error::InvalidProbVec(format!(
                "entries sum to {sum}, expected 1 within {tol:e}"
            )));
        }
        Ok(Self { probs })
    }

    /// Normalizes nonnegative weights into a distribution.
    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidProbVec(
                "weights must be finite and nonnegative".into(),
            ));
        }
        let total = compensated_sum(weights.iter().copied());
        if total <= 0.0 {
            return Err(Error::InvalidProbVec("weights sum to zero".into()));
        }
        Self::new(weights.into_iter().map(|w| w / total).collect())
    }

    pub fn uniform(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidProbVec("no cells".into()));
        }
        Ok(Self {
            probs: vec![1.0 / k as f64; k],
        })
    }

    pub fn point_mass(k: usize, cell: usize) -> Result<Self> {
        if cell >= k {
            return Err(Error::invalid(format!(
                "cell {cell} out of range for k = {k}"
            )));
        }
        let mut probs = vec![0.0; k];
        probs[cell] = 1.0;
        Ok(Self { probs })
    }

    pub(crate) fn from_vec_unchecked(probs: Vec<f64>) -> Self {
        debug_assert!(!probs.is_empty());
        Self { probs }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.probs
    }

    pub fn k(&self) -> usize {
        self.probs.len()
    }

    pub fn max(&self) -> f64 {
        self.probs.iter().copied().fold(0.0, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.probs.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Index of the first zero cell, if any.
    pub fn first_zero(&self) -> Option<usize> {
        self.probs.iter().position(|&p| p == 0.0)
    }

    pub fn ensure_strictly_positive(&self) -> Result<()> {
        match self.first_zero() {
            Some(cell) => Err(Error::ZeroHypothesisCell { cell }),
            None => Ok(()),
        }
    }
}

/// Divergence order `α > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Order {
    alpha: f64,
}

impl Order {
    /// `|α − 1|` below this switches to the logarithmic (`α = 1`) formulas.
    pub const LOG_TOLERANCE: f64 = 1e-9;

    pub const KL: Order = Order { alpha: 1.0 };
    pub const PEARSON: Order = Order { alpha: 2.0 };
    pub const HELLINGER: Order = Order { alpha: 0.5 };

    pub fn new(alpha: f64) -> Result<Self> {
        if !alpha.is_finite() || alpha <= 0.0 {
            return Err(Error::domain(format!(
                "order must be finite and > 0, got {alpha}"
            )));
        }
        Ok(Self { alpha })
    }

    pub fn alpha(self) -> f64 {
        self.alpha
    }

    pub fn is_log_limit(self) -> bool {
        (self.alpha - 1.0).abs() < Self::LOG_TOLERANCE
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DivergenceKind {
    Power,
    Renyi,
}

/// A realized divergence together with its order and family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DivergenceValue {
    pub value: f64,
    pub order: Order,
    pub kind: DivergenceKind,
}

/// Stable `t^{α−1}` expressed as `expm1((α − 1) ln t)` over `(α − 1)`,
/// i.e. `φ'_α(t)`, with `ln t` in the limit.
fn phi_prime_unchecked(t: f64, order: Order) -> f64 {
    if t == 0.0 {
        return if order.is_log_limit() || order.alpha < 1.0 {
            f64::NEG_INFINITY
        } else {
            -1.0 / (order.alpha - 1.0)
        };
    }
    let ln_t = (t - 1.0).ln_1p();
    if order.is_log_limit() {
        ln_t
    } else {
        let am1 = order.alpha - 1.0;
        (am1 * ln_t).exp_m1() / am1
    }
}

#[inline]
pub(crate) fn phi_unchecked(t: f64, order: Order) -> f64 {
    if t == 0.0 {
        // φ_α(0) = 1/α for every α > 0 (and 1 in the limit).
        return if order.is_log_limit() {
            1.0
        } else {
            1.0 / order.alpha
        };
    }
    let u = t - 1.0;
    let ln_t = u.ln_1p();
    let value = if order.is_log_limit() {
        t * ln_t - u
    } else {
        let am1 = order.alpha - 1.0;
        (t * (am1 * ln_t).exp_m1() / am1 - u) / order.alpha
    };
    value.max(0.0)
}

/// The power function `φ_α(t)` for `t ≥ 0`.
pub fn phi_alpha(t: f64, order: Order) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::domain(format!("φ_α requires t ≥ 0, got {t}")));
    }
    Ok(phi_unchecked(t, order))
}

/// Derivative `φ'_α(t) = (t^{α−1} − 1)/(α − 1)` (`ln t` at `α = 1`).
pub fn phi_alpha_derivative(t: f64, order: Order) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::domain(format!("φ'_α requires t ≥ 0, got {t}")));
    }
    Ok(phi_prime_unchecked(t, order))
}

fn check_pair(p: &ProbVec, q: &ProbVec) -> Result<()> {
    if p.k() != q.k() {
        return Err(Error::DimensionMismatch {
            left: p.k(),
            right: q.k(),
        });
    }
    q.ensure_strictly_positive()
}

/// `Σ q_j φ_α(p_j / q_j)` without validation. `q` must be strictly positive.
pub(crate) fn power_divergence_raw(p: &[f64], q: &[f64], order: Order) -> f64 {
    let mut acc = CompensatedSum::new();
    for (&pj, &qj) in p.iter().zip(q) {
        acc.add(qj * phi_unchecked(pj / qj, order));
    }
    acc.value().max(0.0)
}

/// Power divergence `D_α(P, Q)`.
pub fn power_divergence(p: &ProbVec, q: &ProbVec, order: Order) -> Result<DivergenceValue> {
    check_pair(p, q)?;
    Ok(DivergenceValue {
        value: power_divergence_raw(p.probs(), q.probs(), order),
        order,
        kind: DivergenceKind::Power,
    })
}

/// Information divergence `Σ p_j ln(p_j/q_j)` with `0 ln 0 = 0`.
pub(crate) fn kl_raw(p: &[f64], q: &[f64]) -> f64 {
    let mut acc = CompensatedSum::new();
    for (&pj, &qj) in p.iter().zip(q) {
        if pj > 0.0 {
            acc.add(pj * (pj / qj).ln());
        }
    }
    acc.value().max(0.0)
}

/// Orders this close to 1 evaluate `Σ p^α q^{1−α} − 1` through `expm1`.
const RENYI_NEAR_ONE: f64 = 1e-3;

pub(crate) fn renyi_raw(p: &[f64], q: &[f64], order: Order) -> f64 {
    if order.is_log_limit() {
        return kl_raw(p, q);
    }
    let am1 = order.alpha - 1.0;
    let value = if am1.abs() < RENYI_NEAR_ONE {
        let mut excess = CompensatedSum::new();
        for (&pj, &qj) in p.iter().zip(q) {
            if pj > 0.0 {
                excess.add(pj * (am1 * (pj / qj).ln()).exp_m1());
            }
        }
        excess.value().ln_1p() / am1
    } else {
        let mut moment = CompensatedSum::new();
        for (&pj, &qj) in p.iter().zip(q) {
            if pj > 0.0 {
                moment.add((order.alpha * pj.ln() - am1 * qj.ln()).exp());
            }
        }
        moment.value().ln() / am1
    };
    value.max(0.0)
}

/// Rényi divergence `D_α(P‖Q) = ln(Σ p_j^α q_j^{1−α})/(α − 1)`.
pub fn renyi_divergence(p: &ProbVec, q: &ProbVec, order: Order) -> Result<DivergenceValue> {
    check_pair(p, q)?;
    Ok(DivergenceValue {
        value: renyi_raw(p.probs(), q.probs(), order),
        order,
        kind: DivergenceKind::Renyi,
    })
}

/// Bhattacharyya distance `−ln Σ √(p_j q_j)`.
pub fn bhattacharyya_distance(p: &ProbVec, q: &ProbVec) -> Result<f64> {
    check_pair(p, q)?;
    let bc = compensated_sum(p.probs().iter().zip(q.probs()).map(|(a, b)| (a * b).sqrt()));
    Ok((-bc.ln()).max(0.0))
}

/// Maps a power-divergence value of order `α` to the Rényi divergence of
/// the same order.
pub fn renyi_from_power(d: DivergenceValue) -> Result<DivergenceValue> {
    if d.kind != DivergenceKind::Power {
        return Err(Error::invalid(
            "renyi_from_power expects a power divergence",
        ));
    }
    let order = d.order;
    let value = if order.is_log_limit() {
        d.value
    } else {
        let alpha = order.alpha;
        let arg = alpha * (alpha - 1.0) * d.value;
        if !(1.0 + arg > 0.0) {
            return Err(Error::domain(format!(
                "1 + α(α−1)D = {} is not positive",
                1.0 + arg
            )));
        }
        arg.ln_1p() / (alpha - 1.0)
    };
    Ok(DivergenceValue {
        value,
        order,
        kind: DivergenceKind::Renyi,
    })
}

/// Inverse of [`renyi_from_power`]: `(e^{(α−1)R} − 1)/(α(α − 1))`.
pub fn power_from_renyi(d: DivergenceValue) -> Result<DivergenceValue> {
    if d.kind != DivergenceKind::Renyi {
        return Err(Error::invalid(
            "power_from_renyi expects a Rényi divergence",
        ));
    }
    let order = d.order;
    let value = if order.is_log_limit() {
        d.value
    } else {
        let alpha = order.alpha;
        ((alpha - 1.0) * d.value).exp_m1() / (alpha * (alpha - 1.0))
    };
    Ok(DivergenceValue {
        value,
        order,
        kind: DivergenceKind::Power,
    })
}

/// The classical goodness-of-fit statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassicStatistic {
    /// `Σ (X_j − n q_j)² / (n q_j)`
    Pearson,
    /// `2 Σ X_j ln(X_j / (n q_j))`
    LikelihoodRatio,
    /// `4 Σ (√X_j − √(n q_j))²`
    FreemanTukey,
}

impl ClassicStatistic {
    /// Order `α` whose scaled divergence reproduces this statistic.
    pub fn order(self) -> Order {
        match self {
            ClassicStatistic::Pearson => Order::PEARSON,
            ClassicStatistic::LikelihoodRatio => Order::KL,
            ClassicStatistic::FreemanTukey => Order::HELLINGER,
        }
    }
}

fn check_counts(counts: &Counts, q: &ProbVec) -> Result<()> {
    if counts.k() != q.k() {
        return Err(Error::DimensionMismatch {
            left: counts.k(),
            right: q.k(),
        });
    }
    if counts.n() == 0 {
        return Err(Error::EmptyCounts);
    }
    q.ensure_strictly_positive()
}

pub fn classic_statistic(kind: ClassicStatistic, counts: &Counts, q: &ProbVec) -> Result<f64> {
    check_counts(counts, q)?;
    let n = counts.n() as f64;
    let cells = counts
        .counts()
        .iter()
        .zip(q.probs())
        .map(|(&x, &qj)| (x as f64, n * qj));
    let value = match kind {
        ClassicStatistic::Pearson => {
            compensated_sum(cells.map(|(x, expected)| (x - expected).powi(2) / expected))
        }
        ClassicStatistic::LikelihoodRatio => {
            2.0 * compensated_sum(
                cells
                    .filter(|(x, _)| *x > 0.0)
                    .map(|(x, expected)| x * (x / expected).ln()),
            )
        }
        ClassicStatistic::FreemanTukey => {
            4.0 * compensated_sum(cells.map(|(x, expected)| (x.sqrt() - expected.sqrt()).powi(2)))
        }
    };
    Ok(value.max(0.0))
}

/// `2n · D_α(P̂_n, Q)` for the empirical distribution of `counts`.
pub fn scaled_statistic(counts: &Counts, q: &ProbVec, order: Order) -> Result<f64> {
    check_counts(counts, q)?;
    let p_hat = counts.empirical()?;
    let n = counts.n() as f64;
    Ok(2.0 * n * power_divergence_raw(p_hat.probs(), q.probs(), order))
}

/// Linear lower and quadratic upper bounds on `φ_α(y) − φ_α(x)` for
/// `1 ≤ α ≤ 2`:
///
/// ```text
/// L = (y − x) φ'_α(x)
/// U = L + x^{α−2} (y − x)² / α
/// ```
///
/// At `x = 0` with `α < 2` the quadratic coefficient is infinite and the
/// upper bound is returned as `+∞`.
pub fn lemma1_bounds(x: f64, y: f64, order: Order) -> Result<(f64, f64)> {
    let alpha = order.alpha;
    if !(1.0 - Order::LOG_TOLERANCE..=2.0).contains(&alpha) {
        return Err(Error::domain(format!(
            "quadratic sandwich requires 1 ≤ α ≤ 2, got {alpha}"
        )));
    }
    if !(x >= 0.0) || !(y >= 0.0) {
        return Err(Error::domain(format!("x, y must be ≥ 0, got ({x}, {y})")));
    }
    if x == y {
        return Ok((0.0, 0.0));
    }
    let d = y - x;
    let lower = d * phi_prime_unchecked(x, order);
    let upper = if x == 0.0 {
        if alpha < 2.0 {
            f64::INFINITY
        } else {
            lower + d * d / alpha
        }
    } else {
        lower + x.powf(alpha - 2.0) * d * d / alpha
    };
    Ok((lower, upper))
}
