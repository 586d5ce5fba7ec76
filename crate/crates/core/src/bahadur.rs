//! Bahadur functions, generating sequences, empirical slopes and efficiencies.

use serde::Serialize;

use crate::divergence::{renyi_from_power, DivergenceKind, DivergenceValue, Order, ProbVec};
use crate::error::{Error, Result};
use crate::projection::{numeric_projection, ProjectionResult};
use crate::tail::TailEstimate;

/// Inputs of a finite-`n` Bahadur computation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BahadurContext {
    pub alpha: f64,
    pub delta: f64,
    pub n: u64,
    pub k: u64,
}

impl BahadurContext {
    pub fn new(alpha: f64, delta: f64, n: u64, k: u64) -> Result<Self> {
        Order::new(alpha)?;
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::domain(format!("Δ must be > 0, got {delta}")));
        }
        if k == 0 || k > n {
            return Err(Error::invalid(format!(
                "need 1 ≤ k ≤ n, got k = {k}, n = {n}"
            )));
        }
        Ok(Self { alpha, delta, n, k })
    }
}

/// Bahadur function `g_α(Δ)`:
/// `ln(1 + α(α−1)Δ)/(α−1)` for `α < 1`, `Δ` at `α = 1`, and
/// `(α(α−1)Δ)^{1/α}` for `α > 1`.
///
/// Continuous at `α = 1` from the left only; the `α > 1` branch tends to 0.
pub fn g_closed_form(alpha: f64, delta: f64) -> Result<f64> {
    let order = Order::new(alpha)?;
    if !(delta >= 0.0 && delta.is_finite()) {
        return Err(Error::domain(format!("Δ must be ≥ 0, got {delta}")));
    }
    if order.is_log_limit() {
        return Ok(delta);
    }
    let am1 = alpha - 1.0;
    let x = alpha * am1 * delta;
    if alpha < 1.0 {
        if x <= -1.0 {
            return Err(Error::domain(format!(
                "1 + α(α−1)Δ = {} must be positive",
                1.0 + x
            )));
        }
        Ok(x.ln_1p() / am1)
    } else {
        Ok(x.powf(1.0 / alpha))
    }
}

/// Which normalization of `c_α(n)` to use for `α > 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CNormalization {
    /// `k^{(α−1)/α}/ln k`.
    #[default]
    Plain,
    /// `α k^{(α−1)/α}/ln k`.
    AlphaScaled,
}

pub fn c_sequence(alpha: f64, n: u64, k: u64) -> Result<f64> {
    c_sequence_with(alpha, n, k, CNormalization::Plain)
}

/// Generating sequence: 1 for `α ≤ 1`, `k^{(α−1)/α}/ln k` for `α > 1`.
///
/// Discontinuous at `α = 1`: the right limit is `1/ln k`.
pub fn c_sequence_with(alpha: f64, n: u64, k: u64, norm: CNormalization) -> Result<f64> {
    let order = Order::new(alpha)?;
    if alpha <= 1.0 || order.is_log_limit() {
        return Ok(1.0);
    }
    if k < 2 {
        return Err(Error::domain(format!(
            "c_α needs k ≥ 2 for α > 1, got k = {k} (n = {n})"
        )));
    }
    let kf = k as f64;
    let base = (((alpha - 1.0) / alpha) * kf.ln()).exp() / kf.ln();
    Ok(match norm {
        CNormalization::Plain => base,
        CNormalization::AlphaScaled => alpha * base,
    })
}

/// `−(c_α(n)/n)·ln e_{α,n}(Δ)` at finite `n`.
pub fn empirical_slope(ctx: &BahadurContext, tail: &TailEstimate) -> Result<f64> {
    let log_value = if tail.log_value.is_finite() {
        tail.log_value
    } else {
        tail.value.ln()
    };
    if !log_value.is_finite() {
        return Err(Error::TailUnderflow);
    }
    let c = c_sequence(ctx.alpha, ctx.n, ctx.k)?;
    Ok(-(c / ctx.n as f64) * log_value + 0.0)
}

/// Method-of-types bracket for `−(1/n) ln e_{α,n}(Δ)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SanovBracket {
    pub lower: f64,
    pub upper: f64,
    /// Minimum of `D₁(P, Q)` over `{P : D_α(P, Q) ≥ Δ}`.
    pub i_star: f64,
    /// `(k − 1) ln(n + 1)/n`.
    pub slack: f64,
    pub projection: ProjectionResult,
}

/// Returns `[I* − (k−1)ln(n+1)/n, I*]` with `I*` from [`numeric_projection`].
///
/// `Δ` is a power-divergence threshold; it is converted to the equivalent
/// Rényi threshold before projecting.
pub fn sanov_sandwich(q_null: &ProbVec, order: Order, delta: f64, n: u64) -> Result<SanovBracket> {
    if n == 0 {
        return Err(Error::invalid("sample size n must be ≥ 1"));
    }
    let renyi_delta = renyi_from_power(DivergenceValue {
        value: delta,
        order,
        kind: DivergenceKind::Power,
    })?
    .value;
    let projection = numeric_projection(q_null, order, renyi_delta)?;
    let i_star = projection.kl_value;
    let nf = n as f64;
    let slack = (q_null.k() as f64 - 1.0) * (nf + 1.0).ln() / nf;
    Ok(SanovBracket {
        lower: i_star - slack,
        upper: i_star,
        i_star,
        slack,
        projection,
    })
}

/// Nonnegative extended real with an explicit indeterminate state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Extended {
    Finite(f64),
    Infinite,
    Indeterminate,
}

impl Extended {
    pub fn from_f64(x: f64) -> Self {
        if x.is_nan() {
            Extended::Indeterminate
        } else if x.is_infinite() {
            Extended::Infinite
        } else {
            Extended::Finite(x)
        }
    }

    pub fn is_zero(self) -> bool {
        self == Extended::Finite(0.0)
    }

    pub fn to_f64(self) -> f64 {
        match self {
            Extended::Finite(x) => x,
            Extended::Infinite => f64::INFINITY,
            Extended::Indeterminate => f64::NAN,
        }
    }
}

/// Product with the conventions `finite·∞ = ∞` and `0·∞` indeterminate.
impl std::ops::Mul for Extended {
    type Output = Extended;

    fn mul(self, other: Extended) -> Extended {
        use Extended::*;
        match (self, other) {
            (Indeterminate, _) | (_, Indeterminate) => Indeterminate,
            (Finite(a), Finite(b)) => Extended::from_f64(a * b),
            (Finite(a), Infinite) | (Infinite, Finite(a)) if a == 0.0 => Indeterminate,
            _ => Infinite,
        }
    }
}

/// `(g_{α₁}(Δ₁)/g_{α₂}(Δ₂))·c_limit`.
pub fn bahadur_efficiency(
    alpha1: f64,
    delta1: f64,
    alpha2: f64,
    delta2: f64,
    c_limit: Extended,
) -> Result<Extended> {
    if let Extended::Finite(c) = c_limit {
        if !(c >= 0.0) {
            return Err(Error::invalid(format!("c_limit must be ≥ 0, got {c}")));
        }
    }
    for d in [delta1, delta2] {
        if !(d > 0.0) {
            return Err(Error::domain(format!("Δ must be > 0, got {d}")));
        }
    }
    let g1 = g_closed_form(alpha1, delta1)?;
    let g2 = g_closed_form(alpha2, delta2)?;
    let ratio = if g2 == 0.0 {
        if g1 == 0.0 {
            Extended::Indeterminate
        } else {
            Extended::Infinite
        }
    } else {
        Extended::Finite(g1 / g2)
    };
    Ok(ratio * c_limit)
}

/// The `g`-ratio for `0 < α₁ < α₂ ≤ 1` written through logarithms of
/// `1 + α(α−1)Δ` directly.
pub fn efficiency_ratio_closed_form(
    alpha1: f64,
    delta1: f64,
    alpha2: f64,
    delta2: f64,
) -> Result<f64> {
    if !(alpha1 > 0.0 && alpha1 < alpha2 && alpha2 <= 1.0) {
        return Err(Error::invalid(format!(
            "need 0 < α₁ < α₂ ≤ 1, got α₁ = {alpha1}, α₂ = {alpha2}"
        )));
    }
    for d in [delta1, delta2] {
        if !(d > 0.0) {
            return Err(Error::domain(format!("Δ must be > 0, got {d}")));
        }
    }
    let log_term = |a: f64, d: f64| -> Result<f64> {
        let x = a * (a - 1.0) * d;
        if x <= -1.0 {
            return Err(Error::domain(format!(
                "1 + α(α−1)Δ = {} must be positive",
                1.0 + x
            )));
        }
        Ok(x.ln_1p())
    };
    let num = log_term(alpha1, delta1)?;
    if Order::new(alpha2)?.is_log_limit() {
        Ok(num / ((alpha1 - 1.0) * delta2))
    } else {
        Ok((alpha2 - 1.0) / (alpha1 - 1.0) * num / log_term(alpha2, delta2)?)
    }
}
