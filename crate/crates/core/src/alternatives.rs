//! Parametric alternative families with closed-form identifiability limits,
//! and finite-grid diagnostics for the regularity and contiguity conditions.

use serde::Serialize;

use crate::divergence::{kl_raw, power_divergence_raw, Order, ProbVec};
use crate::error::{Error, Result};
use crate::numeric::CompensatedSum;

/// Uniform on the first `⌊k/2⌋` of `k` cells.
pub fn half_support_alternative(k: usize) -> Result<ProbVec> {
    if k < 2 {
        return Err(Error::invalid(format!(
            "half-support family needs k ≥ 2, got {k}"
        )));
    }
    let m = k / 2;
    let mass = 1.0 / m as f64;
    let mut probs = vec![0.0; k];
    probs[..m].fill(mass);
    Ok(ProbVec::from_vec_unchecked(probs))
}

/// `(2^{α−1} − 1)/(α(α − 1))`, the limit of `D_α(P_k, U_k)` for the
/// half-support family; `ln 2` at `α = 1`.
pub fn delta_half_support(alpha: f64) -> Result<f64> {
    let order = Order::new(alpha)?;
    if order.is_log_limit() {
        return Ok(std::f64::consts::LN_2);
    }
    let am1 = alpha - 1.0;
    Ok((am1 * std::f64::consts::LN_2).exp_m1() / (alpha * am1))
}

/// Exact `D_α(P_k, U_k)` for the half-support family at finite `k`.
pub fn delta_half_support_finite(k: usize, alpha: f64) -> Result<f64> {
    let order = Order::new(alpha)?;
    if k < 2 {
        return Err(Error::invalid(format!(
            "half-support family needs k ≥ 2, got {k}"
        )));
    }
    let ln_ratio = (k as f64 / (k / 2) as f64).ln();
    if order.is_log_limit() {
        return Ok(ln_ratio);
    }
    let am1 = alpha - 1.0;
    Ok((am1 * ln_ratio).exp_m1() / (alpha * am1))
}

/// Truncated geometric law on cells `j = 0..=k` with `p_j ∝ (1 − x/k)^j`.
///
/// The result has `k + 1` cells.
pub fn truncated_geometric(k: u64, x: f64) -> Result<ProbVec> {
    if k == 0 {
        return Err(Error::invalid("truncated geometric family needs k ≥ 1"));
    }
    if !(x > 0.0 && x < k as f64) {
        return Err(Error::invalid(format!(
            "truncated geometric family needs 0 < x < k, got x = {x}, k = {k}"
        )));
    }
    let ln_p = (-x / k as f64).ln_1p();
    // c_k(p) = (1 − p)/(1 − p^{k+1}).
    let c = (x / k as f64) / -((k + 1) as f64 * ln_p).exp_m1();
    let weights: Vec<f64> = (0..=k).map(|j| c * (j as f64 * ln_p).exp()).collect();
    let total: f64 = weights.iter().copied().collect::<CompensatedSum>().value();
    Ok(ProbVec::from_vec_unchecked(
        weights.into_iter().map(|w| w / total).collect(),
    ))
}

fn check_geometric_x(x: f64) -> Result<()> {
    if !(x > 0.0 && x.is_finite()) {
        return Err(Error::invalid(format!(
            "geometric parameter x must be > 0, got {x}"
        )));
    }
    Ok(())
}

/// Limit `Δ_α(x)` of `D_α(P_k, U_{k+1})` for the truncated geometric family
/// as `k → ∞`.
///
/// `α = 0` returns `(ln(e^x − 1) − ln x)/2`. That value is not the `α → 0⁺`
/// limit of the general expression; see [`geometric_reverse_kl_limit`].
pub fn delta_geometric(alpha: f64, x: f64) -> Result<f64> {
    check_geometric_x(x)?;
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(Error::domain(format!("order must be ≥ 0, got {alpha}")));
    }
    let ln_em1 = x.exp_m1().ln();
    if alpha == 0.0 {
        return Ok((ln_em1 - x.ln()) / 2.0);
    }
    if (alpha - 1.0).abs() < Order::LOG_TOLERANCE {
        return Ok(x.ln() - 1.0 - ln_em1 + x / (-(-x).exp_m1()));
    }
    // Δ_α = (R − 1)/(α(α − 1)) with R = x^{α−1}(e^{αx} − 1)/(α(e^x − 1)^α).
    let am1 = alpha - 1.0;
    let ln_r = am1 * x.ln() + (alpha * x).exp_m1().ln() - alpha.ln() - alpha * ln_em1;
    Ok(ln_r.exp_m1() / (alpha * am1))
}

/// `ln(e^x − 1) − ln x − x/2`, the `α → 0⁺` limit of [`delta_geometric`],
/// equal to the reverse information divergence `D₁(U‖P)` in the limit.
pub fn geometric_reverse_kl_limit(x: f64) -> Result<f64> {
    check_geometric_x(x)?;
    Ok(x.exp_m1().ln() - x.ln() - x / 2.0)
}

/// Settings for [`check_assumptions_with`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AssumptionOptions {
    /// Range of the trailing window below which the divergence sequence
    /// counts as converged.
    pub converge_tol: f64,
    pub window: usize,
}

impl Default for AssumptionOptions {
    fn default() -> Self {
        Self {
            converge_tol: 1e-3,
            window: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssumptionReport {
    pub n_grid: Vec<u64>,
    pub k_values: Vec<usize>,
    /// `k ≤ n` at every grid point and `k` nondecreasing along the grid.
    pub a1_ok: bool,
    /// `min_n k_n · min_j q_nj`.
    pub a2_rho: f64,
    pub rho_values: Vec<f64>,
    pub q_max_values: Vec<f64>,
    pub a2_ok: bool,
    pub divergences: Vec<f64>,
    /// Last divergence value, the estimate of the limit.
    pub a3_delta: f64,
    /// Range of the trailing window of the divergence sequence.
    pub a3_window_range: f64,
    pub a3_converged: bool,
    pub a3_identifiable: bool,
    pub notes: Vec<String>,
}

fn check_grid(n_grid: &[u64]) -> Result<()> {
    if n_grid.is_empty() {
        return Err(Error::invalid("n grid is empty"));
    }
    if n_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("n grid must be strictly increasing"));
    }
    Ok(())
}

fn schedule_pair<Q, P>(q_schedule: &Q, p_schedule: &P, n: u64) -> Result<(ProbVec, ProbVec)>
where
    Q: Fn(u64) -> Result<ProbVec>,
    P: Fn(u64) -> Result<ProbVec>,
{
    let q = q_schedule(n)?;
    let p = p_schedule(n)?;
    if q.k() != p.k() {
        return Err(Error::DimensionMismatch {
            left: p.k(),
            right: q.k(),
        });
    }
    Ok((q, p))
}

/// `D_α(P, Q)`, allowing `q_j = 0` (infinite unless `p_j = 0` there).
fn divergence_allowing_null_cells(p: &[f64], q: &[f64], order: Order) -> f64 {
    if p.iter().zip(q).any(|(&pj, &qj)| qj == 0.0 && pj > 0.0) {
        return f64::INFINITY;
    }
    let (ps, qs): (Vec<f64>, Vec<f64>) = p
        .iter()
        .zip(q)
        .filter(|(_, &qj)| qj > 0.0)
        .map(|(&pj, &qj)| (pj, qj))
        .unzip();
    power_divergence_raw(&ps, &qs, order)
}

pub fn check_assumptions<Q, P>(
    q_schedule: Q,
    p_schedule: P,
    alpha: f64,
    n_grid: &[u64],
) -> Result<AssumptionReport>
where
    Q: Fn(u64) -> Result<ProbVec>,
    P: Fn(u64) -> Result<ProbVec>,
{
    check_assumptions_with(
        q_schedule,
        p_schedule,
        alpha,
        n_grid,
        AssumptionOptions::default(),
    )
}

/// Evaluates the regularity and identifiability conditions along `n_grid`.
///
/// Verdicts are finite-grid heuristics. Regularity is flagged when
/// `k·min q` keeps at least half its initial value and `q_max` does not
/// grow.
pub fn check_assumptions_with<Q, P>(
    q_schedule: Q,
    p_schedule: P,
    alpha: f64,
    n_grid: &[u64],
    options: AssumptionOptions,
) -> Result<AssumptionReport>
where
    Q: Fn(u64) -> Result<ProbVec>,
    P: Fn(u64) -> Result<ProbVec>,
{
    let order = Order::new(alpha)?;
    check_grid(n_grid)?;
    if options.window == 0 {
        return Err(Error::invalid("convergence window must be ≥ 1"));
    }
    let mut notes = Vec::new();
    let mut k_values = Vec::with_capacity(n_grid.len());
    let mut rho_values = Vec::with_capacity(n_grid.len());
    let mut q_max_values = Vec::with_capacity(n_grid.len());
    let mut divergences = Vec::with_capacity(n_grid.len());
    for &n in n_grid {
        let (q, p) = schedule_pair(&q_schedule, &p_schedule, n)?;
        k_values.push(q.k());
        rho_values.push(q.k() as f64 * q.min());
        q_max_values.push(q.max());
        divergences.push(divergence_allowing_null_cells(p.probs(), q.probs(), order));
    }

    let k_within_n = n_grid.iter().zip(&k_values).all(|(&n, &k)| k as u64 <= n);
    let k_monotone = k_values.windows(2).all(|w| w[0] <= w[1]);
    if !k_within_n {
        notes.push("A1 violated: some k exceeds n".to_string());
    }
    if !k_monotone {
        notes.push("A1 violated: k decreases along the grid".to_string());
    }

    let a2_rho = rho_values.iter().copied().fold(f64::INFINITY, f64::min);
    let rho_first = rho_values[0];
    let rho_last = *rho_values.last().expect("nonempty grid");
    let q_max_grows = q_max_values.last() > q_max_values.first();
    let a2_ok = a2_rho > 0.0 && rho_last >= 0.5 * rho_first && !q_max_grows;
    if a2_rho == 0.0 {
        notes.push("A2 violated: a hypothetical cell has zero probability".to_string());
    } else if !a2_ok {
        notes.push(format!(
            "A2 doubtful: k·min q moves from {rho_first:.6e} to {rho_last:.6e}"
        ));
    }

    let start = divergences.len().saturating_sub(options.window);
    let tail = &divergences[start..];
    let hi = tail.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = tail.iter().copied().fold(f64::INFINITY, f64::min);
    let a3_window_range = if hi.is_finite() {
        hi - lo
    } else {
        f64::INFINITY
    };
    let a3_converged = a3_window_range < options.converge_tol;
    let a3_delta = *divergences.last().expect("nonempty grid");
    let a3_identifiable = a3_delta > options.converge_tol;
    if !a3_identifiable {
        notes.push("hypothesis regime, A3α violated (Δ=0)".to_string());
    }
    if !a3_converged {
        notes.push(format!(
            "divergence sequence not settled: trailing range {a3_window_range:.3e}"
        ));
    }

    Ok(AssumptionReport {
        n_grid: n_grid.to_vec(),
        k_values,
        a1_ok: k_within_n && k_monotone,
        a2_rho,
        rho_values,
        q_max_values,
        a2_ok,
        divergences,
        a3_delta,
        a3_window_range,
        a3_converged,
        a3_identifiable,
        notes,
    })
}

/// Lowest-likelihood-ratio cell set carrying at least a quarter of `Q`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WitnessSet {
    pub n: u64,
    pub cells: Vec<usize>,
    pub q_mass: f64,
    pub p_mass: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContiguityReport {
    pub n_grid: Vec<u64>,
    pub d1_sequence: Vec<f64>,
    /// Finite sequence whose second half does not exceed the first half's
    /// maximum by more than `1e-3`.
    pub bounded_flag: bool,
    pub witness_sets: Vec<WitnessSet>,
}

/// Minimum `Q` mass of a reverse-direction witness.
pub const WITNESS_Q_MASS: f64 = 0.25;

const BOUNDED_SLACK: f64 = 1e-3;

fn witness(n: u64, p: &[f64], q: &[f64]) -> WitnessSet {
    let mut cells: Vec<usize> = (0..q.len()).filter(|&j| q[j] > 0.0).collect();
    // Stable sort keeps index order among equal ratios.
    cells.sort_by(|&a, &b| (p[a] / q[a]).total_cmp(&(p[b] / q[b])));
    let mut chosen = Vec::new();
    let mut q_mass = CompensatedSum::new();
    let mut p_mass = CompensatedSum::new();
    for j in cells {
        // Every P-null cell is taken; others only until the Q target is met.
        if p[j] > 0.0 && q_mass.value() >= WITNESS_Q_MASS {
            break;
        }
        chosen.push(j);
        q_mass.add(q[j]);
        p_mass.add(p[j]);
    }
    chosen.sort_unstable();
    WitnessSet {
        n,
        cells: chosen,
        q_mass: q_mass.value(),
        p_mass: p_mass.value(),
    }
}

/// Reports `D₁(P_n, Q_n)` along the grid with a boundedness flag, and a
/// reverse-direction witness set per grid point.
pub fn contiguity_diagnostic<Q, P>(
    q_schedule: Q,
    p_schedule: P,
    n_grid: &[u64],
) -> Result<ContiguityReport>
where
    Q: Fn(u64) -> Result<ProbVec>,
    P: Fn(u64) -> Result<ProbVec>,
{
    check_grid(n_grid)?;
    let mut d1_sequence = Vec::with_capacity(n_grid.len());
    let mut witness_sets = Vec::with_capacity(n_grid.len());
    for &n in n_grid {
        let (q, p) = schedule_pair(&q_schedule, &p_schedule, n)?;
        let d1 = if p
            .probs()
            .iter()
            .zip(q.probs())
            .any(|(&pj, &qj)| qj == 0.0 && pj > 0.0)
        {
            f64::INFINITY
        } else {
            kl_raw(p.probs(), q.probs())
        };
        d1_sequence.push(d1);
        witness_sets.push(witness(n, p.probs(), q.probs()));
    }
    let split = d1_sequence.len().div_ceil(2);
    let head_max = d1_sequence[..split]
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    let tail_max = d1_sequence[split..]
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    let bounded_flag =
        d1_sequence.iter().all(|d| d.is_finite()) && tail_max <= head_max + BOUNDED_SLACK;
    Ok(ContiguityReport {
        n_grid: n_grid.to_vec(),
        d1_sequence,
        bounded_flag,
        witness_sets,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::{E, LN_2};

    #[test]
    fn half_support_shapes() {
        assert_eq!(
            half_support_alternative(4).unwrap().probs(),
            &[0.5, 0.5, 0.0, 0.0]
        );
        assert_eq!(
            half_support_alternative(5).unwrap().probs(),
            &[0.5, 0.5, 0.0, 0.0, 0.0]
        );
        assert_eq!(half_support_alternative(2).unwrap().probs(), &[1.0, 0.0]);
        assert!(half_support_alternative(1).is_err());
    }

    #[test]
    fn half_support_limits() {
        assert_relative_eq!(delta_half_support(2.0).unwrap(), 0.5, max_relative = 1e-15);
        assert_eq!(delta_half_support(1.0).unwrap(), LN_2);
        for a in [1.0 - 1e-7, 1.0 + 1e-7] {
            assert!((delta_half_support(a).unwrap() - LN_2).abs() < 1e-5);
        }
        assert!(delta_half_support(0.0).is_err());
    }

    #[test]
    fn geometric_small_cases() {
        let p = truncated_geometric(1, 0.5).unwrap();
        assert_relative_eq!(p.probs()[0], 2.0 / 3.0, max_relative = 1e-15);
        assert_relative_eq!(p.probs()[1], 1.0 / 3.0, max_relative = 1e-15);
        let p = truncated_geometric(10_000, 1.0).unwrap();
        assert_eq!(p.k(), 10_001);
        let s: f64 = p.probs().iter().sum();
        assert!((s - 1.0).abs() < 1e-14);
        assert!(truncated_geometric(5, 5.0).is_err());
        assert!(truncated_geometric(5, 0.0).is_err());
    }

    #[test]
    fn geometric_limits() {
        assert_relative_eq!(
            delta_geometric(0.0, 1.0).unwrap(),
            (E - 1.0).ln() / 2.0,
            max_relative = 1e-14
        );
        // x e^x/(e^x − 1) + ln(x/(e(e^x − 1))) at x = 1.
        let d1 = E / (E - 1.0) - 1.0 - (E - 1.0).ln();
        assert_relative_eq!(delta_geometric(1.0, 1.0).unwrap(), d1, max_relative = 1e-14);
        // (e² − 1 − 2(e − 1)²)/(4(e − 1)²) at α = 2, x = 1.
        let d2 = ((E * E - 1.0) - 2.0 * (E - 1.0).powi(2)) / (4.0 * (E - 1.0).powi(2));
        assert_relative_eq!(delta_geometric(2.0, 1.0).unwrap(), d2, max_relative = 1e-13);
        for a in [0.5, 1.0, 2.0] {
            assert!(delta_geometric(a, 1e-6).unwrap().abs() < 1e-4);
        }
        assert!(delta_geometric(1.0, 0.0).is_err());
        assert!(delta_geometric(-1.0, 1.0).is_err());
    }

    #[test]
    fn reverse_kl_limit_matches_small_orders() {
        for x in [0.5, 1.0, 2.0] {
            let limit = geometric_reverse_kl_limit(x).unwrap();
            let near = delta_geometric(1e-6, x).unwrap();
            assert!((limit - near).abs() < 1e-5, "{x}: {limit} vs {near}");
        }
    }

    #[test]
    fn witness_for_half_support() {
        let k = 8;
        let r = contiguity_diagnostic(
            |_| ProbVec::uniform(k),
            |_| half_support_alternative(k),
            &[10, 20, 40],
        )
        .unwrap();
        assert!(r.bounded_flag);
        for w in &r.witness_sets {
            assert_eq!(w.cells, vec![4, 5, 6, 7]);
            assert_eq!(w.q_mass, 0.5);
            assert_eq!(w.p_mass, 0.0);
        }
    }
}
