//! Information projection onto `{P : D_α(P‖Q) ≥ Δ}`: minimize `D₁(P, Q)`
//! subject to a lower bound on the Rényi divergence of order `α`.
//!
//! Three solvers are provided. [`mixture_construction`] builds the feasible
//! two-level mixture of conditional laws `Q(·|A)`. For `α = 1` the program is
//! solved exactly by an exponential tilt. Other orders use an augmented
//! Lagrangian with entropic mirror-descent inner steps, restarted from
//! several structured points.

use rayon::prelude::*;
use serde::Serialize;

use crate::divergence::{kl_raw, renyi_raw, Order, ProbVec};
use crate::error::{Error, Result};
use crate::numeric::CompensatedSum;

/// Feasibility slack accepted when reporting convergence.
pub const CONSTRAINT_TOL: f64 = 1e-10;
/// Weighted stationarity threshold for a converged optimizer run.
pub const STATIONARITY_TOL: f64 = 1e-8;
/// Total mirror-descent iterations allowed per restart.
pub const ITERATION_CAP: u64 = 100_000;
/// Largest cell count accepted by [`numeric_projection`].
pub const MAX_DENSE_CELLS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ProjectionMethod {
    MixtureConstruction,
    ExponentialTilt,
    NumericOptimizer,
}

impl ProjectionMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            ProjectionMethod::MixtureConstruction => "mixture_construction",
            ProjectionMethod::ExponentialTilt => "exponential_tilt",
            ProjectionMethod::NumericOptimizer => "numeric_optimizer",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProjectionResult {
    pub minimizer: ProbVec,
    pub kl_value: f64,
    /// Achieved `D_α(P‖Q)` at the minimizer.
    pub constraint_value: f64,
    pub delta: f64,
    pub alpha: f64,
    pub method: ProjectionMethod,
    pub converged: bool,
    pub iterations: u64,
    /// Lagrange multiplier of the constraint at the minimizer.
    pub multiplier: f64,
    /// Weighted norm of the projected Lagrangian gradient.
    pub stationarity: f64,
    /// Mixture only: `−ln Q(A₋) − Δ`.
    pub epsilon: Option<f64>,
    /// Mixture only: weight `s` on `Q(·|A₋)`.
    pub mixing_weight: Option<f64>,
    /// Mixture only: sizes of `A₊` and `A₋`.
    pub set_sizes: Option<(usize, usize)>,
}

fn check_problem(q: &ProbVec, delta: f64) -> Result<()> {
    q.ensure_strictly_positive()?;
    if !(delta >= 0.0 && delta.is_finite()) {
        return Err(Error::invalid(format!(
            "Δ must be finite and ≥ 0, got {delta}"
        )));
    }
    Ok(())
}

/// Cell indices sorted by descending `q`, ties by index.
fn descending_order(q: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..q.len()).collect();
    idx.sort_by(|&a, &b| q[b].total_cmp(&q[a]));
    idx
}

/// Smallest `hi` in `[lo, hi]` (up to float resolution) with `f(hi) ≥ target`,
/// given `f(lo) < target ≤ f(hi)` and `f` nondecreasing.
fn bisect_up(mut lo: f64, mut hi: f64, target: f64, f: impl Fn(f64) -> f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) >= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// The mixture `(1 − s)Q(·|A₊) + sQ(·|A₋)` over nested prefixes of the cells
/// sorted by descending `q`, with `s` chosen so that `D_α(P_s‖Q) = Δ`.
///
/// `A₊` is the shortest prefix with `−ln Q(A₊) ≤ Δ` and `A₋` drops its last
/// cell. Attainable thresholds are `0 < Δ ≤ −ln q_max`.
pub fn mixture_construction(q: &ProbVec, order: Order, delta: f64) -> Result<ProjectionResult> {
    if order.alpha() > 1.0 && !order.is_log_limit() {
        return Err(Error::domain(format!(
            "mixture construction needs 0 < α ≤ 1, got {}",
            order.alpha()
        )));
    }
    mixture_any_order(q, order, delta)
}

fn mixture_any_order(q: &ProbVec, order: Order, delta: f64) -> Result<ProjectionResult> {
    check_problem(q, delta)?;
    let probs = q.probs();
    let max_delta = -q.max().ln();
    if !(delta > 0.0 && delta <= max_delta) {
        return Err(Error::Infeasible(format!(
            "Δ = {delta} outside the attainable range (0, {max_delta}] of the prefix mixtures"
        )));
    }
    let idx = descending_order(probs);
    let mut mass = CompensatedSum::new();
    let mut plus_len = 0;
    let mut plus_mass = 0.0;
    let mut minus_mass = 0.0;
    for (m, &j) in idx.iter().enumerate() {
        minus_mass = mass.value();
        mass.add(probs[j]);
        if -mass.value().ln() <= delta {
            plus_len = m + 1;
            plus_mass = mass.value();
            break;
        }
    }
    debug_assert!(plus_len > 0);
    let minus_len = plus_len - 1;
    let k = probs.len();

    let build = |s: f64| -> Vec<f64> {
        let mut p = vec![0.0; k];
        for (m, &j) in idx[..plus_len].iter().enumerate() {
            let mut v = (1.0 - s) * probs[j] / plus_mass;
            if m < minus_len {
                v += s * probs[j] / minus_mass;
            }
            p[j] = v;
        }
        p
    };
    let constraint = |p: &[f64]| renyi_raw(p, probs, order);

    // Rounding in the divergence sum is absorbed at s = 0.
    let s = if minus_len == 0 || constraint(&build(0.0)) >= delta - 1e-13 * delta.max(1.0) {
        0.0
    } else {
        bisect_up(0.0, 1.0, delta, |s| constraint(&build(s)))
    };
    let p = build(s);
    let epsilon = if minus_len == 0 {
        0.0
    } else {
        -minus_mass.ln() - delta
    };
    let (multiplier, stationarity) = kkt_residual(&p, probs, order);
    let constraint_value = constraint(&p);
    Ok(ProjectionResult {
        kl_value: kl_raw(&p, probs),
        constraint_value,
        minimizer: ProbVec::from_vec_unchecked(p),
        delta,
        alpha: order.alpha(),
        method: ProjectionMethod::MixtureConstruction,
        converged: constraint_value >= delta - CONSTRAINT_TOL,
        iterations: 0,
        multiplier,
        stationarity,
        epsilon: Some(epsilon),
        mixing_weight: Some(s),
        set_sizes: Some((plus_len, minus_len)),
    })
}

/// Tilt of `Q` toward cell `j` with parameter `θ`, computed without overflow.
fn tilt_toward(q: &[f64], j: usize, theta: f64) -> Vec<f64> {
    let w = (-theta).exp();
    let denom = q[j] + (1.0 - q[j]) * w;
    q.iter()
        .enumerate()
        .map(|(i, &qi)| if i == j { qi / denom } else { qi * w / denom })
        .collect()
}

const TILT_CAP: f64 = 800.0;

/// Exact solution for `α = 1`: the tilt toward the smallest-`q` cell (lowest
/// index on ties) whose divergence equals `Δ`.
fn exponential_tilt(q: &ProbVec, delta: f64) -> Result<ProjectionResult> {
    let probs = q.probs();
    let j = probs
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1).then(a.0.cmp(&b.0)))
        .map(|(i, _)| i)
        .expect("nonempty");
    let max_delta = -probs[j].ln();
    if delta > max_delta {
        return Err(Error::Infeasible(format!(
            "Δ = {delta} exceeds the largest attainable divergence {max_delta}"
        )));
    }
    let kl = |theta: f64| kl_raw(&tilt_toward(probs, j, theta), probs);
    let theta = if delta == 0.0 {
        0.0
    } else if delta == max_delta {
        TILT_CAP
    } else {
        let mut hi = 1.0;
        while kl(hi) < delta && hi < TILT_CAP {
            hi *= 2.0;
        }
        bisect_up(0.0, hi.min(TILT_CAP), delta, kl)
    };
    let p = tilt_toward(probs, j, theta);
    let kl_value = kl_raw(&p, probs);
    Ok(ProjectionResult {
        kl_value,
        constraint_value: kl_value,
        minimizer: ProbVec::from_vec_unchecked(p),
        delta,
        alpha: 1.0,
        method: ProjectionMethod::ExponentialTilt,
        converged: true,
        iterations: 0,
        multiplier: 1.0,
        stationarity: 0.0,
        epsilon: None,
        mixing_weight: None,
        set_sizes: None,
    })
}

/// Gradients of `D₁(·, Q)` and `D_α(·‖Q)` on the support of `p`.
fn gradients(p: &[f64], q: &[f64], order: Order) -> (Vec<f64>, Vec<f64>) {
    let alpha = order.alpha();
    let am1 = alpha - 1.0;
    let mut moment = CompensatedSum::new();
    for (&pj, &qj) in p.iter().zip(q) {
        if pj > 0.0 {
            moment.add((alpha * pj.ln() - am1 * qj.ln()).exp());
        }
    }
    let s = moment.value();
    let mut grad_kl = vec![0.0; p.len()];
    let mut grad_r = vec![0.0; p.len()];
    for j in 0..p.len() {
        if p[j] > 0.0 {
            let ln_r = (p[j] / q[j]).ln();
            grad_kl[j] = ln_r + 1.0;
            grad_r[j] = alpha / am1 * (am1 * ln_r).exp() / s;
        }
    }
    (grad_kl, grad_r)
}

/// Weighted least-squares fit `∇D₁ ≈ λ∇D_α + μ` on the support of `p`;
/// returns `(λ, residual)` with the residual weighted by `p`.
fn kkt_residual(p: &[f64], q: &[f64], order: Order) -> (f64, f64) {
    if order.is_log_limit() {
        return (1.0, 0.0);
    }
    let (a, b) = gradients(p, q, order);
    let support: Vec<usize> = (0..p.len()).filter(|&j| p[j] > 0.0).collect();
    let mean = |v: &[f64]| support.iter().map(|&j| p[j] * v[j]).sum::<f64>();
    let (ma, mb) = (mean(&a), mean(&b));
    let mut sab = 0.0;
    let mut sbb = 0.0;
    for &j in &support {
        sab += p[j] * (a[j] - ma) * (b[j] - mb);
        sbb += p[j] * (b[j] - mb) * (b[j] - mb);
    }
    let lambda = if sbb > 0.0 { sab / sbb } else { 0.0 };
    let mut res = 0.0;
    for &j in &support {
        let r = (a[j] - ma) - lambda * (b[j] - mb);
        res += p[j] * r * r;
    }
    (lambda, res.sqrt())
}

/// Moves `p` along the ray `Q + t(p − Q)` onto `D_α(·‖Q) = Δ`, from the
/// feasible side. Both objective and constraint increase with `t ≥ 0`.
fn snap_to_boundary(p: &[f64], q: &[f64], order: Order, delta: f64) -> Option<Vec<f64>> {
    let point = |t: f64| -> Vec<f64> {
        p.iter()
            .zip(q)
            .map(|(&pj, &qj)| (qj + t * (pj - qj)).max(0.0))
            .collect()
    };
    let r = |t: f64| renyi_raw(&point(t), q, order);
    let t_max = p
        .iter()
        .zip(q)
        .filter(|(&pj, &qj)| pj < qj)
        .map(|(&pj, &qj)| qj / (qj - pj))
        .fold(f64::INFINITY, f64::min);
    if !t_max.is_finite() {
        return None;
    }
    let at_one = r(1.0);
    if (at_one - delta).abs() <= 1e-13 * delta.max(1.0) {
        return Some(p.to_vec());
    }
    let t = if at_one >= delta {
        bisect_up(0.0, 1.0, delta, r)
    } else if r(t_max) >= delta {
        bisect_up(1.0, t_max, delta, r)
    } else {
        return None;
    };
    let mut out = point(t);
    let total: f64 = out.iter().copied().collect::<CompensatedSum>().value();
    out.iter_mut().for_each(|v| *v /= total);
    (renyi_raw(&out, q, order) >= delta - CONSTRAINT_TOL).then_some(out)
}

const FACE_TOL: f64 = 1e-6;
const EXHAUSTIVE_LEVEL_CELLS: usize = 12;

/// Best point of the form `p = x·Q(·|A) + (1 − x)·Q(·|B)` with `x ≥ Q(A)/Q(A ∪ B)`,
/// where `a = Q(A)` and `b = Q(B)`. Returns `(x, D₁)`.
///
/// Stationary points have at most two distinct ratios `p_j/q_j` on their
/// support, so minimizers are of this form for some disjoint `A`, `B`.
fn two_level(a: f64, b: f64, order: Order, delta: f64) -> Option<(f64, f64)> {
    if a <= 0.0 {
        return None;
    }
    let cells = [a, b];
    let r = |x: f64| renyi_raw(&[x, 1.0 - x], &cells, order);
    let kl = |x: f64| kl_raw(&[x, 1.0 - x], &cells);
    if b <= 0.0 {
        return (r(1.0) >= delta).then(|| (1.0, kl(1.0)));
    }
    let centre = a / (a + b);
    if r(centre) >= delta {
        return Some((centre, kl(centre)));
    }
    if r(1.0) < delta {
        return None;
    }
    let x = bisect_up(centre, 1.0, delta, r);
    Some((x, kl(x)))
}

fn build_two_level(q: &[f64], levels: &[u8], x: f64) -> Vec<f64> {
    let a: f64 = q
        .iter()
        .zip(levels)
        .filter(|(_, &l)| l == 1)
        .map(|(v, _)| v)
        .sum();
    let b: f64 = q
        .iter()
        .zip(levels)
        .filter(|(_, &l)| l == 2)
        .map(|(v, _)| v)
        .sum();
    q.iter()
        .zip(levels)
        .map(|(&qj, &l)| match l {
            1 => x * qj / a,
            2 => (1.0 - x) * qj / b,
            _ => 0.0,
        })
        .collect()
}

/// Exhaustive search over assignments of each cell to `A`, `B` or the empty set.
fn exhaustive_two_level(q: &[f64], order: Order, delta: f64) -> Option<Vec<f64>> {
    let k = q.len();
    let mut levels = vec![0u8; k];
    let mut best: Option<(f64, f64, Vec<u8>)> = None;
    loop {
        let mut a = 0.0;
        let mut b = 0.0;
        for (&qj, &l) in q.iter().zip(&levels) {
            match l {
                1 => a += qj,
                2 => b += qj,
                _ => {}
            }
        }
        if let Some((x, v)) = two_level(a, b, order, delta) {
            if best.as_ref().is_none_or(|(bv, _, _)| v < *bv) {
                best = Some((v, x, levels.clone()));
            }
        }
        // Base-3 increment.
        let mut i = 0;
        while i < k && levels[i] == 2 {
            levels[i] = 0;
            i += 1;
        }
        if i == k {
            break;
        }
        levels[i] += 1;
    }
    best.map(|(_, x, levels)| build_two_level(q, &levels, x))
}

/// Rounds `p` to two ratio levels split at the widest gap in `ln(p_j/q_j)`, drops
/// nearly empty cells, and solves the reduced problem exactly.
fn polish_two_level(p: &[f64], q: &[f64], order: Order, delta: f64) -> Vec<Vec<f64>> {
    let mut idx: Vec<usize> = (0..p.len()).filter(|&j| p[j] >= FACE_TOL).collect();
    if idx.is_empty() {
        return Vec::new();
    }
    let log_ratio = |j: usize| (p[j] / q[j]).ln();
    idx.sort_by(|&i, &j| log_ratio(i).total_cmp(&log_ratio(j)));
    let split = idx
        .windows(2)
        .enumerate()
        .max_by(|(_, w1), (_, w2)| {
            (log_ratio(w1[1]) - log_ratio(w1[0])).total_cmp(&(log_ratio(w2[1]) - log_ratio(w2[0])))
        })
        .map_or(idx.len(), |(i, _)| i + 1);
    let mut out = Vec::new();
    let mut try_levels = |levels: Vec<u8>| {
        let a: f64 = q
            .iter()
            .zip(&levels)
            .filter(|(_, &l)| l == 1)
            .map(|(v, _)| v)
            .sum();
        let b: f64 = q
            .iter()
            .zip(&levels)
            .filter(|(_, &l)| l == 2)
            .map(|(v, _)| v)
            .sum();
        if let Some((x, _)) = two_level(a, b, order, delta) {
            out.push(build_two_level(q, &levels, x));
        }
    };
    let mut one = vec![0u8; p.len()];
    idx.iter().for_each(|&j| one[j] = 1);
    try_levels(one);
    if split < idx.len() {
        for (low, high) in [(2u8, 1u8), (1, 2)] {
            let mut levels = vec![0u8; p.len()];
            idx[..split].iter().for_each(|&j| levels[j] = low);
            idx[split..].iter().for_each(|&j| levels[j] = high);
            try_levels(levels);
        }
    }
    out
}

/// Snaps `p` onto the boundary, or keeps it when it is feasible within
/// [`CONSTRAINT_TOL`] but cannot be snapped without leaving its face.
fn finish(p: &[f64], q: &[f64], order: Order, delta: f64, iterations: u64) -> Option<Candidate> {
    let p = snap_to_boundary(p, q, order, delta)
        .or_else(|| (renyi_raw(p, q, order) >= delta - CONSTRAINT_TOL).then(|| p.to_vec()))?;
    Some(Candidate {
        kl: kl_raw(&p, q),
        p,
        iterations,
    })
}

struct Candidate {
    p: Vec<f64>,
    kl: f64,
    iterations: u64,
}

/// Augmented Lagrangian for `g(P) = Δ − D_α(P‖Q) ≤ 0` with entropic mirror
/// descent on the support of the starting point.
fn augmented_lagrangian(start: &[f64], q: &[f64], order: Order, delta: f64) -> (Vec<f64>, u64) {
    let mut p = start.to_vec();
    let mut lambda = 0.0f64;
    let mut rho = 10.0f64;
    let mut iterations = 0u64;
    let mut step = 1.0f64;
    let mut prev_violation = f64::INFINITY;

    let lagrangian = |p: &[f64], lambda: f64, rho: f64| -> f64 {
        let g = delta - renyi_raw(p, q, order);
        let shifted = (lambda + rho * g).max(0.0);
        kl_raw(p, q) + (shifted * shifted - lambda * lambda) / (2.0 * rho)
    };

    for _outer in 0..60 {
        let inner_cap = 4000u64;
        let mut inner = 0u64;
        let mut stalled = 0u32;
        loop {
            if iterations >= ITERATION_CAP || inner >= inner_cap {
                break;
            }
            let g = delta - renyi_raw(&p, q, order);
            let weight = (lambda + rho * g).max(0.0);
            let (ga, gb) = gradients(&p, q, order);
            let grad: Vec<f64> = ga.iter().zip(&gb).map(|(a, b)| a - weight * b).collect();
            let mean: f64 = p.iter().zip(&grad).map(|(pj, gj)| pj * gj).sum();
            let station: f64 = p
                .iter()
                .zip(&grad)
                .map(|(pj, gj)| pj * (gj - mean) * (gj - mean))
                .sum::<f64>()
                .sqrt();
            if station < 0.1 * STATIONARITY_TOL {
                break;
            }
            let current = lagrangian(&p, lambda, rho);
            let mut accepted = false;
            let mut gain = 0.0;
            step = (step * 2.0).min(1e6);
            for _ in 0..60 {
                let next = mirror_step(&p, &grad, step);
                let decrease: f64 = grad
                    .iter()
                    .zip(p.iter().zip(&next))
                    .map(|(g, (a, b))| g * (a - b))
                    .sum();
                let value = lagrangian(&next, lambda, rho);
                if value <= current - 1e-4 * decrease.max(0.0) {
                    gain = current - value;
                    p = next;
                    accepted = true;
                    break;
                }
                step *= 0.5;
            }
            iterations += 1;
            inner += 1;
            if !accepted {
                break;
            }
            if gain <= 1e-15 * current.abs().max(1e-300) {
                stalled += 1;
                if stalled >= 20 {
                    break;
                }
            } else {
                stalled = 0;
            }
        }
        let g = delta - renyi_raw(&p, q, order);
        lambda = (lambda + rho * g).max(0.0);
        let violation = g.max(0.0);
        if violation <= CONSTRAINT_TOL {
            let (_, res) = kkt_residual(&p, q, order);
            if res < STATIONARITY_TOL || iterations >= ITERATION_CAP {
                break;
            }
        } else if violation > 0.25 * prev_violation {
            rho = (rho * 10.0).min(1e12);
        }
        prev_violation = violation;
        if iterations >= ITERATION_CAP {
            break;
        }
    }
    (p, iterations)
}

fn mirror_step(p: &[f64], grad: &[f64], step: f64) -> Vec<f64> {
    let shift = p
        .iter()
        .zip(grad)
        .filter(|(&pj, _)| pj > 0.0)
        .map(|(_, &g)| -step * g)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut next: Vec<f64> = p
        .iter()
        .zip(grad)
        .map(|(&pj, &g)| {
            if pj > 0.0 {
                pj * (-step * g - shift).exp()
            } else {
                0.0
            }
        })
        .collect();
    let total: f64 = next.iter().copied().collect::<CompensatedSum>().value();
    for v in next.iter_mut() {
        *v /= total;
        if *v < 1e-300 {
            *v = 0.0;
        }
    }
    next
}

/// Structured starting points: tilts toward the smallest and largest cells,
/// power tilts `q^{1±θ}`, and the prefix mixture when it exists.
const EXHAUSTIVE_SUBSET_CELLS: usize = 16;

/// Cell sets `A` with the largest `Q(A) ≤ budget` found by skip-greedy passes in
/// both orders and, for few cells, by exhaustive search.
fn subset_candidates(q: &[f64], budget: f64) -> Vec<Vec<usize>> {
    let k = q.len();
    let desc = descending_order(q);
    let asc: Vec<usize> = desc.iter().rev().copied().collect();
    let mut out = Vec::new();
    for order in [desc, asc] {
        let mut mass = 0.0;
        let mut set = Vec::new();
        for j in order {
            if mass + q[j] <= budget {
                mass += q[j];
                set.push(j);
            }
        }
        set.sort_unstable();
        if !set.is_empty() && !out.contains(&set) {
            out.push(set);
        }
    }
    if k <= EXHAUSTIVE_SUBSET_CELLS {
        let mut best: Option<(f64, u32)> = None;
        for mask in 1u32..(1 << k) {
            let mass: f64 = (0..k).filter(|j| mask >> j & 1 == 1).map(|j| q[j]).sum();
            if mass <= budget && best.is_none_or(|(b, _)| mass > b) {
                best = Some((mass, mask));
            }
        }
        if let Some((_, mask)) = best {
            let set: Vec<usize> = (0..k).filter(|j| mask >> j & 1 == 1).collect();
            if !out.contains(&set) {
                out.push(set);
            }
        }
    }
    out
}

fn starting_points(q: &[f64], order: Order, delta: f64) -> Vec<Vec<f64>> {
    let k = q.len();
    let j_min = (0..k)
        .min_by(|&a, &b| q[a].total_cmp(&q[b]))
        .expect("nonempty");
    let j_max = (0..k)
        .max_by(|&a, &b| q[a].total_cmp(&q[b]).then(b.cmp(&a)))
        .expect("nonempty");
    let power_tilt = |theta: f64| -> Vec<f64> {
        let w: Vec<f64> = q.iter().map(|&qj| qj.powf(1.0 + theta)).collect();
        let total: f64 = w.iter().sum();
        w.into_iter().map(|v| v / total).collect()
    };
    let mut starts = vec![
        tilt_toward(q, j_min, 1.0),
        tilt_toward(q, j_max, 1.0),
        power_tilt(1.0),
        power_tilt(-0.5),
    ];
    if let Ok(m) = ProbVec::new(q.to_vec()).and_then(|qv| mixture_any_order(&qv, order, delta)) {
        starts.push(m.minimizer.into_inner());
    }
    // Conditionals Q(·|A) with Q(A) just below e^{−Δ}; the snap mixes them with Q.
    let budget = (-delta).exp();
    for set in subset_candidates(q, budget) {
        let mass: f64 = set.iter().map(|&j| q[j]).sum();
        let mut p = vec![0.0; k];
        for j in set {
            p[j] = q[j] / mass;
        }
        starts.push(p);
    }
    let mut unique: Vec<Vec<f64>> = Vec::with_capacity(starts.len());
    for s in starts {
        if !unique.contains(&s) {
            unique.push(s);
        }
    }
    unique
}

/// Minimizes `D₁(P, Q)` over `{P : D_α(P‖Q) ≥ Δ}`.
///
/// `α = 1` is solved exactly by [`exponential_tilt`]-style bisection. Other
/// orders take the best of several deterministic restarts; `converged` is
/// false when the selected point fails the stationarity test, and the point
/// is still returned.
pub fn numeric_projection(q: &ProbVec, order: Order, delta: f64) -> Result<ProjectionResult> {
    check_problem(q, delta)?;
    if q.k() > MAX_DENSE_CELLS {
        return Err(Error::Capacity {
            what: "dense projection cells",
            required: q.k() as f64,
            budget: MAX_DENSE_CELLS as f64,
        });
    }
    let probs = q.probs();
    if delta == 0.0 {
        return Ok(ProjectionResult {
            minimizer: q.clone(),
            kl_value: 0.0,
            constraint_value: 0.0,
            delta,
            alpha: order.alpha(),
            method: ProjectionMethod::NumericOptimizer,
            converged: true,
            iterations: 0,
            multiplier: 0.0,
            stationarity: 0.0,
            epsilon: None,
            mixing_weight: None,
            set_sizes: None,
        });
    }
    if order.is_log_limit() {
        return exponential_tilt(q, delta);
    }
    if q.k() == 1 {
        return Err(Error::Infeasible(
            "a single cell admits only P = Q".to_string(),
        ));
    }

    let starts: Vec<Vec<f64>> = starting_points(probs, order, delta)
        .into_iter()
        .filter_map(|s| snap_to_boundary(&s, probs, order, delta))
        .collect();
    if starts.is_empty() {
        let cap = renyi_raw(
            &ProbVec::point_mass(q.k(), q.k() - 1)?.into_inner(),
            probs,
            order,
        );
        return Err(Error::Infeasible(format!(
            "no structured start reaches D_α = {delta}; a point mass gives {cap}"
        )));
    }

    let runs: Vec<Vec<Candidate>> = starts
        .par_iter()
        .map(|start| {
            let seed = Candidate {
                kl: kl_raw(start, probs),
                p: start.clone(),
                iterations: 0,
            };
            let (p, iterations) = augmented_lagrangian(start, probs, order, delta);
            let mut out = vec![seed];
            if let Some(c) = finish(&p, probs, order, delta, iterations) {
                out.push(c);
            }
            for polished in polish_two_level(&p, probs, order, delta) {
                if let Some(c) = finish(&polished, probs, order, delta, iterations) {
                    out.push(c);
                }
            }
            // Minimizers on a face are approached only slowly; retry with the
            // nearly empty cells removed.
            if p.iter().any(|&v| v > 0.0 && v < FACE_TOL) {
                let mut pruned: Vec<f64> = p
                    .iter()
                    .map(|&v| if v < FACE_TOL { 0.0 } else { v })
                    .collect();
                let total: f64 = pruned.iter().sum();
                pruned.iter_mut().for_each(|v| *v /= total);
                let (polished, more) = augmented_lagrangian(&pruned, probs, order, delta);
                if let Some(c) = finish(&polished, probs, order, delta, iterations + more) {
                    out.push(c);
                }
            }
            out
        })
        .collect();

    let mut runs = runs;
    if q.k() <= EXHAUSTIVE_LEVEL_CELLS {
        if let Some(c) = exhaustive_two_level(probs, order, delta)
            .and_then(|p| finish(&p, probs, order, delta, 0))
        {
            runs.push(vec![c]);
        }
    }
    let total_iterations: u64 = runs.iter().flatten().map(|c| c.iterations).sum();
    let best = runs
        .into_iter()
        .flatten()
        .enumerate()
        .min_by(|(ia, a), (ib, b)| a.kl.total_cmp(&b.kl).then(ia.cmp(ib)))
        .map(|(_, c)| c)
        .expect("at least one candidate");
    let (multiplier, stationarity) = kkt_residual(&best.p, probs, order);
    let constraint_value = renyi_raw(&best.p, probs, order);
    let converged = constraint_value >= delta - CONSTRAINT_TOL && stationarity < 1e-6;
    Ok(ProjectionResult {
        kl_value: best.kl,
        constraint_value,
        minimizer: ProbVec::from_vec_unchecked(best.p),
        delta,
        alpha: order.alpha(),
        method: ProjectionMethod::NumericOptimizer,
        converged,
        iterations: total_iterations,
        multiplier,
        stationarity,
        epsilon: None,
        mixing_weight: None,
        set_sizes: None,
    })
}
