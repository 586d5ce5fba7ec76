//! Executes an [`ExperimentConfig`] and collects rows in grid order.

use std::time::Instant;

use powerdiv::{
    bahadur_efficiency, c_sequence, check_assumptions_with, check_rate_conditions_with,
    contiguity_diagnostic, delta_half_support, empirical_slope, exact_tail_with_budget,
    g_closed_form, mc_tail_with_confidence, mixture_construction, numeric_projection,
    power_divergence, ratio_limit_probe, simulate_statistics, type_count, AssumptionOptions,
    BahadurContext, Error, Extended, Order, ProbVec, ProjectionResult, Seed, TailEstimate,
    TailMethod,
};
use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::config::{ExperimentConfig, Kind, MethodPref};
use crate::error::{CliError, Result};
use crate::family::Family;
use crate::row::{format_f64, ResultRow};

pub fn run(config: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    config.validate()?;
    match config.kind {
        Kind::Stat => grid_tasks(config, false)
            .par_iter()
            .map(|t| timed(config, || stat_row(config, t)))
            .collect_rows(),
        Kind::Tail => grid_tasks(config, true)
            .par_iter()
            .map(|t| timed(config, || tail_row(config, t)))
            .collect_rows(),
        Kind::Slope => grid_tasks(config, true)
            .par_iter()
            .map(|t| timed(config, || slope_row(config, t)))
            .collect_rows(),
        Kind::Projection => grid_tasks(config, true)
            .par_iter()
            .map(|t| timed(config, || projection_rows(config, t)))
            .collect_rows(),
        Kind::Efficiency => efficiency_rows(config),
        Kind::Assumptions => config
            .alphas
            .par_iter()
            .map(|&a| timed(config, || assumption_rows(config, a)))
            .collect_rows(),
        Kind::Contiguity => timed(config, || contiguity_rows(config)),
        Kind::Asymptotics => timed(config, || asymptotic_rows(config)),
    }
}

trait CollectRows {
    fn collect_rows(self) -> Result<Vec<ResultRow>>;
}

impl<I: IndexedParallelIterator<Item = Result<Vec<ResultRow>>>> CollectRows for I {
    fn collect_rows(self) -> Result<Vec<ResultRow>> {
        let parts: Vec<Result<Vec<ResultRow>>> = self.collect();
        let mut rows = Vec::new();
        for part in parts {
            rows.extend(part?);
        }
        Ok(rows)
    }
}

fn timed(
    config: &ExperimentConfig,
    f: impl FnOnce() -> Result<Vec<ResultRow>>,
) -> Result<Vec<ResultRow>> {
    let start = Instant::now();
    let mut rows = f()?;
    if config.timings {
        let ms = start.elapsed().as_secs_f64() * 1e3;
        rows.iter_mut().for_each(|r| r.runtime_ms = Some(ms));
    }
    Ok(rows)
}

/// One grid point; `index` selects the replicate substream.
struct Task {
    index: u64,
    alpha: f64,
    n: u64,
    delta: Option<f64>,
}

/// Tasks in `alpha`, then `n`, then `Δ` order.
fn grid_tasks(config: &ExperimentConfig, with_deltas: bool) -> Vec<Task> {
    let deltas: Vec<Option<f64>> = if with_deltas {
        config.deltas.iter().copied().map(Some).collect()
    } else {
        vec![None]
    };
    let mut out = Vec::new();
    for &alpha in &config.alphas {
        for &n in &config.n_grid {
            for &delta in &deltas {
                out.push(Task {
                    index: out.len() as u64,
                    alpha,
                    n,
                    delta,
                });
            }
        }
    }
    out
}

fn cells(config: &ExperimentConfig, n: u64) -> u64 {
    config.k_rule.eval(n)
}

fn build(family: Family, k: u64) -> Result<ProbVec> {
    family
        .build(k as usize)
        .map_err(|e| CliError::config(format!("family `{}` at k = {k}: {e}", family.name())))
}

fn base_row(config: &ExperimentConfig, alpha: f64, n: u64, k: u64) -> ResultRow {
    ResultRow {
        kind: config.kind,
        alpha,
        alpha2: None,
        n,
        k,
        delta: None,
        delta2: None,
        seed: config.seed,
        value: f64::NAN,
        ci_low: None,
        ci_high: None,
        method: String::new(),
        note: String::new(),
        flags: check_rate_conditions_with(n, k, alpha, config.rate_threshold).flags,
        runtime_ms: None,
    }
}

fn stat_row(config: &ExperimentConfig, t: &Task) -> Result<Vec<ResultRow>> {
    let k = cells(config, t.n);
    let q = build(config.q, k)?;
    let p = build(config.alternative(), k)?;
    let order = Order::new(t.alpha)?;
    let stats = simulate_statistics(
        &p,
        &q,
        order,
        t.n,
        config.reps,
        Seed::with_stream(config.seed, t.index),
    )?;
    let reps = stats.len() as f64;
    let mean = stats.iter().sum::<f64>() / reps;
    let mut row = base_row(config, t.alpha, t.n, k);
    row.delta = Some(power_divergence(&p, &q, order)?.value);
    row.value = mean;
    row.method = TailMethod::MonteCarlo.as_str().to_string();
    if stats.len() > 1 {
        let var = stats.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (reps - 1.0);
        let z = Normal::standard().inverse_cdf(0.5 + config.confidence / 2.0);
        let half = z * (var / reps).sqrt();
        row.ci_low = Some(mean - half);
        row.ci_high = Some(mean + half);
    }
    row.note = "delta is D_alpha(P_k, Q_k)".to_string();
    Ok(vec![row])
}

fn tail_estimate(config: &ExperimentConfig, t: &Task) -> Result<(u64, TailEstimate, String)> {
    let k = cells(config, t.n);
    let q = build(config.q, k)?;
    let p = build(config.alternative(), k)?;
    let order = Order::new(t.alpha)?;
    let delta = t.delta.expect("tail tasks carry a threshold");
    let exact = || exact_tail_with_budget(&q, &p, order, t.n, delta, config.exact_budget);
    let mc = || {
        mc_tail_with_confidence(
            &q,
            &p,
            order,
            t.n,
            delta,
            config.reps,
            Seed::with_stream(config.seed, t.index),
            config.confidence,
        )
    };
    let count = type_count(k as usize, t.n);
    let (estimate, note) = match config.method {
        MethodPref::Exact => (exact()?, String::new()),
        MethodPref::MonteCarlo => (mc()?, String::new()),
        MethodPref::Auto if count <= config.exact_budget as f64 => (exact()?, String::new()),
        MethodPref::Auto => (
            mc()?,
            format!(
                "mc fallback: type count {} exceeds budget {}",
                format_f64(count),
                config.exact_budget
            ),
        ),
    };
    Ok((k, estimate, note))
}

fn tail_row(config: &ExperimentConfig, t: &Task) -> Result<Vec<ResultRow>> {
    let (k, est, mut note) = tail_estimate(config, t)?;
    let mut row = base_row(config, t.alpha, t.n, k);
    row.delta = t.delta;
    row.value = est.value;
    row.method = est.method.as_str().to_string();
    if est.method == TailMethod::MonteCarlo {
        row.ci_low = Some(est.ci_low);
        row.ci_high = Some(est.ci_high);
    } else if est.value == 0.0 && est.log_value.is_finite() {
        append(
            &mut note,
            format!("log_value={}", format_f64(est.log_value)),
        );
    }
    row.note = note;
    Ok(vec![row])
}

fn slope_row(config: &ExperimentConfig, t: &Task) -> Result<Vec<ResultRow>> {
    let (k, est, mut note) = tail_estimate(config, t)?;
    let delta = t.delta.expect("slope tasks carry a threshold");
    let ctx = BahadurContext::new(t.alpha, delta, t.n, k)?;
    let mut row = base_row(config, t.alpha, t.n, k);
    row.delta = Some(delta);
    row.method = est.method.as_str().to_string();
    row.value = match empirical_slope(&ctx, &est) {
        Ok(s) => s,
        Err(Error::TailUnderflow) => {
            append(&mut note, "no exceedances".to_string());
            f64::INFINITY
        }
        Err(e) => return Err(e.into()),
    };
    if est.method == TailMethod::MonteCarlo {
        let scale = c_sequence(t.alpha, t.n, k)? / t.n as f64;
        row.ci_low = Some(-scale * est.ci_high.ln());
        row.ci_high = Some(-scale * est.ci_low.ln());
    }
    append(
        &mut note,
        format!(
            "g_closed_form={}",
            format_f64(g_closed_form(t.alpha, delta)?)
        ),
    );
    row.note = note;
    Ok(vec![row])
}

fn append(note: &mut String, part: String) {
    if !note.is_empty() {
        note.push(';');
    }
    note.push_str(&part);
}

fn projection_note(r: &ProjectionResult) -> String {
    let mut note = format!(
        "converged={};constraint={};multiplier={};stationarity={};iterations={}",
        r.converged,
        format_f64(r.constraint_value),
        format_f64(r.multiplier),
        format_f64(r.stationarity),
        r.iterations
    );
    if let Some(eps) = r.epsilon {
        append(&mut note, format!("epsilon={}", format_f64(eps)));
    }
    if let Some(s) = r.mixing_weight {
        append(&mut note, format!("mixing_weight={}", format_f64(s)));
    }
    if let Some((plus, minus)) = r.set_sizes {
        append(&mut note, format!("set_sizes={plus}/{minus}"));
    }
    note
}

fn projection_rows(config: &ExperimentConfig, t: &Task) -> Result<Vec<ResultRow>> {
    let k = cells(config, t.n);
    let q = build(config.q, k)?;
    let order = Order::new(t.alpha)?;
    let delta = t.delta.expect("projection tasks carry a threshold");
    let mut rows = Vec::new();
    let mut push = |outcome: powerdiv::Result<ProjectionResult>, method: &str| -> Result<()> {
        let mut row = base_row(config, t.alpha, t.n, k);
        row.delta = Some(delta);
        match outcome {
            Ok(r) => {
                row.value = r.kl_value;
                row.method = r.method.as_str().to_string();
                row.note = projection_note(&r);
            }
            Err(Error::Infeasible(msg)) => {
                row.method = method.to_string();
                row.note = format!("infeasible: {msg}");
            }
            Err(e) => return Err(e.into()),
        }
        rows.push(row);
        Ok(())
    };
    push(numeric_projection(&q, order, delta), "numeric")?;
    if t.alpha <= 1.0 {
        push(mixture_construction(&q, order, delta), "mixture")?;
    }
    Ok(rows)
}

/// Threshold for order `alphas[i]`: the configured value, else the family limit.
fn efficiency_delta(config: &ExperimentConfig, i: usize) -> Result<f64> {
    if let Some(&d) = config.deltas.get(i) {
        return Ok(d);
    }
    let family = config.alternative();
    let limit = family.delta_limit(config.alphas[i]).ok_or_else(|| {
        CliError::config(format!(
            "field `p`: family `{}` has no closed-form limit",
            family.name()
        ))
    })?;
    Ok(limit?)
}

fn efficiency_rows(config: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    let alpha1 = config.alphas[0];
    let delta1 = efficiency_delta(config, 0)?;
    let mut tasks = Vec::new();
    for j in 1..config.alphas.len() {
        let delta2 = efficiency_delta(config, j)?;
        for &n in &config.n_grid {
            tasks.push((config.alphas[j], delta2, n));
        }
    }
    tasks
        .par_iter()
        .map(|&(alpha2, delta2, n)| {
            timed(config, || {
                let k = cells(config, n);
                let c_ratio = c_sequence(alpha1, n, k)? / c_sequence(alpha2, n, k)?;
                let value = bahadur_efficiency(
                    alpha1,
                    delta1,
                    alpha2,
                    delta2,
                    Extended::from_f64(c_ratio),
                )?;
                let mut row = base_row(config, alpha1, n, k);
                row.alpha2 = Some(alpha2);
                row.delta = Some(delta1);
                row.delta2 = Some(delta2);
                row.value = value.to_f64();
                row.method = "closed_form".to_string();
                row.note = format!(
                    "g1={};g2={};c_ratio={}",
                    format_f64(g_closed_form(alpha1, delta1)?),
                    format_f64(g_closed_form(alpha2, delta2)?),
                    format_f64(c_ratio)
                );
                Ok(vec![row])
            })
        })
        .collect_rows()
}

fn schedules(
    config: &ExperimentConfig,
) -> (
    impl Fn(u64) -> powerdiv::Result<ProbVec> + '_,
    impl Fn(u64) -> powerdiv::Result<ProbVec> + '_,
) {
    let q = move |n: u64| config.q.build(cells(config, n) as usize);
    let p = move |n: u64| config.alternative().build(cells(config, n) as usize);
    (q, p)
}

fn assumption_rows(config: &ExperimentConfig, alpha: f64) -> Result<Vec<ResultRow>> {
    let (q, p) = schedules(config);
    let r = check_assumptions_with(q, p, alpha, &config.n_grid, AssumptionOptions::default())?;
    let mut summary = format!(
        "a1_ok={};a2_ok={};a2_rho={};a3_converged={};a3_identifiable={};a3_window_range={}",
        r.a1_ok,
        r.a2_ok,
        format_f64(r.a2_rho),
        r.a3_converged,
        r.a3_identifiable,
        format_f64(r.a3_window_range)
    );
    if !r.notes.is_empty() {
        append(&mut summary, format!("notes={}", r.notes.join(" | ")));
    }
    Ok((0..r.n_grid.len())
        .map(|i| {
            let k = r.k_values[i] as u64;
            let mut row = base_row(config, alpha, r.n_grid[i], k);
            row.delta = Some(r.a3_delta);
            row.value = r.divergences[i];
            row.method = "diagnostic".to_string();
            row.note = format!(
                "rho={};q_max={};{summary}",
                format_f64(r.rho_values[i]),
                format_f64(r.q_max_values[i])
            );
            row
        })
        .collect())
}

fn contiguity_rows(config: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    let (q, p) = schedules(config);
    let r = contiguity_diagnostic(q, p, &config.n_grid)?;
    Ok(r.n_grid
        .iter()
        .zip(&r.d1_sequence)
        .zip(&r.witness_sets)
        .map(|((&n, &d1), w)| {
            let mut row = base_row(config, 1.0, n, cells(config, n));
            row.value = d1;
            row.method = "diagnostic".to_string();
            row.note = format!(
                "bounded={};witness_cells={};witness_q_mass={};witness_p_mass={}",
                r.bounded_flag,
                w.cells.len(),
                format_f64(w.q_mass),
                format_f64(w.p_mass)
            );
            row
        })
        .collect())
}

fn asymptotic_rows(config: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    let (s1, s2) = (config.sequences[0], config.sequences[1]);
    let limit = |alpha: f64| -> Result<f64> {
        match config.alternative().delta_limit(alpha) {
            Some(d) => Ok(d?),
            None => Ok(delta_half_support(alpha)?),
        }
    };
    let deltas = match config.deltas[..] {
        [d1, d2] => (d1, d2),
        _ => (limit(s1.alpha)?, limit(s2.alpha)?),
    };
    let grid: Vec<f64> = config.n_grid.iter().map(|&n| n as f64).collect();
    let ratios = ratio_limit_probe(&s1, &s2, deltas, &grid, &config.k_rule)?;
    Ok(config
        .n_grid
        .iter()
        .zip(ratios)
        .map(|(&n, ratio)| {
            let mut row = base_row(config, s1.alpha, n, cells(config, n));
            row.alpha2 = Some(s2.alpha);
            row.delta = Some(deltas.0);
            row.delta2 = Some(deltas.1);
            row.value = ratio;
            row.method = "analytic".to_string();
            row.note = format!("forms={}/{}", form_name(&s1), form_name(&s2));
            row
        })
        .collect())
}

fn form_name(s: &powerdiv::SequenceSpec) -> String {
    serde_json::to_value(s.form)
        .ok()
        .and_then(|v| v.as_str().map(str::to_string))
        .unwrap_or_default()
}
