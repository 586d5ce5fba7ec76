//! Power-divergence goodness-of-fit statistics for multinomial data.
//!
//! The crate covers the `φ_α` power divergences and their Rényi
//! counterparts, multinomial simulation, exact and Monte Carlo error
//! functions, Bahadur functions and efficiencies, constrained KL
//! projections, and two parametric alternative families.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod alternatives;
pub mod asymptotics;
pub mod bahadur;
pub mod divergence;
pub mod error;
pub mod numeric;
pub mod projection;
pub mod rates;
pub mod sampling;
pub mod tail;

pub use alternatives::{
    check_assumptions, check_assumptions_with, contiguity_diagnostic, delta_geometric,
    delta_half_support, delta_half_support_finite, geometric_reverse_kl_limit,
    half_support_alternative, truncated_geometric, AssumptionOptions, AssumptionReport,
    ContiguityReport, WitnessSet,
};
pub use asymptotics::{matching_sample_size, ratio_limit_probe, KRule, SequenceForm, SequenceSpec};
pub use bahadur::{
    bahadur_efficiency, c_sequence, c_sequence_with, efficiency_ratio_closed_form, empirical_slope,
    g_closed_form, sanov_sandwich, BahadurContext, CNormalization, Extended, SanovBracket,
};
pub use divergence::{
    bhattacharyya_distance, classic_statistic, lemma1_bounds, phi_alpha, phi_alpha_derivative,
    power_divergence, power_from_renyi, renyi_divergence, renyi_from_power, scaled_statistic,
    ClassicStatistic, DivergenceKind, DivergenceValue, Order, ProbVec,
};
pub use error::{Error, Result};
pub use projection::{
    mixture_construction, numeric_projection, ProjectionMethod, ProjectionResult,
};
pub use rates::{
    check_rate_conditions, check_rate_conditions_with, RateFlags, RateReport,
    DEFAULT_RATE_THRESHOLD,
};
pub use sampling::{empirical, sample_counts, simulate_statistics, Counts, Seed};
pub use tail::{
    enumerate_types, enumerate_types_with_budget, exact_tail, exact_tail_with_budget,
    log_multinomial_pmf, mc_tail, mc_tail_with_confidence, type_count, wilson_interval,
    TailEstimate, TailMethod,
};
