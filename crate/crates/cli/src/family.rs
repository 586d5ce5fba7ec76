//! Named distribution families addressable from a config file.

use powerdiv::{half_support_alternative, truncated_geometric, ProbVec};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

/// A distribution schedule indexed by the number of cells.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum Family {
    Uniform,
    HalfSupport,
    /// `m` cells carry the truncated geometric law of index `m − 1`.
    TruncatedGeometric {
        x: f64,
    },
    PointMass {
        cell: usize,
    },
    /// `q_j ∝ j^{−exponent}`.
    Zipf {
        exponent: f64,
    },
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Uniform => "uniform",
            Family::HalfSupport => "half_support",
            Family::TruncatedGeometric { .. } => "truncated_geometric",
            Family::PointMass { .. } => "point_mass",
            Family::Zipf { .. } => "zipf",
        }
    }

    /// Parses the config value at `field`, naming the field on failure.
    pub fn from_value(field: &str, value: serde_json::Value) -> Result<Self> {
        serde_json::from_value(value).map_err(|e| CliError::config(format!("field `{field}`: {e}")))
    }

    pub fn build(&self, k: usize) -> powerdiv::Result<ProbVec> {
        match *self {
            Family::Uniform => ProbVec::uniform(k),
            Family::HalfSupport => half_support_alternative(k),
            Family::TruncatedGeometric { x } => {
                if k < 2 {
                    return Err(powerdiv::Error::InvalidArgument(format!(
                        "truncated geometric family needs at least 2 cells, got {k}"
                    )));
                }
                truncated_geometric(k as u64 - 1, x)
            }
            Family::PointMass { cell } => ProbVec::point_mass(k, cell),
            Family::Zipf { exponent } => {
                ProbVec::from_weights((1..=k).map(|j| (j as f64).powf(-exponent)).collect())
            }
        }
    }

    /// Limit of `D_α(P_k, U_k)` when the family has one in closed form.
    pub fn delta_limit(&self, alpha: f64) -> Option<powerdiv::Result<f64>> {
        match *self {
            Family::HalfSupport => Some(powerdiv::delta_half_support(alpha)),
            Family::TruncatedGeometric { x } => Some(powerdiv::delta_geometric(alpha, x)),
            _ => None,
        }
    }
}
