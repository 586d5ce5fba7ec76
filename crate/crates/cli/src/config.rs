//! Experiment configuration: a JSON file merged with flag overrides.
//!
//! Precedence is flags, then file, then [`ExperimentConfig::defaults`].

use std::path::{Path, PathBuf};

use powerdiv::{KRule, SequenceForm, SequenceSpec};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};
use crate::family::Family;

pub const DEFAULT_EXACT_BUDGET: u64 = 10_000_000;
pub const OUT_DIR_ENV: &str = "POWERDIV_OUT_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Stat,
    Tail,
    Slope,
    Efficiency,
    Projection,
    Assumptions,
    Contiguity,
    Asymptotics,
}

impl Kind {
    pub const ALL: [Kind; 8] = [
        Kind::Stat,
        Kind::Tail,
        Kind::Slope,
        Kind::Efficiency,
        Kind::Projection,
        Kind::Assumptions,
        Kind::Contiguity,
        Kind::Asymptotics,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Kind::Stat => "stat",
            Kind::Tail => "tail",
            Kind::Slope => "slope",
            Kind::Efficiency => "efficiency",
            Kind::Projection => "projection",
            Kind::Assumptions => "assumptions",
            Kind::Contiguity => "contiguity",
            Kind::Asymptotics => "asymptotics",
        }
    }

    pub fn parse(s: &str) -> Option<Kind> {
        Kind::ALL.into_iter().find(|k| k.as_str() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum MethodPref {
    /// Exact enumeration when the type count fits the budget, else Monte Carlo.
    Auto,
    Exact,
    #[value(name = "mc")]
    #[serde(rename = "mc")]
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    #[value(name = "jsonl")]
    #[serde(rename = "jsonl")]
    JsonLines,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::JsonLines => "jsonl",
        }
    }
}

/// Raw config file contents; every field is optional.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub kind: Option<Kind>,
    pub q: Option<serde_json::Value>,
    pub p: Option<serde_json::Value>,
    pub alphas: Option<Vec<f64>>,
    pub n_grid: Option<Vec<u64>>,
    pub k_rule: Option<KRule>,
    pub deltas: Option<Vec<f64>>,
    pub reps: Option<u64>,
    pub seed: Option<u64>,
    pub method: Option<MethodPref>,
    pub exact_budget: Option<u64>,
    pub confidence: Option<f64>,
    pub rate_threshold: Option<f64>,
    pub sequences: Option<Vec<SequenceSpec>>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub timings: Option<bool>,
}

impl FileConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| CliError::config(e.to_string()))
    }
}

/// Values given on the command line.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub kind: Option<Kind>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub reps: Option<u64>,
    pub exact_budget: Option<u64>,
    pub alphas: Option<Vec<f64>>,
    pub n_grid: Option<Vec<u64>>,
    pub deltas: Option<Vec<f64>>,
    pub k: Option<u64>,
    pub method: Option<MethodPref>,
    pub timings: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub kind: Kind,
    pub q: Family,
    /// `None` means the data come from `q`.
    pub p: Option<Family>,
    pub alphas: Vec<f64>,
    pub n_grid: Vec<u64>,
    pub k_rule: KRule,
    pub deltas: Vec<f64>,
    pub reps: u64,
    pub seed: u64,
    pub method: MethodPref,
    pub exact_budget: u64,
    pub confidence: f64,
    pub rate_threshold: f64,
    pub sequences: Vec<SequenceSpec>,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub timings: bool,
}

impl ExperimentConfig {
    pub fn defaults(kind: Kind) -> Self {
        Self {
            kind,
            q: Family::Uniform,
            p: None,
            alphas: vec![1.0],
            n_grid: vec![100],
            k_rule: KRule::power(0.3),
            deltas: Vec::new(),
            reps: 10_000,
            seed: 0,
            method: MethodPref::Auto,
            exact_budget: DEFAULT_EXACT_BUDGET,
            confidence: 0.95,
            rate_threshold: powerdiv::DEFAULT_RATE_THRESHOLD,
            sequences: vec![
                SequenceSpec {
                    form: SequenceForm::PowerOfNPlain,
                    b: 0.3,
                    d: 1.0,
                    alpha: 1.0,
                },
                SequenceSpec {
                    form: SequenceForm::PowerOfNPlain,
                    b: 0.6,
                    d: 1.0,
                    alpha: 2.0,
                },
            ],
            out: None,
            format: Format::Csv,
            timings: false,
        }
    }

    /// Merges `file` and `flags` over the defaults and validates the result.
    pub fn resolve(file: FileConfig, flags: Overrides) -> Result<Self> {
        let kind = flags
            .kind
            .or(file.kind)
            .ok_or_else(|| CliError::config("no experiment kind given"))?;
        let mut c = Self::defaults(kind);
        if let Some(v) = file.q {
            c.q = Family::from_value("q", v)?;
        }
        if let Some(v) = file.p {
            c.p = Some(Family::from_value("p", v)?);
        }
        macro_rules! take {
            ($field:ident) => {
                if let Some(v) = flags.$field.or(file.$field) {
                    c.$field = v;
                }
            };
        }
        take!(alphas);
        take!(n_grid);
        take!(deltas);
        take!(reps);
        take!(seed);
        take!(method);
        take!(exact_budget);
        take!(format);
        if let Some(v) = file.k_rule {
            c.k_rule = v;
        }
        if let Some(k) = flags.k {
            c.k_rule = KRule::Constant { k };
        }
        if let Some(v) = file.confidence {
            c.confidence = v;
        }
        if let Some(v) = file.rate_threshold {
            c.rate_threshold = v;
        }
        if let Some(v) = file.sequences {
            c.sequences = v;
        }
        c.out = flags.out.or(file.out);
        c.timings = flags.timings || file.timings.unwrap_or(false);
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_grid.is_empty() {
            return Err(CliError::config("field `n_grid`: must be nonempty"));
        }
        if self.n_grid[0] == 0 || self.n_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(CliError::config(
                "field `n_grid`: must be positive and strictly increasing",
            ));
        }
        if self.alphas.is_empty() {
            return Err(CliError::config("field `alphas`: must be nonempty"));
        }
        if let Some(a) = self.alphas.iter().find(|a| !(a.is_finite() && **a > 0.0)) {
            return Err(CliError::config(format!(
                "field `alphas`: order must be > 0, got {a}"
            )));
        }
        if let Some(d) = self.deltas.iter().find(|d| !d.is_finite()) {
            return Err(CliError::config(format!(
                "field `deltas`: must be finite, got {d}"
            )));
        }
        self.k_rule
            .validate()
            .map_err(|e| CliError::config(format!("field `k_rule`: {e}")))?;
        if self.reps == 0 {
            return Err(CliError::config("field `reps`: must be ≥ 1"));
        }
        if !(self.confidence > 0.0 && self.confidence < 1.0) {
            return Err(CliError::config(format!(
                "field `confidence`: must lie in (0, 1), got {}",
                self.confidence
            )));
        }
        if !(self.rate_threshold > 0.0 && self.rate_threshold < 1.0) {
            return Err(CliError::config(
                "field `rate_threshold`: must lie in (0, 1)",
            ));
        }
        match self.kind {
            Kind::Tail | Kind::Slope | Kind::Projection if self.deltas.is_empty() => {
                Err(CliError::config(format!(
                    "field `deltas`: {} needs at least one threshold",
                    self.kind.as_str()
                )))
            }
            Kind::Efficiency => {
                if self.alphas.len() < 2 {
                    return Err(CliError::config(
                        "field `alphas`: efficiency needs at least two orders",
                    ));
                }
                if !self.deltas.is_empty() && self.deltas.len() != self.alphas.len() {
                    return Err(CliError::config(
                        "field `deltas`: efficiency needs one threshold per order, or none",
                    ));
                }
                if self.deltas.is_empty() && self.alternative().delta_limit(1.0).is_none() {
                    return Err(CliError::config(format!(
                        "field `p`: family `{}` has no closed-form limit; give `deltas`",
                        self.alternative().name()
                    )));
                }
                Ok(())
            }
            Kind::Asymptotics => {
                if self.sequences.len() != 2 {
                    return Err(CliError::config(
                        "field `sequences`: asymptotics needs exactly two",
                    ));
                }
                for s in &self.sequences {
                    s.validate()
                        .map_err(|e| CliError::config(format!("field `sequences`: {e}")))?;
                }
                if !(self.deltas.is_empty() || self.deltas.len() == 2) {
                    return Err(CliError::config(
                        "field `deltas`: asymptotics needs two thresholds, or none",
                    ));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// The family generating the data.
    pub fn alternative(&self) -> Family {
        self.p.unwrap_or(self.q)
    }

    /// Output path: `out`, else `$POWERDIV_OUT_DIR/<kind>.<ext>`, else stdout.
    pub fn output_path(&self) -> Option<PathBuf> {
        self.out.clone().or_else(|| {
            std::env::var_os(OUT_DIR_ENV)
                .filter(|d| !d.is_empty())
                .map(|d| {
                    PathBuf::from(d).join(format!(
                        "{}.{}",
                        self.kind.as_str(),
                        self.format.extension()
                    ))
                })
        })
    }
}
