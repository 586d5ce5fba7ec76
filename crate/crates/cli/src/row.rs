//! Result rows and their CSV / JSON-lines encodings.
//!
//! Floats are written as `{:.16e}` (17 significant digits), with `inf`,
//! `-inf` and `indeterminate` for the non-finite cases. Absent optional
//! values are empty in CSV and `null` in JSON. Rate flags are `true`,
//! `false`, or `na` when the condition does not apply to the order.

use std::io::{Read, Write};

use powerdiv::RateFlags;

use crate::config::{Format, Kind};
use crate::error::{CliError, Result};

/// Column order of both encodings.
pub const COLUMNS: [&str; 22] = [
    "kind",
    "alpha",
    "alpha2",
    "n",
    "k",
    "delta",
    "delta2",
    "seed",
    "value",
    "ci_low",
    "ci_high",
    "method",
    "note",
    "a1",
    "n_over_k",
    "strong_consistency",
    "consistency_high_order",
    "bahadur_low_order",
    "bahadur_high_order",
    "efficiency_low_order",
    "efficiency_high_order",
    "runtime_ms",
];

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub kind: Kind,
    pub alpha: f64,
    pub alpha2: Option<f64>,
    pub n: u64,
    pub k: u64,
    pub delta: Option<f64>,
    pub delta2: Option<f64>,
    pub seed: u64,
    pub value: f64,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
    pub method: String,
    pub note: String,
    pub flags: RateFlags,
    /// Filled only when timings are requested, so that output stays
    /// reproducible by default.
    pub runtime_ms: Option<f64>,
}

pub fn format_f64(x: f64) -> String {
    if x.is_nan() {
        "indeterminate".to_string()
    } else if x == f64::INFINITY {
        "inf".to_string()
    } else if x == f64::NEG_INFINITY {
        "-inf".to_string()
    } else {
        format!("{x:.16e}")
    }
}

pub fn parse_f64(s: &str) -> Option<f64> {
    match s {
        "indeterminate" => Some(f64::NAN),
        "inf" => Some(f64::INFINITY),
        "-inf" => Some(f64::NEG_INFINITY),
        _ => s.parse().ok(),
    }
}

fn format_flag(f: Option<bool>) -> &'static str {
    match f {
        Some(true) => "true",
        Some(false) => "false",
        None => "na",
    }
}

fn parse_flag(s: &str) -> Option<Option<bool>> {
    match s {
        "true" => Some(Some(true)),
        "false" => Some(Some(false)),
        "na" => Some(None),
        _ => None,
    }
}

impl ResultRow {
    fn cells(&self) -> Vec<Cell> {
        let opt = |v: Option<f64>| v.map_or(Cell::Null, Cell::Float);
        let mut out = vec![
            Cell::Text(self.kind.as_str().to_string()),
            Cell::Float(self.alpha),
            opt(self.alpha2),
            Cell::Int(self.n),
            Cell::Int(self.k),
            opt(self.delta),
            opt(self.delta2),
            Cell::Int(self.seed),
            Cell::Float(self.value),
            opt(self.ci_low),
            opt(self.ci_high),
            Cell::Text(self.method.clone()),
            Cell::Text(self.note.clone()),
        ];
        out.extend(self.flags.named().iter().map(|(_, f)| Cell::Flag(*f)));
        out.push(opt(self.runtime_ms));
        out
    }
}

enum Cell {
    Text(String),
    Float(f64),
    Int(u64),
    Flag(Option<bool>),
    Null,
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Text(s) => s.clone(),
            Cell::Float(x) => format_f64(*x),
            Cell::Int(i) => i.to_string(),
            Cell::Flag(f) => format_flag(*f).to_string(),
            Cell::Null => String::new(),
        }
    }

    fn json(&self) -> String {
        match self {
            Cell::Text(s) => serde_json::Value::from(s.as_str()).to_string(),
            Cell::Float(x) if x.is_finite() => format_f64(*x),
            Cell::Float(x) => format!("\"{}\"", format_f64(*x)),
            Cell::Int(i) => i.to_string(),
            Cell::Flag(Some(b)) => b.to_string(),
            Cell::Flag(None) => "\"na\"".to_string(),
            Cell::Null => "null".to_string(),
        }
    }
}

/// Writes `rows` in `format`. Empty CSV output is the header line alone;
/// empty JSON-lines output is empty.
pub fn emit<W: Write>(rows: &[ResultRow], format: Format, mut w: W) -> Result<()> {
    match format {
        Format::Csv => {
            let mut writer = csv::Writer::from_writer(w);
            writer.write_record(COLUMNS)?;
            for row in rows {
                writer.write_record(row.cells().iter().map(Cell::csv))?;
            }
            writer.flush()?;
        }
        Format::JsonLines => {
            for row in rows {
                let fields: Vec<String> = COLUMNS
                    .iter()
                    .zip(row.cells())
                    .map(|(name, cell)| format!("\"{name}\":{}", cell.json()))
                    .collect();
                writeln!(w, "{{{}}}", fields.join(","))?;
            }
            w.flush()?;
        }
    }
    Ok(())
}

/// Parses CSV produced by [`emit`].
pub fn read_csv<R: Read>(r: R) -> Result<Vec<ResultRow>> {
    let mut reader = csv::Reader::from_reader(r);
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    if header != COLUMNS {
        return Err(CliError::config("unexpected CSV header"));
    }
    let bad = |col: &str, s: &str| CliError::config(format!("column `{col}`: cannot parse `{s}`"));
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record?;
        let get = |i: usize| record.get(i).unwrap_or("");
        let float = |i: usize| parse_f64(get(i)).ok_or_else(|| bad(COLUMNS[i], get(i)));
        let opt = |i: usize| -> Result<Option<f64>> {
            if get(i).is_empty() {
                Ok(None)
            } else {
                float(i).map(Some)
            }
        };
        let int = |i: usize| get(i).parse::<u64>().map_err(|_| bad(COLUMNS[i], get(i)));
        let flag = |i: usize| parse_flag(get(i)).ok_or_else(|| bad(COLUMNS[i], get(i)));
        let required = |i: usize| flag(i)?.ok_or_else(|| bad(COLUMNS[i], get(i)));
        rows.push(ResultRow {
            kind: Kind::parse(get(0)).ok_or_else(|| bad("kind", get(0)))?,
            alpha: float(1)?,
            alpha2: opt(2)?,
            n: int(3)?,
            k: int(4)?,
            delta: opt(5)?,
            delta2: opt(6)?,
            seed: int(7)?,
            value: float(8)?,
            ci_low: opt(9)?,
            ci_high: opt(10)?,
            method: get(11).to_string(),
            note: get(12).to_string(),
            flags: RateFlags {
                a1: required(13)?,
                n_over_k: required(14)?,
                strong_consistency: flag(15)?,
                consistency_high_order: flag(16)?,
                bahadur_low_order: flag(17)?,
                bahadur_high_order: flag(18)?,
                efficiency_low_order: flag(19)?,
                efficiency_high_order: flag(20)?,
            },
            runtime_ms: opt(21)?,
        });
    }
    Ok(rows)
}
