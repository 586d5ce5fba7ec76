use std::path::Path;
use std::process::{Command, Output};

use powerdiv::{exact_tail, Order, ProbVec, RateFlags};
use powerdiv_cli::*;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_powerdiv"));
    c.env_remove(OUT_DIR_ENV);
    c
}

fn run_bin(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn resolve(kind: Kind, json: &str, flags: Overrides) -> Result<ExperimentConfig> {
    ExperimentConfig::resolve(
        FileConfig::from_json(json)?,
        Overrides {
            kind: Some(kind),
            ..flags
        },
    )
}

fn same(a: &ResultRow, b: &ResultRow) -> bool {
    let bits = |x: f64| if x.is_nan() { u64::MAX } else { x.to_bits() };
    let obits = |x: Option<f64>| x.map(bits);
    a.kind == b.kind
        && bits(a.alpha) == bits(b.alpha)
        && obits(a.alpha2) == obits(b.alpha2)
        && (a.n, a.k, a.seed) == (b.n, b.k, b.seed)
        && obits(a.delta) == obits(b.delta)
        && obits(a.delta2) == obits(b.delta2)
        && bits(a.value) == bits(b.value)
        && obits(a.ci_low) == obits(b.ci_low)
        && obits(a.ci_high) == obits(b.ci_high)
        && a.method == b.method
        && a.note == b.note
        && a.flags == b.flags
        && obits(a.runtime_ms) == obits(b.runtime_ms)
}

fn odd_row() -> ResultRow {
    ResultRow {
        kind: Kind::Slope,
        alpha: 0.1 + 0.2,
        alpha2: None,
        n: 7,
        k: 3,
        delta: Some(1e-300),
        delta2: None,
        seed: u64::MAX,
        value: f64::INFINITY,
        ci_low: Some(f64::NAN),
        ci_high: Some(-0.0),
        method: "exact".into(),
        note: "a,b;\"quoted\"".into(),
        flags: RateFlags {
            a1: true,
            n_over_k: false,
            strong_consistency: None,
            consistency_high_order: Some(true),
            bahadur_low_order: Some(false),
            bahadur_high_order: None,
            efficiency_low_order: None,
            efficiency_high_order: Some(false),
        },
        runtime_ms: Some(12.5),
    }
}

#[test]
fn csv_round_trip_preserves_values() {
    let config = resolve(Kind::Tail, r#"{"alphas":[0.5,2.0],"n_grid":[10,20],"deltas":[0.1,0.3],"k_rule":{"rule":"constant","k":3}}"#, Overrides::default()).unwrap();
    let mut rows = run(&config).unwrap();
    rows.push(odd_row());
    let mut buf = Vec::new();
    emit(&rows, Format::Csv, &mut buf).unwrap();
    let back = read_csv(buf.as_slice()).unwrap();
    assert_eq!(back.len(), rows.len());
    for (a, b) in rows.iter().zip(&back) {
        assert!(same(a, b), "{a:?}\n{b:?}");
    }
}

#[test]
fn empty_csv_is_the_header_alone() {
    let mut buf = Vec::new();
    emit(&[], Format::Csv, &mut buf).unwrap();
    assert_eq!(
        String::from_utf8(buf).unwrap(),
        format!("{}\n", COLUMNS.join(","))
    );
    let mut buf = Vec::new();
    emit(&[], Format::JsonLines, &mut buf).unwrap();
    assert!(buf.is_empty());
}

#[test]
fn json_lines_parse_independently_with_stable_keys() {
    let config = resolve(Kind::Projection, r#"{"alphas":[0.5,2.0],"n_grid":[10],"deltas":[0.2,5.0],"k_rule":{"rule":"constant","k":3}}"#, Overrides::default()).unwrap();
    let mut rows = run(&config).unwrap();
    rows.push(odd_row());
    let mut buf = Vec::new();
    emit(&rows, Format::JsonLines, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().count(), rows.len());
    for (line, row) in text.lines().zip(&rows) {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        let obj = v.as_object().unwrap();
        assert_eq!(obj.len(), COLUMNS.len());
        for key in COLUMNS {
            assert!(obj.contains_key(key), "{key}");
        }
        if row.value.is_finite() {
            assert_eq!(
                obj["value"].as_f64().unwrap().to_bits(),
                row.value.to_bits()
            );
        }
    }
    // Keys appear in column order.
    let first = text.lines().next().unwrap();
    let positions: Vec<usize> = COLUMNS
        .iter()
        .map(|c| first.find(&format!("\"{c}\":")).unwrap())
        .collect();
    assert!(positions.windows(2).all(|w| w[0] < w[1]));
    // The infeasible threshold is tagged, not dropped.
    assert!(text.contains("\"value\":\"indeterminate\""));
    assert!(text.contains("infeasible"));
}

#[test]
fn exact_tail_row_matches_the_library() {
    let config = resolve(Kind::Tail, r#"{"alphas":[2.0],"n_grid":[20],"deltas":[0.3],"k_rule":{"rule":"constant","k":3},"method":"exact"}"#, Overrides::default()).unwrap();
    let rows = run(&config).unwrap();
    assert_eq!(rows.len(), 1);
    let q = ProbVec::uniform(3).unwrap();
    let direct = exact_tail(&q, &q, Order::PEARSON, 20, 0.3).unwrap().value;
    assert_eq!(rows[0].method, "exact");
    assert_eq!(rows[0].value.to_bits(), direct.to_bits());
}

#[test]
fn half_support_efficiency_is_one_below_the_kl_order() {
    let config = resolve(
        Kind::Efficiency,
        r#"{"p":{"family":"half_support"},"alphas":[0.5,1.0],"n_grid":[1000]}"#,
        Overrides::default(),
    )
    .unwrap();
    let rows = run(&config).unwrap();
    assert_eq!(rows.len(), 1);
    assert!((rows[0].value - 1.0).abs() < 1e-12, "{}", rows[0].value);
}

#[test]
fn auto_method_falls_back_to_monte_carlo_with_a_note() {
    let config = resolve(Kind::Tail, r#"{"alphas":[1.0],"n_grid":[400],"deltas":[0.05],"k_rule":{"rule":"constant","k":40},"reps":200}"#, Overrides::default()).unwrap();
    let rows = run(&config).unwrap();
    assert_eq!(rows[0].method, "monte_carlo");
    assert!(rows[0].note.starts_with("mc fallback"));
    assert!(rows[0].ci_low.is_some() && rows[0].ci_high.is_some());
}

#[test]
fn flags_override_the_file_and_the_file_overrides_defaults() {
    let json = r#"{"seed":5,"reps":300,"alphas":[2.0],"n_grid":[10]}"#;
    let c = resolve(Kind::Stat, json, Overrides::default()).unwrap();
    assert_eq!((c.seed, c.reps, c.alphas.clone()), (5, 300, vec![2.0]));
    let c = resolve(
        Kind::Stat,
        json,
        Overrides {
            seed: Some(9),
            k: Some(4),
            ..Overrides::default()
        },
    )
    .unwrap();
    assert_eq!((c.seed, c.reps), (9, 300));
    assert_eq!(c.k_rule, powerdiv::KRule::Constant { k: 4 });
    let d = ExperimentConfig::defaults(Kind::Stat);
    assert_eq!(d.exact_budget, 10_000_000);
}

#[test]
fn every_row_carries_rate_flags() {
    for kind in Kind::ALL {
        let json = r#"{"p":{"family":"half_support"},"alphas":[0.5,2.0],"n_grid":[100,1000],"deltas":[0.2,0.3],"reps":200}"#;
        let config = resolve(kind, json, Overrides::default()).unwrap();
        let rows = run(&config).unwrap();
        assert!(!rows.is_empty(), "{kind:?}");
        let mut buf = Vec::new();
        emit(&rows, Format::Csv, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        for line in text.lines().skip(1) {
            let mut rec = csv::ReaderBuilder::new()
                .has_headers(false)
                .from_reader(line.as_bytes());
            let r = rec.records().next().unwrap().unwrap();
            for i in 13..21 {
                assert!(
                    matches!(&r[i], "true" | "false" | "na"),
                    "{kind:?}: column {i} = {:?}",
                    &r[i]
                );
            }
        }
    }
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.json");
    std::fs::write(&empty, r#"{"n_grid":[]}"#).unwrap();
    let out = run_bin(&["stat", "--config", empty.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("n_grid"));

    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"p":{"family":"no_such_family"}}"#).unwrap();
    let out = run_bin(&["tail", "--config", bad.to_str().unwrap(), "--delta", "0.1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("field `p`"));

    let out = run_bin(&["tail", "--n", "10"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run_bin(&["stat", "--n", "10,5"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn capacity_errors_exit_with_three() {
    let out = run_bin(&[
        "tail", "--n", "200", "--k", "30", "--delta", "0.1", "--method", "exact",
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("capacity"));
}

fn bytes(path: &Path) -> Vec<u8> {
    std::fs::read(path).unwrap()
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let args = |out: &Path| -> Vec<String> {
        [
            "tail", "--alpha", "0.5,1,2", "--n", "50,400", "--k", "12", "--delta", "0.1", "--reps",
            "2000", "--seed", "17", "--out",
        ]
        .iter()
        .map(|s| s.to_string())
        .chain([out.to_str().unwrap().to_string()])
        .collect()
    };
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    assert!(bin()
        .args(args(&a))
        .env("RAYON_NUM_THREADS", "1")
        .status()
        .unwrap()
        .success());
    assert!(bin()
        .args(args(&b))
        .env("RAYON_NUM_THREADS", "4")
        .status()
        .unwrap()
        .success());
    assert_eq!(bytes(&a), bytes(&b));
    assert!(String::from_utf8(bytes(&a))
        .unwrap()
        .contains("monte_carlo"));
}

#[test]
fn output_directory_comes_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let status = bin()
        .args(["asymptotics", "--n", "1000,100000", "--format", "jsonl"])
        .env(OUT_DIR_ENV, dir.path())
        .status()
        .unwrap();
    assert!(status.success());
    let text = std::fs::read_to_string(dir.path().join("asymptotics.jsonl")).unwrap();
    assert_eq!(text.lines().count(), 2);
}
