use std::io::Read;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::RunOutcome;
use crate::ahpe::Trace;

pub const TRACE_HEADER: [&str; 11] = [
    "k",
    "lambda",
    "a",
    "A",
    "value_gap",
    "dist_x",
    "dist_y",
    "v_norm",
    "eps",
    "residual_ratio",
    "step_norm",
];

/// 17 significant digits, so every value round-trips.
fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt).unwrap_or_default()
}

fn csv_err(e: csv::Error) -> std::io::Error {
    std::io::Error::other(e)
}

pub fn trace_csv(trace: &Trace) -> std::io::Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(TRACE_HEADER).map_err(csv_err)?;
    for r in &trace.records {
        w.write_record([
            r.k.to_string(),
            fmt(r.lambda),
            fmt(r.a),
            fmt(r.a_sum),
            fmt_opt(r.value_gap),
            fmt_opt(r.dist_x),
            fmt_opt(r.dist_y),
            fmt(r.v_norm),
            fmt(r.eps),
            fmt(r.residual_ratio),
            fmt(r.step_norm),
        ])
        .map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| std::io::Error::other(e.to_string()))?;
    String::from_utf8(bytes).map_err(std::io::Error::other)
}

/// One parsed row of a trace file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub k: usize,
    pub lambda: f64,
    pub a: f64,
    #[serde(rename = "A")]
    pub a_sum: f64,
    pub value_gap: Option<f64>,
    pub dist_x: Option<f64>,
    pub dist_y: Option<f64>,
    pub v_norm: f64,
    pub eps: f64,
    pub residual_ratio: f64,
    pub step_norm: f64,
}

pub fn read_trace_csv<R: Read>(reader: R) -> std::io::Result<Vec<CsvRow>> {
    let mut r = csv::Reader::from_reader(reader);
    let header: Vec<String> = r.headers().map_err(csv_err)?.iter().map(str::to_owned).collect();
    if header != TRACE_HEADER {
        return Err(std::io::Error::new(
            std::io::ErrorKind::InvalidData,
            format!("unexpected trace header {}", header.join(",")),
        ));
    }
    r.deserialize().collect::<Result<Vec<CsvRow>, _>>().map_err(csv_err)
}

/// Joins traces on `k`: `k`, then `<name>.value_gap`, `<name>.A`, `<name>.lambda` per run.
pub fn merge_traces(runs: &[(String, Vec<CsvRow>)]) -> std::io::Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["k".to_string()];
    for (name, _) in runs {
        for col in ["value_gap", "A", "lambda"] {
            header.push(format!("{name}.{col}"));
        }
    }
    w.write_record(&header).map_err(csv_err)?;
    let k_max = runs.iter().flat_map(|(_, rows)| rows.iter().map(|r| r.k)).max().unwrap_or(0);
    for k in 1..=k_max {
        let mut row = vec![k.to_string()];
        for (_, rows) in runs {
            match rows.iter().find(|r| r.k == k) {
                Some(r) => {
                    row.push(fmt_opt(r.value_gap));
                    row.push(fmt(r.a_sum));
                    row.push(fmt(r.lambda));
                }
                None => row.extend([String::new(), String::new(), String::new()]),
            }
        }
        w.write_record(&row).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| std::io::Error::other(e.to_string()))?;
    String::from_utf8(bytes).map_err(std::io::Error::other)
}

fn problem_json(o: &RunOutcome) -> Value {
    let p = &o.problem;
    json!({
        "name": p.name(),
        "dim": p.dim(),
        "mu": p.mu(),
        "lip_grad": p.lip_grad(),
        "lip_p2": p.lip_p(2),
        "has_hessian": p.has_g_hess(),
        "known_minimizer": p.known_minimizer().is_some(),
    })
}

/// Run metadata, config echo, constants, termination and per-bound worst margins.
pub fn summary_json(o: &RunOutcome, name: &str, config_path: Option<&str>) -> Value {
    let last = o.trace.records.last();
    let bounds: Vec<Value> = o
        .certificates
        .reports
        .iter()
        .map(|r| {
            json!({
                "name": r.name,
                "passed": r.passed(),
                "checked": r.per_k.len(),
                "violations": r.violations(),
                "worst_margin": r.worst_margin,
                "skipped": r.skipped,
            })
        })
        .collect();
    json!({
        "metadata": {
            "tool": "hpe-bench",
            "version": env!("CARGO_PKG_VERSION"),
            "name": name,
            "config_path": config_path,
            "algorithm": o.spec.algorithm.name(),
        },
        "config": o.spec,
        "problem": problem_json(o),
        "constants": o.constants,
        "termination": o.trace.termination,
        "iterations": o.trace.len(),
        "final": last,
        "certificates": {
            "passed": o.certificates.passed(),
            "total_violations": o.certificates.total_violations(),
            "failing": o.certificates.failing(),
            "bounds": bounds,
        },
    })
}

/// Full bound reports with per-iterate `(k, bound, observed, satisfied)` rows.
pub fn report_json(o: &RunOutcome, name: &str) -> Value {
    json!({
        "name": name,
        "algorithm": o.spec.algorithm.name(),
        "constants": o.constants,
        "total_violations": o.certificates.total_violations(),
        "reports": o.certificates.reports,
    })
}
