//! JSON and CSV output. Every floating-point value is written with six
//! significant digits.
//!
//! The study CSV has one row per scenario × method with the header
//! `scenario_d,phi,theta,method,mean_estimate,ci_lo,ci_hi,coverage,n_replicates`.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::baselines::DiagnosticsReport;
use crate::error::{Error, Result};
use crate::harness::estimate::Estimate;
use crate::harness::study::StudyResult;

pub const SCHEMA_VERSION: &str = "1";
pub const STUDY_CSV_HEADER: &str = "scenario_d,phi,theta,method,mean_estimate,ci_lo,ci_hi,coverage,n_replicates";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub schema_version: String,
    pub method: String,
    pub d_point: f64,
    pub d_interval: [f64; 2],
    pub n: usize,
    pub m: usize,
    #[serde(rename = "K")]
    pub k: usize,
    pub ell: usize,
    pub seed: u64,
    pub runtime_seconds: f64,
    pub extra: BTreeMap<String, f64>,
}

impl EstimateReport {
    /// `n` is the series length; estimators without a regression band report
    /// the full band `m = ⌊n/2⌋, K = 1, ℓ = 0`.
    pub fn new(estimate: &Estimate, n: usize, runtime_seconds: f64) -> Self {
        let (m, k, ell) = match &estimate.design {
            Some(d) => (d.bandwidth, d.pooling, d.trim),
            None => (n / 2, 1, 0),
        };
        Self {
            schema_version: SCHEMA_VERSION.into(),
            method: estimate.method.to_string(),
            d_point: estimate.point,
            d_interval: [estimate.interval.0, estimate.interval.1],
            n,
            m,
            k,
            ell,
            seed: estimate.seed,
            runtime_seconds,
            extra: estimate.extra.clone(),
        }
    }
}

pub enum Report<'a> {
    Estimate(&'a EstimateReport),
    Study(&'a StudyResult),
    Diagnostics { report: &'a DiagnosticsReport, n: usize, runtime_seconds: f64 },
}

/// Rounds to `digits` significant digits; zero and non-finite values pass through.
pub fn round_sig(x: f64, digits: usize) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{:.*e}", digits.saturating_sub(1), x).parse().unwrap_or(x)
}

fn round_value(v: &mut Value) {
    match v {
        Value::Number(num) if num.is_f64() => {
            if let Some(r) = num.as_f64().map(|x| round_sig(x, 6)).and_then(serde_json::Number::from_f64) {
                *num = r;
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_value),
        Value::Object(map) => map.values_mut().for_each(round_value),
        _ => {}
    }
}

fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else {
        round_sig(x, 6).to_string()
    }
}

pub fn to_json(report: &Report) -> Result<Value> {
    let mut v = match report {
        Report::Estimate(e) => serde_json::to_value(e),
        Report::Study(s) => serde_json::to_value(s).map(|mut v| {
            v["schema_version"] = SCHEMA_VERSION.into();
            v
        }),
        Report::Diagnostics { report, n, runtime_seconds } => serde_json::to_value(report).map(|mut v| {
            v["schema_version"] = SCHEMA_VERSION.into();
            v["n"] = (*n).into();
            v["runtime_seconds"] = (*runtime_seconds).into();
            v
        }),
    }
    .map_err(|e| Error::invalid(format!("cannot serialize report: {e}")))?;
    round_value(&mut v);
    Ok(v)
}

pub fn to_csv(report: &Report) -> String {
    let mut out = String::new();
    match report {
        Report::Study(s) => {
            out.push_str(STUDY_CSV_HEADER);
            out.push('\n');
            for a in &s.aggregates {
                let row = [
                    fmt_num(a.scenario.d),
                    fmt_num(a.scenario.phi),
                    fmt_num(a.scenario.theta),
                    a.method.to_string(),
                    fmt_num(a.mean_estimate),
                    fmt_num(a.ci_lo),
                    fmt_num(a.ci_hi),
                    fmt_num(a.coverage),
                    a.n_replicates.to_string(),
                ];
                out.push_str(&row.join(","));
                out.push('\n');
            }
        }
        Report::Estimate(e) => {
            out.push_str("method,d_point,ci_lo,ci_hi,n,m,K,ell,seed,runtime_seconds\n");
            let row = [
                e.method.clone(),
                fmt_num(e.d_point),
                fmt_num(e.d_interval[0]),
                fmt_num(e.d_interval[1]),
                e.n.to_string(),
                e.m.to_string(),
                e.k.to_string(),
                e.ell.to_string(),
                e.seed.to_string(),
                fmt_num(e.runtime_seconds),
            ];
            out.push_str(&row.join(","));
            out.push('\n');
        }
        Report::Diagnostics { report, n, runtime_seconds } => {
            out.push_str("n,rs_hurst,corrected_rs_hurst,empirical_hurst,dfa2_slope,dfa2_degenerate,runtime_seconds\n");
            let row = [
                n.to_string(),
                fmt_num(report.rs_hurst),
                fmt_num(report.corrected_rs_hurst),
                fmt_num(report.empirical_hurst),
                fmt_num(report.dfa2_slope),
                report.dfa2_degenerate.to_string(),
                fmt_num(*runtime_seconds),
            ];
            out.push_str(&row.join(","));
            out.push('\n');
        }
    }
    out
}

pub fn write_report(report: &Report, format: Format, mut writer: impl Write) -> std::io::Result<()> {
    match format {
        Format::Json => {
            let v = to_json(report).map_err(std::io::Error::other)?;
            serde_json::to_writer_pretty(&mut writer, &v)?;
            writeln!(writer)
        }
        Format::Csv => writer.write_all(to_csv(report).as_bytes()),
    }
}

/// Writes the report to `path`.
pub fn emit_report(report: &Report, format: Format, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let io_err = |source| Error::Io { path: path.to_path_buf(), source };
    let file = std::fs::File::create(path).map_err(io_err)?;
    let mut w = std::io::BufWriter::new(file);
    write_report(report, format, &mut w).map_err(io_err)?;
    w.flush().map_err(io_err)
}
