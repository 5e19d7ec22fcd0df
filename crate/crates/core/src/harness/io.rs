use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::TimeSeries;

/// Column to read: a header name or a zero-based position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ColumnSelector {
    Index(usize),
    Name(String),
}

impl Default for ColumnSelector {
    fn default() -> Self {
        ColumnSelector::Index(0)
    }
}

impl FromStr for ColumnSelector {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(match s.parse::<usize>() {
            Ok(i) => ColumnSelector::Index(i),
            Err(_) => ColumnSelector::Name(s.to_string()),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HeaderMode {
    /// Treat the first row as a header when its selected cell is not numeric.
    #[default]
    Auto,
    Present,
    Absent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Transform {
    #[default]
    None,
    LogReturns,
    FirstDifference,
}

fn is_missing(cell: &str) -> bool {
    matches!(cell, "" | "NA" | "na" | "NaN" | "nan" | "null" | "NULL" | ".")
}

/// Reads one numeric column of a comma-separated file. Row numbers in errors
/// are 1-based file lines.
pub fn ingest_csv(path: impl AsRef<Path>, column: &ColumnSelector, header: HeaderMode) -> Result<TimeSeries> {
    let path = path.as_ref();
    if !path.exists() {
        return Err(Error::FileNotFound(path.to_path_buf()));
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let mut records = reader.records();
    let mut values = Vec::new();
    let mut row = 0usize;

    let first = match records.next() {
        Some(r) => r.map_err(|e| csv_error(path, e))?,
        None => return Err(Error::EmptyColumn(describe(column))),
    };
    row += 1;
    let has_header = match (header, column) {
        (HeaderMode::Present, _) | (_, ColumnSelector::Name(_)) => true,
        (HeaderMode::Absent, _) => false,
        (HeaderMode::Auto, ColumnSelector::Index(i)) => {
            first.get(*i).is_some_and(|c| !is_missing(c) && c.parse::<f64>().is_err())
        }
    };
    let index = match column {
        ColumnSelector::Index(i) => *i,
        ColumnSelector::Name(name) => first
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::invalid(format!("no column named {name:?} in {}", path.display())))?,
    };
    if !has_header {
        values.push(parse_cell(first.get(index), row)?);
    }
    for record in records {
        let record = record.map_err(|e| csv_error(path, e))?;
        row += 1;
        if record.len() == 1 && record.get(0) == Some("") {
            // blank line
            continue;
        }
        values.push(parse_cell(record.get(index), row)?);
    }
    if values.is_empty() {
        return Err(Error::EmptyColumn(describe(column)));
    }
    TimeSeries::new(values)
}

fn parse_cell(cell: Option<&str>, row: usize) -> Result<f64> {
    let cell = cell.unwrap_or("");
    if is_missing(cell) {
        return Err(Error::MissingValue { row });
    }
    match cell.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(Error::NonNumeric { row, value: cell.to_string() }),
    }
}

fn describe(column: &ColumnSelector) -> String {
    match column {
        ColumnSelector::Index(i) => format!("#{i}"),
        ColumnSelector::Name(n) => n.clone(),
    }
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::Io { path: path.to_path_buf(), source },
        other => Error::invalid(format!("malformed CSV in {}: {other:?}", path.display())),
    }
}

/// Log-returns or first differences; the output is one shorter than the input.
pub fn transform(values: &[f64], op: Transform) -> Result<Vec<f64>> {
    if op == Transform::None {
        return Ok(values.to_vec());
    }
    if values.len() < 2 {
        return Err(Error::invalid("differencing needs at least two values"));
    }
    match op {
        Transform::LogReturns => {
            if let Some(t) = values.iter().position(|&v| v <= 0.0) {
                return Err(Error::domain(format!("log-returns need positive values, got {} at {t}", values[t])));
            }
            Ok(values.windows(2).map(|w| w[1].ln() - w[0].ln()).collect())
        }
        Transform::FirstDifference => Ok(values.windows(2).map(|w| w[1] - w[0]).collect()),
        Transform::None => unreachable!(),
    }
}
