//! Reading series from delimited text and formatting test reports.

use std::fmt::Write as _;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::portmanteau::PortmanteauReport;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Column {
    /// Zero-based field index.
    Index(usize),
    /// Header name.
    Name(String),
}

impl Default for Column {
    fn default() -> Self {
        Column::Index(0)
    }
}

impl FromStr for Column {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.is_empty() {
            return Err(Error::invalid("column", "empty column selector"));
        }
        Ok(match s.parse::<usize>() {
            Ok(i) => Column::Index(i),
            Err(_) => Column::Name(s.to_string()),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Transform {
    #[default]
    None,
    LogReturns,
}

/// A column of a delimited text file. The path `-` reads standard input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesFile {
    pub path: PathBuf,
    pub column: Column,
    pub transform: Transform,
}

impl SeriesFile {
    pub fn new(path: impl Into<PathBuf>) -> Self {
        SeriesFile {
            path: path.into(),
            column: Column::default(),
            transform: Transform::None,
        }
    }
}

fn split_fields(line: &str) -> Vec<&str> {
    if line.contains(',') {
        line.split(',').map(str::trim).collect()
    } else {
        line.split_whitespace().collect()
    }
}

/// Parse one column of comma- or whitespace-delimited text. Blank lines and
/// lines starting with `#` are skipped. The first data line is a header when
/// selecting by name, or when none of its fields is numeric. Rows in errors
/// are 1-based line numbers.
pub fn parse_series(text: &str, column: &Column) -> Result<Vec<f64>> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, line)| (i + 1, line.trim()))
        .filter(|(_, line)| !line.is_empty() && !line.starts_with('#'))
        .peekable();

    let mut index = match column {
        Column::Index(i) => Some(*i),
        Column::Name(_) => None,
    };
    if let Some(&(row, first)) = lines.peek() {
        let fields = split_fields(first);
        let is_header = fields.iter().all(|f| f.parse::<f64>().is_err());
        match column {
            Column::Name(name) => {
                let pos = fields.iter().position(|f| f.trim_matches('"') == name).ok_or_else(|| {
                    Error::Parse {
                        row,
                        reason: format!("no column named {name:?} in header"),
                    }
                })?;
                index = Some(pos);
                lines.next();
            }
            Column::Index(_) if is_header => {
                lines.next();
            }
            Column::Index(_) => {}
        }
    }
    let index = index.expect("column resolved");

    let mut values = Vec::new();
    for (row, line) in lines {
        let fields = split_fields(line);
        let cell = fields.get(index).ok_or_else(|| Error::Parse {
            row,
            reason: format!("row has {} fields, column {index} requested", fields.len()),
        })?;
        let value: f64 = cell.trim_matches('"').parse().map_err(|_| Error::Parse {
            row,
            reason: format!("non-numeric cell {cell:?}"),
        })?;
        if !value.is_finite() {
            return Err(Error::Parse {
                row,
                reason: format!("non-finite value {cell:?}"),
            });
        }
        values.push(value);
    }
    Ok(values)
}

/// `log(x_{t+1} / x_t)`; every value must be positive.
pub fn log_returns(prices: &[f64]) -> Result<Vec<f64>> {
    if let Some(i) = prices.iter().position(|&p| !(p > 0.0)) {
        return Err(Error::invalid(
            "transform",
            format!("log returns need positive values, observation {} is {}", i + 1, prices[i]),
        ));
    }
    Ok(prices.windows(2).map(|w| (w[1] / w[0]).ln()).collect())
}

fn read_source(path: &Path) -> Result<String> {
    let io_err = |source| Error::Io {
        path: path.display().to_string(),
        source,
    };
    if path == Path::new("-") {
        let mut text = String::new();
        std::io::stdin().read_to_string(&mut text).map_err(io_err)?;
        Ok(text)
    } else {
        std::fs::read_to_string(path).map_err(io_err)
    }
}

/// Read, parse and transform a series.
pub fn ingest(file: &SeriesFile) -> Result<Vec<f64>> {
    let values = parse_series(&read_source(&file.path)?, &file.column)?;
    match file.transform {
        Transform::None => Ok(values),
        Transform::LogReturns => log_returns(&values),
    }
}

/// One JSON object per line.
pub fn format_json_lines(reports: &[PortmanteauReport]) -> String {
    let mut out = String::new();
    for r in reports {
        out.push_str(&serde_json::to_string(r).expect("report serializes"));
        out.push('\n');
    }
    out
}

/// Aligned table with 4-decimal p-values, one row per statistic and lag.
pub fn format_table(reports: &[PortmanteauReport]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<10} {:>4} {:>14} {:>7} {:>8}  {:<20} {:>7}",
        "statistic", "m", "value", "alpha", "p-value", "method", "B"
    );
    for r in reports {
        let method = serde_json::to_value(r.p_method)
            .ok()
            .and_then(|v| v.as_str().map(str::to_string))
            .unwrap_or_default();
        let b = r.replications.map(|b| b.to_string()).unwrap_or_else(|| "-".into());
        let _ = writeln!(
            out,
            "{:<10} {:>4} {:>14.4} {:>7.4} {:>8.4}  {:<20} {:>7}",
            r.statistic.name(),
            r.m,
            r.value,
            r.scaling_alpha,
            r.p_value,
            method,
            b
        );
    }
    if let Some(r) = reports.first() {
        let seed = r.seed.map(|s| s.to_string()).unwrap_or_else(|| "-".into());
        let _ = write!(out, "n = {}, seed = {seed}", r.n);
        if let (Some((p, q)), Some(fit)) = (r.order, r.fit_method) {
            let _ = write!(out, ", order = ({p}, {q}), fit = {fit}");
        }
        out.push('\n');
    }
    out
}
