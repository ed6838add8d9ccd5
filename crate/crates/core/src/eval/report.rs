//! Metrics tables as CSV and JSON.

use std::path::Path;

use serde::Serialize;

use super::protocol::{MetricsRow, MetricsTable};
use crate::error::{Error, Result};

#[derive(Serialize)]
struct AggregateRow<'a> {
    method: &'a str,
    metric: &'a str,
    mean: f64,
    median: f64,
    count: usize,
    flagged: usize,
}

fn to_csv<T: Serialize>(records: impl IntoIterator<Item = T>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in records {
        w.serialize(r).map_err(|e| Error::InvalidInput(format!("csv: {e}")))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::InvalidInput(format!("csv: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// One line per row, columns named after the [`MetricsRow`] fields.
pub fn metrics_csv(rows: &[MetricsRow]) -> Result<String> {
    to_csv(rows)
}

pub fn aggregates_csv(table: &MetricsTable) -> Result<String> {
    to_csv(table.aggregates.iter().flat_map(|a| {
        a.metrics.iter().map(move |(name, st)| AggregateRow {
            method: &a.method,
            metric: name,
            mean: st.mean,
            median: st.median,
            count: a.count,
            flagged: a.flagged,
        })
    }))
}

fn write(path: &Path, text: String) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    write(path, serde_json::to_string_pretty(value)? + "\n")
}

/// Writes `metrics.csv`, `summary.csv` and `metrics.json` into `dir`.
pub fn write_metrics(table: &MetricsTable, dir: &Path) -> Result<()> {
    write(&dir.join("metrics.csv"), metrics_csv(&table.rows)?)?;
    write(&dir.join("summary.csv"), aggregates_csv(table)?)?;
    write_json(table, &dir.join("metrics.json"))
}
