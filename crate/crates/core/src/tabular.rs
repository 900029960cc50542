//! Multi-source time-series tables and their CSV form.
//!
//! A [`SampleTable`] is the n×p matrix of one acquisition system (or of
//! several, after [`align_by_timestamp`]), with one UTC timestamp per row and
//! one [`AttributeMeta`] per column.
//!
//! CSV layout: comma separated, UTF-8, LF or CRLF line endings. The header is
//! `timestamp` followed by the column names; the first field of every record
//! is an ISO-8601 instant and the remaining fields are plain decimal reals.
//! Writers render timestamps as `YYYY-MM-DDTHH:MM:SSZ` and reals with
//! [`format_g17`], so parse → write → parse is exact.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use chrono::{DateTime, NaiveDateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matrix::Matrix;
use crate::numfmt::format_g17;

#[derive(Debug, Error)]
pub enum TableError {
    #[error("header mismatch: expected [{expected}], found [{found}]")]
    HeaderMismatch { expected: String, found: String },
    #[error("no valid rows ({dropped} dropped)")]
    EmptyTable { dropped: usize },
    #[error("timestamps not strictly increasing at row {row}")]
    NonMonotonicTimestamps { row: usize },
    #[error("no common timestamps across tables")]
    EmptyIntersection,
    #[error("alignment needs at least two tables, got {0}")]
    NotEnoughTables(usize),
    #[error("duplicate column {kind}/{name}")]
    DuplicateColumn { kind: SourceKind, name: String },
    #[error("column name must be nonempty")]
    EmptyColumnName,
    #[error("table must have at least one column")]
    NoColumns,
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// Which acquisition system a column comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SourceKind {
    /// SCADA operation measurements (line voltage, line current).
    Operation,
    /// Terminal monitoring data (electric energy, power factor).
    Monitoring,
    /// Meteorological data (temperature, wind speed).
    Environment,
}

impl SourceKind {
    pub const ALL: [SourceKind; 3] = [SourceKind::Operation, SourceKind::Monitoring, SourceKind::Environment];

    pub fn as_str(self) -> &'static str {
        match self {
            SourceKind::Operation => "operation",
            SourceKind::Monitoring => "monitoring",
            SourceKind::Environment => "environment",
        }
    }
}

impl fmt::Display for SourceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SourceKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "operation" => Ok(SourceKind::Operation),
            "monitoring" => Ok(SourceKind::Monitoring),
            "environment" => Ok(SourceKind::Environment),
            other => Err(format!("unknown source kind `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AttributeMeta {
    pub source_kind: SourceKind,
    pub name: String,
    /// Free-form unit label, e.g. `kV` or `m/s`. May be empty.
    pub unit: String,
}

impl AttributeMeta {
    pub fn new(source_kind: SourceKind, name: impl Into<String>, unit: impl Into<String>) -> Self {
        Self { source_kind, name: name.into(), unit: unit.into() }
    }
}

/// Rectangular, finite, strictly time-ordered table. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleTable {
    timestamps: Vec<DateTime<Utc>>,
    values: Matrix,
    columns: Vec<AttributeMeta>,
}

impl SampleTable {
    pub fn new(
        timestamps: Vec<DateTime<Utc>>,
        values: Matrix,
        columns: Vec<AttributeMeta>,
    ) -> Result<Self, TableError> {
        if columns.is_empty() {
            return Err(TableError::NoColumns);
        }
        if timestamps.is_empty() {
            return Err(TableError::EmptyTable { dropped: 0 });
        }
        if values.rows() != timestamps.len() || values.cols() != columns.len() {
            return Err(TableError::Shape(format!(
                "{} timestamps and {} columns vs {}x{} values",
                timestamps.len(),
                columns.len(),
                values.rows(),
                values.cols()
            )));
        }
        check_columns(&columns)?;
        if let Some(row) = timestamps.windows(2).position(|w| w[1] <= w[0]) {
            return Err(TableError::NonMonotonicTimestamps { row: row + 1 });
        }
        for (i, row) in values.row_iter().enumerate() {
            if let Some(j) = row.iter().position(|v| !v.is_finite()) {
                return Err(TableError::NonFinite { row: i, col: j });
            }
        }
        let timestamps = timestamps.into_iter().map(truncate_to_seconds).collect();
        Ok(Self { timestamps, values, columns })
    }

    pub fn n_rows(&self) -> usize {
        self.timestamps.len()
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn timestamps(&self) -> &[DateTime<Utc>] {
        &self.timestamps
    }

    pub fn values(&self) -> &Matrix {
        &self.values
    }

    pub fn columns(&self) -> &[AttributeMeta] {
        &self.columns
    }

    pub fn column_index(&self, kind: SourceKind, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.source_kind == kind && c.name == name)
    }

    /// Same timestamps and metadata, new values of identical shape.
    pub fn with_values(&self, values: Matrix) -> Result<Self, TableError> {
        Self::new(self.timestamps.clone(), values, self.columns.clone())
    }

    /// The first `n` rows.
    pub fn head(&self, n: usize) -> Result<Self, TableError> {
        let idx: Vec<usize> = (0..n.min(self.n_rows())).collect();
        self.select_rows(&idx)
    }

    pub fn select_rows(&self, indices: &[usize]) -> Result<Self, TableError> {
        let ts = indices.iter().map(|&i| self.timestamps[i]).collect();
        Self::new(ts, self.values.select_rows(indices), self.columns.clone())
    }

    /// Columns belonging to one source, in table order. `None` if the table has none.
    pub fn source_columns(&self, kind: SourceKind) -> Option<Self> {
        let idx: Vec<usize> = (0..self.n_cols()).filter(|&j| self.columns[j].source_kind == kind).collect();
        if idx.is_empty() {
            return None;
        }
        let cols = idx.iter().map(|&j| self.columns[j].clone()).collect();
        Self::new(self.timestamps.clone(), self.values.select_columns(&idx), cols).ok()
    }

    /// Writes the CSV form described in the module docs.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), TableError> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(writer);
        let mut header = vec!["timestamp".to_owned()];
        header.extend(self.columns.iter().map(|c| c.name.clone()));
        w.write_record(&header)?;
        for (i, row) in self.values.row_iter().enumerate() {
            let mut rec = Vec::with_capacity(row.len() + 1);
            rec.push(format_timestamp(&self.timestamps[i]));
            rec.extend(row.iter().map(|v| format_g17(*v)));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("csv output is UTF-8")
    }
}

fn check_columns(columns: &[AttributeMeta]) -> Result<(), TableError> {
    let mut seen = HashSet::new();
    for c in columns {
        if c.name.is_empty() {
            return Err(TableError::EmptyColumnName);
        }
        if !seen.insert((c.source_kind, c.name.as_str())) {
            return Err(TableError::DuplicateColumn { kind: c.source_kind, name: c.name.clone() });
        }
    }
    Ok(())
}

fn truncate_to_seconds(t: DateTime<Utc>) -> DateTime<Utc> {
    DateTime::from_timestamp(t.timestamp(), 0).expect("in-range timestamp")
}

pub fn format_timestamp(t: &DateTime<Utc>) -> String {
    t.format("%Y-%m-%dT%H:%M:%SZ").to_string()
}

/// Parses an ISO-8601 instant. Offsets are converted to UTC; a missing
/// offset means UTC. Sub-second parts are truncated.
pub fn parse_timestamp(s: &str) -> Option<DateTime<Utc>> {
    let s = s.trim();
    if let Ok(t) = DateTime::parse_from_rfc3339(s) {
        return Some(truncate_to_seconds(t.with_timezone(&Utc)));
    }
    ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M:%S%.f"]
        .iter()
        .find_map(|f| NaiveDateTime::parse_from_str(s, f).ok())
        .map(|n| truncate_to_seconds(n.and_utc()))
}

/// Result of [`parse_csv`]: the table plus the number of rejected records.
#[derive(Debug, Clone)]
pub struct ParsedTable {
    pub table: SampleTable,
    pub dropped_rows: usize,
}

/// Parses a CSV whose header names must equal `schema` (after the timestamp
/// column). Records with an unparseable timestamp, a wrong field count, or an
/// unparseable / non-finite value are dropped and counted.
pub fn parse_csv<R: Read>(reader: R, schema: &[AttributeMeta]) -> Result<ParsedTable, TableError> {
    check_columns(schema)?;
    if schema.is_empty() {
        return Err(TableError::NoColumns);
    }
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).flexible(true).from_reader(reader);
    let header = rdr.headers()?.clone();
    let found: Vec<&str> = header.iter().skip(1).map(str::trim).collect();
    let expected: Vec<&str> = schema.iter().map(|c| c.name.as_str()).collect();
    if header.is_empty() || found != expected {
        return Err(TableError::HeaderMismatch {
            expected: expected.join(","),
            found: found.join(","),
        });
    }

    let p = schema.len();
    let mut timestamps = Vec::new();
    let mut data = Vec::new();
    let mut dropped = 0;
    let mut row_buf = Vec::with_capacity(p);
    for record in rdr.records() {
        let record = record?;
        if record.len() != p + 1 {
            dropped += 1;
            continue;
        }
        let Some(ts) = parse_timestamp(&record[0]) else {
            dropped += 1;
            continue;
        };
        row_buf.clear();
        let ok = record.iter().skip(1).all(|field| match field.trim().parse::<f64>() {
            Ok(v) if v.is_finite() => {
                row_buf.push(v);
                true
            }
            _ => false,
        });
        if !ok {
            dropped += 1;
            continue;
        }
        timestamps.push(ts);
        data.extend_from_slice(&row_buf);
    }
    if timestamps.is_empty() {
        return Err(TableError::EmptyTable { dropped });
    }
    if let Some(row) = timestamps.windows(2).position(|w| w[1] <= w[0]) {
        return Err(TableError::NonMonotonicTimestamps { row: row + 1 });
    }
    let values = Matrix::from_vec(timestamps.len(), p, data);
    let table = SampleTable::new(timestamps, values, schema.to_vec())?;
    Ok(ParsedTable { table, dropped_rows: dropped })
}

/// Reads only the header of a CSV and returns the column names after the timestamp column.
pub fn read_header_names<R: Read>(reader: R) -> Result<Vec<String>, TableError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).flexible(true).from_reader(reader);
    Ok(rdr.headers()?.iter().skip(1).map(|s| s.trim().to_owned()).collect())
}

/// Inner join on timestamps. Output rows are the sorted intersection of the
/// input timestamp sets; columns are concatenated in input order.
pub fn align_by_timestamp(tables: &[SampleTable]) -> Result<SampleTable, TableError> {
    if tables.len() < 2 {
        return Err(TableError::NotEnoughTables(tables.len()));
    }
    let columns: Vec<AttributeMeta> = tables.iter().flat_map(|t| t.columns.iter().cloned()).collect();
    check_columns(&columns)?;

    let lookups: Vec<HashMap<DateTime<Utc>, usize>> = tables[1..]
        .iter()
        .map(|t| t.timestamps.iter().enumerate().map(|(i, ts)| (*ts, i)).collect())
        .collect();

    let mut timestamps = Vec::new();
    let mut row_sets: Vec<Vec<usize>> = vec![Vec::new(); tables.len()];
    for (i0, ts) in tables[0].timestamps.iter().enumerate() {
        let hits: Option<Vec<usize>> = lookups.iter().map(|l| l.get(ts).copied()).collect();
        if let Some(hits) = hits {
            timestamps.push(*ts);
            row_sets[0].push(i0);
            for (k, i) in hits.into_iter().enumerate() {
                row_sets[k + 1].push(i);
            }
        }
    }
    if timestamps.is_empty() {
        return Err(TableError::EmptyIntersection);
    }
    let parts: Vec<Matrix> = tables.iter().zip(&row_sets).map(|(t, rows)| t.values.select_rows(rows)).collect();
    let refs: Vec<&Matrix> = parts.iter().collect();
    SampleTable::new(timestamps, Matrix::hstack(&refs), columns)
}
