//! CSV input and output.

use std::fs::File;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use mctp_core::{BootstrapDraws, ContrastMatrix, Dataset};
use nalgebra::DMatrix;

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Open { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Csv(#[from] csv::Error),
    #[error("write failed: {0}")]
    Write(#[from] std::io::Error),
    #[error("missing column '{0}'")]
    MissingColumn(String),
    #[error("line {line}, column '{column}': {problem}")]
    Cell { line: u64, column: String, problem: String },
    #[error("line {line}: expected {expected} fields, found {found}")]
    RowLength { line: u64, expected: usize, found: usize },
    #[error("declared group '{0}' has no rows")]
    EmptyGroup(String),
    #[error(transparent)]
    Data(#[from] mctp_core::Error),
}

impl IoError {
    /// Whether the problem lies in the file contents rather than in
    /// reaching the file.
    pub fn is_data_error(&self) -> bool {
        !matches!(self, IoError::Open { .. } | IoError::Write(_))
    }
}

/// Column mapping of a data file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Schema {
    pub group_col: String,
    pub outcomes: Vec<String>,
    pub covariates: Vec<String>,
    /// Group order; defaults to order of first appearance.
    pub group_order: Option<Vec<String>>,
}

impl Schema {
    pub fn new(group_col: impl Into<String>, outcomes: &[&str], covariates: &[&str]) -> Self {
        Self {
            group_col: group_col.into(),
            outcomes: outcomes.iter().map(|s| s.to_string()).collect(),
            covariates: covariates.iter().map(|s| s.to_string()).collect(),
            group_order: None,
        }
    }

    pub fn with_group_order(mut self, order: &[&str]) -> Self {
        self.group_order = Some(order.iter().map(|s| s.to_string()).collect());
        self
    }
}

fn open(path: &Path) -> Result<File, IoError> {
    File::open(path).map_err(|source| IoError::Open { path: path.to_path_buf(), source })
}

fn create(path: &Path) -> Result<File, IoError> {
    File::create(path).map_err(|source| IoError::Open { path: path.to_path_buf(), source })
}

fn parse_cell(raw: &str, line: u64, column: &str) -> Result<f64, IoError> {
    let cell = raw.trim();
    if cell.is_empty() || cell.eq_ignore_ascii_case("na") {
        return Err(IoError::Cell { line, column: column.into(), problem: "missing value".into() });
    }
    match cell.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(IoError::Cell { line, column: column.into(), problem: format!("not a finite number: '{cell}'") }),
    }
}

pub fn load_csv(path: &Path, schema: &Schema) -> Result<Dataset, IoError> {
    read_dataset(open(path)?, schema)
}

/// Reads a dataset from CSV with a header row. Rows are regrouped by
/// group label; the original order is kept in [`Dataset::original_rows`].
pub fn read_dataset<R: Read>(reader: R, schema: &Schema) -> Result<Dataset, IoError> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).trim(csv::Trim::Headers).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let width = headers.len();
    let find = |name: &str| headers.iter().position(|h| h == name).ok_or_else(|| IoError::MissingColumn(name.into()));
    let group_idx = find(&schema.group_col)?;
    let outcome_idx = schema.outcomes.iter().map(|c| find(c)).collect::<Result<Vec<_>, _>>()?;
    let covariate_idx = schema.covariates.iter().map(|c| find(c)).collect::<Result<Vec<_>, _>>()?;
    if outcome_idx.is_empty() {
        return Err(mctp_core::Error::Dimension("no outcome columns declared".into()).into());
    }

    let mut labels = Vec::new();
    let mut y = Vec::new();
    let mut z = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != width {
            return Err(IoError::RowLength { line, expected: width, found: record.len() });
        }
        let label = record[group_idx].trim();
        if label.is_empty() {
            return Err(IoError::Cell { line, column: schema.group_col.clone(), problem: "missing group label".into() });
        }
        labels.push(label.to_string());
        for (&i, name) in outcome_idx.iter().zip(&schema.outcomes) {
            y.push(parse_cell(&record[i], line, name)?);
        }
        for (&i, name) in covariate_idx.iter().zip(&schema.covariates) {
            z.push(parse_cell(&record[i], line, name)?);
        }
    }

    let n = labels.len();
    let y = DMatrix::from_row_slice(n, outcome_idx.len(), &y);
    let z = DMatrix::from_row_slice(n, covariate_idx.len(), &z);
    let label_refs: Vec<&str> = labels.iter().map(String::as_str).collect();
    let order: Option<Vec<&str>> = schema.group_order.as_ref().map(|o| o.iter().map(String::as_str).collect());
    if let Some(order) = &order {
        if let Some(empty) = order.iter().find(|g| !label_refs.contains(g)) {
            return Err(IoError::EmptyGroup(empty.to_string()));
        }
    }
    let ds = Dataset::from_labeled_rows(&label_refs, y, z, order.as_deref())?
        .with_outcome_names(schema.outcomes.clone())?
        .with_covariate_names(schema.covariates.clone())?;
    Ok(ds)
}

pub fn load_contrasts_csv(path: &Path, k: usize, d: usize) -> Result<ContrastMatrix, IoError> {
    read_contrasts(open(path)?, k, d)
}

/// Custom contrasts: one row per contrast with k·d coefficients, ordered
/// group by group with outcomes varying fastest. An optional leading
/// non-numeric field is the row label; a first line that is not numeric is
/// taken as a header.
pub fn read_contrasts<R: Read>(reader: R, k: usize, d: usize) -> Result<ContrastMatrix, IoError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).flexible(true).from_reader(reader);
    let mut rows: Vec<f64> = Vec::new();
    let mut labels: Vec<Option<String>> = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let fields: Vec<&str> = record.iter().map(str::trim).collect();
        if fields.iter().all(|f| f.is_empty()) {
            continue;
        }
        let numeric = |f: &&str| f.parse::<f64>().is_ok();
        if i == 0 && fields.iter().skip(1).any(|f| !numeric(f)) {
            continue;
        }
        let (label, coeffs) = if numeric(&fields[0]) { (None, &fields[..]) } else { (Some(fields[0].to_string()), &fields[1..]) };
        if coeffs.len() != k * d {
            return Err(IoError::RowLength { line, expected: k * d, found: coeffs.len() });
        }
        for (j, f) in coeffs.iter().enumerate() {
            rows.push(parse_cell(f, line, &format!("coefficient {}", j + 1))?);
        }
        labels.push(label);
    }
    let r = labels.len();
    let h = DMatrix::from_row_slice(r, k * d, &rows);
    let labels = if labels.iter().any(Option::is_some) {
        Some(labels.into_iter().enumerate().map(|(s, l)| l.unwrap_or_else(|| format!("contrast {}", s + 1))).collect())
    } else {
        None
    };
    Ok(ContrastMatrix::custom(&h, labels, k, d)?)
}

/// Writes bootstrap statistics, one row per replicate.
pub fn write_draws_csv(path: &Path, draws: &BootstrapDraws, labels: &[String]) -> Result<(), IoError> {
    let mut w = csv::Writer::from_writer(create(path)?);
    let mut header = vec!["replicate".to_string()];
    header.extend(labels.iter().cloned());
    w.write_record(&header)?;
    for b in 0..draws.replicates() {
        let mut rec = vec![(b + 1).to_string()];
        rec.extend(draws.row(b).iter().map(|v| format!("{v:e}")));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a file written by [`write_draws_csv`].
pub fn read_draws_csv<R: Read>(reader: R) -> Result<BootstrapDraws, IoError> {
    let mut rdr = csv::Reader::from_reader(reader);
    let r = rdr.headers()?.len().saturating_sub(1);
    let mut values = Vec::new();
    let mut b = 0;
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        for (j, f) in record.iter().skip(1).enumerate() {
            values.push(parse_cell(f, line, &format!("contrast {}", j + 1))?);
        }
        b += 1;
    }
    Ok(BootstrapDraws::from_matrix(b, r, values)?)
}

pub fn write_text(path: &Path, text: &str) -> Result<(), IoError> {
    create(path)?.write_all(text.as_bytes())?;
    Ok(())
}
