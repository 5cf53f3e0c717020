//! Tabular data representation, CSV ingestion and robust column summaries.
//!
//! [`DataMatrix`] is the universal input of every estimator in the crate:
//! an n x d matrix of 64-bit reals plus an observation mask, immutable after
//! construction. Unobserved cells may hold any payload internally; all
//! exported views surface them as NaN or `None`.

use std::collections::BTreeSet;
use std::io::Read;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::stats;

/// Errors from ingestion and per-column summaries.
#[derive(Debug, Error)]
pub enum DataError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("ragged row at line {row}: expected {expected} fields, found {found}")]
    RaggedRow { row: usize, expected: usize, found: usize },
    #[error("cannot parse field {token:?} at line {row}, column {column}")]
    ParseField { row: usize, column: usize, token: String },
    #[error("empty input: a data matrix needs at least one row and one column")]
    Empty,
    #[error("shape error: {0}")]
    Shape(String),
    #[error("column {column} ({name}) has {n_observed} observed cells; need at least 2")]
    InsufficientColumn { column: usize, name: String, n_observed: usize },
    #[error("column {column} ({name}) has zero {scale} scale")]
    DegenerateScale { column: usize, name: String, scale: &'static str },
}

/// Which robust scale standardizes a column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScaleChoice {
    Mad,
    Qn,
}

/// An n x d table of reals with an observation mask.
///
/// Invariants: `n >= 1`, `d >= 1`, every observed cell is finite.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    values: DMatrix<f64>,
    observed: DMatrix<bool>,
    column_names: Vec<String>,
}

impl DataMatrix {
    /// Build from dense values and a mask. Observed cells must be finite.
    pub fn new(
        values: DMatrix<f64>,
        observed: DMatrix<bool>,
        column_names: Vec<String>,
    ) -> Result<Self, DataError> {
        let (n, d) = values.shape();
        if n == 0 || d == 0 {
            return Err(DataError::Empty);
        }
        if observed.shape() != (n, d) {
            return Err(DataError::Shape(format!(
                "mask shape {:?} does not match values shape {:?}",
                observed.shape(),
                values.shape()
            )));
        }
        if column_names.len() != d {
            return Err(DataError::Shape(format!(
                "{} column names for {d} columns",
                column_names.len()
            )));
        }
        let mut values = values;
        for i in 0..n {
            for j in 0..d {
                if observed[(i, j)] {
                    if !values[(i, j)].is_finite() {
                        return Err(DataError::Shape(format!(
                            "observed cell ({i}, {j}) is not finite"
                        )));
                    }
                } else {
                    values[(i, j)] = f64::NAN;
                }
            }
        }
        Ok(Self { values, observed, column_names })
    }

    /// Build a fully observed matrix.
    pub fn complete(values: DMatrix<f64>, column_names: Vec<String>) -> Result<Self, DataError> {
        let (n, d) = values.shape();
        Self::new(values, DMatrix::from_element(n, d, true), column_names)
    }

    /// Build from rows of optional values; `None` marks a missing cell.
    pub fn from_rows(
        rows: &[Vec<Option<f64>>],
        column_names: Option<Vec<String>>,
    ) -> Result<Self, DataError> {
        if rows.is_empty() || rows[0].is_empty() {
            return Err(DataError::Empty);
        }
        let d = rows[0].len();
        for (i, r) in rows.iter().enumerate() {
            if r.len() != d {
                return Err(DataError::RaggedRow { row: i + 1, expected: d, found: r.len() });
            }
        }
        let n = rows.len();
        let values = DMatrix::from_fn(n, d, |i, j| rows[i][j].unwrap_or(f64::NAN));
        let observed = DMatrix::from_fn(n, d, |i, j| rows[i][j].is_some());
        let names = column_names.unwrap_or_else(|| default_names(d));
        Self::new(values, observed, names)
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn d(&self) -> usize {
        self.values.ncols()
    }

    /// Raw cell value; NaN when unobserved.
    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[(i, j)]
    }

    /// Cell as an option.
    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        self.observed[(i, j)].then(|| self.values[(i, j)])
    }

    pub fn is_observed(&self, i: usize, j: usize) -> bool {
        self.observed[(i, j)]
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn observed_mask(&self) -> &DMatrix<bool> {
        &self.observed
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    /// Observed values of column `j`, in row order.
    pub fn observed_column(&self, j: usize) -> Vec<f64> {
        (0..self.n()).filter(|&i| self.observed[(i, j)]).map(|i| self.values[(i, j)]).collect()
    }

    pub fn observed_count(&self, j: usize) -> usize {
        (0..self.n()).filter(|&i| self.observed[(i, j)]).count()
    }

    /// Indices of observed cells in row `i`.
    pub fn observed_in_row(&self, i: usize) -> Vec<usize> {
        (0..self.d()).filter(|&j| self.observed[(i, j)]).collect()
    }

    /// Serialize to CSV with a header row. Values use the shortest exact
    /// decimal representation; unobserved cells become `NA`.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<(), DataError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.column_names)?;
        for i in 0..self.n() {
            let row: Vec<String> = (0..self.d())
                .map(|j| {
                    if self.observed[(i, j)] {
                        format!("{}", self.values[(i, j)])
                    } else {
                        "NA".to_string()
                    }
                })
                .collect();
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_csv_path(&self, path: &Path) -> Result<(), DataError> {
        let file = std::fs::File::create(path)?;
        self.write_csv(file)
    }
}

fn default_names(d: usize) -> Vec<String> {
    (1..=d).map(|j| format!("V{j}")).collect()
}

/// The default missing-value tokens: `NA`, the empty string, and `NaN`.
pub fn default_na_tokens() -> BTreeSet<String> {
    ["NA", "", "NaN"].iter().map(|s| s.to_string()).collect()
}

/// Read a CSV file into a [`DataMatrix`].
///
/// Fields matching `na_tokens` become unobserved cells. Row numbers in
/// errors are 1-based physical line numbers (the header, when present, is
/// line 1).
pub fn read_csv(
    path: &Path,
    na_tokens: &BTreeSet<String>,
    has_header: bool,
) -> Result<DataMatrix, DataError> {
    let file = std::fs::File::open(path)?;
    read_csv_from(file, na_tokens, has_header)
}

/// [`read_csv`] over any reader.
pub fn read_csv_from<R: Read>(
    reader: R,
    na_tokens: &BTreeSet<String>,
    has_header: bool,
) -> Result<DataMatrix, DataError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let mut names: Option<Vec<String>> = None;
    let mut rows: Vec<Vec<Option<f64>>> = Vec::new();
    let mut expected: Option<usize> = None;
    for (idx, record) in rdr.records().enumerate() {
        let record = record?;
        let line = idx + 1;
        if idx == 0 && has_header {
            names = Some(record.iter().map(|s| s.to_string()).collect());
            expected = Some(record.len());
            continue;
        }
        if let Some(d) = expected {
            if record.len() != d {
                return Err(DataError::RaggedRow { row: line, expected: d, found: record.len() });
            }
        } else {
            expected = Some(record.len());
        }
        let mut row = Vec::with_capacity(record.len());
        for (j, field) in record.iter().enumerate() {
            if na_tokens.contains(field) {
                row.push(None);
            } else {
                let v: f64 = field.parse().map_err(|_| DataError::ParseField {
                    row: line,
                    column: j + 1,
                    token: field.to_string(),
                })?;
                if !v.is_finite() {
                    return Err(DataError::ParseField {
                        row: line,
                        column: j + 1,
                        token: field.to_string(),
                    });
                }
                row.push(Some(v));
            }
        }
        rows.push(row);
    }
    DataMatrix::from_rows(&rows, names)
}

/// Robust summary of one column, computed on observed cells only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnSummary {
    pub name: String,
    pub median: f64,
    pub mad_scale: f64,
    pub qn_scale: f64,
    pub n_observed: usize,
}

impl ColumnSummary {
    pub fn scale(&self, choice: ScaleChoice) -> f64 {
        match choice {
            ScaleChoice::Mad => self.mad_scale,
            ScaleChoice::Qn => self.qn_scale,
        }
    }
}

/// Per-column median, MAD scale and Qn scale.
pub fn column_summaries(x: &DataMatrix) -> Result<Vec<ColumnSummary>, DataError> {
    (0..x.d())
        .map(|j| {
            let col = x.observed_column(j);
            if col.len() < 2 {
                return Err(DataError::InsufficientColumn {
                    column: j,
                    name: x.column_names()[j].clone(),
                    n_observed: col.len(),
                });
            }
            Ok(ColumnSummary {
                name: x.column_names()[j].clone(),
                median: stats::median(&col),
                mad_scale: stats::mad_scale(&col),
                qn_scale: stats::qn_scale(&col),
                n_observed: col.len(),
            })
        })
        .collect()
}

/// Robust z-scores `(x - median_j) / scale_j`. Unobserved cells carry NaN.
///
/// Fails when any column has zero scale under the chosen estimator.
pub fn robust_zscores(x: &DataMatrix, scale_choice: ScaleChoice) -> Result<DMatrix<f64>, DataError> {
    let summaries = column_summaries(x)?;
    for (j, s) in summaries.iter().enumerate() {
        if s.scale(scale_choice) <= 0.0 {
            return Err(DataError::DegenerateScale {
                column: j,
                name: s.name.clone(),
                scale: match scale_choice {
                    ScaleChoice::Mad => "MAD",
                    ScaleChoice::Qn => "Qn",
                },
            });
        }
    }
    let n = x.n();
    let d = x.d();
    Ok(DMatrix::from_fn(n, d, |i, j| {
        if x.is_observed(i, j) {
            (x.value(i, j) - summaries[j].median) / summaries[j].scale(scale_choice)
        } else {
            f64::NAN
        }
    }))
}
