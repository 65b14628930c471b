//! Copula-scale data: rank transform, validation and CSV ingestion.

use crate::error::{Result, VinefitError};
use nalgebra::DMatrix;
use std::path::Path;

/// An n x d matrix of copula-scale observations, every entry strictly in (0,1).
#[derive(Debug, Clone)]
pub struct PseudoObservations {
    data: DMatrix<f64>,
}

impl PseudoObservations {
    /// Wraps an existing matrix of copula-scale values, validating the
    /// open-interval and size invariants.
    pub fn new(data: DMatrix<f64>) -> Result<Self> {
        if data.nrows() < 2 {
            return Err(VinefitError::TooFewObservations {
                need: 2,
                got: data.nrows(),
            });
        }
        if data.ncols() < 2 {
            return Err(VinefitError::TooFewVariables {
                need: 2,
                got: data.ncols(),
            });
        }
        for j in 0..data.ncols() {
            for i in 0..data.nrows() {
                let v = data[(i, j)];
                if !v.is_finite() {
                    return Err(VinefitError::NonFiniteValue { row: i, col: j });
                }
                if v <= 0.0 || v >= 1.0 {
                    return Err(VinefitError::OutsideUnitInterval {
                        row: i,
                        col: j,
                        value: v,
                    });
                }
            }
        }
        Ok(Self { data })
    }

    pub fn nrows(&self) -> usize {
        self.data.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.data.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.data
    }

    /// Column j as an owned vector.
    pub fn column(&self, j: usize) -> Vec<f64> {
        self.data.column(j).iter().copied().collect()
    }

    /// Row i as an owned vector.
    pub fn row(&self, i: usize) -> Vec<f64> {
        self.data.row(i).iter().copied().collect()
    }
}

/// Average ranks of a slice; ties get the mean of the ranks they span.
/// Ranks are 1-based, matching the usual statistical convention.
pub fn average_ranks(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| x[a].partial_cmp(&x[b]).unwrap());
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && x[idx[j + 1]] == x[idx[i]] {
            j += 1;
        }
        // positions i..=j share the average rank
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for k in i..=j {
            ranks[idx[k]] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Converts raw data to pseudo-observations by dividing average ranks by
/// n + 1, so that no output touches 0 or 1.
pub fn pseudo_obs(raw: &DMatrix<f64>) -> Result<PseudoObservations> {
    if raw.nrows() < 2 {
        return Err(VinefitError::TooFewObservations {
            need: 2,
            got: raw.nrows(),
        });
    }
    for j in 0..raw.ncols() {
        for i in 0..raw.nrows() {
            if !raw[(i, j)].is_finite() {
                return Err(VinefitError::NonFiniteValue { row: i, col: j });
            }
        }
    }
    let n = raw.nrows() as f64;
    let mut out = DMatrix::zeros(raw.nrows(), raw.ncols());
    for j in 0..raw.ncols() {
        let col: Vec<f64> = raw.column(j).iter().copied().collect();
        let ranks = average_ranks(&col);
        for i in 0..raw.nrows() {
            out[(i, j)] = ranks[i] / (n + 1.0);
        }
    }
    PseudoObservations::new(out)
}

/// Reads a numeric CSV file (comma separated, '.' decimal point, UTF-8).
/// When `has_header` is true the first row is skipped.
pub fn read_csv_matrix(path: &Path, has_header: bool) -> Result<DMatrix<f64>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .flexible(false)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let mut row = Vec::with_capacity(record.len());
        for (j, field) in record.iter().enumerate() {
            let value: f64 = field.parse().map_err(|_| VinefitError::NonNumericCell {
                row: i,
                col: j,
                text: field.to_string(),
            })?;
            row.push(value);
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(VinefitError::TooFewObservations { need: 2, got: 0 });
    }
    let ncols = rows[0].len();
    let nrows = rows.len();
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}
