//! Target derivation, one-hot encoding, standardization and seeded splits.

use std::collections::HashMap;
use std::io::{Read, Write};

use ndarray::{Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::dataset::{CleanDataset, ColumnData, ColumnKind};
use crate::error::{Error, Result};
use crate::rng;

/// Name of the label column in design-matrix CSV exports.
pub const TARGET_COLUMN: &str = "TARGET";

/// Binary injury label: 1 when any casualty count is positive.
pub fn derive_target(casualties: &[i64]) -> Result<u8> {
    if let Some(neg) = casualties.iter().find(|&&c| c < 0) {
        return Err(Error::Validation(format!("negative casualty count {neg}")));
    }
    let total: i64 = casualties.iter().sum();
    Ok(u8::from(total >= 1))
}

/// Labels for every row of a cleansed dataset.
pub fn derive_labels(clean: &CleanDataset) -> Result<Vec<u8>> {
    clean
        .casualty_counts()
        .iter()
        .map(|row| {
            let counts: Vec<i64> = row.iter().map(|&c| i64::from(c)).collect();
            derive_target(&counts)
        })
        .collect()
}

/// Dense encoded features with column names and labels.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    pub values: Array2<f64>,
    pub column_names: Vec<String>,
    pub labels: Vec<u8>,
}

impl DesignMatrix {
    pub fn new(values: Array2<f64>, column_names: Vec<String>, labels: Vec<u8>) -> Result<Self> {
        if column_names.len() != values.ncols() {
            return Err(Error::DimensionMismatch {
                expected: values.ncols(),
                actual: column_names.len(),
            });
        }
        if labels.len() != values.nrows() {
            return Err(Error::DimensionMismatch {
                expected: values.nrows(),
                actual: labels.len(),
            });
        }
        if let Some(bad) = labels.iter().find(|&&l| l > 1) {
            return Err(Error::Validation(format!("label {bad} is not 0 or 1")));
        }
        Ok(DesignMatrix {
            values,
            column_names,
            labels,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_cols(&self) -> usize {
        self.values.ncols()
    }

    pub fn view(&self) -> ArrayView2<'_, f64> {
        self.values.view()
    }

    pub fn select_rows(&self, rows: &[usize]) -> DesignMatrix {
        DesignMatrix {
            values: self.values.select(Axis(0), rows),
            column_names: self.column_names.clone(),
            labels: rows.iter().map(|&r| self.labels[r]).collect(),
        }
    }

    /// Writes the matrix as CSV with header `column_names..., TARGET`.
    /// Values use the shortest representation that parses back exactly.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(writer);
        let mut header = self.column_names.clone();
        header.push(TARGET_COLUMN.to_string());
        out.write_record(&header)?;
        for (row, label) in self.values.rows().into_iter().zip(&self.labels) {
            let mut record: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            record.push(label.to_string());
            out.write_record(&record)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<DesignMatrix> {
        let mut input = csv::Reader::from_reader(reader);
        let header: Vec<String> = input.headers()?.iter().map(str::to_string).collect();
        if header.last().map(String::as_str) != Some(TARGET_COLUMN) {
            return Err(Error::Validation(format!(
                "design matrix CSV must end with a {TARGET_COLUMN} column"
            )));
        }
        let n_cols = header.len() - 1;
        let mut values = Vec::new();
        let mut labels = Vec::new();
        for (i, record) in input.records().enumerate() {
            let record = record?;
            let parse_err = |message: String| Error::Parse { row: i + 2, message };
            for cell in record.iter().take(n_cols) {
                values.push(cell.parse::<f64>().map_err(|e| parse_err(format!("{cell:?}: {e}")))?);
            }
            let label = &record[n_cols];
            labels.push(
                label
                    .parse::<u8>()
                    .map_err(|e| parse_err(format!("label {label:?}: {e}")))?,
            );
        }
        let n_rows = labels.len();
        let values = Array2::from_shape_vec((n_rows, n_cols), values).map_err(|e| Error::Validation(e.to_string()))?;
        DesignMatrix::new(values, header[..n_cols].to_vec(), labels)
    }
}

/// One-hot encoder fitted once on a dataset's observed categories.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OneHotEncoder {
    /// Count and flag columns passed through as reals, in schema order.
    pub numeric: Vec<String>,
    /// Categorical columns in schema order with their levels in interned order.
    pub categorical: Vec<(String, Vec<String>)>,
}

impl OneHotEncoder {
    pub fn fit(clean: &CleanDataset) -> Self {
        let numeric = clean
            .columns
            .iter()
            .filter(|c| matches!(c.spec.kind, ColumnKind::Count | ColumnKind::BinaryFlag))
            .map(|c| c.spec.name.clone())
            .collect();
        let categorical = clean
            .columns
            .iter()
            .filter_map(|c| match &c.data {
                ColumnData::Categorical { levels, .. } if c.spec.kind == ColumnKind::Categorical => {
                    Some((c.spec.name.clone(), levels.clone()))
                }
                _ => None,
            })
            .collect();
        OneHotEncoder { numeric, categorical }
    }

    pub fn column_names(&self) -> Vec<String> {
        let mut names = self.numeric.clone();
        for (col, levels) in &self.categorical {
            names.extend(levels.iter().map(|l| format!("{col}={l}")));
        }
        names
    }

    /// Encodes `clean`. Categories the encoder has never seen produce an
    /// all-zero indicator block.
    pub fn transform(&self, clean: &CleanDataset, labels: Vec<u8>) -> Result<DesignMatrix> {
        let n = clean.n_rows();
        let names = self.column_names();
        let mut values = Array2::<f64>::zeros((n, names.len()));
        let mut offset = 0;
        for name in &self.numeric {
            let column = clean.column(name).ok_or_else(|| Error::MissingColumn(name.clone()))?;
            let ColumnData::Count { values: counts } = &column.data else {
                return Err(Error::Validation(format!("{name} is not a count column")));
            };
            for (r, &c) in counts.iter().enumerate() {
                values[[r, offset]] = f64::from(c);
            }
            offset += 1;
        }
        for (name, levels) in &self.categorical {
            let column = clean.column(name).ok_or_else(|| Error::MissingColumn(name.clone()))?;
            let ColumnData::Categorical {
                codes,
                levels: observed,
            } = &column.data
            else {
                return Err(Error::Validation(format!("{name} is not categorical")));
            };
            let position: HashMap<&str, usize> = levels.iter().enumerate().map(|(i, l)| (l.as_str(), i)).collect();
            let remap: Vec<Option<usize>> = observed.iter().map(|l| position.get(l.as_str()).copied()).collect();
            for (r, &code) in codes.iter().enumerate() {
                if let Some(k) = remap[code as usize] {
                    values[[r, offset + k]] = 1.0;
                }
            }
            offset += levels.len();
        }
        DesignMatrix::new(values, names, labels)
    }
}

/// Encodes a cleansed dataset: counts first, then one indicator column per
/// observed category.
pub fn encode(clean: &CleanDataset) -> Result<DesignMatrix> {
    let labels = derive_labels(clean)?;
    OneHotEncoder::fit(clean).transform(clean, labels)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalerParams {
    pub mean: Vec<f64>,
    /// Population standard deviation.
    pub stddev: Vec<f64>,
    pub constant: Vec<bool>,
    pub fitted_on: usize,
}

/// Per-column mean and population standard deviation over `rows`.
pub fn fit_scaler(matrix: &DesignMatrix, rows: &[usize]) -> Result<ScalerParams> {
    if rows.is_empty() {
        return Err(Error::Validation("cannot fit a scaler on zero rows".into()));
    }
    let n = rows.len() as f64;
    let p = matrix.n_cols();
    let mut mean = vec![0.0; p];
    for &r in rows {
        for (m, v) in mean.iter_mut().zip(matrix.values.row(r)) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut var = vec![0.0; p];
    for &r in rows {
        for ((s, v), m) in var.iter_mut().zip(matrix.values.row(r)).zip(&mean) {
            *s += (v - m) * (v - m);
        }
    }
    let stddev: Vec<f64> = var.iter().map(|s| (s / n).sqrt()).collect();
    let constant = stddev.iter().map(|&s| s == 0.0).collect();
    Ok(ScalerParams {
        mean,
        stddev,
        constant,
        fitted_on: rows.len(),
    })
}

impl ScalerParams {
    pub fn transform_row(&self, row: ArrayView1<f64>, out: &mut [f64]) {
        for (j, (&x, o)) in row.iter().zip(out.iter_mut()).enumerate() {
            *o = if self.constant[j] {
                0.0
            } else {
                (x - self.mean[j]) / self.stddev[j]
            };
        }
    }
}

/// Standardizes every cell in place of a copy; constant columns become 0.
pub fn apply_scaler(matrix: &DesignMatrix, params: &ScalerParams) -> Result<DesignMatrix> {
    if params.mean.len() != matrix.n_cols() {
        return Err(Error::DimensionMismatch {
            expected: params.mean.len(),
            actual: matrix.n_cols(),
        });
    }
    let mut values = matrix.values.clone();
    for mut row in values.rows_mut() {
        let src = row.to_owned();
        params.transform_row(src.view(), row.as_slice_mut().expect("standard layout"));
    }
    Ok(DesignMatrix {
        values,
        column_names: matrix.column_names.clone(),
        labels: matrix.labels.clone(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
    pub seed: u64,
    pub train_fraction: f64,
}

/// Seeded random train/test partition. The first `floor(fraction * n)`
/// entries of a permutation of `0..n` are the training rows.
pub fn split(n_rows: usize, train_fraction: f64, seed: u64) -> Result<SplitIndices> {
    split_stream(n_rows, train_fraction, seed, rng::SPLIT_STREAM)
}

pub(crate) fn split_stream(n_rows: usize, train_fraction: f64, seed: u64, stream_id: u64) -> Result<SplitIndices> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::Validation(format!(
            "train fraction {train_fraction} must lie strictly between 0 and 1"
        )));
    }
    if n_rows < 2 {
        return Err(Error::Validation(format!("cannot split {n_rows} rows")));
    }
    let mut order: Vec<usize> = (0..n_rows).collect();
    rng::shuffle(&mut rng::stream(seed, stream_id), &mut order);
    let n_train = (train_fraction * n_rows as f64).floor() as usize;
    let test = order.split_off(n_train);
    Ok(SplitIndices {
        train: order,
        test,
        seed,
        train_fraction,
    })
}
