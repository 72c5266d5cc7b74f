//! Domain types shared by the whole pipeline: univariate series, labelled
//! datasets and feature matrices.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{QuantError, Result};
use crate::representations::RepresentationId;

/// A univariate, finite-valued time series of length at least one.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    values: Vec<f64>,
}

impl TimeSeries {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(QuantError::InvalidSeries("series is empty".into()));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(QuantError::InvalidSeries(format!(
                "non-finite value {} at position {pos}",
                values[pos]
            )));
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Map raw label strings onto contiguous class ids.
///
/// Ids follow the lexicographic order of the distinct label strings, so the
/// mapping does not depend on row order.
pub fn relabel<S: AsRef<str>>(raw_labels: &[S]) -> (Vec<usize>, Vec<String>) {
    let names: Vec<String> = raw_labels
        .iter()
        .map(|s| s.as_ref())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .map(str::to_owned)
        .collect();
    let lookup: HashMap<&str, usize> = names.iter().enumerate().map(|(id, name)| (name.as_str(), id)).collect();
    let ids = raw_labels.iter().map(|s| lookup[s.as_ref()]).collect();
    (ids, names)
}

/// Equal-length univariate series with class ids in `0..num_classes()`.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    series: Vec<TimeSeries>,
    labels: Vec<usize>,
    class_names: Vec<String>,
}

impl LabeledDataset {
    pub fn new(series: Vec<TimeSeries>, labels: Vec<usize>, class_names: Vec<String>) -> Result<Self> {
        if series.is_empty() {
            return Err(QuantError::InvalidDataset("dataset has no examples".into()));
        }
        if series.len() != labels.len() {
            return Err(QuantError::InvalidDataset(format!(
                "{} series but {} labels",
                series.len(),
                labels.len()
            )));
        }
        let n = series[0].len();
        if let Some(index) = series.iter().position(|s| s.len() != n) {
            return Err(QuantError::LengthMismatch {
                index,
                expected: n,
                found: series[index].len(),
            });
        }
        if let Some(&bad) = labels.iter().find(|&&id| id >= class_names.len()) {
            return Err(QuantError::InvalidDataset(format!(
                "class id {bad} out of range for {} classes",
                class_names.len()
            )));
        }
        Ok(Self {
            series,
            labels,
            class_names,
        })
    }

    /// Build a dataset from raw label strings, assigning ids with [`relabel`].
    pub fn from_raw_labels<S: AsRef<str>>(series: Vec<TimeSeries>, raw_labels: &[S]) -> Result<Self> {
        if raw_labels.is_empty() {
            return Err(QuantError::InvalidDataset("dataset has no examples".into()));
        }
        let (labels, class_names) = relabel(raw_labels);
        Self::new(series, labels, class_names)
    }

    /// Build a dataset whose labels must all appear in an existing class list,
    /// e.g. a test split labelled against its training split.
    pub fn with_class_names<S: AsRef<str>>(
        series: Vec<TimeSeries>,
        raw_labels: &[S],
        class_names: &[String],
    ) -> Result<Self> {
        let lookup: HashMap<&str, usize> = class_names
            .iter()
            .enumerate()
            .map(|(id, name)| (name.as_str(), id))
            .collect();
        let labels = raw_labels
            .iter()
            .enumerate()
            .map(|(row, raw)| {
                lookup.get(raw.as_ref()).copied().ok_or_else(|| {
                    QuantError::InvalidDataset(format!(
                        "row {row}: label {:?} does not occur in the training classes",
                        raw.as_ref()
                    ))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(series, labels, class_names.to_vec())
    }

    pub fn series(&self) -> &[TimeSeries] {
        &self.series
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn num_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn len(&self) -> usize {
        self.series.len()
    }

    pub fn is_empty(&self) -> bool {
        self.series.is_empty()
    }

    pub fn series_len(&self) -> usize {
        self.series[0].len()
    }

    /// Number of examples of each class id.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_classes()];
        for &y in &self.labels {
            counts[y] += 1;
        }
        counts
    }

    /// Errors unless every class id occurs at least once.
    pub fn require_all_classes(&self) -> Result<()> {
        match self.class_counts().iter().position(|&c| c == 0) {
            Some(id) => Err(QuantError::InvalidDataset(format!(
                "class {:?} has no training examples",
                self.class_names[id]
            ))),
            None => Ok(()),
        }
    }

    /// Rows at `indices`, in that order. Class names are kept.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let series = indices.iter().map(|&i| self.series[i].clone()).collect();
        let labels = indices.iter().map(|&i| self.labels[i]).collect();
        Self::new(series, labels, self.class_names.clone())
    }
}

/// Provenance of one feature column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub representation: RepresentationId,
    pub start: usize,
    pub end: usize,
    pub quantile: usize,
    pub mean_subtracted: bool,
}

/// Row-major `rows x cols` matrix of finite features with per-column provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
    schema: Vec<ColumnSpec>,
}

impl FeatureMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>, schema: Vec<ColumnSpec>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(QuantError::InvalidDataset(format!(
                "feature data has {} entries, expected {rows}x{cols}",
                data.len()
            )));
        }
        if schema.len() != cols {
            return Err(QuantError::InvalidDataset(format!(
                "schema describes {} columns, matrix has {cols}",
                schema.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(QuantError::InvalidDataset(format!(
                "non-finite feature at row {}, column {}",
                pos / cols.max(1),
                pos % cols.max(1)
            )));
        }
        Ok(Self {
            rows,
            cols,
            data,
            schema,
        })
    }

    /// Matrix from plain rows. Each column is described as a length-one raw
    /// interval at its own index.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().position(|r| r.len() != cols) {
            return Err(QuantError::LengthMismatch {
                index: bad,
                expected: cols,
                found: rows[bad].len(),
            });
        }
        let schema = (0..cols)
            .map(|j| ColumnSpec {
                representation: RepresentationId::Raw,
                start: j,
                end: j + 1,
                quantile: 0,
                mean_subtracted: false,
            })
            .collect();
        Self::new(rows.len(), cols, rows.concat(), schema)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn schema(&self) -> &[ColumnSpec] {
        &self.schema
    }

    /// Column-major copy of the data, one `Vec` per feature.
    pub fn columns(&self) -> Vec<Vec<f64>> {
        (0..self.cols)
            .map(|j| (0..self.rows).map(|i| self.get(i, j)).collect())
            .collect()
    }
}
