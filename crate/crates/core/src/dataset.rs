//! UCR-style dataset files, stratified resampling, stratified k-fold splits
//! and the results CSV.
//!
//! A dataset file has one example per line: the class label, then the series
//! values, all separated by tabs. Blank lines are ignored.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{QuantError, Result};
use crate::series::{LabeledDataset, TimeSeries};

/// Parsed file contents before labels are mapped to ids.
#[derive(Debug, Clone, PartialEq)]
pub struct RawDataset {
    pub labels: Vec<String>,
    pub series: Vec<TimeSeries>,
}

impl RawDataset {
    pub fn into_labeled(self) -> Result<LabeledDataset> {
        LabeledDataset::from_raw_labels(self.series, &self.labels)
    }

    pub fn into_labeled_with(self, class_names: &[String]) -> Result<LabeledDataset> {
        LabeledDataset::with_class_names(self.series, &self.labels, class_names)
    }
}

pub fn parse_tsv(text: &str) -> Result<RawDataset> {
    let mut labels = Vec::new();
    let mut series = Vec::new();
    let mut width: Option<usize> = None;
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = line.trim_end_matches(['\r', ' ']);
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split('\t');
        let label = fields.next().unwrap_or_default().trim();
        if label.is_empty() {
            return Err(QuantError::Parse {
                line: line_no,
                message: "missing class label".into(),
            });
        }
        let values = fields
            .enumerate()
            .map(|(col, field)| {
                let v: f64 = field.trim().parse().map_err(|_| QuantError::Parse {
                    line: line_no,
                    message: format!("value {} is not a number: {field:?}", col + 1),
                })?;
                if !v.is_finite() {
                    return Err(QuantError::Parse {
                        line: line_no,
                        message: format!("value {} is not finite: {field:?}", col + 1),
                    });
                }
                Ok(v)
            })
            .collect::<Result<Vec<f64>>>()?;
        if values.is_empty() {
            return Err(QuantError::Parse {
                line: line_no,
                message: "row has a label but no values".into(),
            });
        }
        match width {
            None => width = Some(values.len()),
            Some(w) if w != values.len() => {
                return Err(QuantError::Parse {
                    line: line_no,
                    message: format!("row has {} values, earlier rows have {w}", values.len()),
                })
            }
            _ => {}
        }
        labels.push(label.to_string());
        series.push(TimeSeries::new(values)?);
    }
    if series.is_empty() {
        return Err(QuantError::Parse {
            line: 0,
            message: "file contains no examples".into(),
        });
    }
    Ok(RawDataset { labels, series })
}

pub fn read_tsv(path: impl AsRef<Path>) -> Result<RawDataset> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)
        .map_err(|e| QuantError::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
    parse_tsv(&text)
}

/// Load one file, labelling classes by sorted label string.
pub fn load_tsv(path: impl AsRef<Path>) -> Result<LabeledDataset> {
    read_tsv(path)?.into_labeled()
}

/// Load a train/test pair. Test labels are mapped onto the training classes.
pub fn load_split(train: impl AsRef<Path>, test: impl AsRef<Path>) -> Result<(LabeledDataset, LabeledDataset)> {
    let train = load_tsv(train)?;
    let test = read_tsv(test)?.into_labeled_with(train.class_names())?;
    if test.series_len() != train.series_len() {
        return Err(QuantError::InvalidDataset(format!(
            "test series have length {}, training series have length {}",
            test.series_len(),
            train.series_len()
        )));
    }
    Ok((train, test))
}

pub fn write_tsv(mut out: impl Write, dataset: &LabeledDataset) -> Result<()> {
    for (s, &y) in dataset.series().iter().zip(dataset.labels()) {
        write!(out, "{}", dataset.class_names()[y])?;
        for v in s.values() {
            // Display for f64 prints the shortest string that parses back exactly
            write!(out, "\t{v}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}

fn seeded(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Resample `r` of a train/test split.
///
/// `r == 0` is the split as given. Otherwise both sides are pooled, each
/// class is shuffled with the ChaCha8 stream `r` of `seed`, and its first
/// `train_count[c]` members form the new training side. Rows keep their
/// pooled order (training rows first).
pub fn stratified_resample(
    train: &LabeledDataset,
    test: &LabeledDataset,
    seed: u64,
    r: usize,
) -> Result<(LabeledDataset, LabeledDataset)> {
    if train.class_names() != test.class_names() {
        return Err(QuantError::Stratification(
            "train and test use different class lists".into(),
        ));
    }
    if r == 0 {
        return Ok((train.clone(), test.clone()));
    }
    let train_counts = train.class_counts();
    let test_counts = test.class_counts();
    for (c, name) in train.class_names().iter().enumerate() {
        if train_counts[c] == 0 || test_counts[c] == 0 {
            return Err(QuantError::Stratification(format!(
                "class {name:?} has {} training and {} test examples",
                train_counts[c], test_counts[c]
            )));
        }
    }

    let pooled_series: Vec<TimeSeries> = train.series().iter().chain(test.series()).cloned().collect();
    let pooled_labels: Vec<usize> = train.labels().iter().chain(test.labels()).copied().collect();
    let mut rng = seeded(seed, r as u64);
    let mut in_train = vec![false; pooled_labels.len()];
    for (c, &count) in train_counts.iter().enumerate() {
        let mut members: Vec<usize> = (0..pooled_labels.len()).filter(|&i| pooled_labels[i] == c).collect();
        members.shuffle(&mut rng);
        for &i in &members[..count] {
            in_train[i] = true;
        }
    }
    let (train_idx, test_idx): (Vec<usize>, Vec<usize>) = (0..pooled_labels.len()).partition(|&i| in_train[i]);
    let pick = |idx: &[usize]| {
        LabeledDataset::new(
            idx.iter().map(|&i| pooled_series[i].clone()).collect(),
            idx.iter().map(|&i| pooled_labels[i]).collect(),
            train.class_names().to_vec(),
        )
    };
    Ok((pick(&train_idx)?, pick(&test_idx)?))
}

/// Partition row indices into `k` folds, stratified by class.
///
/// Each class is shuffled and dealt round-robin, continuing the deal across
/// classes, so per-class counts and fold sizes each differ by at most one.
pub fn stratified_kfold(dataset: &LabeledDataset, k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 {
        return Err(QuantError::Config(format!("need at least 2 folds, got {k}")));
    }
    let counts = dataset.class_counts();
    for (c, &count) in counts.iter().enumerate() {
        if count > 0 && count < k {
            return Err(QuantError::Stratification(format!(
                "class {:?} has {count} examples, fewer than {k} folds",
                dataset.class_names()[c]
            )));
        }
    }
    let mut rng = seeded(seed, 0);
    let mut folds = vec![Vec::new(); k];
    let mut next = 0;
    for c in 0..counts.len() {
        let mut members: Vec<usize> = (0..dataset.len()).filter(|&i| dataset.labels()[i] == c).collect();
        members.shuffle(&mut rng);
        for i in members {
            folds[next % k].push(i);
            next += 1;
        }
    }
    folds.iter_mut().for_each(|f| f.sort_unstable());
    Ok(folds)
}

/// `(train, validation)` index pairs for each fold.
pub fn kfold_splits(folds: &[Vec<usize>]) -> Vec<(Vec<usize>, Vec<usize>)> {
    (0..folds.len())
        .map(|v| {
            let mut train: Vec<usize> = folds
                .iter()
                .enumerate()
                .filter(|&(f, _)| f != v)
                .flat_map(|(_, idx)| idx.iter().copied())
                .collect();
            train.sort_unstable();
            (train, folds[v].clone())
        })
        .collect()
}

/// One row of a results CSV. Timing columns are empty when not recorded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub dataset: String,
    pub resample: usize,
    pub accuracy: f64,
    pub train_seconds: Option<f64>,
    pub test_seconds: Option<f64>,
}

pub fn write_results(out: impl Write, rows: &[ResultRow]) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    for row in rows {
        w.serialize(row).map_err(csv_error)?;
    }
    // header is only written with the first record
    if rows.is_empty() {
        w.write_record(["dataset", "resample", "accuracy", "train_seconds", "test_seconds"])
            .map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_results(input: impl Read) -> Result<Vec<ResultRow>> {
    let mut r = csv::Reader::from_reader(input);
    let headers = r.headers().map_err(csv_error)?.clone();
    let expected = ["dataset", "resample", "accuracy", "train_seconds", "test_seconds"];
    if headers.iter().collect::<Vec<_>>() != expected {
        return Err(QuantError::Parse {
            line: 1,
            message: format!(
                "expected header {}, found {}",
                expected.join(","),
                headers.iter().collect::<Vec<_>>().join(",")
            ),
        });
    }
    r.deserialize()
        .enumerate()
        .map(|(i, row)| {
            let row: ResultRow = row.map_err(|e| QuantError::Parse {
                line: i + 2,
                message: e.to_string(),
            })?;
            if !(0.0..=1.0).contains(&row.accuracy) {
                return Err(QuantError::Parse {
                    line: i + 2,
                    message: format!("accuracy {} outside [0, 1]", row.accuracy),
                });
            }
            Ok(row)
        })
        .collect()
}

pub fn read_results_file(path: impl AsRef<Path>) -> Result<Vec<ResultRow>> {
    let path = path.as_ref();
    let file = fs::File::open(path)
        .map_err(|e| QuantError::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
    read_results(file)
}

fn csv_error(e: csv::Error) -> QuantError {
    let line = e.position().map_or(0, |p| p.line() as usize);
    QuantError::Parse {
        line,
        message: e.to_string(),
    }
}
