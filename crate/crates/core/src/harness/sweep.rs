//! One-parameter sensitivity sweeps under stratified k-fold cross-validation.
//!
//! Folds are drawn once per dataset from the sweep seed, so every value of
//! the swept parameter is scored on the same splits.

use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use serde::Serialize;

use crate::dataset::{kfold_splits, stratified_kfold};
use crate::error::{QuantError, Result};
use crate::forest::{SplitFeatures, TrainConfig};
use crate::representations::RepresentationMask;
use crate::series::LabeledDataset;
use crate::transform::TransformConfig;

use super::model::Model;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    Depth,
    Divisor,
    Representations,
    Trees,
    SplitFraction,
    Smoothing,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            Self::Depth => "depth",
            Self::Divisor => "divisor",
            Self::Representations => "representations",
            Self::Trees => "trees",
            Self::SplitFraction => "split_fraction",
            Self::Smoothing => "smoothing",
        }
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepAxis {
    type Err = QuantError;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "depth" => Self::Depth,
            "divisor" | "div" => Self::Divisor,
            "representations" | "reps" => Self::Representations,
            "trees" => Self::Trees,
            "split_fraction" | "split-frac" => Self::SplitFraction,
            "smoothing" | "smooth-window" => Self::Smoothing,
            other => {
                return Err(QuantError::Config(format!(
                    "unknown sweep axis {other:?} (expected depth, divisor, representations, trees, split_fraction or smoothing)"
                )))
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AxisValue {
    Count(usize),
    Representations(RepresentationMask),
    Split(SplitFeatures),
}

impl fmt::Display for AxisValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Count(n) => write!(f, "{n}"),
            Self::Representations(m) => f.write_str(&m.to_string().replace(',', "+")),
            Self::Split(s) => write!(f, "{s}"),
        }
    }
}

impl SweepAxis {
    fn parse_value(self, raw: &str) -> Result<AxisValue> {
        let count = |min: usize, odd: bool| -> Result<AxisValue> {
            let n: usize = raw
                .trim()
                .parse()
                .map_err(|_| QuantError::Config(format!("{self}: {raw:?} is not a whole number")))?;
            if n < min || (odd && n.is_multiple_of(2)) {
                let rule = if odd { "a positive odd integer" } else { "at least 1" };
                return Err(QuantError::Config(format!("{self}: {raw:?} must be {rule}")));
            }
            Ok(AxisValue::Count(n))
        };
        match self {
            Self::Depth | Self::Divisor | Self::Trees => count(1, false),
            Self::Smoothing => count(1, true),
            Self::Representations => Ok(AxisValue::Representations(raw.parse()?)),
            Self::SplitFraction => Ok(AxisValue::Split(raw.parse()?)),
        }
    }

    fn apply(self, value: AxisValue, transform: &mut TransformConfig, train: &mut TrainConfig) {
        match (self, value) {
            (Self::Depth, AxisValue::Count(n)) => transform.depth = n,
            (Self::Divisor, AxisValue::Count(n)) => transform.divisor = n,
            (Self::Smoothing, AxisValue::Count(n)) => transform.smooth_window = n,
            (Self::Trees, AxisValue::Count(n)) => train.num_trees = n,
            (Self::Representations, AxisValue::Representations(m)) => transform.representations = m,
            (Self::SplitFraction, AxisValue::Split(s)) => train.features_per_split = s,
            _ => unreachable!("values are parsed for their own axis"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub axis: SweepAxis,
    pub values: Vec<AxisValue>,
    pub folds: usize,
    pub seed: u64,
}

impl SweepSpec {
    /// Parses every value up front; all illegal values are reported together.
    pub fn new(axis: SweepAxis, raw_values: &[String], folds: usize, seed: u64) -> Result<Self> {
        if raw_values.is_empty() {
            return Err(QuantError::Config(format!("{axis}: no values to sweep")));
        }
        if folds < 2 {
            return Err(QuantError::Config(format!("need at least 2 folds, got {folds}")));
        }
        let mut values = Vec::new();
        let mut problems = Vec::new();
        for raw in raw_values {
            match axis.parse_value(raw) {
                Ok(v) => values.push(v),
                Err(e) => problems.push(e.to_string().trim_start_matches("configuration error: ").to_string()),
            }
        }
        if !problems.is_empty() {
            return Err(QuantError::Config(format!(
                "illegal sweep values: {}",
                problems.join("; ")
            )));
        }
        Ok(Self {
            axis,
            values,
            folds,
            seed,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub dataset: String,
    pub axis: String,
    pub value: String,
    pub fold: usize,
    pub accuracy: f64,
    pub seconds: f64,
}

/// Score every swept value on every fold of `dataset`. All parameters other
/// than the swept one come from `transform` and `train`.
pub fn run_sweep(
    name: &str,
    dataset: &LabeledDataset,
    spec: &SweepSpec,
    transform: &TransformConfig,
    train: &TrainConfig,
) -> Result<Vec<SweepRow>> {
    let folds = stratified_kfold(dataset, spec.folds, spec.seed)?;
    let splits = kfold_splits(&folds);
    let mut rows = Vec::with_capacity(spec.values.len() * splits.len());
    for &value in &spec.values {
        let (mut t, mut c) = (*transform, *train);
        spec.axis.apply(value, &mut t, &mut c);
        c.seed = spec.seed;
        for (fold, (train_idx, val_idx)) in splits.iter().enumerate() {
            let fit_set = dataset.subset(train_idx)?;
            let val_set = dataset.subset(val_idx)?;
            let start = Instant::now();
            let (model, _) = Model::fit(&fit_set, &t, &c)?;
            let predicted = model.predict(val_set.series())?;
            let seconds = start.elapsed().as_secs_f64();
            let correct = predicted.iter().zip(val_set.labels()).filter(|(p, y)| p == y).count();
            rows.push(SweepRow {
                dataset: name.to_string(),
                axis: spec.axis.to_string(),
                value: value.to_string(),
                fold,
                accuracy: correct as f64 / val_set.len() as f64,
                seconds,
            });
        }
    }
    Ok(rows)
}

pub fn write_sweep(out: impl Write, rows: &[SweepRow]) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .has_headers(false)
        .from_writer(out);
    let io = |e: csv::Error| QuantError::Io(std::io::Error::other(e));
    w.write_record(["dataset", "axis", "value", "fold", "accuracy", "seconds"])
        .map_err(io)?;
    for row in rows {
        w.serialize(row).map_err(io)?;
    }
    w.flush()?;
    Ok(())
}
