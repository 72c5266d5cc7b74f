//! Quantile features over dyadic intervals of every input representation.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{QuantError, Result};
use crate::intervals::{make_intervals, IntervalPlan};
use crate::representations::{validate_window, RepresentationBuilder, RepresentationId, RepresentationMask};
use crate::series::{ColumnSpec, FeatureMatrix, LabeledDataset, TimeSeries};

/// Which quantiles of an interval have the interval mean subtracted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MeanSubtraction {
    /// Every second quantile (odd 0-based indices).
    #[default]
    Alternate,
    None,
    All,
}

impl MeanSubtraction {
    fn applies_to(self, index: usize) -> bool {
        match self {
            Self::Alternate => index % 2 == 1,
            Self::None => false,
            Self::All => true,
        }
    }

    pub(crate) fn code(self) -> u8 {
        match self {
            Self::Alternate => 0,
            Self::None => 1,
            Self::All => 2,
        }
    }

    pub(crate) fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(Self::Alternate),
            1 => Some(Self::None),
            2 => Some(Self::All),
            _ => None,
        }
    }
}

impl fmt::Display for MeanSubtraction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Alternate => "alternate",
            Self::None => "none",
            Self::All => "all",
        })
    }
}

impl FromStr for MeanSubtraction {
    type Err = QuantError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "alternate" => Ok(Self::Alternate),
            "none" => Ok(Self::None),
            "all" => Ok(Self::All),
            other => Err(QuantError::Config(format!("unknown mean subtraction mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TransformConfig {
    /// Interval depth; clamped per representation to what its length allows.
    pub depth: usize,
    /// An interval of length `m` yields `1 + (m - 1) / divisor` quantiles.
    pub divisor: usize,
    /// Moving-average window applied to the first difference.
    pub smooth_window: usize,
    pub representations: RepresentationMask,
    pub mean_subtraction: MeanSubtraction,
}

impl Default for TransformConfig {
    fn default() -> Self {
        Self {
            depth: 6,
            divisor: 4,
            smooth_window: 5,
            representations: RepresentationMask::all(),
            mean_subtraction: MeanSubtraction::Alternate,
        }
    }
}

impl TransformConfig {
    /// Half the intervals and half the quantiles of the default.
    pub fn fast() -> Self {
        Self {
            depth: 5,
            divisor: 8,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.depth == 0 {
            return Err(QuantError::Config("depth must be at least 1".into()));
        }
        if self.divisor == 0 {
            return Err(QuantError::Config("quantile divisor must be at least 1".into()));
        }
        validate_window(self.smooth_window)
    }
}

pub fn quantile_count(m: usize, divisor: usize) -> usize {
    1 + (m - 1) / divisor
}

/// Type-7 quantile of sorted data at level `num / den`, i.e. at position
/// `num * (m - 1) / den` with linear interpolation. Exact at integer positions.
fn quantile_at(sorted: &[f64], num: usize, den: usize) -> f64 {
    let pos = num * (sorted.len() - 1);
    let (lo, rem) = (pos / den, pos % den);
    if rem == 0 {
        sorted[lo]
    } else {
        let frac = rem as f64 / den as f64;
        sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
    }
}

/// Quantile features of one interval, written into `out` (length
/// `quantile_count(values.len(), divisor)`). `scratch` is reused for sorting.
fn write_interval_quantiles(
    values: &[f64],
    divisor: usize,
    mode: MeanSubtraction,
    scratch: &mut Vec<f64>,
    out: &mut [f64],
) {
    let m = values.len();
    let k = quantile_count(m, divisor);
    debug_assert_eq!(out.len(), k);
    if m == 1 {
        out[0] = values[0];
        return;
    }
    scratch.clear();
    scratch.extend_from_slice(values);
    scratch.sort_unstable_by(f64::total_cmp);
    if k == 1 {
        out[0] = quantile_at(scratch, 1, 2);
        return;
    }
    for (i, q) in out.iter_mut().enumerate() {
        *q = quantile_at(scratch, i, k - 1);
    }
    if mode != MeanSubtraction::None {
        // summed in sorted order so the result is independent of input order
        let mean = scratch.iter().sum::<f64>() / m as f64;
        for (i, q) in out.iter_mut().enumerate() {
            if mode.applies_to(i) {
                *q -= mean;
            }
        }
    }
}

/// `1 + (m - 1) / divisor` quantiles of `values`.
///
/// A single value is returned as is and a single quantile is the median.
/// Otherwise the quantiles sit at evenly spaced levels `i / (k - 1)` and
/// `mode` decides which of them have the interval mean subtracted.
pub fn interval_quantiles(values: &[f64], divisor: usize, mode: MeanSubtraction) -> Vec<f64> {
    assert!(!values.is_empty(), "interval must be nonempty");
    assert!(divisor >= 1, "divisor must be positive");
    let mut out = vec![0.0; quantile_count(values.len(), divisor)];
    write_interval_quantiles(values, divisor, mode, &mut Vec::new(), &mut out);
    out
}

/// A transform bound to one series length.
#[derive(Debug, Clone)]
pub struct FittedTransform {
    config: TransformConfig,
    n: usize,
    builder: RepresentationBuilder,
    plans: Vec<(RepresentationId, IntervalPlan)>,
    schema: Vec<ColumnSpec>,
}

impl FittedTransform {
    /// Fit to the series length of `dataset`. Labels are not read.
    pub fn fit(dataset: &LabeledDataset, config: TransformConfig) -> Result<Self> {
        Self::for_length(dataset.series_len(), config)
    }

    pub fn for_length(n: usize, config: TransformConfig) -> Result<Self> {
        config.validate()?;
        if n == 0 {
            return Err(QuantError::Config("series length must be positive".into()));
        }
        let builder = RepresentationBuilder::new(n, config.representations, config.smooth_window)?;
        let plans: Vec<(RepresentationId, IntervalPlan)> = builder
            .active()
            .iter()
            .map(|&id| {
                let len = id.output_len(n).expect("active representations fit the length");
                (id, make_intervals(len, config.depth))
            })
            .collect();

        let mut schema = Vec::new();
        for (id, plan) in &plans {
            for iv in plan.iter() {
                let m = iv.len();
                let k = quantile_count(m, config.divisor);
                for quantile in 0..k {
                    let mean_subtracted = m >= 2 && k > 1 && config.mean_subtraction.applies_to(quantile);
                    schema.push(ColumnSpec {
                        representation: *id,
                        start: iv.start,
                        end: iv.end,
                        quantile,
                        mean_subtracted,
                    });
                }
            }
        }

        Ok(Self {
            config,
            n,
            builder,
            plans,
            schema,
        })
    }

    pub fn config(&self) -> &TransformConfig {
        &self.config
    }

    pub fn series_len(&self) -> usize {
        self.n
    }

    pub fn plans(&self) -> &[(RepresentationId, IntervalPlan)] {
        &self.plans
    }

    pub fn schema(&self) -> &[ColumnSpec] {
        &self.schema
    }

    pub fn num_features(&self) -> usize {
        self.schema.len()
    }

    fn transform_row(&self, x: &[f64], scratch: &mut Vec<f64>, out: &mut [f64]) {
        let reps = self.builder.build(x);
        let mut col = 0;
        for ((id, plan), (rep_id, values)) in self.plans.iter().zip(reps.iter()) {
            debug_assert_eq!(*id, rep_id);
            for iv in plan.iter() {
                let k = quantile_count(iv.len(), self.config.divisor);
                write_interval_quantiles(
                    &values[iv.start..iv.end],
                    self.config.divisor,
                    self.config.mean_subtraction,
                    scratch,
                    &mut out[col..col + k],
                );
                col += k;
            }
        }
        debug_assert_eq!(col, out.len());
    }

    /// Rows are computed in parallel on the current rayon pool; the result
    /// does not depend on the number of workers.
    pub fn apply(&self, series: &[TimeSeries]) -> Result<FeatureMatrix> {
        if let Some(index) = series.iter().position(|s| s.len() != self.n) {
            return Err(QuantError::LengthMismatch {
                index,
                expected: self.n,
                found: series[index].len(),
            });
        }
        let p = self.schema.len();
        let mut data = vec![0.0; series.len() * p];
        if p > 0 {
            data.par_chunks_mut(p)
                .zip(series.par_iter())
                .for_each_init(Vec::new, |scratch, (row, s)| {
                    self.transform_row(s.values(), scratch, row)
                });
        }
        FeatureMatrix::new(series.len(), p, data, self.schema.clone())
    }
}

/// Plans and schema are functions of the configuration and length.
impl PartialEq for FittedTransform {
    fn eq(&self, other: &Self) -> bool {
        self.config == other.config && self.n == other.n
    }
}
