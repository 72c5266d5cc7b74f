use std::time::Instant;

use crate::dataset::{stratified_resample, ResultRow};
use crate::error::Result;
use crate::forest::TrainConfig;
use crate::series::LabeledDataset;
use crate::transform::TransformConfig;

use super::model::Model;

#[derive(Debug, Clone)]
pub struct EvalOptions {
    pub resamples: usize,
    /// Drives both the resampling and the forest (resample `r` trains with
    /// seed `seed + r`).
    pub seed: u64,
    pub transform: TransformConfig,
    pub train: TrainConfig,
    /// When false the timing columns of the results are left empty, making
    /// the CSV a pure function of the inputs.
    pub record_timings: bool,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            resamples: 1,
            seed: 0,
            transform: TransformConfig::default(),
            train: TrainConfig::default(),
            record_timings: true,
        }
    }
}

/// Wall time of each phase for one resample.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PhaseTimes {
    pub train_transform: f64,
    pub train_classifier: f64,
    pub test_transform: f64,
    pub test_classifier: f64,
}

impl PhaseTimes {
    pub fn train(&self) -> f64 {
        self.train_transform + self.train_classifier
    }

    pub fn test(&self) -> f64 {
        self.test_transform + self.test_classifier
    }
}

#[derive(Debug, Clone, Default)]
pub struct EvalReport {
    pub rows: Vec<ResultRow>,
    /// Parallel to `rows`.
    pub times: Vec<PhaseTimes>,
    /// Resamples that could not be drawn, with the reason.
    pub skipped: Vec<(usize, String)>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub mean_accuracy: f64,
    pub std_accuracy: f64,
    pub total_seconds: f64,
    pub transform_seconds: f64,
    pub classifier_seconds: f64,
}

impl EvalReport {
    pub fn summary(&self) -> Summary {
        let acc: Vec<f64> = self.rows.iter().map(|r| r.accuracy).collect();
        let n = acc.len() as f64;
        let mean = if acc.is_empty() {
            f64::NAN
        } else {
            acc.iter().sum::<f64>() / n
        };
        let std = if acc.len() > 1 {
            (acc.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        let transform_seconds = self.times.iter().map(|t| t.train_transform + t.test_transform).sum();
        let classifier_seconds = self.times.iter().map(|t| t.train_classifier + t.test_classifier).sum();
        Summary {
            mean_accuracy: mean,
            std_accuracy: std,
            total_seconds: transform_seconds + classifier_seconds,
            transform_seconds,
            classifier_seconds,
        }
    }
}

/// Fit on the training side and score the test side of resamples
/// `0..resamples`. Resamples that cannot be stratified are skipped with a
/// warning.
pub fn evaluate(name: &str, train: &LabeledDataset, test: &LabeledDataset, opts: &EvalOptions) -> Result<EvalReport> {
    let mut report = EvalReport::default();
    for r in 0..opts.resamples {
        let (train_r, test_r) = match stratified_resample(train, test, opts.seed, r) {
            Ok(split) => split,
            Err(e) => {
                log::warn!("{name}: skipping resample {r}: {e}");
                report.skipped.push((r, e.to_string()));
                continue;
            }
        };
        let train_config = TrainConfig {
            seed: opts.seed.wrapping_add(r as u64),
            ..opts.train
        };
        let (model, fit) = Model::fit(&train_r, &opts.transform, &train_config)?;

        let start = Instant::now();
        let features = model.features(test_r.series())?;
        let test_transform = start.elapsed().as_secs_f64();
        let start = Instant::now();
        let predicted = model.forest().predict(&features)?;
        let test_classifier = start.elapsed().as_secs_f64();

        let correct = predicted.iter().zip(test_r.labels()).filter(|(p, y)| p == y).count();
        let accuracy = correct as f64 / test_r.len() as f64;
        let times = PhaseTimes {
            train_transform: fit.transform_seconds,
            train_classifier: fit.classifier_seconds,
            test_transform,
            test_classifier,
        };
        log::info!(
            "{name} resample {r}: accuracy {accuracy:.4}, transform {:.3}s, classifier {:.3}s",
            times.train_transform + times.test_transform,
            times.train_classifier + times.test_classifier
        );
        report.rows.push(ResultRow {
            dataset: name.to_string(),
            resample: r,
            accuracy,
            train_seconds: opts.record_timings.then(|| times.train()),
            test_seconds: opts.record_timings.then(|| times.test()),
        });
        report.times.push(times);
    }
    Ok(report)
}
