//! Time series classification with quantiles over fixed dyadic intervals.
//!
//! The pipeline: each series is expanded into up to four representations
//! ([`representations`]), each representation is cut into fixed dyadic
//! intervals ([`intervals`]), every interval contributes a handful of
//! quantiles ([`transform`]), and the resulting features train an ensemble of
//! extremely randomized trees ([`forest`]). [`dataset`] reads UCR-style files
//! and builds resamples and folds; [`harness`] ties it together into
//! evaluation, sweeps, model files and method comparisons.

pub mod dataset;
pub mod error;
pub mod forest;
pub mod harness;
pub mod intervals;
pub mod representations;
pub mod series;
pub mod transform;

pub use error::{QuantError, Result};
pub use forest::{Forest, SplitFeatures, TrainConfig};
pub use representations::{RepresentationId, RepresentationMask};
pub use series::{ColumnSpec, FeatureMatrix, LabeledDataset, TimeSeries};
pub use transform::{FittedTransform, MeanSubtraction, TransformConfig};
