use std::fs;
use std::path::Path;
use std::time::Instant;

use crate::error::{QuantError, Result};
use crate::forest::{Forest, Node, SplitFeatures, TrainConfig, Tree};
use crate::representations::RepresentationMask;
use crate::series::{FeatureMatrix, LabeledDataset, TimeSeries};
use crate::transform::{FittedTransform, MeanSubtraction, TransformConfig};

pub const MAGIC: [u8; 4] = *b"QNT1";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FitTimings {
    pub transform_seconds: f64,
    pub classifier_seconds: f64,
}

/// A fitted transform, the forest trained on its output, and the class names.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    transform: FittedTransform,
    forest: Forest,
    class_names: Vec<String>,
}

impl Model {
    pub fn fit(
        dataset: &LabeledDataset,
        transform: &TransformConfig,
        train: &TrainConfig,
    ) -> Result<(Self, FitTimings)> {
        dataset.require_all_classes()?;
        let start = Instant::now();
        let fitted = FittedTransform::fit(dataset, *transform)?;
        let features = fitted.apply(dataset.series())?;
        let transform_seconds = start.elapsed().as_secs_f64();

        let start = Instant::now();
        let forest = Forest::fit(&features, dataset.labels(), dataset.num_classes(), train)?;
        let classifier_seconds = start.elapsed().as_secs_f64();

        let model = Self {
            transform: fitted,
            forest,
            class_names: dataset.class_names().to_vec(),
        };
        Ok((
            model,
            FitTimings {
                transform_seconds,
                classifier_seconds,
            },
        ))
    }

    pub fn transform(&self) -> &FittedTransform {
        &self.transform
    }

    pub fn forest(&self) -> &Forest {
        &self.forest
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn features(&self, series: &[TimeSeries]) -> Result<FeatureMatrix> {
        self.transform.apply(series)
    }

    pub fn predict_proba(&self, series: &[TimeSeries]) -> Result<Vec<Vec<f64>>> {
        self.forest.predict_proba(&self.features(series)?)
    }

    pub fn predict(&self, series: &[TimeSeries]) -> Result<Vec<usize>> {
        self.forest.predict(&self.features(series)?)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::default();
        let t = self.transform.config();
        w.u32(t.depth as u32);
        w.u32(t.divisor as u32);
        w.u32(t.smooth_window as u32);
        w.u8(t.representations.bits());
        w.u8(t.mean_subtraction.code());
        w.u64(self.transform.series_len() as u64);

        w.u32(self.class_names.len() as u32);
        for name in &self.class_names {
            w.u32(name.len() as u32);
            w.bytes(name.as_bytes());
        }

        let c = self.forest.config();
        w.u32(c.num_trees as u32);
        match c.features_per_split {
            SplitFeatures::Fraction(f) => {
                w.u8(0);
                w.f64(f);
            }
            SplitFeatures::Sqrt => {
                w.u8(1);
                w.f64(0.0);
            }
        }
        w.u32(c.min_samples_split as u32);
        w.u32(c.max_depth.map_or(0, |d| d as u32));
        w.u64(c.seed);

        w.u32(self.forest.num_classes() as u32);
        w.u64(self.forest.num_features() as u64);
        w.u32(self.forest.trees().len() as u32);
        for tree in self.forest.trees() {
            w.u32(tree.nodes().len() as u32);
            for node in tree.nodes() {
                match node {
                    Node::Split {
                        feature,
                        threshold,
                        left,
                        right,
                    } => {
                        w.u8(0);
                        w.u32(*feature);
                        w.f64(*threshold);
                        w.u32(*left);
                        w.u32(*right);
                    }
                    Node::Leaf { counts } => {
                        w.u8(1);
                        counts.iter().for_each(|&n| w.u32(n));
                    }
                }
            }
        }

        let payload = w.0;
        let mut out = Vec::with_capacity(payload.len() + 20);
        out.extend_from_slice(&MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&(payload.len() as u64).to_le_bytes());
        out.extend_from_slice(&payload);
        out.extend_from_slice(&crc32fast::hash(&payload).to_le_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 4 || bytes[..4] != MAGIC {
            return Err(QuantError::BadMagic);
        }
        if bytes.len() < 16 {
            return Err(QuantError::Truncated(format!("{} byte header", bytes.len())));
        }
        let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
        if version != FORMAT_VERSION {
            return Err(QuantError::UnsupportedVersion {
                found: version,
                supported: FORMAT_VERSION,
            });
        }
        let len = u64::from_le_bytes(bytes[8..16].try_into().unwrap());
        let expected = 16u64.saturating_add(len).saturating_add(4);
        if (bytes.len() as u64) < expected {
            return Err(QuantError::Truncated(format!(
                "{} bytes present, {expected} expected",
                bytes.len()
            )));
        }
        if bytes.len() as u64 > expected {
            return Err(QuantError::CorruptModel("trailing bytes after checksum".into()));
        }
        let payload = &bytes[16..16 + len as usize];
        let stored = u32::from_le_bytes(bytes[16 + len as usize..].try_into().unwrap());
        let computed = crc32fast::hash(payload);
        if stored != computed {
            return Err(QuantError::Checksum { stored, computed });
        }
        Self::decode(&mut Reader(payload))
    }

    fn decode(r: &mut Reader) -> Result<Self> {
        let depth = r.u32()? as usize;
        let divisor = r.u32()? as usize;
        let smooth_window = r.u32()? as usize;
        let representations = RepresentationMask::from_bits(r.u8()?)?;
        let mean_subtraction = MeanSubtraction::from_code(r.u8()?)
            .ok_or_else(|| QuantError::CorruptModel("unknown mean subtraction code".into()))?;
        let n = r.u64()? as usize;
        let transform = FittedTransform::for_length(
            n,
            TransformConfig {
                depth,
                divisor,
                smooth_window,
                representations,
                mean_subtraction,
            },
        )?;

        let num_names = r.u32()? as usize;
        let class_names = (0..num_names)
            .map(|_| {
                let len = r.u32()? as usize;
                String::from_utf8(r.take(len)?.to_vec())
                    .map_err(|_| QuantError::CorruptModel("class name is not UTF-8".into()))
            })
            .collect::<Result<Vec<_>>>()?;

        let num_trees = r.u32()? as usize;
        let split_kind = r.u8()?;
        let fraction = r.f64()?;
        let features_per_split = match split_kind {
            0 => SplitFeatures::Fraction(fraction),
            1 => SplitFeatures::Sqrt,
            _ => return Err(QuantError::CorruptModel("unknown split mode".into())),
        };
        let min_samples_split = r.u32()? as usize;
        let max_depth = match r.u32()? {
            0 => None,
            d => Some(d as usize),
        };
        let seed = r.u64()?;
        let config = TrainConfig {
            num_trees,
            features_per_split,
            min_samples_split,
            max_depth,
            seed,
        };
        config.validate()?;

        let num_classes = r.u32()? as usize;
        let num_features = r.u64()? as usize;
        if num_classes != class_names.len() {
            return Err(QuantError::CorruptModel(format!(
                "{num_classes} classes in forest, {} class names",
                class_names.len()
            )));
        }
        if num_features != transform.num_features() {
            return Err(QuantError::CorruptModel(format!(
                "forest expects {num_features} features, transform produces {}",
                transform.num_features()
            )));
        }
        let stored_trees = r.u32()? as usize;
        let trees = (0..stored_trees)
            .map(|_| {
                let count = r.u32()? as usize;
                let nodes = (0..count)
                    .map(|_| match r.u8()? {
                        0 => Ok(Node::Split {
                            feature: r.u32()?,
                            threshold: r.f64()?,
                            left: r.u32()?,
                            right: r.u32()?,
                        }),
                        1 => Ok(Node::Leaf {
                            counts: (0..num_classes).map(|_| r.u32()).collect::<Result<_>>()?,
                        }),
                        _ => Err(QuantError::CorruptModel("unknown node tag".into())),
                    })
                    .collect::<Result<Vec<_>>>()?;
                Tree::from_nodes(nodes, num_features, num_classes)
            })
            .collect::<Result<Vec<_>>>()?;
        if !r.0.is_empty() {
            return Err(QuantError::CorruptModel("unread bytes in payload".into()));
        }
        let forest = Forest::from_parts(trees, num_classes, num_features, config)?;
        Ok(Self {
            transform,
            forest,
            class_names,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_bytes(&fs::read(path)?)
    }
}

#[derive(Default)]
struct Writer(Vec<u8>);

impl Writer {
    fn u8(&mut self, v: u8) {
        self.0.push(v);
    }
    fn u32(&mut self, v: u32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn bytes(&mut self, b: &[u8]) {
        self.0.extend_from_slice(b);
    }
}

struct Reader<'a>(&'a [u8]);

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        if self.0.len() < n {
            return Err(QuantError::CorruptModel("payload ends early".into()));
        }
        let (head, tail) = self.0.split_at(n);
        self.0 = tail;
        Ok(head)
    }
    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}
