//! Extremely randomized trees.
//!
//! Every tree sees the full training set. At each node a random subset of
//! features is examined, each with a single threshold drawn uniformly between
//! the node-local minimum and maximum, and the split with the lowest weighted
//! Gini impurity wins.
//!
//! Tree `i` draws from `ChaCha8Rng::seed_from_u64(seed)` on stream `i`, so a
//! forest depends only on the data and the seed, never on scheduling.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{QuantError, Result};
use crate::series::FeatureMatrix;

/// How many candidate features to examine per split.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SplitFeatures {
    /// `ceil(fraction * p)`, `fraction` in (0, 1].
    Fraction(f64),
    /// `floor(sqrt(p))`, at least one.
    Sqrt,
}

impl SplitFeatures {
    pub fn count(self, p: usize) -> usize {
        let k = match self {
            Self::Fraction(f) => (f * p as f64).ceil() as usize,
            Self::Sqrt => (p as f64).sqrt().floor() as usize,
        };
        k.clamp(1, p.max(1))
    }
}

impl Default for SplitFeatures {
    fn default() -> Self {
        Self::Fraction(0.1)
    }
}

impl fmt::Display for SplitFeatures {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Fraction(x) => write!(f, "{x}"),
            Self::Sqrt => f.write_str("sqrt"),
        }
    }
}

impl FromStr for SplitFeatures {
    type Err = QuantError;

    fn from_str(s: &str) -> Result<Self> {
        if s.trim() == "sqrt" {
            return Ok(Self::Sqrt);
        }
        let x: f64 = s
            .trim()
            .parse()
            .map_err(|_| QuantError::Config(format!("split fraction must be `sqrt` or a number, got {s:?}")))?;
        if !(x > 0.0 && x <= 1.0) {
            return Err(QuantError::Config(format!(
                "split fraction must lie in (0, 1], got {x}"
            )));
        }
        Ok(Self::Fraction(x))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub num_trees: usize,
    pub features_per_split: SplitFeatures,
    pub min_samples_split: usize,
    pub max_depth: Option<usize>,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            num_trees: 200,
            features_per_split: SplitFeatures::default(),
            min_samples_split: 2,
            max_depth: None,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_trees == 0 {
            return Err(QuantError::Config("need at least one tree".into()));
        }
        if let SplitFeatures::Fraction(f) = self.features_per_split {
            if !(f > 0.0 && f <= 1.0) {
                return Err(QuantError::Config(format!(
                    "split fraction must lie in (0, 1], got {f}"
                )));
            }
        }
        if self.min_samples_split < 2 {
            return Err(QuantError::Config("min_samples_split must be at least 2".into()));
        }
        if self.max_depth == Some(0) {
            return Err(QuantError::Config("max_depth must be at least 1 when set".into()));
        }
        Ok(())
    }
}

/// Gini impurity `1 - sum (n_c / N)^2` of a class-count vector.
pub fn gini(counts: &[u32]) -> f64 {
    let total: u64 = counts.iter().map(|&c| c as u64).sum();
    assert!(total > 0, "gini of an empty node");
    let total = total as f64;
    1.0 - counts.iter().map(|&c| (c as f64 / total).powi(2)).sum::<f64>()
}

fn weighted_gini(left: &[u32], right: &[u32]) -> f64 {
    let nl: u32 = left.iter().sum();
    let nr: u32 = right.iter().sum();
    let n = (nl + nr) as f64;
    (nl as f64 * gini(left) + nr as f64 * gini(right)) / n
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    /// Samples with `x[feature] <= threshold` go left.
    Split {
        feature: u32,
        threshold: f64,
        left: u32,
        right: u32,
    },
    Leaf {
        counts: Vec<u32>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    /// Validates child links and feature indices; the root is node 0.
    pub fn from_nodes(nodes: Vec<Node>, num_features: usize, num_classes: usize) -> Result<Self> {
        if nodes.is_empty() {
            return Err(QuantError::CorruptModel("tree without nodes".into()));
        }
        for (i, node) in nodes.iter().enumerate() {
            match node {
                Node::Split {
                    feature,
                    left,
                    right,
                    threshold,
                } => {
                    let ok = (*feature as usize) < num_features
                        && threshold.is_finite()
                        && (*left as usize) > i
                        && (*right as usize) > i
                        && (*left as usize) < nodes.len()
                        && (*right as usize) < nodes.len();
                    if !ok {
                        return Err(QuantError::CorruptModel(format!("invalid split node {i}")));
                    }
                }
                Node::Leaf { counts } => {
                    if counts.len() != num_classes || counts.iter().all(|&c| c == 0) {
                        return Err(QuantError::CorruptModel(format!("invalid leaf node {i}")));
                    }
                }
            }
        }
        Ok(Self { nodes })
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn leaf_counts(&self, x: &[f64]) -> &[u32] {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    i = if x[*feature as usize] <= *threshold {
                        *left as usize
                    } else {
                        *right as usize
                    };
                }
                Node::Leaf { counts } => return counts,
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            match &nodes[i] {
                Node::Split { left, right, .. } => 1 + walk(nodes, *left as usize).max(walk(nodes, *right as usize)),
                Node::Leaf { .. } => 0,
            }
        }
        walk(&self.nodes, 0)
    }
}

struct TreeBuilder<'a> {
    columns: &'a [Vec<f64>],
    labels: &'a [usize],
    num_classes: usize,
    config: &'a TrainConfig,
    candidates: usize,
    rng: ChaCha8Rng,
    features: Vec<u32>,
}

struct Best {
    score: f64,
    feature: usize,
    threshold: f64,
}

impl TreeBuilder<'_> {
    fn draw_threshold(&mut self, lo: f64, hi: f64) -> f64 {
        for _ in 0..4 {
            let t = lo + self.rng.gen::<f64>() * (hi - lo);
            if t > lo && t < hi {
                return t;
            }
        }
        let mid = lo + (hi - lo) / 2.0;
        // adjacent floats have nothing in between; `<= lo` still splits them
        if mid > lo && mid < hi {
            mid
        } else {
            lo
        }
    }

    fn best_split(&mut self, samples: &[usize]) -> Option<Best> {
        let p = self.features.len();
        let mut best: Option<Best> = None;
        let mut found = 0;
        let mut left = vec![0u32; self.num_classes];
        let mut right = vec![0u32; self.num_classes];
        // partial Fisher-Yates: visit features in random order, skipping
        // those that are constant in this node
        for i in 0..p {
            if found == self.candidates {
                break;
            }
            let j = self.rng.gen_range(i..p);
            self.features.swap(i, j);
            let feature = self.features[i] as usize;
            let col = &self.columns[feature];
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for &s in samples {
                lo = lo.min(col[s]);
                hi = hi.max(col[s]);
            }
            if lo >= hi {
                continue;
            }
            found += 1;
            let threshold = self.draw_threshold(lo, hi);
            left.fill(0);
            right.fill(0);
            for &s in samples {
                if col[s] <= threshold {
                    left[self.labels[s]] += 1;
                } else {
                    right[self.labels[s]] += 1;
                }
            }
            let score = weighted_gini(&left, &right);
            let better = match &best {
                None => true,
                Some(b) => {
                    score < b.score
                        || (score == b.score
                            && (feature < b.feature || (feature == b.feature && threshold < b.threshold)))
                }
            };
            if better {
                best = Some(Best {
                    score,
                    feature,
                    threshold,
                });
            }
        }
        best
    }

    fn build(mut self) -> Tree {
        let mut samples: Vec<usize> = (0..self.labels.len()).collect();
        let mut nodes: Vec<Node> = vec![Node::Leaf { counts: Vec::new() }];
        // (node index, sample range, depth)
        let mut stack = vec![(0usize, 0usize, samples.len(), 0usize)];
        while let Some((id, lo, hi, depth)) = stack.pop() {
            let node_samples = &mut samples[lo..hi];
            let mut counts = vec![0u32; self.num_classes];
            for &s in node_samples.iter() {
                counts[self.labels[s]] += 1;
            }
            let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
            let stop = pure
                || node_samples.len() < self.config.min_samples_split
                || self.config.max_depth.is_some_and(|d| depth >= d);
            let split = if stop { None } else { self.best_split(node_samples) };
            let Some(best) = split else {
                nodes[id] = Node::Leaf { counts };
                continue;
            };

            let col = &self.columns[best.feature];
            let mut mid = 0;
            for k in 0..node_samples.len() {
                if col[node_samples[k]] <= best.threshold {
                    node_samples.swap(k, mid);
                    mid += 1;
                }
            }
            debug_assert!(mid > 0 && mid < node_samples.len());

            let left = nodes.len();
            nodes.push(Node::Leaf { counts: Vec::new() });
            nodes.push(Node::Leaf { counts: Vec::new() });
            nodes[id] = Node::Split {
                feature: best.feature as u32,
                threshold: best.threshold,
                left: left as u32,
                right: (left + 1) as u32,
            };
            stack.push((left + 1, lo + mid, hi, depth + 1));
            stack.push((left, lo, lo + mid, depth + 1));
        }
        Tree { nodes }
    }
}

fn tree_rng(seed: u64, tree_index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(tree_index as u64);
    rng
}

fn check_training_data(x: &FeatureMatrix, y: &[usize], num_classes: usize) -> Result<()> {
    if x.rows() == 0 {
        return Err(QuantError::InvalidDataset("no training examples".into()));
    }
    if x.cols() == 0 {
        return Err(QuantError::InvalidDataset("no features".into()));
    }
    if y.len() != x.rows() {
        return Err(QuantError::InvalidDataset(format!(
            "{} labels for {} feature rows",
            y.len(),
            x.rows()
        )));
    }
    if num_classes == 0 || y.iter().any(|&c| c >= num_classes) {
        return Err(QuantError::InvalidDataset(format!(
            "labels must lie in 0..{num_classes}"
        )));
    }
    if x.cols() > u32::MAX as usize {
        return Err(QuantError::InvalidDataset("too many features".into()));
    }
    Ok(())
}

fn fit_tree_columns(
    columns: &[Vec<f64>],
    y: &[usize],
    num_classes: usize,
    config: &TrainConfig,
    tree_index: usize,
) -> Tree {
    let p = columns.len();
    TreeBuilder {
        columns,
        labels: y,
        num_classes,
        config,
        candidates: config.features_per_split.count(p),
        rng: tree_rng(config.seed, tree_index),
        features: (0..p as u32).collect(),
    }
    .build()
}

/// Grow the tree that [`Forest::fit`] would grow at position `tree_index`.
pub fn fit_tree(
    x: &FeatureMatrix,
    y: &[usize],
    num_classes: usize,
    config: &TrainConfig,
    tree_index: usize,
) -> Result<Tree> {
    config.validate()?;
    check_training_data(x, y, num_classes)?;
    Ok(fit_tree_columns(&x.columns(), y, num_classes, config, tree_index))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Forest {
    trees: Vec<Tree>,
    num_classes: usize,
    num_features: usize,
    config: TrainConfig,
}

impl Forest {
    /// Trees are grown in parallel on the current rayon pool.
    pub fn fit(x: &FeatureMatrix, y: &[usize], num_classes: usize, config: &TrainConfig) -> Result<Self> {
        config.validate()?;
        check_training_data(x, y, num_classes)?;
        let columns = x.columns();
        let trees = (0..config.num_trees)
            .into_par_iter()
            .map(|i| fit_tree_columns(&columns, y, num_classes, config, i))
            .collect();
        Ok(Self {
            trees,
            num_classes,
            num_features: x.cols(),
            config: *config,
        })
    }

    pub fn from_parts(trees: Vec<Tree>, num_classes: usize, num_features: usize, config: TrainConfig) -> Result<Self> {
        if trees.len() != config.num_trees {
            return Err(QuantError::CorruptModel(format!(
                "{} trees stored, configuration says {}",
                trees.len(),
                config.num_trees
            )));
        }
        Ok(Self {
            trees,
            num_classes,
            num_features,
            config,
        })
    }

    pub fn trees(&self) -> &[Tree] {
        &self.trees
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn num_features(&self) -> usize {
        self.num_features
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    fn proba_row(&self, x: &[f64]) -> Vec<f64> {
        let mut acc = vec![0.0; self.num_classes];
        for tree in &self.trees {
            let counts = tree.leaf_counts(x);
            let total: u32 = counts.iter().sum();
            for (a, &c) in acc.iter_mut().zip(counts) {
                *a += c as f64 / total as f64;
            }
        }
        let n = self.trees.len() as f64;
        acc.iter_mut().for_each(|a| *a /= n);
        acc
    }

    /// Mean over trees of the normalized leaf class counts.
    pub fn predict_proba(&self, x: &FeatureMatrix) -> Result<Vec<Vec<f64>>> {
        if x.cols() != self.num_features {
            return Err(QuantError::ColumnMismatch {
                expected: self.num_features,
                found: x.cols(),
            });
        }
        Ok((0..x.rows())
            .into_par_iter()
            .map(|i| self.proba_row(x.row(i)))
            .collect())
    }

    pub fn predict(&self, x: &FeatureMatrix) -> Result<Vec<usize>> {
        Ok(self.predict_proba(x)?.iter().map(|row| argmax(row)).collect())
    }
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = i;
        }
    }
    best
}
