//! Paired comparison of two methods over the same (dataset, resample) keys.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use statrs::function::erf::erfc;

use crate::dataset::ResultRow;
use crate::error::{QuantError, Result};

/// Differences smaller than this count as draws and are dropped from the
/// signed-rank test; absolute differences closer than this share a rank.
const TOLERANCE: f64 = 1e-9;

/// Largest number of nonzero differences handled by exact enumeration.
const EXACT_LIMIT: usize = 25;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WilcoxonMethod {
    Exact,
    Normal,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Wilcoxon {
    /// Sum of the ranks of the positive differences.
    pub w_plus: f64,
    /// Number of nonzero differences.
    pub n: usize,
    /// Two-sided p-value.
    pub p_value: f64,
    pub method: WilcoxonMethod,
}

/// Midranks of `abs_values` (1-based), grouping values within [`TOLERANCE`].
fn midranks(abs_values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..abs_values.len()).collect();
    order.sort_by(|&a, &b| abs_values[a].total_cmp(&abs_values[b]));
    let mut ranks = vec![0.0; abs_values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && abs_values[order[j]] - abs_values[order[j - 1]] < TOLERANCE {
            j += 1;
        }
        // positions i+1..=j share the average rank
        let rank = (i + 1 + j) as f64 / 2.0;
        for &k in &order[i..j] {
            ranks[k] = rank;
        }
        i = j;
    }
    ranks
}

/// Two-sided Wilcoxon signed-rank test on paired differences.
///
/// Zero differences are dropped. Up to 25 remaining differences the null
/// distribution of `W+` is enumerated exactly (midranks for ties);
/// beyond that a normal approximation with tie and continuity correction is
/// used.
pub fn wilcoxon_signed_rank(differences: &[f64]) -> Wilcoxon {
    let nonzero: Vec<f64> = differences.iter().copied().filter(|d| d.abs() >= TOLERANCE).collect();
    let n = nonzero.len();
    if n == 0 {
        return Wilcoxon {
            w_plus: 0.0,
            n,
            p_value: 1.0,
            method: WilcoxonMethod::Exact,
        };
    }
    let abs: Vec<f64> = nonzero.iter().map(|d| d.abs()).collect();
    let ranks = midranks(&abs);
    // doubled midranks are integers
    let doubled: Vec<usize> = ranks.iter().map(|r| (2.0 * r).round() as usize).collect();
    let w2: usize = nonzero
        .iter()
        .zip(&doubled)
        .filter(|(d, _)| **d > 0.0)
        .map(|(_, &r)| r)
        .sum();
    let total2: usize = doubled.iter().sum();
    let w_plus = w2 as f64 / 2.0;

    if n <= EXACT_LIMIT {
        // counts[s] = number of sign patterns with doubled W+ == s
        let mut counts = vec![0.0f64; total2 + 1];
        counts[0] = 1.0;
        let mut reach = 0;
        for &r in &doubled {
            for s in (0..=reach).rev() {
                if counts[s] != 0.0 {
                    counts[s + r] += counts[s];
                }
            }
            reach += r;
        }
        let patterns = 2f64.powi(n as i32);
        let lower: f64 = counts[..=w2].iter().sum();
        let upper: f64 = counts[w2..].iter().sum();
        let p = (2.0 * lower.min(upper) / patterns).min(1.0);
        return Wilcoxon {
            w_plus,
            n,
            p_value: p,
            method: WilcoxonMethod::Exact,
        };
    }

    let nf = n as f64;
    let mean = nf * (nf + 1.0) / 4.0;
    let mut tie_term = 0.0;
    let mut sorted = doubled.clone();
    sorted.sort_unstable();
    for group in sorted.chunk_by(|a, b| a == b) {
        let t = group.len() as f64;
        tie_term += t * t * t - t;
    }
    let variance = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_term / 48.0;
    let p = if variance <= 0.0 {
        1.0
    } else {
        let z = ((w_plus - mean).abs() - 0.5).max(0.0) / variance.sqrt();
        erfc(z / std::f64::consts::SQRT_2).min(1.0)
    };
    Wilcoxon {
        w_plus,
        n,
        p_value: p,
        method: WilcoxonMethod::Normal,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetComparison {
    pub dataset: String,
    pub accuracy_a: f64,
    pub accuracy_b: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub datasets: Vec<DatasetComparison>,
    /// Mean over datasets of `accuracy_a - accuracy_b`.
    pub mean_difference: f64,
    pub wins: usize,
    pub draws: usize,
    pub losses: usize,
    pub wilcoxon: Wilcoxon,
}

fn per_dataset_means(rows: &[ResultRow]) -> BTreeMap<&str, f64> {
    let mut grouped: BTreeMap<&str, BTreeMap<usize, f64>> = BTreeMap::new();
    for row in rows {
        grouped
            .entry(row.dataset.as_str())
            .or_default()
            .insert(row.resample, row.accuracy);
    }
    grouped
        .into_iter()
        .map(|(name, by_resample)| {
            let mean = by_resample.values().sum::<f64>() / by_resample.len() as f64;
            (name, mean)
        })
        .collect()
}

fn keys(rows: &[ResultRow], side: &str) -> Result<BTreeSet<(String, usize)>> {
    let mut set = BTreeSet::new();
    for row in rows {
        if !set.insert((row.dataset.clone(), row.resample)) {
            return Err(QuantError::InvalidDataset(format!(
                "results {side} list {}/{} more than once",
                row.dataset, row.resample
            )));
        }
    }
    Ok(set)
}

/// Compare method A against method B. Accuracies are averaged over resamples
/// per dataset before any statistic is computed.
pub fn compare(a: &[ResultRow], b: &[ResultRow]) -> Result<ComparisonReport> {
    let keys_a = keys(a, "A")?;
    let keys_b = keys(b, "B")?;
    if keys_a != keys_b {
        let missing: Vec<String> = keys_a
            .difference(&keys_b)
            .map(|(d, r)| format!("{d}/{r} (not in B)"))
            .chain(keys_b.difference(&keys_a).map(|(d, r)| format!("{d}/{r} (not in A)")))
            .collect();
        return Err(QuantError::KeyMismatch(missing));
    }
    if keys_a.is_empty() {
        return Err(QuantError::InvalidDataset("no results to compare".into()));
    }
    let means_a = per_dataset_means(a);
    let means_b = per_dataset_means(b);
    let datasets: Vec<DatasetComparison> = means_a
        .iter()
        .map(|(name, &acc_a)| DatasetComparison {
            dataset: name.to_string(),
            accuracy_a: acc_a,
            accuracy_b: means_b[name],
        })
        .collect();
    let diffs: Vec<f64> = datasets.iter().map(|d| d.accuracy_a - d.accuracy_b).collect();
    let wins = diffs.iter().filter(|&&d| d >= TOLERANCE).count();
    let losses = diffs.iter().filter(|&&d| d <= -TOLERANCE).count();
    Ok(ComparisonReport {
        mean_difference: diffs.iter().sum::<f64>() / diffs.len() as f64,
        wins,
        draws: diffs.len() - wins - losses,
        losses,
        wilcoxon: wilcoxon_signed_rank(&diffs),
        datasets,
    })
}

impl fmt::Display for ComparisonReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "datasets: {}", self.datasets.len())?;
        writeln!(f, "mean accuracy difference (A - B): {:.6}", self.mean_difference)?;
        writeln!(
            f,
            "win/draw/loss (A vs B): {}/{}/{}",
            self.wins, self.draws, self.losses
        )?;
        let method = match self.wilcoxon.method {
            WilcoxonMethod::Exact => "exact",
            WilcoxonMethod::Normal => "normal approximation",
        };
        write!(
            f,
            "wilcoxon signed-rank: W+ = {}, n = {}, p = {:.6} ({method})",
            self.wilcoxon.w_plus, self.wilcoxon.n, self.wilcoxon.p_value
        )
    }
}
