//! Fixed dyadic intervals.
//!
//! Level `j` (1-based) splits a series of length `n` into `2^(j-1)` base
//! intervals. Every level after the first also carries a shifted group: the
//! first `2^(j-1) - 1` base intervals translated right by half the nominal
//! interval length, with anything running past `n` dropped.

use serde::{Deserialize, Serialize};

/// Half-open index range `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Interval {
    pub start: usize,
    pub end: usize,
}

impl Interval {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IntervalGroup {
    Base,
    Shifted,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntervalLevel {
    pub level: usize,
    pub base: Vec<Interval>,
    pub shifted: Vec<Interval>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntervalPlan {
    n: usize,
    depth: usize,
    levels: Vec<IntervalLevel>,
}

impl IntervalPlan {
    pub fn series_len(&self) -> usize {
        self.n
    }

    /// Depth actually used, after clamping to the series length.
    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn levels(&self) -> &[IntervalLevel] {
        &self.levels
    }

    /// All intervals ordered by (level, group, start).
    pub fn iter(&self) -> impl Iterator<Item = &Interval> {
        self.levels.iter().flat_map(|l| l.base.iter().chain(&l.shifted))
    }

    pub fn len(&self) -> usize {
        self.levels.iter().map(|l| l.base.len() + l.shifted.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Largest depth whose finest level still has intervals of length >= 1.
pub fn max_depth(n: usize) -> usize {
    assert!(n >= 1, "series length must be positive");
    n.ilog2() as usize + 1
}

/// `min(6, floor(log2 n) + 1)`.
pub fn default_depth(n: usize) -> usize {
    max_depth(n).min(6)
}

/// Interval count for `n` divisible by `2^(d-1)`: `2^(d-1) * 4 - 2 - d`.
pub fn expected_interval_count(depth: usize) -> usize {
    (1 << (depth - 1)) * 4 - 2 - depth
}

/// `num / den` rounded to nearest, ties to even.
fn div_round_half_even(num: usize, den: usize) -> usize {
    let (q, r) = (num / den, num % den);
    match (2 * r).cmp(&den) {
        std::cmp::Ordering::Less => q,
        std::cmp::Ordering::Greater => q + 1,
        std::cmp::Ordering::Equal => q + (q & 1),
    }
}

pub fn make_intervals(n: usize, depth: usize) -> IntervalPlan {
    assert!(n >= 1, "series length must be positive");
    let depth = depth.max(1);
    let clamped = depth.min(max_depth(n));
    if clamped < depth {
        log::warn!("depth {depth} is too deep for length {n}; using {clamped}");
    }

    let levels = (1..=clamped)
        .map(|level| {
            let count = 1usize << (level - 1);
            let bounds: Vec<usize> = (0..=count).map(|i| div_round_half_even(i * n, count)).collect();
            let base: Vec<Interval> = bounds
                .windows(2)
                .map(|w| Interval { start: w[0], end: w[1] })
                .filter(|iv| !iv.is_empty())
                .collect();
            let shifted = if level > 1 {
                let shift = div_round_half_even(n, count) / 2;
                base[..base.len() - 1]
                    .iter()
                    .map(|iv| Interval {
                        start: iv.start + shift,
                        end: iv.end + shift,
                    })
                    .filter(|iv| iv.end <= n)
                    .collect()
            } else {
                Vec::new()
            };
            IntervalLevel { level, base, shifted }
        })
        .collect();

    IntervalPlan {
        n,
        depth: clamped,
        levels,
    }
}
