//! The four input representations: the raw series, its smoothed first
//! difference, its second difference, and the magnitude of its DFT.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{QuantError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RepresentationId {
    Raw,
    Diff1,
    Diff2,
    Fourier,
}

impl RepresentationId {
    pub const ALL: [RepresentationId; 4] = [Self::Raw, Self::Diff1, Self::Diff2, Self::Fourier];

    pub fn name(self) -> &'static str {
        match self {
            Self::Raw => "raw",
            Self::Diff1 => "diff1",
            Self::Diff2 => "diff2",
            Self::Fourier => "fft",
        }
    }

    /// Length of this representation for a series of length `n`, or `None`
    /// when the series is too short to produce it.
    pub fn output_len(self, n: usize) -> Option<usize> {
        match self {
            Self::Raw => (n >= 1).then_some(n),
            Self::Diff1 => (n >= 2).then(|| n - 1),
            Self::Diff2 => (n >= 3).then(|| n - 2),
            Self::Fourier => (n >= 1).then(|| n / 2 + 1),
        }
    }

    pub(crate) fn bit(self) -> u8 {
        1 << (self as u8)
    }
}

impl fmt::Display for RepresentationId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RepresentationId {
    type Err = QuantError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "raw" | "x" => Ok(Self::Raw),
            "diff1" | "diff" => Ok(Self::Diff1),
            "diff2" => Ok(Self::Diff2),
            "fft" | "dft" | "fourier" => Ok(Self::Fourier),
            other => Err(QuantError::Config(format!(
                "unknown representation {other:?} (expected raw, diff1, diff2 or fft)"
            ))),
        }
    }
}

/// A nonempty, ordered, duplicate-free set of representations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RepresentationMask(u8);

impl RepresentationMask {
    pub fn all() -> Self {
        Self(0b1111)
    }

    pub fn new(ids: &[RepresentationId]) -> Result<Self> {
        let bits = ids.iter().fold(0, |acc, id| acc | id.bit());
        Self::from_bits(bits)
    }

    pub fn from_bits(bits: u8) -> Result<Self> {
        if bits == 0 || bits & !0b1111 != 0 {
            return Err(QuantError::Config(format!(
                "invalid representation set (bits {bits:#06b}); at least one of raw, diff1, diff2, fft is required"
            )));
        }
        Ok(Self(bits))
    }

    pub fn bits(self) -> u8 {
        self.0
    }

    pub fn contains(self, id: RepresentationId) -> bool {
        self.0 & id.bit() != 0
    }

    pub fn ids(self) -> impl Iterator<Item = RepresentationId> {
        RepresentationId::ALL.into_iter().filter(move |&id| self.contains(id))
    }

    /// Members that can be computed for series of length `n`; the rest are
    /// dropped with a warning.
    pub fn available_for(self, n: usize) -> Vec<RepresentationId> {
        self.ids()
            .filter(|id| {
                let ok = id.output_len(n).is_some();
                if !ok {
                    log::warn!("series length {n} is too short for the {id} representation; skipping it");
                }
                ok
            })
            .collect()
    }
}

impl Default for RepresentationMask {
    fn default() -> Self {
        Self::all()
    }
}

impl fmt::Display for RepresentationMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<_> = self.ids().map(RepresentationId::name).collect();
        f.write_str(&names.join(","))
    }
}

impl FromStr for RepresentationMask {
    type Err = QuantError;

    /// Parses a list such as `raw,diff1,fft` (`+` also separates).
    fn from_str(s: &str) -> Result<Self> {
        let ids = s
            .split([',', '+'])
            .filter(|p| !p.trim().is_empty())
            .map(str::parse)
            .collect::<Result<Vec<RepresentationId>>>()?;
        Self::new(&ids)
    }
}

pub fn first_difference(x: &[f64]) -> Vec<f64> {
    x.windows(2).map(|w| w[1] - w[0]).collect()
}

pub fn second_difference(x: &[f64]) -> Vec<f64> {
    first_difference(&first_difference(x))
}

/// Centered moving average, truncated at the edges so the output has the
/// same length as the input. `window` must be odd.
pub fn moving_average(x: &[f64], window: usize) -> Result<Vec<f64>> {
    validate_window(window)?;
    let half = window / 2;
    let n = x.len();
    Ok((0..n)
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(n);
            x[lo..hi].iter().sum::<f64>() / (hi - lo) as f64
        })
        .collect())
}

pub(crate) fn validate_window(window: usize) -> Result<()> {
    if window == 0 || window.is_multiple_of(2) {
        return Err(QuantError::Config(format!(
            "smoothing window must be a positive odd integer, got {window}"
        )));
    }
    Ok(())
}

/// Magnitudes of the DFT of real series of one fixed length.
#[derive(Clone)]
pub struct DftMagnitude {
    n: usize,
    fft: Arc<dyn Fft<f64>>,
}

impl DftMagnitude {
    pub fn new(n: usize) -> Self {
        let fft = FftPlanner::new().plan_fft_forward(n);
        Self { n, fft }
    }

    /// `|sum_t x[t] e^{-2 pi i k t / n}|` for `k = 0..=n/2`, unnormalized.
    pub fn compute(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n, "DFT planned for a different length");
        let mut buf: Vec<Complex<f64>> = x.iter().map(|&re| Complex::new(re, 0.0)).collect();
        self.fft.process(&mut buf);
        buf[..self.n / 2 + 1].iter().map(|c| c.norm()).collect()
    }
}

impl fmt::Debug for DftMagnitude {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DftMagnitude").field("n", &self.n).finish()
    }
}

pub fn dft_magnitude(x: &[f64]) -> Vec<f64> {
    DftMagnitude::new(x.len()).compute(x)
}

/// The derived series of one input, in [`RepresentationId`] order.
#[derive(Debug, Clone, PartialEq)]
pub struct RepresentationSet {
    entries: Vec<(RepresentationId, Vec<f64>)>,
}

impl RepresentationSet {
    pub fn get(&self, id: RepresentationId) -> Option<&[f64]> {
        self.entries.iter().find(|(r, _)| *r == id).map(|(_, v)| v.as_slice())
    }

    pub fn ids(&self) -> impl Iterator<Item = RepresentationId> + '_ {
        self.entries.iter().map(|(id, _)| *id)
    }

    pub fn iter(&self) -> impl Iterator<Item = (RepresentationId, &[f64])> {
        self.entries.iter().map(|(id, v)| (*id, v.as_slice()))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Builds representation sets for series of a fixed length, reusing one FFT plan.
#[derive(Debug, Clone)]
pub struct RepresentationBuilder {
    active: Vec<RepresentationId>,
    smooth_window: usize,
    dft: Option<DftMagnitude>,
}

impl RepresentationBuilder {
    pub fn new(n: usize, mask: RepresentationMask, smooth_window: usize) -> Result<Self> {
        validate_window(smooth_window)?;
        let active = mask.available_for(n);
        if active.is_empty() {
            return Err(QuantError::Config(format!(
                "no requested representation can be computed for series of length {n}"
            )));
        }
        let dft = active
            .contains(&RepresentationId::Fourier)
            .then(|| DftMagnitude::new(n));
        Ok(Self {
            active,
            smooth_window,
            dft,
        })
    }

    pub fn active(&self) -> &[RepresentationId] {
        &self.active
    }

    pub fn build(&self, x: &[f64]) -> RepresentationSet {
        let entries = self
            .active
            .iter()
            .map(|&id| {
                let values = match id {
                    RepresentationId::Raw => x.to_vec(),
                    RepresentationId::Diff1 => moving_average(&first_difference(x), self.smooth_window)
                        .expect("window validated at construction"),
                    RepresentationId::Diff2 => second_difference(x),
                    RepresentationId::Fourier => self.dft.as_ref().expect("planned when active").compute(x),
                };
                (id, values)
            })
            .collect();
        RepresentationSet { entries }
    }
}

/// One-off convenience around [`RepresentationBuilder`].
pub fn build_representations(x: &[f64], mask: RepresentationMask, smooth_window: usize) -> Result<RepresentationSet> {
    Ok(RepresentationBuilder::new(x.len(), mask, smooth_window)?.build(x))
}
