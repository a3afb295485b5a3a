//! Equal-width histograms normalized to unit area.

use serde::Serialize;

use crate::data::ObservationSample;
use crate::error::{Error, Result};
use crate::stats::{iqr_sorted, sorted_copy};

/// Upper limit on the number of bins. Freedman-Diaconis on heavy-tailed
/// data with a tiny IQR can ask for millions.
pub const MAX_BINS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "rule", content = "value")]
pub enum BinRule {
    /// Freedman-Diaconis: `h = 2 IQR N^(-1/3)`.
    FreedmanDiaconis,
    Bins(usize),
    Width(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HistogramEstimate {
    pub bin_width: f64,
    pub edges: Vec<f64>,
    /// Density per bin, `count / (N h)`.
    pub densities: Vec<f64>,
    pub counts: Vec<usize>,
    pub rule: BinRule,
    /// Freedman-Diaconis was unusable: a zero IQR (square-root bin count
    /// used instead) or more than [`MAX_BINS`] bins (capped).
    pub fell_back: bool,
}

pub fn fit_histogram(sample: &ObservationSample, rule: BinRule) -> Result<HistogramEstimate> {
    let sorted = sorted_copy(sample.values());
    let n = sorted.len();
    let (min, max) = (sorted[0], sorted[n - 1]);
    let range = max - min;
    let mut fell_back = false;

    let (lo, width, bins) = if range == 0.0 {
        // nothing to spread over: a single unit-width bin around the value
        (min - 0.5, 1.0, 1)
    } else {
        match rule {
            BinRule::FreedmanDiaconis => {
                if n < 2 {
                    return Err(Error::DegenerateSample(
                        "Freedman-Diaconis needs at least two observations".into(),
                    ));
                }
                let iqr = iqr_sorted(&sorted);
                let h = 2.0 * iqr * (n as f64).powf(-1.0 / 3.0);
                if iqr > 0.0 && range / h <= MAX_BINS as f64 {
                    widen(min, range, h)
                } else if iqr > 0.0 {
                    fell_back = true;
                    (min, range / MAX_BINS as f64, MAX_BINS)
                } else {
                    fell_back = true;
                    let k = (n as f64).sqrt().ceil() as usize;
                    (min, range / k as f64, k)
                }
            }
            BinRule::Bins(k) => {
                if k == 0 || k > MAX_BINS {
                    return Err(Error::InvalidArgument(format!(
                        "bin count must be in 1..={MAX_BINS}, got {k}"
                    )));
                }
                (min, range / k as f64, k)
            }
            BinRule::Width(h) => {
                if !(h.is_finite() && h > 0.0) {
                    return Err(Error::InvalidArgument(format!(
                        "bin width must be positive, got {h}"
                    )));
                }
                if range / h > MAX_BINS as f64 {
                    return Err(Error::InvalidArgument(format!(
                        "bin width {h} gives more than {MAX_BINS} bins"
                    )));
                }
                widen(min, range, h)
            }
        }
    };

    let edges: Vec<f64> = (0..=bins).map(|j| lo + j as f64 * width).collect();
    let mut counts = vec![0usize; bins];
    for &x in &sorted {
        counts[bin_index(&edges, x)] += 1;
    }
    let densities = counts
        .iter()
        .map(|&c| c as f64 / (n as f64 * width))
        .collect();
    Ok(HistogramEstimate {
        bin_width: width,
        edges,
        densities,
        counts,
        rule,
        fell_back,
    })
}

/// Whole number of bins of width `h` covering `[min, min + range]`, with the
/// slack split evenly on both sides.
fn widen(min: f64, range: f64, h: f64) -> (f64, f64, usize) {
    let bins = ((range / h).ceil() as usize).max(1);
    let slack = bins as f64 * h - range;
    (min - slack / 2.0, h, bins)
}

/// Bin containing `x`, bins closed on the left except the last, which is
/// closed on both sides. Values outside the edges are clamped.
pub(crate) fn bin_index(edges: &[f64], x: f64) -> usize {
    let bins = edges.len() - 1;
    edges[1..bins].partition_point(|&r| r <= x)
}

impl HistogramEstimate {
    pub fn n_bins(&self) -> usize {
        self.densities.len()
    }

    pub fn lower(&self) -> f64 {
        self.edges[0]
    }

    pub fn upper(&self) -> f64 {
        self.edges[self.edges.len() - 1]
    }

    /// Build directly from edges and densities, e.g. for a known step density.
    #[allow(clippy::neg_cmp_op_on_partial_ord)] // rejects NaN too
    pub fn from_densities(edges: Vec<f64>, densities: Vec<f64>) -> Result<Self> {
        if edges.len() != densities.len() + 1 || densities.is_empty() {
            return Err(Error::DimensionMismatch {
                expected: densities.len() + 1,
                found: edges.len(),
            });
        }
        let width = edges[1] - edges[0];
        if !(width > 0.0) || edges.windows(2).any(|w| ((w[1] - w[0]) - width).abs() > 1e-12 * width.max(1.0)) {
            return Err(Error::InvalidArgument("edges must be equally spaced and increasing".into()));
        }
        if densities.iter().any(|&f| !(f >= 0.0)) {
            return Err(Error::InvalidArgument("densities must be nonnegative".into()));
        }
        Ok(Self {
            bin_width: width,
            counts: vec![0; densities.len()],
            edges,
            densities,
            rule: BinRule::Width(width),
            fell_back: false,
        })
    }
}
