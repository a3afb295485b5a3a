//! Quantile dot plots: a fixed number of sample quantiles stacked as dots.

use serde::Serialize;

use crate::data::ObservationSample;
use crate::error::{Error, Result};
use crate::stats::{quantile_sorted, sorted_copy};

pub const DEFAULT_N_QUANTILES: usize = 100;
/// Auto binwidth is the quantile range split into this many widths.
pub const AUTO_BINWIDTH_DIVISOR: f64 = 30.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "value")]
pub enum Binwidth {
    Auto,
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuantileDotPlot {
    pub n_q: usize,
    pub quantiles: Vec<f64>,
    /// Centre of the stack each dot sits in, nondecreasing.
    pub centers: Vec<f64>,
    pub radius: f64,
    pub stack_heights: Vec<usize>,
    /// Distinct stack centres, parallel to `stack_heights`.
    pub stack_centers: Vec<f64>,
}

pub fn fit_qdot(sample: &ObservationSample, n_q: usize, binwidth: Binwidth) -> Result<QuantileDotPlot> {
    if n_q == 0 {
        return Err(Error::InvalidArgument("need at least one quantile".into()));
    }
    let sorted = sorted_copy(sample.values());
    let quantiles: Vec<f64> = (1..=n_q)
        .map(|k| quantile_sorted(&sorted, (k as f64 - 0.5) / n_q as f64))
        .collect();
    let width = match binwidth {
        Binwidth::Fixed(w) => {
            if !(w.is_finite() && w > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "binwidth must be positive, got {w}"
                )));
            }
            w
        }
        Binwidth::Auto => auto_binwidth(&quantiles),
    };
    Ok(stack(quantiles, width))
}

pub(crate) fn auto_binwidth(quantiles: &[f64]) -> f64 {
    let range = quantiles[quantiles.len() - 1] - quantiles[0];
    if range > 0.0 {
        range / AUTO_BINWIDTH_DIVISOR
    } else {
        1.0
    }
}

/// Greedy left-to-right stacking of sorted quantiles.
fn stack(quantiles: Vec<f64>, width: f64) -> QuantileDotPlot {
    let mut centers = Vec::with_capacity(quantiles.len());
    let mut stack_heights = Vec::new();
    let mut stack_centers = Vec::new();
    let mut start = 0;
    while start < quantiles.len() {
        let anchor = quantiles[start];
        let mut end = start + 1;
        while end < quantiles.len() && quantiles[end] <= anchor + width {
            end += 1;
        }
        let center = 0.5 * (anchor + quantiles[end - 1]);
        centers.extend(std::iter::repeat_n(center, end - start));
        stack_heights.push(end - start);
        stack_centers.push(center);
        start = end;
    }
    QuantileDotPlot {
        n_q: quantiles.len(),
        quantiles,
        centers,
        radius: width / 2.0,
        stack_heights,
        stack_centers,
    }
}

impl QuantileDotPlot {
    pub fn binwidth(&self) -> f64 {
        2.0 * self.radius
    }

    /// Horizontal extent covered by dots.
    pub fn extent(&self) -> (f64, f64) {
        (
            self.centers[0] - self.radius,
            self.centers[self.n_q - 1] + self.radius,
        )
    }
}
