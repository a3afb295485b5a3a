//! The three density visualizations: KDE, histogram and quantile dot plot.

pub mod bandwidth;
pub mod histogram;
pub mod kde;
pub mod qdot;

use serde::Serialize;

pub use bandwidth::{bandwidth_silverman, bandwidth_sj, Bandwidth, BandwidthMethod};
pub use histogram::{fit_histogram, BinRule, HistogramEstimate};
pub use kde::{fit_kde, Boundary, KdeConfig, KdeEstimate};
pub use qdot::{fit_qdot, Binwidth, QuantileDotPlot, DEFAULT_N_QUANTILES};

/// A fitted density visualization, carrying what its PIT needs.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum DensityEstimate {
    Kde(KdeEstimate),
    Histogram(HistogramEstimate),
    QuantileDots(QuantileDotPlot),
}

impl DensityEstimate {
    pub fn name(&self) -> &'static str {
        match self {
            DensityEstimate::Kde(_) => "kde",
            DensityEstimate::Histogram(_) => "histogram",
            DensityEstimate::QuantileDots(_) => "qdot",
        }
    }
}

impl From<KdeEstimate> for DensityEstimate {
    fn from(e: KdeEstimate) -> Self {
        DensityEstimate::Kde(e)
    }
}

impl From<HistogramEstimate> for DensityEstimate {
    fn from(e: HistogramEstimate) -> Self {
        DensityEstimate::Histogram(e)
    }
}

impl From<QuantileDotPlot> for DensityEstimate {
    fn from(e: QuantileDotPlot) -> Self {
        DensityEstimate::QuantileDots(e)
    }
}
