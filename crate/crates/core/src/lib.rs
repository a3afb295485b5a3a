//! Visual predictive checks for continuous, discrete, count and binary data.

pub mod calibration;
pub mod data;
pub mod detect;
pub mod error;
pub mod estimators;
pub mod overlay;
pub mod pit;
pub mod plot;
pub mod render;
pub mod rootogram;
pub mod stats;
pub mod synthetic;
pub mod uniformity;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../README.md")]
    mod readme {}
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/uniformity.md")]
    mod uniformity {}
    #[doc = include_str!("../../../book/src/estimators.md")]
    mod estimators {}
    #[doc = include_str!("../../../book/src/detection.md")]
    mod detection {}
    #[doc = include_str!("../../../book/src/overlays.md")]
    mod overlays {}
    #[doc = include_str!("../../../book/src/rootograms.md")]
    mod rootograms {}
    #[doc = include_str!("../../../book/src/calibration.md")]
    mod calibration {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
    #[doc = include_str!("../../../book/src/report.md")]
    mod report {}
}
