//! Gaussian kernel density estimates as drawn in a density plot: evaluated
//! on a grid over a truncated display range, optionally reflected at known
//! or detected bounds, and renormalized to integrate to one over what is
//! shown.

use serde::Serialize;

use super::bandwidth::{Bandwidth, BandwidthMethod};
use crate::data::ObservationSample;
use crate::detect::detect_bounds;
use crate::error::{Error, Result};
use crate::stats::{normal_cdf, normal_pdf};

pub const DEFAULT_GRID_SIZE: usize = 512;
/// The display range extends this many bandwidths past the data.
pub const DISPLAY_PAD_BANDWIDTHS: f64 = 3.0;

/// Boundary handling requested by the caller.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    None,
    Reflect { lo: Option<f64>, hi: Option<f64> },
    /// Detect bounds from the data, then reflect at whatever was found.
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KdeConfig {
    pub bandwidth: BandwidthMethod,
    pub boundary: Boundary,
    pub grid_size: usize,
}

impl Default for KdeConfig {
    fn default() -> Self {
        Self {
            bandwidth: BandwidthMethod::SheatherJones,
            boundary: Boundary::None,
            grid_size: DEFAULT_GRID_SIZE,
        }
    }
}

impl KdeConfig {
    pub fn with_bandwidth(mut self, bandwidth: BandwidthMethod) -> Self {
        self.bandwidth = bandwidth;
        self
    }

    pub fn with_boundary(mut self, boundary: Boundary) -> Self {
        self.boundary = boundary;
        self
    }
}

/// A fitted, displayed KDE.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KdeEstimate {
    pub bandwidth: Bandwidth,
    #[serde(skip)]
    pub data: Vec<f64>,
    pub display_range: (f64, f64),
    /// Bounds at which kernel mass is reflected.
    pub reflect_lo: Option<f64>,
    pub reflect_hi: Option<f64>,
    #[serde(skip)]
    pub grid: Vec<f64>,
    #[serde(skip)]
    pub density: Vec<f64>,
    /// Mass of the (reflected) mixture inside the display range; the grid
    /// density is the mixture divided by this.
    pub normalization: f64,
}

pub fn fit_kde(sample: &ObservationSample, config: &KdeConfig) -> Result<KdeEstimate> {
    let bandwidth = config.bandwidth.select(sample)?;
    fit_kde_with_bandwidth(sample, bandwidth, config.boundary, config.grid_size)
}

pub fn fit_kde_with_bandwidth(
    sample: &ObservationSample,
    bandwidth: Bandwidth,
    boundary: Boundary,
    grid_size: usize,
) -> Result<KdeEstimate> {
    let h = bandwidth.value;
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::InvalidArgument(format!("bandwidth must be positive, got {h}")));
    }
    if grid_size < 2 {
        return Err(Error::InvalidArgument("grid needs at least two points".into()));
    }
    let data = sample.values().to_vec();
    let (min, max) = data
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));

    let (reflect_lo, reflect_hi) = match boundary {
        Boundary::None => (None, None),
        Boundary::Reflect { lo, hi } => (lo, hi),
        Boundary::Auto => {
            if sample.len() >= crate::detect::MIN_BOUND_DETECTION_N {
                let b = detect_bounds(sample);
                (b.left, b.right)
            } else {
                (None, None)
            }
        }
    };
    if let (Some(lo), Some(hi)) = (reflect_lo, reflect_hi) {
        if lo >= hi {
            return Err(Error::InvalidArgument(format!(
                "invalid bounds: lower {lo} is not below upper {hi}"
            )));
        }
    }
    if reflect_lo.is_some_and(|lo| min < lo) || reflect_hi.is_some_and(|hi| max > hi) {
        return Err(Error::InvalidArgument(
            "observations lie outside the declared bounds".into(),
        ));
    }

    let mut lo = min - DISPLAY_PAD_BANDWIDTHS * h;
    let mut hi = max + DISPLAY_PAD_BANDWIDTHS * h;
    if let Some(b) = reflect_lo {
        lo = lo.max(b);
    }
    if let Some(b) = reflect_hi {
        hi = hi.min(b);
    }
    if lo >= hi {
        // a point mass exactly on a declared bound
        return Err(Error::DegenerateSample(
            "display range is empty after clipping to bounds".into(),
        ));
    }

    let mut est = KdeEstimate {
        bandwidth,
        data,
        display_range: (lo, hi),
        reflect_lo,
        reflect_hi,
        grid: Vec::new(),
        density: Vec::new(),
        normalization: 1.0,
    };
    est.normalization = est.mixture_mass_below(hi) - est.mixture_mass_below(lo);
    let step = (hi - lo) / (grid_size - 1) as f64;
    est.grid = (0..grid_size)
        .map(|g| if g + 1 == grid_size { hi } else { lo + g as f64 * step })
        .collect();
    est.density = est
        .grid
        .iter()
        .map(|&x| est.mixture_density(x) / est.normalization)
        .collect();
    Ok(est)
}

impl KdeEstimate {
    pub fn bandwidth(&self) -> f64 {
        self.bandwidth.value
    }

    /// Kernel centres including reflected copies.
    fn for_each_center(&self, mut f: impl FnMut(f64)) {
        for &x in &self.data {
            f(x);
            if let Some(lo) = self.reflect_lo {
                f(2.0 * lo - x);
            }
            if let Some(hi) = self.reflect_hi {
                f(2.0 * hi - x);
            }
        }
    }

    /// Unnormalized mixture density (integrates to one over the real line
    /// without reflection).
    pub fn mixture_density(&self, x: f64) -> f64 {
        let h = self.bandwidth.value;
        let mut sum = 0.0;
        self.for_each_center(|c| sum += normal_pdf((x - c) / h));
        sum / (self.data.len() as f64 * h)
    }

    fn mixture_mass_below(&self, x: f64) -> f64 {
        let h = self.bandwidth.value;
        let mut sum = 0.0;
        self.for_each_center(|c| sum += normal_cdf((x - c) / h));
        sum / self.data.len() as f64
    }

    /// Density as displayed: zero outside the display range.
    pub fn density_at(&self, x: f64) -> f64 {
        let (lo, hi) = self.display_range;
        if x < lo || x > hi {
            0.0
        } else {
            self.mixture_density(x) / self.normalization
        }
    }

    /// Distribution function of the truncated, renormalized estimate,
    /// evaluated exactly from the kernel mixture.
    pub fn cdf(&self, x: f64) -> f64 {
        let (lo, hi) = self.display_range;
        if x <= lo {
            return 0.0;
        }
        if x >= hi {
            return 1.0;
        }
        let mass = self.mixture_mass_below(x) - self.mixture_mass_below(lo);
        (mass / self.normalization).clamp(0.0, 1.0)
    }

    /// Distribution function from trapezoid integration of the grid
    /// (linear interpolation between grid points). Agrees with [`cdf`]
    /// up to the grid's discretization error.
    ///
    /// [`cdf`]: KdeEstimate::cdf
    pub fn grid_cdf(&self, x: f64) -> f64 {
        let (lo, hi) = self.display_range;
        if x <= lo {
            return 0.0;
        }
        if x >= hi {
            return 1.0;
        }
        let mut total = 0.0;
        let mut below = 0.0;
        for w in 0..self.grid.len() - 1 {
            let (x0, x1) = (self.grid[w], self.grid[w + 1]);
            let (d0, d1) = (self.density[w], self.density[w + 1]);
            let area = 0.5 * (x1 - x0) * (d0 + d1);
            total += area;
            if x1 <= x {
                below += area;
            } else if x0 < x {
                let dx = x - x0;
                let dx_density = d0 + (d1 - d0) * dx / (x1 - x0);
                below += 0.5 * dx * (d0 + dx_density);
            }
        }
        (below / total).clamp(0.0, 1.0)
    }

    /// Trapezoid integral of the grid density over the display range.
    pub fn grid_integral(&self) -> f64 {
        self.grid
            .windows(2)
            .zip(self.density.windows(2))
            .map(|(x, d)| 0.5 * (x[1] - x[0]) * (d[0] + d[1]))
            .sum()
    }
}
