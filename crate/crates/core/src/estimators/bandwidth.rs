//! Gaussian-kernel bandwidth selectors.

use serde::Serialize;

use crate::data::ObservationSample;
use crate::error::{Error, Result};
use crate::stats::{brent_root, iqr_sorted, sd, sorted_copy};

/// Number of bins used to tabulate pairwise distances for the plug-in
/// functional estimates.
const SJ_BINS: usize = 1000;
/// Squared standardized distance beyond which kernel derivatives are zero
/// for all practical purposes.
const SJ_DELTA_MAX: f64 = 1000.0;

/// How a bandwidth was chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "method", content = "value")]
pub enum BandwidthMethod {
    Silverman,
    SheatherJones,
    Fixed(f64),
}

/// A selected bandwidth and whether the selector had to fall back.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Bandwidth {
    pub value: f64,
    pub method: BandwidthMethod,
    /// Set when Sheather-Jones could not bracket its root and Silverman's
    /// rule was used instead.
    pub fell_back: bool,
}

impl BandwidthMethod {
    pub fn select(self, sample: &ObservationSample) -> Result<Bandwidth> {
        match self {
            BandwidthMethod::Silverman => Ok(Bandwidth {
                value: bandwidth_silverman(sample)?,
                method: self,
                fell_back: false,
            }),
            BandwidthMethod::SheatherJones => bandwidth_sj(sample),
            BandwidthMethod::Fixed(h) => {
                if !(h.is_finite() && h > 0.0) {
                    return Err(Error::InvalidArgument(format!(
                        "bandwidth must be positive, got {h}"
                    )));
                }
                Ok(Bandwidth {
                    value: h,
                    method: self,
                    fell_back: false,
                })
            }
        }
    }
}

/// Silverman's rule of thumb from summary statistics:
/// `0.9 * min(sd, iqr / 1.34) * n^(-1/5)`.
pub fn silverman_from_stats(sd: f64, iqr: f64, n: usize) -> f64 {
    let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
    0.9 * spread * (n as f64).powf(-0.2)
}

/// Silverman's rule of thumb. A sample with zero spread is an error.
pub fn bandwidth_silverman(sample: &ObservationSample) -> Result<f64> {
    let x = sample.values();
    if x.len() < 2 {
        return Err(Error::DegenerateSample(
            "at least two observations are needed to select a bandwidth".into(),
        ));
    }
    let s = sd(x);
    if s <= 0.0 {
        return Err(Error::DegenerateSample("all values are equal".into()));
    }
    let sorted = sorted_copy(x);
    Ok(silverman_from_stats(s, iqr_sorted(&sorted), x.len()))
}

/// Pairwise distances tabulated into equal-width bins.
struct PairCounts {
    counts: Vec<f64>,
    bin_width: f64,
    n: f64,
}

impl PairCounts {
    fn new(x: &[f64]) -> Self {
        let (lo, hi) = x
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        let bin_width = (hi - lo) * 1.01 / SJ_BINS as f64;
        let idx: Vec<i64> = x
            .iter()
            .map(|&v| ((v - lo) / bin_width).floor() as i64)
            .collect();
        let mut counts = vec![0.0; SJ_BINS + 1];
        for i in 1..idx.len() {
            for j in 0..i {
                counts[(idx[i] - idx[j]).unsigned_abs() as usize] += 1.0;
            }
        }
        Self {
            counts,
            bin_width,
            n: x.len() as f64,
        }
    }

    /// Estimate of the integrated squared second derivative, using the fourth
    /// derivative of the Gaussian kernel at bandwidth `h`.
    fn phi4(&self, h: f64) -> f64 {
        let mut sum = 0.0;
        for (i, &c) in self.counts.iter().enumerate() {
            let delta = (i as f64 * self.bin_width / h).powi(2);
            if delta >= SJ_DELTA_MAX {
                break;
            }
            sum += c * (-delta / 2.0).exp() * (delta * delta - 6.0 * delta + 3.0);
        }
        sum = 2.0 * sum + self.n * 3.0;
        sum / (self.n * (self.n - 1.0) * h.powi(5) * (2.0 * std::f64::consts::PI).sqrt())
    }

    /// Same with the sixth derivative.
    fn phi6(&self, h: f64) -> f64 {
        let mut sum = 0.0;
        for (i, &c) in self.counts.iter().enumerate() {
            let delta = (i as f64 * self.bin_width / h).powi(2);
            if delta >= SJ_DELTA_MAX {
                break;
            }
            sum += c
                * (-delta / 2.0).exp()
                * (delta.powi(3) - 15.0 * delta * delta + 45.0 * delta - 15.0);
        }
        sum = 2.0 * sum - 15.0 * self.n;
        sum / (self.n * (self.n - 1.0) * h.powi(7) * (2.0 * std::f64::consts::PI).sqrt())
    }
}

/// Sheather-Jones solve-the-equation plug-in bandwidth.
///
/// The pilot functionals are estimated from binned pairwise distances and
/// the fixed-point equation is solved with Brent's method on
/// `[h_silverman / 10, 10 * h_silverman]`, widening the bracket a few
/// times if needed. If no root can be bracketed the Silverman bandwidth is
/// returned with `fell_back` set.
pub fn bandwidth_sj(sample: &ObservationSample) -> Result<Bandwidth> {
    let x = sample.values();
    if x.len() < 4 {
        return Err(Error::DegenerateSample(
            "Sheather-Jones needs at least four observations".into(),
        ));
    }
    let h_silverman = bandwidth_silverman(sample)?;
    let fallback = Bandwidth {
        value: h_silverman,
        method: BandwidthMethod::SheatherJones,
        fell_back: true,
    };

    let n = x.len() as f64;
    let sorted = sorted_copy(x);
    let s = sd(x);
    let iqr = iqr_sorted(&sorted);
    let scale = if iqr > 0.0 { s.min(iqr / 1.349) } else { s };
    let a = 1.24 * scale * n.powf(-1.0 / 7.0);
    let b = 1.23 * scale * n.powf(-1.0 / 9.0);
    let c1 = 1.0 / (2.0 * std::f64::consts::PI.sqrt() * n);

    let pairs = PairCounts::new(x);
    let td = -pairs.phi6(b);
    if !td.is_finite() || td <= 0.0 {
        return Ok(fallback);
    }
    let alpha2 = 1.357 * (pairs.phi4(a) / td).powf(1.0 / 7.0);
    if !alpha2.is_finite() {
        return Ok(fallback);
    }
    let equation = |h: f64| (c1 / pairs.phi4(alpha2 * h.powf(5.0 / 7.0))).powf(0.2) - h;

    let mut lo = h_silverman / 10.0;
    let mut hi = h_silverman * 10.0;
    let tol = 1e-9 * h_silverman;
    for attempt in 0..20 {
        let (flo, fhi) = (equation(lo), equation(hi));
        if flo.is_finite() && fhi.is_finite() && flo.signum() != fhi.signum() {
            return Ok(match brent_root(equation, lo, hi, tol, 200) {
                Some(h) if h > 0.0 => Bandwidth {
                    value: h,
                    method: BandwidthMethod::SheatherJones,
                    fell_back: false,
                },
                _ => fallback,
            });
        }
        if attempt % 2 == 0 {
            hi *= 1.2;
        } else {
            lo /= 1.2;
        }
    }
    Ok(fallback)
}
