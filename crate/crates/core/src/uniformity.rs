//! Graphical uniformity test for PIT values: the ECDF on an equidistant
//! grid, compared with simultaneous confidence bands built from pointwise
//! binomial intervals at a simulation-calibrated level.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::pit::PitSet;
use crate::stats::{binomial_cdf_table, discrete_quantile};

pub const DEFAULT_ALPHA: f64 = 0.05;
pub const DEFAULT_REPLICATES: usize = 10_000;
pub const DEFAULT_MAX_POINTS: usize = 100;
/// Seed of the reference simulation used to calibrate the bands.
pub const CALIBRATION_SEED: u64 = 0x5eed_ca1b;
/// Bisection stops once the bracket on the pointwise level is this narrow.
pub const GAMMA_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EcdfEvaluation {
    pub z: Vec<f64>,
    pub ecdf: Vec<f64>,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimultaneousBands {
    pub alpha: f64,
    pub gamma: f64,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub k: usize,
    pub n: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Above,
    Below,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Exit {
    pub z: f64,
    pub direction: Direction,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PlotStyle {
    #[default]
    Ecdf,
    EcdfDifference,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GofVerdict {
    pub pass: bool,
    pub first_exit: Option<Exit>,
    pub bands: SimultaneousBands,
    pub ecdf: EcdfEvaluation,
    pub style: PlotStyle,
}

/// ECDF of the PIT values at `z_k = k / K`, `k = 1..=K`.
pub fn ecdf_at(pits: &PitSet, k: usize) -> Result<EcdfEvaluation> {
    if k == 0 {
        return Err(Error::InvalidArgument("need at least one evaluation point".into()));
    }
    let counts = cumulative_counts(pits.values.iter().copied(), k);
    let n = pits.len();
    Ok(EcdfEvaluation {
        z: (1..=k).map(|j| j as f64 / k as f64).collect(),
        ecdf: counts.iter().map(|&c| c as f64 / n as f64).collect(),
        n,
    })
}

/// `#{u <= k/K}` for `k = 1..=K`.
fn cumulative_counts(values: impl Iterator<Item = f64>, k: usize) -> Vec<usize> {
    let kf = k as f64;
    let mut hist = vec![0usize; k];
    for u in values {
        // smallest j with u <= j/K, found from ceil and corrected for rounding
        let mut j = (u * kf).ceil().max(1.0) as usize;
        j = j.min(k);
        while j > 1 && u <= (j - 1) as f64 / kf {
            j -= 1;
        }
        while j < k && u > j as f64 / kf {
            j += 1;
        }
        hist[j - 1] += 1;
    }
    let mut acc = 0;
    hist.iter()
        .map(|&h| {
            acc += h;
            acc
        })
        .collect()
}

/// Binomial CDF tables at every `z_k`.
fn cdf_tables(n: usize, k: usize) -> Vec<Vec<f64>> {
    (1..=k)
        .map(|j| binomial_cdf_table(n, j as f64 / k as f64))
        .collect()
}

/// Pointwise interval `[BinQ(gamma/2), BinQ(1 - gamma/2)] / N` at `z`.
pub fn pointwise_band(n: usize, z: f64, gamma: f64) -> (f64, f64) {
    band_from_table(&binomial_cdf_table(n, z), gamma)
}

fn band_from_table(cdf: &[f64], gamma: f64) -> (f64, f64) {
    let n = (cdf.len() - 1) as f64;
    (
        discrete_quantile(cdf, gamma / 2.0) as f64 / n,
        discrete_quantile(cdf, 1.0 - gamma / 2.0) as f64 / n,
    )
}

type CacheKey = (usize, usize, u64, usize, u64);

fn cache() -> &'static Mutex<HashMap<CacheKey, f64>> {
    static CACHE: OnceLock<Mutex<HashMap<CacheKey, f64>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Pointwise level `gamma` giving simultaneous coverage `1 - alpha`.
///
/// `R` uniform samples of size `N` are simulated once. For each replicate
/// the levels at which its ECDF leaves the pointwise bands are found
/// exactly, after which `gamma` is bisected on `[0, alpha]` for the largest
/// value whose exit fraction is at most `alpha`. Results are cached.
pub fn calibrate_gamma(n: usize, k: usize, alpha: f64, replicates: usize, seed: u64) -> Result<f64> {
    if n == 0 || k == 0 || replicates == 0 {
        return Err(Error::InvalidArgument("N, K and R must be positive".into()));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidArgument(format!("alpha must be in (0, 1), got {alpha}")));
    }
    let key = (n, k, alpha.to_bits(), replicates, seed);
    if let Some(&g) = cache().lock().unwrap().get(&key) {
        return Ok(g);
    }
    let tables = cdf_tables(n, k);
    // Replicate leaves the band at level g iff g > low or g >= high, where
    // low = 2 min_k F(c_k) and high = 2 min_k P(X >= c_k).
    let thresholds: Vec<(f64, f64)> = (0..replicates)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(r as u64);
            let counts = cumulative_counts((0..n).map(|_| rng.random::<f64>()), k);
            let mut low = f64::INFINITY;
            let mut high = f64::INFINITY;
            for (c, cdf) in counts.iter().zip(&tables) {
                low = low.min(2.0 * cdf[*c]);
                let upper_tail = if *c == 0 { 1.0 } else { 1.0 - cdf[*c - 1] };
                high = high.min(2.0 * upper_tail);
            }
            (low, high)
        })
        .collect();
    let exits = |g: f64| {
        thresholds
            .iter()
            .filter(|&&(low, high)| g > low || g >= high)
            .count()
    };
    let allowed = (alpha * replicates as f64).floor() as usize;
    let gamma = if exits(alpha) <= allowed {
        alpha
    } else {
        let (mut lo, mut hi) = (0.0, alpha);
        while hi - lo > GAMMA_TOLERANCE * alpha {
            let mid = 0.5 * (lo + hi);
            if exits(mid) <= allowed {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    };
    cache().lock().unwrap().insert(key, gamma);
    Ok(gamma)
}

pub fn simultaneous_bands(n: usize, k: usize, alpha: f64) -> Result<SimultaneousBands> {
    let gamma = calibrate_gamma(n, k, alpha, DEFAULT_REPLICATES, CALIBRATION_SEED)?;
    Ok(bands_at_gamma(n, k, alpha, gamma))
}

pub fn bands_at_gamma(n: usize, k: usize, alpha: f64, gamma: f64) -> SimultaneousBands {
    let (lower, upper) = cdf_tables(n, k)
        .iter()
        .map(|t| band_from_table(t, gamma))
        .unzip();
    SimultaneousBands {
        alpha,
        gamma,
        lower,
        upper,
        k,
        n,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GofConfig {
    pub alpha: f64,
    /// Defaults to `min(N, 100)`.
    pub k: Option<usize>,
    pub style: PlotStyle,
}

impl Default for GofConfig {
    fn default() -> Self {
        Self {
            alpha: DEFAULT_ALPHA,
            k: None,
            style: PlotStyle::Ecdf,
        }
    }
}

impl GofConfig {
    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }
}

pub fn gof_test(pits: &PitSet, config: &GofConfig) -> Result<GofVerdict> {
    let n = pits.len();
    if n == 0 {
        return Err(Error::Empty);
    }
    let k = config.k.unwrap_or(n.min(DEFAULT_MAX_POINTS));
    let ecdf = ecdf_at(pits, k)?;
    let bands = simultaneous_bands(n, k, config.alpha)?;
    let first_exit = (0..k).find_map(|j| {
        let e = ecdf.ecdf[j];
        if e < bands.lower[j] {
            Some(Exit { z: ecdf.z[j], direction: Direction::Below })
        } else if e > bands.upper[j] {
            Some(Exit { z: ecdf.z[j], direction: Direction::Above })
        } else {
            None
        }
    });
    Ok(GofVerdict {
        pass: first_exit.is_none(),
        first_exit,
        bands,
        ecdf,
        style: config.style,
    })
}

impl GofVerdict {
    /// ECDF, lower and upper band as plotted in the verdict's style.
    pub fn plotted(&self) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let shift = |v: &[f64]| -> Vec<f64> {
            match self.style {
                PlotStyle::Ecdf => v.to_vec(),
                PlotStyle::EcdfDifference => {
                    v.iter().zip(&self.ecdf.z).map(|(a, z)| a - z).collect()
                }
            }
        };
        (
            shift(&self.ecdf.ecdf),
            shift(&self.bands.lower),
            shift(&self.bands.upper),
        )
    }
}
