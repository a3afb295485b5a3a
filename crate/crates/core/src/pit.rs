//! Probability integral transform of observations through a fitted
//! visualization.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::data::{validate_pairing, ObservationSample, PredictiveDraws};
use crate::error::{Error, Result};
use crate::estimators::{DensityEstimate, HistogramEstimate, KdeEstimate, QuantileDotPlot};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PitSet {
    pub values: Vec<f64>,
    pub randomized: bool,
    /// Present iff `randomized`.
    pub seed: Option<u64>,
    pub source: String,
}

impl PitSet {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// PIT through the displayed, truncated and renormalized KDE.
pub fn pit_kde(est: &KdeEstimate, x: f64) -> f64 {
    est.cdf(x)
}

/// `h * sum(f[..J]) + (x - l_J) f_J` for `x` in bin `J`.
pub fn pit_histogram(est: &HistogramEstimate, x: f64) -> f64 {
    if x <= est.lower() {
        return 0.0;
    }
    if x >= est.upper() {
        return 1.0;
    }
    let j = crate::estimators::histogram::bin_index(&est.edges, x);
    let below: f64 = est.densities[..j].iter().sum::<f64>() * est.bin_width;
    (below + (x - est.edges[j]) * est.densities[j]).clamp(0.0, 1.0)
}

/// Interval `(lo, hi)` from which the randomized dot-plot PIT of `x` is drawn.
///
/// `U` is the first dot lying wholly right of `x` (`n_q + 1` if none). If `x`
/// touches some dot, `L` is one less than the first such dot, otherwise the
/// number of dots wholly left of `x`. The interval is `(L, U - 1) / n_q`,
/// except left of every dot where it is `(0, 1 / n_q)`.
pub fn qdot_pit_interval(est: &QuantileDotPlot, x: f64) -> (f64, f64) {
    let n = est.n_q;
    let r = est.radius;
    let c = &est.centers;
    let nf = n as f64;
    // 1-based dot index
    let upper = c.partition_point(|&ck| x >= ck - r) + 1;
    if upper == 1 {
        return (0.0, 1.0 / nf);
    }
    let first_touching = c.partition_point(|&ck| ck + r < x);
    let lower = if first_touching < n && (c[first_touching] - x).abs() <= r {
        first_touching
    } else {
        c.partition_point(|&ck| x >= ck + r)
    };
    (lower as f64 / nf, (upper - 1) as f64 / nf)
}

pub fn pit_qdot(est: &QuantileDotPlot, x: f64, rng: &mut impl Rng) -> f64 {
    let (lo, hi) = qdot_pit_interval(est, x);
    if lo == hi {
        return lo;
    }
    let u: f64 = rng.random();
    lo + (hi - lo) * u
}

/// Randomized PIT for a discrete distribution given as sorted
/// `(support point, cumulative probability)` pairs:
/// `a F(x) + (1 - a) F(x-)` with `a ~ U(0, 1)`.
pub fn pit_randomized_discrete(cdf: &[(f64, f64)], x: f64, rng: &mut impl Rng) -> Result<f64> {
    let i = cdf.partition_point(|&(v, _)| v < x);
    if i == cdf.len() || cdf[i].0 != x {
        return Err(Error::NotInSupport(x));
    }
    let below = if i == 0 { 0.0 } else { cdf[i - 1].1 };
    let a: f64 = rng.random();
    Ok(a * cdf[i].1 + (1.0 - a) * below)
}

/// Per-observation generator; `seed ^ i` keeps results independent of
/// evaluation order.
pub(crate) fn observation_rng(seed: u64, i: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ i as u64)
}

pub fn pit_sample(est: &DensityEstimate, sample: &ObservationSample, seed: u64) -> PitSet {
    let x = sample.values();
    let (values, randomized) = match est {
        DensityEstimate::Kde(k) => (x.par_iter().map(|&v| pit_kde(k, v)).collect(), false),
        DensityEstimate::Histogram(h) => (x.iter().map(|&v| pit_histogram(h, v)).collect(), false),
        DensityEstimate::QuantileDots(q) => (
            x.par_iter()
                .enumerate()
                .map(|(i, &v)| pit_qdot(q, v, &mut observation_rng(seed, i)))
                .collect(),
            true,
        ),
    };
    PitSet {
        values,
        randomized,
        seed: randomized.then_some(seed),
        source: est.name().to_string(),
    }
}

/// Wrap externally computed predictive CDF values, e.g. LOO-PIT.
pub fn pit_from_cdf_values(values: Vec<f64>) -> Result<PitSet> {
    if values.is_empty() {
        return Err(Error::Empty);
    }
    if let Some((i, &v)) = values
        .iter()
        .enumerate()
        .find(|(_, v)| !(0.0..=1.0).contains(*v))
    {
        return Err(Error::ProbabilityOutOfRange {
            row: i + 1,
            column: "pit".into(),
            value: v,
        });
    }
    Ok(PitSet {
        values,
        randomized: false,
        seed: None,
        source: "external".into(),
    })
}

/// Randomized rank PIT of each observation among its column of `S`
/// predictive draws: `(#{d < y} + U (1 + #{d == y})) / (S + 1)`. Exactly
/// uniform when the observation is exchangeable with the draws; the plain
/// fraction `#{d < y} / S` is not.
pub fn pit_from_draws(obs: &ObservationSample, draws: &PredictiveDraws, seed: u64) -> Result<PitSet> {
    validate_pairing(obs, draws)?;
    let s1 = draws.n_draws() as f64 + 1.0;
    let values = obs
        .values()
        .iter()
        .enumerate()
        .map(|(i, &y)| {
            let (mut below, mut equal) = (0usize, 0usize);
            for row in draws.rows() {
                below += (row[i] < y) as usize;
                equal += (row[i] == y) as usize;
            }
            let u: f64 = observation_rng(seed, i).random();
            (below as f64 + u * (equal + 1) as f64) / s1
        })
        .collect();
    Ok(PitSet {
        values,
        randomized: true,
        seed: Some(seed),
        source: "draws".into(),
    })
}
