//! Ground-truth densities for the worked examples: a smooth normal, a
//! stepped density, a truncated exponential and a normal with a point mass.

use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::data::ObservationSample;
use crate::error::Error;
use crate::stats::{normal_cdf, normal_pdf, normal_quantile};

/// Probability of replacing a normal draw with the point mass.
pub const POINT_MASS_PROB: f64 = 0.2;
pub const POINT_MASS_VALUE: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DensityKind {
    SmoothNormal,
    /// Normal left tail, flat centre on (-1/2, 1/2], narrow normal right tail;
    /// masses 2/5, 1/5, 2/5.
    Stepped,
    /// Exp(1) restricted to its central 80%.
    BoundedExp,
    /// Standard normal with 20% of draws replaced by 1.
    PointMass,
}

impl DensityKind {
    pub const ALL: [DensityKind; 4] = [
        DensityKind::SmoothNormal,
        DensityKind::Stepped,
        DensityKind::BoundedExp,
        DensityKind::PointMass,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DensityKind::SmoothNormal => "smooth_normal",
            DensityKind::Stepped => "stepped",
            DensityKind::BoundedExp => "bounded_exp",
            DensityKind::PointMass => "point_mass",
        }
    }

    /// Support of the truncated exponential.
    pub fn bounded_exp_support() -> (f64, f64) {
        (-(0.9f64.ln()), -(0.1f64.ln()))
    }

    /// Density; for the point-mass kind this is the continuous part only.
    pub fn pdf(self, x: f64) -> f64 {
        match self {
            DensityKind::SmoothNormal => normal_pdf(x),
            DensityKind::Stepped => {
                if x <= -0.5 {
                    0.4 / normal_cdf(-0.5) * normal_pdf(x)
                } else if x <= 0.5 {
                    0.2
                } else {
                    // N(x | 0, sd 1/2) scaled to carry 2/5 beyond 1/2
                    0.4 / normal_cdf(-1.0) * 2.0 * normal_pdf(2.0 * x)
                }
            }
            DensityKind::BoundedExp => {
                let (lo, hi) = Self::bounded_exp_support();
                if x < lo || x > hi {
                    0.0
                } else {
                    (-x).exp() / 0.8
                }
            }
            DensityKind::PointMass => (1.0 - POINT_MASS_PROB) * normal_pdf(x),
        }
    }

    pub fn cdf(self, x: f64) -> f64 {
        match self {
            DensityKind::SmoothNormal => normal_cdf(x),
            DensityKind::Stepped => {
                if x <= -0.5 {
                    0.4 * normal_cdf(x) / normal_cdf(-0.5)
                } else if x <= 0.5 {
                    0.4 + 0.2 * (x + 0.5)
                } else {
                    0.6 + 0.4 * (normal_cdf(2.0 * x) - normal_cdf(1.0)) / normal_cdf(-1.0)
                }
            }
            DensityKind::BoundedExp => {
                let (lo, hi) = Self::bounded_exp_support();
                if x <= lo {
                    0.0
                } else if x >= hi {
                    1.0
                } else {
                    (0.9 - (-x).exp()) / 0.8
                }
            }
            DensityKind::PointMass => {
                let jump = if x >= POINT_MASS_VALUE { POINT_MASS_PROB } else { 0.0 };
                (1.0 - POINT_MASS_PROB) * normal_cdf(x) + jump
            }
        }
    }

    fn draw(self, rng: &mut impl Rng) -> f64 {
        // open interval keeps the normal quantile finite
        let mut u = || loop {
            let u: f64 = rng.random();
            if u > 0.0 {
                return u;
            }
        };
        match self {
            DensityKind::SmoothNormal => normal_quantile(u()),
            DensityKind::Stepped => {
                let branch = u();
                let v = u();
                if branch < 0.4 {
                    normal_quantile(v * normal_cdf(-0.5))
                } else if branch < 0.6 {
                    v - 0.5
                } else {
                    -0.5 * normal_quantile(v * normal_cdf(-1.0))
                }
            }
            DensityKind::BoundedExp => -(0.9 - 0.8 * u()).ln(),
            DensityKind::PointMass => {
                let z = normal_quantile(u());
                if u() < POINT_MASS_PROB {
                    POINT_MASS_VALUE
                } else {
                    z
                }
            }
        }
    }

    /// `n` independent draws, deterministic given `seed`.
    pub fn sample(self, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| self.draw(&mut rng)).collect()
    }
}

impl FromStr for DensityKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        DensityKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown density kind '{s}'")))
    }
}

impl std::fmt::Display for DensityKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// `n >= 1` draws from `kind` as an observation sample labelled by the kind.
pub fn generate(kind: DensityKind, n: usize, seed: u64) -> ObservationSample {
    assert!(n >= 1, "generate needs n >= 1");
    ObservationSample::new(kind.sample(n, seed), kind.name()).expect("draws are finite")
}
