//! Count-data checks: observed count frequencies against predictive
//! frequencies, drawn as standing, hanging, suspended or discrete
//! rootograms.

use serde::Serialize;

use crate::data::{validate_pairing, ObservationSample, PredictiveDraws};
use crate::error::{Error, Result};
use crate::plot::{Interval, Layer, PlotSpec, Rect, Role, Scale};
use crate::stats::quantile_sorted;

pub const DEFAULT_INTERVAL_MASS: f64 = 0.9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CountFrequencyTable {
    /// 0..=c_max; the last cell also holds any larger counts.
    pub counts: Vec<u64>,
    pub observed_freq: Vec<usize>,
    /// One row per draw.
    pub predictive_freq: Vec<Vec<usize>>,
    pub predictive_mean: Vec<f64>,
    pub interval_lo: Vec<f64>,
    pub interval_hi: Vec<f64>,
    pub interval_mass: f64,
    pub n: usize,
}

fn as_count(v: f64, index: usize) -> Result<u64> {
    if v < 0.0 || v.fract() != 0.0 {
        return Err(Error::NotACount { index, value: v });
    }
    Ok(v as u64)
}

fn tabulate(values: &[f64], c_max: u64) -> Result<Vec<usize>> {
    let mut f = vec![0usize; c_max as usize + 1];
    for (i, &v) in values.iter().enumerate() {
        let c = as_count(v, i)?.min(c_max);
        f[c as usize] += 1;
    }
    Ok(f)
}

/// Frequencies of each count in the observations and in every draw.
/// `c_max = None` uses the largest count seen anywhere.
pub fn count_frequencies(
    obs: &ObservationSample,
    draws: &PredictiveDraws,
    c_max: Option<u64>,
    interval_mass: f64,
) -> Result<CountFrequencyTable> {
    validate_pairing(obs, draws)?;
    if !(interval_mass > 0.0 && interval_mass < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "interval mass must be in (0, 1), got {interval_mass}"
        )));
    }
    let mut largest = 0;
    for (i, &v) in obs.values().iter().enumerate() {
        largest = largest.max(as_count(v, i)?);
    }
    for row in draws.rows() {
        for (i, &v) in row.iter().enumerate() {
            largest = largest.max(as_count(v, i)?);
        }
    }
    let c_max = c_max.unwrap_or(largest);
    let observed_freq = tabulate(obs.values(), c_max)?;
    let predictive_freq: Vec<Vec<usize>> = draws.rows().map(|r| tabulate(r, c_max)).collect::<Result<_>>()?;
    let tail = (1.0 - interval_mass) / 2.0;
    let cells = c_max as usize + 1;
    let mut predictive_mean = Vec::with_capacity(cells);
    let mut interval_lo = Vec::with_capacity(cells);
    let mut interval_hi = Vec::with_capacity(cells);
    for c in 0..cells {
        let mut col: Vec<f64> = predictive_freq.iter().map(|r| r[c] as f64).collect();
        col.sort_by(f64::total_cmp);
        predictive_mean.push(col.iter().sum::<f64>() / col.len() as f64);
        interval_lo.push(quantile_sorted(&col, tail));
        interval_hi.push(quantile_sorted(&col, 1.0 - tail));
    }
    let n = obs.len();
    debug_assert_eq!(observed_freq.iter().sum::<usize>(), n);
    debug_assert!(predictive_freq.iter().all(|r| r.iter().sum::<usize>() == n));
    Ok(CountFrequencyTable {
        counts: (0..=c_max).collect(),
        observed_freq,
        predictive_freq,
        predictive_mean,
        interval_lo,
        interval_hi,
        interval_mass,
        n,
    })
}

impl CountFrequencyTable {
    /// Counts whose observed frequency lies outside the predictive interval.
    pub fn outside(&self) -> Vec<u64> {
        self.counts
            .iter()
            .zip(&self.observed_freq)
            .enumerate()
            .filter(|(c, (_, &o))| (o as f64) < self.interval_lo[*c] || (o as f64) > self.interval_hi[*c])
            .map(|(_, (&k, _))| k)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RootogramStyle {
    Standing,
    Hanging,
    Suspended,
    #[default]
    Discrete,
}

impl std::str::FromStr for RootogramStyle {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "standing" => Ok(Self::Standing),
            "hanging" => Ok(Self::Hanging),
            "suspended" => Ok(Self::Suspended),
            "discrete" => Ok(Self::Discrete),
            _ => Err(Error::InvalidArgument(format!("unknown rootogram style '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RootogramSpec {
    pub style: RootogramStyle,
    /// Take bar differences on raw frequencies instead of square roots.
    pub raw_scale: bool,
}

impl Default for RootogramSpec {
    fn default() -> Self {
        Self {
            style: RootogramStyle::Discrete,
            raw_scale: false,
        }
    }
}

/// Geometry of one count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RootogramCell {
    pub count: u64,
    /// Transformed observed frequency, predictive mean and interval.
    pub observed: f64,
    pub mean: f64,
    pub lo: f64,
    pub hi: f64,
    /// Bar extent for bar styles, `(0, 0)` for the discrete style.
    pub bar: (f64, f64),
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Rootogram {
    pub spec: RootogramSpec,
    pub cells: Vec<RootogramCell>,
}

impl Rootogram {
    pub fn flagged_counts(&self) -> Vec<u64> {
        self.cells.iter().filter(|c| c.flagged).map(|c| c.count).collect()
    }
}

pub fn rootogram(table: &CountFrequencyTable, spec: RootogramSpec) -> Rootogram {
    let transform = |v: f64| {
        if spec.raw_scale || spec.style == RootogramStyle::Discrete {
            v
        } else {
            v.sqrt()
        }
    };
    let outside = table.outside();
    let cells = table
        .counts
        .iter()
        .enumerate()
        .map(|(c, &count)| {
            let observed = transform(table.observed_freq[c] as f64);
            let mean = transform(table.predictive_mean[c]);
            let bar = match spec.style {
                RootogramStyle::Standing => (0.0, observed),
                RootogramStyle::Hanging => (mean - observed, mean),
                RootogramStyle::Suspended => (0.0, observed - mean),
                RootogramStyle::Discrete => (0.0, 0.0),
            };
            RootogramCell {
                count,
                observed,
                mean,
                lo: transform(table.interval_lo[c]),
                hi: transform(table.interval_hi[c]),
                bar,
                flagged: outside.contains(&count),
            }
        })
        .collect();
    Rootogram { spec, cells }
}

impl Rootogram {
    pub fn plot(&self, title: &str) -> PlotSpec {
        let cells = &self.cells;
        let half = 0.4;
        let sqrt_axis = !self.spec.raw_scale;
        let y_label = if self.spec.raw_scale { "frequency" } else { "sqrt(frequency)" };
        let mut spec = PlotSpec::new(title).labels("count", y_label);
        match self.spec.style {
            RootogramStyle::Discrete => {
                spec.y_label = "frequency".into();
                if sqrt_axis {
                    spec.y_scale = Scale::SqrtLabels;
                }
                spec = spec
                    .layer(Layer::Intervals {
                        intervals: cells
                            .iter()
                            .map(|c| Interval {
                                x: c.count as f64,
                                lo: c.lo,
                                hi: c.hi,
                            })
                            .collect(),
                        role: Role::Predictive,
                    })
                    .layer(Layer::Points {
                        points: cells.iter().map(|c| (c.count as f64, c.mean)).collect(),
                        role: Role::Predictive,
                    })
                    .layer(Layer::Points {
                        points: cells
                            .iter()
                            .filter(|c| !c.flagged)
                            .map(|c| (c.count as f64, c.observed))
                            .collect(),
                        role: Role::Observed,
                    })
                    .layer(Layer::Points {
                        points: cells
                            .iter()
                            .filter(|c| c.flagged)
                            .map(|c| (c.count as f64, c.observed))
                            .collect(),
                        role: Role::Flagged,
                    });
            }
            style => {
                spec = spec.layer(Layer::Bars {
                    rects: cells
                        .iter()
                        .map(|c| Rect {
                            x0: c.count as f64 - half,
                            x1: c.count as f64 + half,
                            y0: c.bar.0.min(c.bar.1),
                            y1: c.bar.0.max(c.bar.1),
                        })
                        .collect(),
                    role: Role::Observed,
                });
                if style != RootogramStyle::Suspended {
                    spec = spec
                        .layer(Layer::Ribbon {
                            x: cells.iter().map(|c| c.count as f64).collect(),
                            lo: cells.iter().map(|c| c.lo).collect(),
                            hi: cells.iter().map(|c| c.hi).collect(),
                            role: Role::Reference,
                        })
                        .layer(Layer::Line {
                            points: cells.iter().map(|c| (c.count as f64, c.mean)).collect(),
                            role: Role::Predictive,
                        });
                }
                spec = spec.layer(Layer::Line {
                    points: vec![
                        (cells[0].count as f64 - half, 0.0),
                        (cells[cells.len() - 1].count as f64 + half, 0.0),
                    ],
                    role: Role::Reference,
                });
            }
        }
        let flagged = self.flagged_counts();
        if !flagged.is_empty() {
            let list: Vec<String> = flagged.iter().map(|c| c.to_string()).collect();
            spec = spec.annotate(format!("observed outside interval at counts {}", list.join(", ")));
        }
        spec
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Poisson};

    fn obs(v: Vec<f64>) -> ObservationSample {
        ObservationSample::new(v, "y").unwrap()
    }

    fn poisson_rows(lambda: f64, n: usize, s: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = Poisson::new(lambda).unwrap();
        (0..s).map(|_| (0..n).map(|_| p.sample(&mut rng)).collect()).collect()
    }

    #[test]
    fn identical_draws() {
        let o = obs(vec![0.0, 0.0, 1.0]);
        let d = PredictiveDraws::from_rows(vec![o.values().to_vec(); 5]).unwrap();
        let t = count_frequencies(&o, &d, None, 0.9).unwrap();
        assert_eq!(t.observed_freq, vec![2, 1]);
        assert_eq!((t.interval_lo.clone(), t.interval_hi.clone()), (vec![2.0, 1.0], vec![2.0, 1.0]));
        let hanging = rootogram(&t, RootogramSpec { style: RootogramStyle::Hanging, raw_scale: false });
        assert!(hanging.cells.iter().all(|c| c.bar.0 == 0.0));
        let suspended = rootogram(&t, RootogramSpec { style: RootogramStyle::Suspended, raw_scale: false });
        assert!(suspended.cells.iter().all(|c| c.bar == (0.0, 0.0)));
        assert!(rootogram(&t, RootogramSpec::default()).flagged_counts().is_empty());
    }

    #[test]
    fn rejects_non_counts() {
        let o = obs(vec![1.0, 2.5]);
        let d = PredictiveDraws::from_rows(vec![vec![1.0, 2.0]]).unwrap();
        assert!(matches!(count_frequencies(&o, &d, None, 0.9), Err(Error::NotACount { .. })));
        let o = obs(vec![1.0, -1.0]);
        assert!(count_frequencies(&o, &d, None, 0.9).is_err());
    }

    #[test]
    fn hanging_and_suspended_agree() {
        let rows = poisson_rows(3.0, 200, 100, 1);
        let o = obs(poisson_rows(3.0, 200, 1, 2).remove(0));
        let t = count_frequencies(&o, &PredictiveDraws::from_rows(rows).unwrap(), None, 0.9).unwrap();
        let h = rootogram(&t, RootogramSpec { style: RootogramStyle::Hanging, raw_scale: false });
        let s = rootogram(&t, RootogramSpec { style: RootogramStyle::Suspended, raw_scale: false });
        for (a, b) in h.cells.iter().zip(&s.cells) {
            // bottom of the hanging bar mirrors the suspended bar
            assert!((a.bar.0 + b.bar.1).abs() < 1e-12);
            assert!((a.bar.1 - a.mean).abs() < 1e-12);
            assert!((a.mean - t.predictive_mean[a.count as usize].sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn conservation() {
        let rows = poisson_rows(2.0, 50, 30, 3);
        let o = obs(poisson_rows(2.0, 50, 1, 4).remove(0));
        let t = count_frequencies(&o, &PredictiveDraws::from_rows(rows).unwrap(), Some(3), 0.9).unwrap();
        assert_eq!(t.counts, vec![0, 1, 2, 3]);
        assert_eq!(t.observed_freq.iter().sum::<usize>(), 50);
        assert!(t.predictive_freq.iter().all(|r| r.iter().sum::<usize>() == 50));
    }

    #[test]
    fn flags_match_definition() {
        let rows = poisson_rows(2.0, 300, 200, 5);
        // zero inflation in the observations
        let mut y = poisson_rows(2.0, 300, 1, 6).remove(0);
        for v in y.iter_mut().take(90) {
            *v = 0.0;
        }
        let t = count_frequencies(&obs(y), &PredictiveDraws::from_rows(rows).unwrap(), None, 0.95).unwrap();
        let r = rootogram(&t, RootogramSpec::default());
        assert!(r.flagged_counts().contains(&0));
        let expected: Vec<u64> = (0..t.counts.len())
            .filter(|&c| {
                let o = t.observed_freq[c] as f64;
                o < t.interval_lo[c] || o > t.interval_hi[c]
            })
            .map(|c| c as u64)
            .collect();
        assert_eq!(r.flagged_counts(), expected);
        let plot = r.plot("zi");
        assert_eq!(plot.y_scale, Scale::SqrtLabels);
    }

    #[test]
    fn poisson_coverage() {
        let hits = (0..100)
            .filter(|&seed| {
                let rows = poisson_rows(3.0, 500, 200, 1000 + seed);
                let o = obs(poisson_rows(3.0, 500, 1, 5000 + seed).remove(0));
                let t = count_frequencies(&o, &PredictiveDraws::from_rows(rows).unwrap(), None, 0.9).unwrap();
                let f = t.observed_freq[3] as f64;
                f >= t.interval_lo[3] && f <= t.interval_hi[3]
            })
            .count();
        assert!((80..=98).contains(&hits), "{hits}");
    }
}
