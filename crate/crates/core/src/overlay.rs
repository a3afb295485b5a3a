//! Predictive checks that overlay predictive draws on the observed
//! visualization: many KDE curves, per-bin histogram summaries, and the
//! top dot of each predictive dot-plot stack.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::data::{validate_pairing, ObservationSample, PredictiveDraws};
use crate::error::{Error, Result};
use crate::estimators::histogram::bin_index;
use crate::estimators::kde::fit_kde_with_bandwidth;
use crate::estimators::{
    fit_histogram, fit_kde, fit_qdot, BinRule, Binwidth, Boundary,
    HistogramEstimate, KdeConfig, KdeEstimate, QuantileDotPlot, DEFAULT_N_QUANTILES,
};
use crate::plot::{histogram_layer, kde_layer, qdot_layer, Dot, Interval, Layer, PlotSpec, Rect, Role};
use crate::stats::quantile_sorted;

pub const DEFAULT_KDE_DRAWS: usize = 50;
pub const DEFAULT_INTERVAL_MASS: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OverlaySpec {
    /// Number of draws shown; `None` means the style's default
    /// (50 for curves and dots, all draws for histogram summaries).
    pub draw_subset: Option<usize>,
    pub interval_mass: f64,
    pub kde: KdeConfig,
    /// Reuse the observation's bandwidth for every draw instead of refitting.
    pub freeze_bandwidth: bool,
    pub n_q: usize,
    pub seed: u64,
}

impl Default for OverlaySpec {
    fn default() -> Self {
        Self {
            draw_subset: None,
            interval_mass: DEFAULT_INTERVAL_MASS,
            kde: KdeConfig::default(),
            freeze_bandwidth: false,
            n_q: DEFAULT_N_QUANTILES,
            seed: 0,
        }
    }
}

impl OverlaySpec {
    fn check(&self) -> Result<()> {
        if !(self.interval_mass > 0.0 && self.interval_mass < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "interval mass must be in (0, 1), got {}",
                self.interval_mass
            )));
        }
        Ok(())
    }
}

/// `m` distinct draw indices chosen with `seed`, in increasing order.
pub fn select_draws(n_draws: usize, m: usize, seed: u64) -> Vec<usize> {
    if m >= n_draws {
        return (0..n_draws).collect();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx = rand::seq::index::sample(&mut rng, n_draws, m).into_vec();
    idx.sort_unstable();
    idx
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KdeOverlay {
    pub observed: KdeEstimate,
    pub draws: Vec<KdeEstimate>,
    pub draw_indices: Vec<usize>,
    /// Union of all display ranges.
    pub display_range: (f64, f64),
}

pub fn overlay_kde(obs: &ObservationSample, draws: &PredictiveDraws, spec: &OverlaySpec) -> Result<KdeOverlay> {
    spec.check()?;
    validate_pairing(obs, draws)?;
    let observed = fit_kde(obs, &spec.kde)?;
    let m = spec.draw_subset.unwrap_or(DEFAULT_KDE_DRAWS);
    let draw_indices = select_draws(draws.n_draws(), m, spec.seed);
    // detected bounds belong to the observed data; replicates reuse them
    let boundary = match spec.kde.boundary {
        Boundary::Auto => Boundary::Reflect {
            lo: observed.reflect_lo,
            hi: observed.reflect_hi,
        },
        b => b,
    };
    let fitted: Vec<KdeEstimate> = draw_indices
        .par_iter()
        .map(|&s| {
            let sample = ObservationSample::new(draws.row(s).to_vec(), format!("draw {}", draws.draw_ids()[s]))?;
            let bw = if spec.freeze_bandwidth {
                observed.bandwidth
            } else {
                spec.kde.bandwidth.select(&sample)?
            };
            // replicate values may fall outside the observed bounds
            let boundary = clip_boundary(boundary, &sample);
            fit_kde_with_bandwidth(&sample, bw, boundary, spec.kde.grid_size)
        })
        .collect::<Result<_>>()?;
    let display_range = fitted.iter().fold(observed.display_range, |(a, b), k| {
        (a.min(k.display_range.0), b.max(k.display_range.1))
    });
    Ok(KdeOverlay {
        observed,
        draws: fitted,
        draw_indices,
        display_range,
    })
}

fn clip_boundary(b: Boundary, sample: &ObservationSample) -> Boundary {
    match b {
        Boundary::Reflect { lo, hi } => {
            let x = sample.values();
            let min = x.iter().copied().fold(f64::INFINITY, f64::min);
            let max = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            Boundary::Reflect {
                lo: lo.filter(|&l| min >= l),
                hi: hi.filter(|&h| max <= h),
            }
        }
        b => b,
    }
}

impl KdeOverlay {
    pub fn plot(&self, title: &str) -> PlotSpec {
        let mut spec = PlotSpec::new(title).labels("value", "density");
        for d in &self.draws {
            spec = spec.layer(kde_layer(d, Role::Predictive));
        }
        spec = spec.layer(kde_layer(&self.observed, Role::Observed));
        spec.x_range = Some(self.display_range);
        spec.annotate(format!("{} predictive draws", self.draws.len()))
    }
}

/// Mean and central interval of one bin's counts across draws.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BinSummary {
    pub mean: f64,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HistogramOverlay {
    pub observed: HistogramEstimate,
    pub bins: Vec<BinSummary>,
    /// Draw values below the first edge and above the last.
    pub overflow_low: BinSummary,
    pub overflow_high: BinSummary,
    /// Per draw: counts per bin followed by low and high overflow.
    pub draw_counts: Vec<Vec<usize>>,
    pub interval_mass: f64,
}

fn summarize(values: &mut [f64], mass: f64) -> BinSummary {
    values.sort_by(f64::total_cmp);
    let tail = (1.0 - mass) / 2.0;
    BinSummary {
        mean: values.iter().sum::<f64>() / values.len() as f64,
        lo: quantile_sorted(values, tail),
        hi: quantile_sorted(values, 1.0 - tail),
    }
}

pub fn overlay_histogram(obs: &ObservationSample, draws: &PredictiveDraws, spec: &OverlaySpec) -> Result<HistogramOverlay> {
    spec.check()?;
    validate_pairing(obs, draws)?;
    let observed = fit_histogram(obs, BinRule::FreedmanDiaconis)?;
    let b = observed.n_bins();
    let selected = select_draws(draws.n_draws(), spec.draw_subset.unwrap_or(usize::MAX), spec.seed);
    let (lo, hi) = (observed.lower(), observed.upper());
    let draw_counts: Vec<Vec<usize>> = selected
        .iter()
        .map(|&s| {
            let mut c = vec![0usize; b + 2];
            for &v in draws.row(s) {
                if v < lo {
                    c[b] += 1;
                } else if v > hi {
                    c[b + 1] += 1;
                } else {
                    c[bin_index(&observed.edges, v)] += 1;
                }
            }
            c
        })
        .collect();
    let mut summaries: Vec<BinSummary> = (0..b + 2)
        .map(|j| {
            let mut v: Vec<f64> = draw_counts.iter().map(|c| c[j] as f64).collect();
            summarize(&mut v, spec.interval_mass)
        })
        .collect();
    let overflow_high = summaries.pop().unwrap();
    let overflow_low = summaries.pop().unwrap();
    Ok(HistogramOverlay {
        observed,
        bins: summaries,
        overflow_low,
        overflow_high,
        draw_counts,
        interval_mass: spec.interval_mass,
    })
}

impl HistogramOverlay {
    pub fn plot(&self, title: &str) -> PlotSpec {
        let h = &self.observed;
        let n: usize = h.counts.iter().sum();
        let scale = 1.0 / (n as f64 * h.bin_width);
        let mids: Vec<f64> = h.edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        let mut spec = PlotSpec::new(title)
            .labels("value", "density")
            .layer(histogram_layer(h, Role::Observed))
            .layer(Layer::Intervals {
                intervals: mids
                    .iter()
                    .zip(&self.bins)
                    .map(|(&x, s)| Interval {
                        x,
                        lo: s.lo * scale,
                        hi: s.hi * scale,
                    })
                    .collect(),
                role: Role::Predictive,
            })
            .layer(Layer::Points {
                points: mids.iter().zip(&self.bins).map(|(&x, s)| (x, s.mean * scale)).collect(),
                role: Role::Predictive,
            });
        // overflow bins drawn one bin width outside the observed range
        let w = h.bin_width;
        let overflow = [
            (h.lower() - w, h.lower(), self.overflow_low),
            (h.upper(), h.upper() + w, self.overflow_high),
        ];
        if overflow.iter().any(|o| o.2.hi > 0.0) {
            spec = spec
                .layer(Layer::Bars {
                    rects: overflow
                        .iter()
                        .map(|&(x0, x1, s)| Rect {
                            x0,
                            x1,
                            y0: 0.0,
                            y1: s.mean * scale,
                        })
                        .collect(),
                    role: Role::Flagged,
                })
                .annotate(format!(
                    "overflow: mean {:.1} below, {:.1} above the observed range",
                    self.overflow_low.mean, self.overflow_high.mean
                ));
        }
        spec.annotate(format!(
            "{} draws, central {}% intervals",
            self.draw_counts.len(),
            self.interval_mass * 100.0
        ))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TopDot {
    pub x: f64,
    pub height: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QdotOverlay {
    pub observed: QuantileDotPlot,
    /// Per selected draw, the top dot of every stack.
    pub tops: Vec<Vec<TopDot>>,
    pub draw_indices: Vec<usize>,
}

pub fn overlay_qdot(obs: &ObservationSample, draws: &PredictiveDraws, spec: &OverlaySpec) -> Result<QdotOverlay> {
    spec.check()?;
    validate_pairing(obs, draws)?;
    let observed = fit_qdot(obs, spec.n_q, Binwidth::Auto)?;
    let width = Binwidth::Fixed(observed.binwidth());
    let draw_indices = select_draws(draws.n_draws(), spec.draw_subset.unwrap_or(DEFAULT_KDE_DRAWS), spec.seed);
    let tops = draw_indices
        .iter()
        .map(|&s| {
            let sample = ObservationSample::new(draws.row(s).to_vec(), "draw")?;
            let q = fit_qdot(&sample, spec.n_q, width)?;
            Ok(q.stack_centers
                .iter()
                .zip(&q.stack_heights)
                .map(|(&x, &height)| TopDot { x, height })
                .collect())
        })
        .collect::<Result<_>>()?;
    Ok(QdotOverlay {
        observed,
        tops,
        draw_indices,
    })
}

impl QdotOverlay {
    pub fn plot(&self, title: &str) -> PlotSpec {
        let r = self.observed.radius;
        let dots: Vec<Dot> = self
            .tops
            .iter()
            .flatten()
            .map(|t| Dot {
                x: t.x,
                y: r + 2.0 * r * (t.height as f64 - 1.0),
                r,
            })
            .collect();
        PlotSpec::new(title)
            .labels("value", "")
            .layer(qdot_layer(&self.observed, Role::Observed))
            .layer(Layer::Dots {
                dots,
                role: Role::Predictive,
            })
            .annotate(format!("top dots of {} predictive draws", self.tops.len()))
    }
}

/// Every observation's value, repeated as `s` identical draws.
pub fn replicate_observations(obs: &ObservationSample, s: usize) -> Result<PredictiveDraws> {
    PredictiveDraws::from_rows(vec![obs.values().to_vec(); s])
}

impl KdeOverlay {
    /// Largest absolute density difference between any draw curve and the
    /// observed curve on matching grids.
    pub fn max_curve_gap(&self) -> f64 {
        self.draws
            .iter()
            .flat_map(|d| {
                d.grid
                    .iter()
                    .zip(&self.observed.grid)
                    .map(|(a, b)| (a - b).abs())
                    .chain(d.density.iter().zip(&self.observed.density).map(|(a, b)| (a - b).abs()))
                    .collect::<Vec<_>>()
            })
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthetic::{generate, DensityKind};

    fn shifted(obs: &ObservationSample, s: usize, by: f64) -> PredictiveDraws {
        PredictiveDraws::from_rows(vec![obs.values().iter().map(|v| v + by).collect(); s]).unwrap()
    }

    #[test]
    fn identical_draws_coincide() {
        let obs = generate(DensityKind::SmoothNormal, 200, 1);
        let draws = replicate_observations(&obs, 8).unwrap();
        let o = overlay_kde(&obs, &draws, &OverlaySpec::default()).unwrap();
        assert_eq!(o.draws.len(), 8);
        assert!(o.max_curve_gap() < 1e-9);
        assert_eq!(o.display_range, o.observed.display_range);
    }

    #[test]
    fn subset_is_deterministic_and_distinct() {
        let a = select_draws(4000, 50, 9);
        assert_eq!(a, select_draws(4000, 50, 9));
        assert_ne!(a, select_draws(4000, 50, 10));
        let mut d = a.clone();
        d.dedup();
        assert_eq!(d.len(), 50);
        assert!(a.iter().all(|&i| i < 4000));
    }

    #[test]
    fn histogram_identical_draws() {
        let obs = generate(DensityKind::Stepped, 300, 2);
        let draws = replicate_observations(&obs, 20).unwrap();
        let o = overlay_histogram(&obs, &draws, &OverlaySpec::default()).unwrap();
        for (s, &c) in o.bins.iter().zip(&o.observed.counts) {
            assert_eq!((s.lo, s.mean, s.hi), (c as f64, c as f64, c as f64));
        }
        for c in &o.draw_counts {
            assert_eq!(c.iter().sum::<usize>(), 300);
        }
    }

    #[test]
    fn histogram_interval_quantiles() {
        let obs = generate(DensityKind::SmoothNormal, 100, 3);
        let rows: Vec<Vec<f64>> = (0..41)
            .map(|s| generate(DensityKind::SmoothNormal, 100, 100 + s).values().to_vec())
            .collect();
        let draws = PredictiveDraws::from_rows(rows).unwrap();
        let o = overlay_histogram(&obs, &draws, &OverlaySpec::default()).unwrap();
        let j = o.bins.len() / 2;
        let mut col: Vec<f64> = o.draw_counts.iter().map(|c| c[j] as f64).collect();
        col.sort_by(f64::total_cmp);
        // type 7 at 0.05 and 0.95 over 41 values hits indices 2 and 38 exactly
        assert_eq!(o.bins[j].lo, col[2]);
        assert_eq!(o.bins[j].hi, col[38]);
        for c in &o.draw_counts {
            assert_eq!(c.iter().sum::<usize>(), 100);
        }
    }

    #[test]
    fn shifted_draws_overflow() {
        let obs = generate(DensityKind::SmoothNormal, 150, 4);
        let o = overlay_histogram(&obs, &shifted(&obs, 5, 10.0), &OverlaySpec::default()).unwrap();
        assert_eq!(o.overflow_high.mean, 150.0);
        assert!(o.bins.iter().all(|s| s.hi == 0.0));
    }

    #[test]
    fn qdot_identical_and_single() {
        let obs = generate(DensityKind::PointMass, 500, 5);
        let o = overlay_qdot(&obs, &replicate_observations(&obs, 3).unwrap(), &OverlaySpec::default()).unwrap();
        for tops in &o.tops {
            let xs: Vec<f64> = tops.iter().map(|t| t.x).collect();
            let hs: Vec<usize> = tops.iter().map(|t| t.height).collect();
            assert_eq!(xs, o.observed.stack_centers);
            assert_eq!(hs, o.observed.stack_heights);
        }
        let one = ObservationSample::new(vec![2.0; 4], "x").unwrap();
        let o = overlay_qdot(&one, &replicate_observations(&one, 1).unwrap(), &OverlaySpec::default()).unwrap();
        assert_eq!(o.tops, vec![vec![TopDot { x: 2.0, height: 100 }]]);
    }

    #[test]
    fn qdot_shares_binwidth() {
        let obs = generate(DensityKind::SmoothNormal, 300, 6);
        let rows: Vec<Vec<f64>> = (0..5)
            .map(|s| generate(DensityKind::SmoothNormal, 300, 50 + s).values().iter().map(|v| v * 1.5).collect())
            .collect();
        let draws = PredictiveDraws::from_rows(rows).unwrap();
        let o = overlay_qdot(&obs, &draws, &OverlaySpec::default()).unwrap();
        let heights: Vec<Vec<usize>> = o.tops.iter().map(|t| t.iter().map(|d| d.height).collect()).collect();
        assert!(heights.windows(2).any(|w| w[0] != w[1]));
        // greedy stacking keeps neighbouring tops more than a radius apart
        for tops in &o.tops {
            for w in tops.windows(2) {
                assert!(w[1].x - w[0].x > o.observed.radius);
            }
        }
    }

    #[test]
    fn bad_interval_mass() {
        let obs = generate(DensityKind::SmoothNormal, 20, 1);
        let spec = OverlaySpec {
            interval_mass: 1.0,
            ..OverlaySpec::default()
        };
        assert!(overlay_histogram(&obs, &replicate_observations(&obs, 2).unwrap(), &spec).is_err());
    }
}
