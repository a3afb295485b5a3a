//! Calibration checks for binary, categorical and ordinal predictions:
//! binned reliability curves, PAV-adjusted conditional event probabilities
//! with consistency bands, PAV residuals, one-versus-others and cumulative
//! ordinal reductions, and bar checks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::data::{BinaryPredictionTable, CategoricalPredictionTable};
use crate::error::{Error, Result};
use crate::plot::{Interval, Layer, PlotSpec, Rect, Role};
use crate::rootogram::CountFrequencyTable;
use crate::stats::{clopper_pearson, quantile_sorted};

pub const DEFAULT_LEVEL: f64 = 0.95;
pub const DEFAULT_N_BINS: usize = 10;
pub const DEFAULT_N_SIM: usize = 2000;

/// Isotonic (nondecreasing) least-squares fit of outcomes on predictions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IsotonicFit {
    pub sorted_pred: Vec<f64>,
    /// Fitted conditional event probability at each sorted prediction.
    pub cep: Vec<f64>,
    /// Block each sorted position belongs to.
    pub block_index: Vec<usize>,
    /// Outcome sum and size of every block.
    pub block_sums: Vec<(u64, u64)>,
    /// `order[k]` is the input index at sorted position `k`.
    pub order: Vec<usize>,
}

impl IsotonicFit {
    /// CEP per observation in input order.
    pub fn cep_in_input_order(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.cep.len()];
        for (k, &i) in self.order.iter().enumerate() {
            out[i] = self.cep[k];
        }
        out
    }
}

/// Stable sort of indices by prediction.
fn sort_order(pred: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..pred.len()).collect();
    order.sort_by(|&a, &b| pred[a].total_cmp(&pred[b]));
    order
}

/// Pool adjacent violators on outcomes already arranged in prediction
/// order. `tie_starts` marks positions that begin a new group of equal
/// predictions; each group enters as a single block.
fn pav_blocks(sorted_outcome: impl Iterator<Item = u8>, tie_starts: &[bool]) -> Vec<(u64, u64)> {
    let mut blocks: Vec<(u64, u64)> = Vec::new();
    for (k, y) in sorted_outcome.enumerate() {
        if k > 0 && !tie_starts[k] {
            let last = blocks.last_mut().unwrap();
            last.0 += y as u64;
            last.1 += 1;
        } else {
            blocks.push((y as u64, 1));
        }
        // pool while the previous block's mean exceeds the last one's;
        // compared exactly by cross-multiplication
        while blocks.len() > 1 {
            let (s2, n2) = blocks[blocks.len() - 1];
            let (s1, n1) = blocks[blocks.len() - 2];
            // a group of ties is still filling; pool only once it is complete
            if s1 * n2 > s2 * n1 && (k + 1 == tie_starts.len() || tie_starts[k + 1]) {
                blocks.pop();
                let last = blocks.last_mut().unwrap();
                last.0 += s2;
                last.1 += n2;
            } else {
                break;
            }
        }
    }
    blocks
}

fn tie_starts(sorted_pred: &[f64]) -> Vec<bool> {
    (0..sorted_pred.len())
        .map(|k| k == 0 || sorted_pred[k] != sorted_pred[k - 1])
        .collect()
}

fn expand(blocks: &[(u64, u64)]) -> (Vec<f64>, Vec<usize>) {
    let mut cep = Vec::new();
    let mut idx = Vec::new();
    for (b, &(s, n)) in blocks.iter().enumerate() {
        let v = s as f64 / n as f64;
        for _ in 0..n {
            cep.push(v);
            idx.push(b);
        }
    }
    (cep, idx)
}

pub fn pav_isotonic(pred: &[f64], outcome: &[u8]) -> Result<IsotonicFit> {
    if pred.len() != outcome.len() {
        return Err(Error::DimensionMismatch {
            expected: pred.len(),
            found: outcome.len(),
        });
    }
    if pred.is_empty() {
        return Err(Error::Empty);
    }
    let order = sort_order(pred);
    let sorted_pred: Vec<f64> = order.iter().map(|&i| pred[i]).collect();
    let ties = tie_starts(&sorted_pred);
    let blocks = pav_blocks(order.iter().map(|&i| outcome[i]), &ties);
    let (cep, block_index) = expand(&blocks);
    Ok(IsotonicFit {
        sorted_pred,
        cep,
        block_index,
        block_sums: blocks,
        order,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveKind {
    Binned,
    Pav,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvePoint {
    /// Predicted probability (bin mean for binned curves).
    pub x: f64,
    /// Event rate or CEP.
    pub y: f64,
    /// Interval around `y` (binned) or consistency band at `x` (PAV).
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BandSource {
    OutcomeDraws,
    Bernoulli,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConsistencyBands {
    pub at_pred: Vec<f64>,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub level: f64,
    pub draws_used: usize,
    pub source: BandSource,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CalibrationCurve {
    pub kind: CurveKind,
    pub label: String,
    pub points: Vec<CurvePoint>,
    /// Binned: bin mean prediction outside the binomial interval.
    /// PAV: CEP outside the consistency band.
    pub outside_flags: Vec<bool>,
    pub bands: Option<ConsistencyBands>,
}

impl CalibrationCurve {
    pub fn any_flagged(&self) -> bool {
        self.outside_flags.iter().any(|&f| f)
    }
}

/// Uniform bins on [0, 1]; empty bins are omitted.
pub fn binned_calibration(table: &BinaryPredictionTable, n_bins: usize) -> Result<CalibrationCurve> {
    if n_bins == 0 {
        return Err(Error::InvalidArgument("need at least one bin".into()));
    }
    let mut sums = vec![(0.0f64, 0usize, 0usize); n_bins];
    for (&p, &y) in table.predicted_prob().iter().zip(table.outcome()) {
        let b = ((p * n_bins as f64) as usize).min(n_bins - 1);
        sums[b].0 += p;
        sums[b].1 += y as usize;
        sums[b].2 += 1;
    }
    let points: Vec<CurvePoint> = sums
        .iter()
        .filter(|s| s.2 > 0)
        .map(|&(ps, events, n)| {
            let (lo, hi) = clopper_pearson(events, n, DEFAULT_LEVEL);
            CurvePoint {
                x: ps / n as f64,
                y: events as f64 / n as f64,
                lo,
                hi,
                n,
            }
        })
        .collect();
    let outside_flags = points.iter().map(|p| p.x < p.lo || p.x > p.hi).collect();
    Ok(CalibrationCurve {
        kind: CurveKind::Binned,
        label: "binned".into(),
        points,
        outside_flags,
        bands: None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PavOptions {
    pub level: f64,
    /// Simulated outcome sets when the table carries no outcome draws.
    pub n_sim: usize,
    pub seed: u64,
    pub with_bands: bool,
}

impl Default for PavOptions {
    fn default() -> Self {
        Self {
            level: DEFAULT_LEVEL,
            n_sim: DEFAULT_N_SIM,
            seed: 0,
            with_bands: true,
        }
    }
}

impl PavOptions {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

/// Bernoulli(pred) outcome set `s`, drawn from its own stream so that any
/// subset of sets can be regenerated independently.
fn bernoulli_outcomes(pred: &[f64], seed: u64, s: usize) -> Vec<u8> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(s as u64);
    pred.iter().map(|&p| (rng.random::<f64>() < p) as u8).collect()
}

pub fn pav_calibration_plot(table: &BinaryPredictionTable, opts: &PavOptions) -> Result<CalibrationCurve> {
    if !(opts.level > 0.0 && opts.level < 1.0) {
        return Err(Error::InvalidArgument(format!("level must be in (0, 1), got {}", opts.level)));
    }
    let pred = table.predicted_prob();
    let fit = pav_isotonic(pred, table.outcome())?;
    let ties = tie_starts(&fit.sorted_pred);
    // one point per distinct prediction
    let firsts: Vec<usize> = (0..ties.len()).filter(|&k| ties[k]).collect();
    let at_pred: Vec<f64> = firsts.iter().map(|&k| fit.sorted_pred[k]).collect();
    let sizes: Vec<usize> = firsts
        .iter()
        .enumerate()
        .map(|(j, &k)| firsts.get(j + 1).copied().unwrap_or(ties.len()) - k)
        .collect();
    let observed: Vec<f64> = firsts.iter().map(|&k| fit.cep[k]).collect();

    let bands = if opts.with_bands {
        let (source, n_sets) = match table.outcome_draws() {
            Some(d) => (BandSource::OutcomeDraws, d.len()),
            None => (BandSource::Bernoulli, opts.n_sim),
        };
        if n_sets == 0 {
            return Err(Error::InvalidArgument("no simulated outcome sets for bands".into()));
        }
        // per set, the CEP at each distinct prediction
        let sims: Vec<Vec<f64>> = (0..n_sets)
            .into_par_iter()
            .map(|s| {
                let outcomes = match table.outcome_draws() {
                    Some(d) => d[s].clone(),
                    None => bernoulli_outcomes(pred, opts.seed, s),
                };
                let blocks = pav_blocks(fit.order.iter().map(|&i| outcomes[i]), &ties);
                let (cep, _) = expand(&blocks);
                firsts.iter().map(|&k| cep[k]).collect()
            })
            .collect();
        let tail = (1.0 - opts.level) / 2.0;
        let (lo, hi): (Vec<f64>, Vec<f64>) = (0..at_pred.len())
            .map(|j| {
                let mut col: Vec<f64> = sims.iter().map(|s| s[j]).collect();
                col.sort_by(f64::total_cmp);
                (quantile_sorted(&col, tail), quantile_sorted(&col, 1.0 - tail))
            })
            .unzip();
        Some(ConsistencyBands {
            at_pred: at_pred.clone(),
            lo,
            hi,
            level: opts.level,
            draws_used: n_sets,
            source,
        })
    } else {
        None
    };

    let points: Vec<CurvePoint> = (0..at_pred.len())
        .map(|j| CurvePoint {
            x: at_pred[j],
            y: observed[j],
            lo: bands.as_ref().map_or(f64::NAN, |b| b.lo[j]),
            hi: bands.as_ref().map_or(f64::NAN, |b| b.hi[j]),
            n: sizes[j],
        })
        .collect();
    let outside_flags = match &bands {
        Some(b) => (0..points.len()).map(|j| observed[j] < b.lo[j] || observed[j] > b.hi[j]).collect(),
        None => vec![false; points.len()],
    };
    Ok(CalibrationCurve {
        kind: CurveKind::Pav,
        label: "binary".into(),
        points,
        outside_flags,
        bands,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualPoint {
    pub covariate: f64,
    pub residual: f64,
    pub flagged: bool,
}

/// CEP minus prediction for each observation against a covariate, flagged
/// where the CEP leaves its consistency band.
pub fn pav_residuals(table: &BinaryPredictionTable, covariate: &[f64], curve: &CalibrationCurve) -> Result<Vec<ResidualPoint>> {
    if covariate.len() != table.len() {
        return Err(Error::DimensionMismatch {
            expected: table.len(),
            found: covariate.len(),
        });
    }
    if curve.kind != CurveKind::Pav {
        return Err(Error::InvalidArgument("residuals need a PAV curve".into()));
    }
    let xs: Vec<f64> = curve.points.iter().map(|p| p.x).collect();
    table
        .predicted_prob()
        .iter()
        .zip(covariate)
        .map(|(&p, &c)| {
            let j = xs.partition_point(|&x| x < p);
            if j == xs.len() || xs[j] != p {
                return Err(Error::InvalidArgument("curve was fitted to a different table".into()));
            }
            Ok(ResidualPoint {
                covariate: c,
                residual: curve.points[j].y - p,
                flagged: curve.outside_flags[j],
            })
        })
        .collect()
}

/// One binary PAV curve per category: outcome `y == m` against `p_m`.
pub fn ovo_calibration(table: &CategoricalPredictionTable, opts: &PavOptions) -> Result<Vec<CalibrationCurve>> {
    let m = table.n_categories();
    if m < 2 {
        return Err(Error::InvalidArgument("need at least two categories".into()));
    }
    (0..m)
        .map(|c| {
            let pred: Vec<f64> = table.prob_matrix().iter().map(|row| row[c]).collect();
            let outcome: Vec<u8> = table.outcome().iter().map(|&y| (y == c + 1) as u8).collect();
            let mut curve = pav_calibration_plot(&BinaryPredictionTable::new(pred, outcome)?, opts)?;
            curve.label = format!("{} vs others", table.categories()[c]);
            Ok(curve)
        })
        .collect()
}

/// Cumulative probabilities `P(y <= m)` for `m = 1..M-1`, per observation.
pub fn cumulative_predictions(table: &CategoricalPredictionTable) -> Vec<Vec<f64>> {
    let m = table.n_categories();
    (1..m)
        .map(|k| {
            table
                .prob_matrix()
                .iter()
                .map(|row| row[..k].iter().sum::<f64>().min(1.0))
                .collect()
        })
        .collect()
}

pub fn cumulative_ordinal_calibration(table: &CategoricalPredictionTable, opts: &PavOptions) -> Result<Vec<CalibrationCurve>> {
    if !table.ordered() {
        return Err(Error::InvalidArgument("cumulative calibration needs ordered categories".into()));
    }
    let m = table.n_categories();
    if m < 2 {
        return Err(Error::InvalidArgument("need at least two categories".into()));
    }
    cumulative_predictions(table)
        .into_iter()
        .enumerate()
        .map(|(k, pred)| {
            let outcome: Vec<u8> = table.outcome().iter().map(|&y| (y <= k + 1) as u8).collect();
            let mut curve = pav_calibration_plot(&BinaryPredictionTable::new(pred, outcome)?, opts)?;
            curve.label = format!("y <= {}", table.categories()[k]);
            Ok(curve)
        })
        .collect()
}

impl CalibrationCurve {
    pub fn plot(&self, title: &str) -> PlotSpec {
        let mut spec = PlotSpec::new(title)
            .labels("predicted probability", "event rate")
            .layer(Layer::Line {
                points: vec![(0.0, 0.0), (1.0, 1.0)],
                role: Role::Reference,
            });
        spec.x_range = Some((0.0, 1.0));
        spec.y_range = Some((0.0, 1.0));
        match self.kind {
            CurveKind::Binned => {
                spec = spec
                    .layer(Layer::Intervals {
                        intervals: self.points.iter().map(|p| Interval { x: p.x, lo: p.lo, hi: p.hi }).collect(),
                        role: Role::Predictive,
                    })
                    .layer(Layer::Points {
                        points: self.points.iter().map(|p| (p.x, p.y)).collect(),
                        role: Role::Observed,
                    });
            }
            CurveKind::Pav => {
                if let Some(b) = &self.bands {
                    spec = spec.layer(Layer::Ribbon {
                        x: b.at_pred.clone(),
                        lo: b.lo.clone(),
                        hi: b.hi.clone(),
                        role: Role::Reference,
                    });
                }
                spec = spec.layer(Layer::Step {
                    points: self.points.iter().map(|p| (p.x, p.y)).collect(),
                    role: Role::Observed,
                });
            }
        }
        let flagged: Vec<(f64, f64)> = self
            .points
            .iter()
            .zip(&self.outside_flags)
            .filter(|(_, &f)| f)
            .map(|(p, _)| (p.x, p.y))
            .collect();
        if !flagged.is_empty() {
            let n = flagged.len();
            spec = spec
                .layer(Layer::Points {
                    points: flagged,
                    role: Role::Flagged,
                })
                .annotate(format!("{n} points outside their interval"));
        }
        spec
    }
}

pub fn residual_plot(points: &[ResidualPoint], covariate_name: &str, title: &str) -> PlotSpec {
    let mut spec = PlotSpec::new(title)
        .labels(covariate_name, "CEP - predicted")
        .layer(Layer::Points {
            points: points.iter().filter(|p| !p.flagged).map(|p| (p.covariate, p.residual)).collect(),
            role: Role::Observed,
        });
    if points.iter().any(|p| p.flagged) {
        spec = spec.layer(Layer::Points {
            points: points.iter().filter(|p| p.flagged).map(|p| (p.covariate, p.residual)).collect(),
            role: Role::Flagged,
        });
    }
    let (lo, hi) = points
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.covariate), b.max(p.covariate)));
    if lo.is_finite() {
        spec = spec.layer(Layer::Line {
            points: vec![(lo, 0.0), (hi, 0.0)],
            role: Role::Reference,
        });
    }
    spec
}

/// Observed category frequencies against predictive means and intervals.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BarCheck {
    pub categories: Vec<String>,
    pub observed: Vec<f64>,
    pub mean: Vec<f64>,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub level: f64,
}

impl BarCheck {
    pub fn from_counts(categories: Vec<String>, observed: Vec<usize>, predictive: &[Vec<usize>], level: f64) -> Result<Self> {
        if predictive.is_empty() {
            return Err(Error::InvalidArgument("no predictive frequencies".into()));
        }
        let tail = (1.0 - level) / 2.0;
        let k = categories.len();
        let mut mean = Vec::with_capacity(k);
        let mut lo = Vec::with_capacity(k);
        let mut hi = Vec::with_capacity(k);
        for c in 0..k {
            let mut col: Vec<f64> = predictive.iter().map(|r| r[c] as f64).collect();
            col.sort_by(f64::total_cmp);
            mean.push(col.iter().sum::<f64>() / col.len() as f64);
            lo.push(quantile_sorted(&col, tail));
            hi.push(quantile_sorted(&col, 1.0 - tail));
        }
        Ok(Self {
            categories,
            observed: observed.into_iter().map(|v| v as f64).collect(),
            mean,
            lo,
            hi,
            level,
        })
    }

    /// Predictive means that fall inside their own intervals; the weak
    /// notion of agreement a bar check can show.
    pub fn all_inside(&self) -> bool {
        (0..self.categories.len()).all(|c| self.observed[c] >= self.lo[c] && self.observed[c] <= self.hi[c])
    }

    pub fn plot(&self, title: &str) -> PlotSpec {
        let xs: Vec<f64> = (0..self.categories.len()).map(|c| c as f64).collect();
        PlotSpec::new(title)
            .labels("category", "frequency")
            .layer(Layer::Bars {
                rects: xs
                    .iter()
                    .zip(&self.observed)
                    .map(|(&x, &o)| Rect { x0: x - 0.4, x1: x + 0.4, y0: 0.0, y1: o })
                    .collect(),
                role: Role::Observed,
            })
            .layer(Layer::Intervals {
                intervals: xs
                    .iter()
                    .enumerate()
                    .map(|(c, &x)| Interval { x, lo: self.lo[c], hi: self.hi[c] })
                    .collect(),
                role: Role::Predictive,
            })
            .layer(Layer::Points {
                points: xs.iter().copied().zip(self.mean.iter().copied()).collect(),
                role: Role::Predictive,
            })
            .annotate(format!("categories: {}", self.categories.join(", ")))
    }
}

/// Bar check for a binary table, using its outcome draws or Bernoulli
/// simulations from the predictions.
pub fn bar_check(table: &BinaryPredictionTable, opts: &PavOptions) -> Result<BarCheck> {
    let count = |ys: &[u8]| {
        let ones = ys.iter().filter(|&&y| y == 1).count();
        vec![ys.len() - ones, ones]
    };
    let predictive: Vec<Vec<usize>> = match table.outcome_draws() {
        Some(d) => d.iter().map(|r| count(r)).collect(),
        None => (0..opts.n_sim)
            .map(|s| count(&bernoulli_outcomes(table.predicted_prob(), opts.seed, s)))
            .collect(),
    };
    BarCheck::from_counts(vec!["0".into(), "1".into()], count(table.outcome()), &predictive, opts.level)
}

/// Bar check for a categorical table, simulating outcomes from the
/// probability rows.
pub fn bar_check_categorical(table: &CategoricalPredictionTable, opts: &PavOptions) -> Result<BarCheck> {
    let m = table.n_categories();
    let mut observed = vec![0usize; m];
    for &y in table.outcome() {
        observed[y - 1] += 1;
    }
    let predictive: Vec<Vec<usize>> = (0..opts.n_sim)
        .into_par_iter()
        .map(|s| {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            rng.set_stream(s as u64);
            let mut f = vec![0usize; m];
            for row in table.prob_matrix() {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                let mut pick = m - 1;
                for (c, &p) in row.iter().enumerate() {
                    acc += p;
                    if u < acc {
                        pick = c;
                        break;
                    }
                }
                f[pick] += 1;
            }
            f
        })
        .collect();
    BarCheck::from_counts(table.categories().to_vec(), observed, &predictive, opts.level)
}

/// Bar check over a count table's cells.
pub fn bar_check_counts(table: &CountFrequencyTable, level: f64) -> Result<BarCheck> {
    BarCheck::from_counts(
        table.counts.iter().map(|c| c.to_string()).collect(),
        table.observed_freq.clone(),
        &table.predictive_freq,
        level,
    )
}
