//! Acceptance criteria, one line each. Runs without the libtest harness so
//! every line is printed; exits nonzero if any criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Gamma, Normal};
use sha2::{Digest, Sha256};

use vpc::calibration::{cumulative_ordinal_calibration, pav_calibration_plot, pav_isotonic, PavOptions};
use vpc::data::{BinaryPredictionTable, CategoricalPredictionTable, ObservationSample};
use vpc::detect::{detect_bounds, detect_discrete};
use vpc::estimators::{
    fit_histogram, fit_kde, fit_qdot, BandwidthMethod, BinRule, Binwidth, Boundary, DensityEstimate,
    KdeConfig, KdeEstimate,
};
use vpc::pit::{pit_from_cdf_values, pit_histogram, pit_kde, pit_sample};
use vpc::synthetic::{generate, DensityKind};
use vpc::uniformity::{calibrate_gamma, gof_test, GofConfig, CALIBRATION_SEED};

// criterion 1
const C1_N: usize = 250;
const C1_K: usize = 100;
const C1_ALPHA: f64 = 0.05;
const C1_R: usize = 10_000;
const C1_RATE_TOL: f64 = 0.01;
const C1_FRESH_SETS: usize = 10_000;
const C1_TIME_LIMIT: Duration = Duration::from_secs(60);
// criteria 2-5
const SEEDS: u64 = 100;
const N_OBS: usize = 1000;
const N_Q: usize = 100;
const C2_MIN_PASS: usize = 90;
const C3_SILVERMAN_MIN_FAIL: usize = 80;
const C3_QDOT_MIN_PASS: usize = 85;
const C4_UNBOUNDED_MIN_FAIL: usize = 90;
const C4_REFLECT_MIN_PASS: usize = 80;
const C4_QDOT_MIN_PASS: usize = 85;
const C4_BOUND_TOL: f64 = 0.05;
const C4_BOUND_MIN_HITS: usize = 90;
const C5_MIN_FAIL: usize = 80;
const C5_QDOT_MIN_PASS: usize = 85;
const C5_MASS_HITS: usize = 100;
// criterion 6
const C6_HIST_FIXTURES: usize = 1000;
const C6_HIST_TOL: f64 = 1e-12;
const C6_KDE_FIXTURES: usize = 100;
const C6_KDE_TOL: f64 = 1e-6;
// criterion 7
const C7_N: usize = 8;
const C7_ORDERINGS: usize = 20;
// criterion 8
const C8_N: usize = 500;
const C8_S: usize = 2000;
const C8_MIN_CLEAN: usize = 90;
const C8_MIN_FLAGGED: usize = 95;
// criterion 9
const C9_FIXTURES: usize = 50;
// criterion 10
const C10_RUNS: usize = 20;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn gof_passes(est: &DensityEstimate, sample: &ObservationSample, seed: u64) -> bool {
    let pits = pit_sample(est, sample, seed);
    gof_test(&pits, &GofConfig::default()).unwrap().pass
}

fn kde(sample: &ObservationSample, bw: BandwidthMethod, boundary: Boundary) -> DensityEstimate {
    fit_kde(sample, &KdeConfig::default().with_bandwidth(bw).with_boundary(boundary))
        .unwrap()
        .into()
}

fn fd_hist(sample: &ObservationSample) -> DensityEstimate {
    fit_histogram(sample, BinRule::FreedmanDiaconis).unwrap().into()
}

fn qdot(sample: &ObservationSample) -> DensityEstimate {
    fit_qdot(sample, N_Q, Binwidth::Auto).unwrap().into()
}

/// Over `SEEDS` samples of `kind`, count passes of each estimator.
fn pass_counts(kind: DensityKind, estimators: &[&dyn Fn(&ObservationSample) -> DensityEstimate]) -> Vec<usize> {
    let mut counts = vec![0; estimators.len()];
    for seed in 0..SEEDS {
        let sample = generate(kind, N_OBS, seed);
        for (c, fit) in counts.iter_mut().zip(estimators) {
            *c += gof_passes(&fit(&sample), &sample, seed) as usize;
        }
    }
    counts
}

fn criterion_1() -> Outcome {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let start = Instant::now();
    let gamma = pool.install(|| calibrate_gamma(C1_N, C1_K, C1_ALPHA, C1_R, CALIBRATION_SEED).unwrap());
    let elapsed = start.elapsed();
    let cfg = GofConfig { k: Some(C1_K), ..GofConfig::default().with_alpha(C1_ALPHA) };
    let mut rng = ChaCha8Rng::seed_from_u64(0xfeed);
    let mut rejected = 0;
    for _ in 0..C1_FRESH_SETS {
        let u: Vec<f64> = (0..C1_N).map(|_| rng.random::<f64>()).collect();
        rejected += !gof_test(&pit_from_cdf_values(u).unwrap(), &cfg).unwrap().pass as usize;
    }
    let rate = rejected as f64 / C1_FRESH_SETS as f64;
    outcome(
        (rate - C1_ALPHA).abs() <= C1_RATE_TOL && elapsed < C1_TIME_LIMIT,
        format!(
            "gamma = {gamma:.5}, rejection rate {rate:.4} on {C1_FRESH_SETS} fresh sets \
             (target {C1_ALPHA} +/- {C1_RATE_TOL}), calibration {:.1} s single-threaded",
            elapsed.as_secs_f64()
        ),
    )
}

fn criterion_2() -> Outcome {
    let c = pass_counts(
        DensityKind::SmoothNormal,
        &[
            &|s| kde(s, BandwidthMethod::SheatherJones, Boundary::None),
            &fd_hist,
            &qdot,
        ],
    );
    outcome(
        c.iter().all(|&p| p >= C2_MIN_PASS),
        format!("passes of {SEEDS}: SJ-KDE {}, FD histogram {}, qdot {} (need >= {C2_MIN_PASS})", c[0], c[1], c[2]),
    )
}

fn criterion_3() -> Outcome {
    let c = pass_counts(
        DensityKind::Stepped,
        &[
            &|s| kde(s, BandwidthMethod::Silverman, Boundary::None),
            &|s| kde(s, BandwidthMethod::SheatherJones, Boundary::None),
            &qdot,
        ],
    );
    let (silverman_fail, sj_fail) = (SEEDS as usize - c[0], SEEDS as usize - c[1]);
    outcome(
        silverman_fail >= C3_SILVERMAN_MIN_FAIL && sj_fail < silverman_fail && c[2] >= C3_QDOT_MIN_PASS,
        format!(
            "fails of {SEEDS}: Silverman {silverman_fail} (need >= {C3_SILVERMAN_MIN_FAIL}), \
             SJ {sj_fail} (need < Silverman); qdot passes {} (need >= {C3_QDOT_MIN_PASS})",
            c[2]
        ),
    )
}

fn criterion_4() -> Outcome {
    let c = pass_counts(
        DensityKind::BoundedExp,
        &[
            &|s| kde(s, BandwidthMethod::SheatherJones, Boundary::None),
            &|s| kde(s, BandwidthMethod::SheatherJones, Boundary::Auto),
            &qdot,
        ],
    );
    let (lo, hi) = DensityKind::bounded_exp_support();
    let hits = (0..SEEDS)
        .filter(|&seed| {
            let b = detect_bounds(&generate(DensityKind::BoundedExp, N_OBS, seed));
            matches!((b.left, b.right), (Some(l), Some(r))
                if (l - lo).abs() <= C4_BOUND_TOL && (r - hi).abs() <= C4_BOUND_TOL)
        })
        .count();
    let unbounded_fail = SEEDS as usize - c[0];
    outcome(
        unbounded_fail >= C4_UNBOUNDED_MIN_FAIL
            && c[1] >= C4_REFLECT_MIN_PASS
            && c[2] >= C4_QDOT_MIN_PASS
            && hits >= C4_BOUND_MIN_HITS,
        format!(
            "unbounded KDE fails {unbounded_fail} (need >= {C4_UNBOUNDED_MIN_FAIL}), reflected KDE passes {} \
             (need >= {C4_REFLECT_MIN_PASS}), qdot passes {} (need >= {C4_QDOT_MIN_PASS}), \
             bounds within {C4_BOUND_TOL} in {hits} (need >= {C4_BOUND_MIN_HITS})",
            c[1], c[2]
        ),
    )
}

fn criterion_5() -> Outcome {
    let c = pass_counts(
        DensityKind::PointMass,
        &[&|s| kde(s, BandwidthMethod::SheatherJones, Boundary::None), &fd_hist, &qdot],
    );
    let hits = (0..SEEDS)
        .filter(|&seed| {
            detect_discrete(&generate(DensityKind::PointMass, N_OBS, seed))
                .point_mass_values
                .contains(&1.0)
        })
        .count();
    let (kde_fail, hist_fail) = (SEEDS as usize - c[0], SEEDS as usize - c[1]);
    outcome(
        kde_fail >= C5_MIN_FAIL && hist_fail >= C5_MIN_FAIL && c[2] >= C5_QDOT_MIN_PASS && hits == C5_MASS_HITS,
        format!(
            "fails: SJ-KDE {kde_fail}, FD histogram {hist_fail} (need >= {C5_MIN_FAIL}); qdot passes {} \
             (need >= {C5_QDOT_MIN_PASS}); point mass 1 listed in {hits} (need {C5_MASS_HITS})",
            c[2]
        ),
    )
}

fn random_sample(rng: &mut ChaCha8Rng) -> Vec<f64> {
    let n = rng.random_range(5..300);
    match rng.random_range(0..4) {
        0 => Normal::new(rng.random_range(-5.0..5.0), rng.random_range(0.1..10.0))
            .unwrap()
            .sample_iter(&mut *rng)
            .take(n)
            .collect(),
        1 => Exp::new(rng.random_range(0.2..5.0)).unwrap().sample_iter(&mut *rng).take(n).collect(),
        2 => Gamma::new(0.5, 2.0).unwrap().sample_iter(&mut *rng).take(n).collect(),
        _ => (0..n).map(|_| rng.random_range(0..6) as f64 * 0.5).collect(),
    }
}

/// Integral of a piecewise-constant density up to `x`, bin by bin.
fn step_quadrature(edges: &[f64], densities: &[f64], x: f64) -> f64 {
    let mut total = 0.0;
    for (w, &d) in edges.windows(2).zip(densities) {
        let right = w[1].min(x);
        if right > w[0] {
            total += d * (right - w[0]);
        }
    }
    total.min(1.0)
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut hist_err: f64 = 0.0;
    for _ in 0..C6_HIST_FIXTURES {
        let sample = ObservationSample::new(random_sample(&mut rng), "x").unwrap();
        let rule = match rng.random_range(0..3) {
            0 => BinRule::FreedmanDiaconis,
            1 => BinRule::Bins(rng.random_range(1..40)),
            _ => BinRule::Width(rng.random_range(0.05..3.0)),
        };
        let h = fit_histogram(&sample, rule).unwrap();
        let (lo, hi) = (h.lower(), h.upper());
        let pad = 0.1 * (hi - lo);
        let mut points: Vec<f64> = (0..20).map(|_| rng.random_range(lo - pad..hi + pad)).collect();
        points.extend_from_slice(sample.values());
        points.extend_from_slice(&h.edges);
        for x in points {
            hist_err = hist_err.max((pit_histogram(&h, x) - step_quadrature(&h.edges, &h.densities, x)).abs());
        }
    }

    let mut kde_err: f64 = 0.0;
    for _ in 0..C6_KDE_FIXTURES {
        let sample = ObservationSample::new(random_sample(&mut rng), "x").unwrap();
        let bw = match rng.random_range(0..3) {
            0 => BandwidthMethod::SheatherJones,
            1 => BandwidthMethod::Silverman,
            _ => BandwidthMethod::Fixed(rng.random_range(0.05..1.0)),
        };
        let (min, max) = sample.values().iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        let boundary = match rng.random_range(0..3) {
            0 => Boundary::None,
            1 => Boundary::Auto,
            _ => Boundary::Reflect { lo: Some(min - 0.01), hi: rng.random_bool(0.5).then_some(max + 0.01) },
        };
        let Ok(est) = fit_kde(&sample, &KdeConfig::default().with_bandwidth(bw).with_boundary(boundary)) else {
            continue;
        };
        let oracle = KdeOracle::new(&est);
        let (lo, hi) = est.display_range;
        for _ in 0..10 {
            let x = rng.random_range(lo - 0.1..hi + 0.1);
            kde_err = kde_err.max((pit_kde(&est, x) - oracle.cdf(x)).abs());
        }
        for &x in sample.values().iter().take(10) {
            kde_err = kde_err.max((pit_kde(&est, x) - oracle.cdf(x)).abs());
        }
    }
    outcome(
        hist_err <= C6_HIST_TOL && kde_err <= C6_KDE_TOL,
        format!(
            "histogram max |error| {hist_err:.2e} over {C6_HIST_FIXTURES} fixtures (tol {C6_HIST_TOL:e}); \
             KDE max |error| {kde_err:.2e} over {C6_KDE_FIXTURES} fixtures (tol {C6_KDE_TOL:e})"
        ),
    )
}

/// Kernel sum rebuilt from the estimate's centres, integrated by adaptive
/// Simpson on pieces a quarter bandwidth wide.
struct KdeOracle {
    centers: Vec<f64>,
    h: f64,
    lo: f64,
    total: f64,
}

impl KdeOracle {
    fn new(est: &KdeEstimate) -> Self {
        let mut centers = Vec::new();
        for &x in &est.data {
            centers.push(x);
            if let Some(l) = est.reflect_lo {
                centers.push(2.0 * l - x);
            }
            if let Some(u) = est.reflect_hi {
                centers.push(2.0 * u - x);
            }
        }
        let mut o = Self { centers, h: est.bandwidth(), lo: est.display_range.0, total: 1.0 };
        o.total = o.integral(est.display_range.1);
        o
    }

    fn f(&self, x: f64) -> f64 {
        let c = 1.0 / (self.h * (2.0 * std::f64::consts::PI).sqrt());
        self.centers.iter().map(|&m| c * (-0.5 * ((x - m) / self.h).powi(2)).exp()).sum()
    }

    fn integral(&self, x: f64) -> f64 {
        if x <= self.lo {
            return 0.0;
        }
        let pieces = ((x - self.lo) / (0.25 * self.h)).ceil().max(1.0) as usize;
        let w = (x - self.lo) / pieces as f64;
        (0..pieces)
            .map(|p| {
                let a = self.lo + p as f64 * w;
                let b = if p + 1 == pieces { x } else { a + w };
                self.simpson(a, b, 1e-13, 40)
            })
            .sum()
    }

    fn simpson(&self, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (fa, fm, fb) = (self.f(a), self.f(m), self.f(b));
        let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
        self.simpson_step(a, b, fa, fm, fb, whole, tol, depth)
    }

    #[allow(clippy::too_many_arguments)]
    fn simpson_step(&self, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (self.f(lm), self.f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            return left + right + (left + right - whole) / 15.0;
        }
        self.simpson_step(a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + self.simpson_step(m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }

    fn cdf(&self, x: f64) -> f64 {
        (self.integral(x) / self.total).clamp(0.0, 1.0)
    }
}

/// Best nondecreasing fit by enumerating every split of the sorted outcomes
/// into contiguous blocks (splits only between distinct predictions).
/// Returns the fitted blocks as (sum, count).
fn exhaustive_isotonic(sorted_pred: &[f64], sorted_y: &[u8]) -> Vec<(u64, u64)> {
    let n = sorted_y.len();
    let mut best: Option<(i64, Vec<(u64, u64)>)> = None;
    for mask in 0u32..(1 << (n - 1)) {
        if (0..n - 1).any(|k| mask >> k & 1 == 1 && sorted_pred[k] == sorted_pred[k + 1]) {
            continue;
        }
        let mut blocks: Vec<(u64, u64)> = vec![(sorted_y[0] as u64, 1)];
        #[allow(clippy::needless_range_loop)]
        for k in 1..n {
            if mask >> (k - 1) & 1 == 1 {
                blocks.push((0, 0));
            }
            let b = blocks.last_mut().unwrap();
            b.0 += sorted_y[k] as u64;
            b.1 += 1;
        }
        if blocks.windows(2).any(|w| w[0].0 * w[1].1 > w[1].0 * w[0].1) {
            continue;
        }
        // 840 * SSE, an integer because every block size divides 840
        let sse: i64 = blocks.iter().map(|&(s, c)| 840 * s as i64 - 840 * (s * s) as i64 / c as i64).sum();
        if best.as_ref().is_none_or(|(b, _)| sse < *b) {
            best = Some((sse, blocks));
        }
    }
    let blocks = best.unwrap().1;
    // merge equal-mean neighbours so the representation is canonical
    let mut merged: Vec<(u64, u64)> = Vec::new();
    for (s, c) in blocks {
        match merged.last_mut() {
            Some(last) if last.0 * c == s * last.1 => {
                last.0 += s;
                last.1 += c;
            }
            _ => merged.push((s, c)),
        }
    }
    merged
}

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut fixtures, mut mismatches, mut mean_violations) = (0, 0, 0);
    for ordering in 0..C7_ORDERINGS {
        let pred: Vec<f64> = (0..C7_N)
            .map(|_| {
                let p: f64 = rng.random();
                // a quarter of the orderings carry tied predictions
                if ordering % 4 == 3 { (p * 4.0).round() / 4.0 } else { p }
            })
            .collect();
        for pattern in 0u32..(1 << C7_N) {
            fixtures += 1;
            let y: Vec<u8> = (0..C7_N).map(|i| (pattern >> i & 1) as u8).collect();
            let fit = pav_isotonic(&pred, &y).unwrap();
            let sorted_y: Vec<u8> = fit.order.iter().map(|&i| y[i]).collect();
            let oracle = exhaustive_isotonic(&fit.sorted_pred, &sorted_y);
            let expected: Vec<f64> = oracle
                .iter()
                .flat_map(|&(s, c)| std::iter::repeat_n(s as f64 / c as f64, c as usize))
                .collect();
            let mut canonical = fit.block_sums.clone();
            canonical.dedup_by(|b, a| {
                let equal = a.0 * b.1 == b.0 * a.1;
                if equal {
                    a.0 += b.0;
                    a.1 += b.1;
                }
                equal
            });
            if fit.cep != expected || canonical != oracle {
                mismatches += 1;
            }
            let pooled: u64 = fit.block_sums.iter().map(|b| b.0).sum();
            let observed: u64 = y.iter().map(|&v| v as u64).sum();
            let block_ok = fit.block_sums.iter().enumerate().all(|(b, &(s, _))| {
                let members: u64 = (0..C7_N).filter(|&k| fit.block_index[k] == b).map(|k| sorted_y[k] as u64).sum();
                members == s
            });
            if pooled != observed || !block_ok {
                mean_violations += 1;
            }
        }
    }
    outcome(
        mismatches == 0 && mean_violations == 0,
        format!(
            "{fixtures} fixtures ({} patterns x {C7_ORDERINGS} orderings): {mismatches} oracle mismatches, \
             {mean_violations} mean-preservation violations",
            1 << C7_N
        ),
    )
}

fn criterion_8() -> Outcome {
    let opts = PavOptions { n_sim: C8_S, ..PavOptions::default() };
    let (mut clean, mut flagged) = (0, 0);
    for seed in 0..SEEDS {
        let mut rng = ChaCha8Rng::seed_from_u64(0x8000 + seed);
        let pred: Vec<f64> = (0..C8_N).map(|_| rng.random()).collect();
        let y: Vec<u8> = pred.iter().map(|&p| (rng.random::<f64>() < p) as u8).collect();
        let inverted: Vec<u8> = y.iter().map(|&v| 1 - v).collect();
        let o = opts.with_seed(seed);
        let good = BinaryPredictionTable::new(pred.clone(), y).unwrap();
        clean += !pav_calibration_plot(&good, &o).unwrap().any_flagged() as usize;
        let bad = BinaryPredictionTable::new(pred, inverted).unwrap();
        flagged += pav_calibration_plot(&bad, &o).unwrap().any_flagged() as usize;
    }
    outcome(
        clean >= C8_MIN_CLEAN && flagged >= C8_MIN_FLAGGED,
        format!(
            "calibrated outcomes flag-free in {clean} of {SEEDS} (need >= {C8_MIN_CLEAN}); \
             inverted outcomes flagged in {flagged} (need >= {C8_MIN_FLAGGED})"
        ),
    )
}

fn criterion_9() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut differing = 0;
    for f in 0..C9_FIXTURES {
        let n = rng.random_range(20..300);
        let p1: Vec<f64> = (0..n).map(|_| rng.random()).collect();
        let y: Vec<usize> = p1.iter().map(|&p| if rng.random::<f64>() < p { 1 } else { 2 }).collect();
        let matrix = p1.iter().map(|&p| vec![p, 1.0 - p]).collect();
        let cat = CategoricalPredictionTable::new(matrix, y.clone(), true).unwrap();
        let bin = BinaryPredictionTable::new(p1, y.iter().map(|&c| (c == 1) as u8).collect()).unwrap();
        let opts = PavOptions::default().with_seed(f as u64);
        let ordinal = cumulative_ordinal_calibration(&cat, &opts).unwrap();
        let binary = pav_calibration_plot(&bin, &opts).unwrap();
        let same = ordinal.len() == 1
            && ordinal[0].points == binary.points
            && ordinal[0].outside_flags == binary.outside_flags
            && ordinal[0].bands == binary.bands;
        differing += !same as usize;
    }
    outcome(differing == 0, format!("{differing} of {C9_FIXTURES} fixtures differ bit-for-bit"))
}

fn digest(path: &Path) -> String {
    hex::encode(Sha256::digest(std::fs::read(path).unwrap()))
}

fn criterion_10() -> Outcome {
    let exe = env!("CARGO_BIN_EXE_vpc");
    let root = tempfile::tempdir().unwrap();
    let data = root.path().join("data");
    let status = Command::new(exe)
        .args(["demo", "--n", "400", "--n-draws", "30", "--seed", "10", "--out"])
        .arg(&data)
        .output()
        .unwrap();
    assert!(status.status.success());
    let cal = root.path().join("cal.csv");
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut text = String::from("pred,y\n");
    for _ in 0..300 {
        let p: f64 = rng.random();
        text.push_str(&format!("{p:?},{}\n", (rng.random::<f64>() < p) as u8));
    }
    std::fs::write(&cal, text).unwrap();

    let d = |f: &str| data.join(f).to_string_lossy().into_owned();
    let invocations: Vec<Vec<String>> = vec![
        vec!["density".into(), "--viz".into(), "kde".into(), "--input".into(), d("smooth_normal.csv")],
        vec!["density".into(), "--viz".into(), "qdot".into(), "--input".into(), d("point_mass.csv")],
        vec!["density".into(), "--viz".into(), "hist".into(), "--input".into(), d("stepped.csv")],
        vec!["overlay".into(), "--viz".into(), "kde".into(), "--bounds".into(), "auto".into(),
             "--input".into(), d("bounded_exp.csv"), "--draws".into(), d("bounded_exp_draws.csv")],
        vec!["pit".into(), "--input".into(), d("stepped.csv"), "--draws".into(), d("stepped_draws.csv")],
        vec!["calibration".into(), "--mode".into(), "binary".into(), "--input".into(), cal.to_string_lossy().into_owned()],
    ];
    let mut unstable = Vec::new();
    for (inv, args) in invocations.iter().enumerate() {
        let mut reference: Option<(String, String, Option<i32>)> = None;
        for run in 0..C10_RUNS {
            let dir = root.path().join(format!("{inv}-{}-{run}", args[0]));
            std::fs::create_dir(&dir).unwrap();
            let out = Command::new(exe)
                .args(args)
                .args(["--seed", "42", "--out"])
                .arg(dir.join("plot.svg"))
                .arg("--report")
                .arg(dir.join("report.json"))
                .output()
                .unwrap();
            let hashes = (digest(&dir.join("plot.svg")), digest(&dir.join("report.json")), out.status.code());
            match &reference {
                None => reference = Some(hashes),
                Some(r) if *r != hashes => {
                    unstable.push(args[0].clone());
                    break;
                }
                Some(_) => {}
            }
        }
    }
    outcome(
        unstable.is_empty(),
        format!(
            "{} invocations x {C10_RUNS} runs, SHA-256 of SVG and JSON; unstable: {unstable:?}",
            invocations.len()
        ),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 10] = [
        ("band coverage", criterion_1),
        ("smooth case", criterion_2),
        ("stepped case", criterion_3),
        ("bounded case", criterion_4),
        ("point-mass case", criterion_5),
        ("PIT oracles", criterion_6),
        ("PAV oracle", criterion_7),
        ("calibration self-consistency", criterion_8),
        ("ordinal reduction", criterion_9),
        ("CLI determinism", criterion_10),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let id = format!("criterion {}", i + 1);
        if !filter.is_empty() && !filter.iter().any(|f| id.ends_with(f.as_str()) || name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(run))
            .unwrap_or_else(|_| outcome(false, "panicked"));
        failed += !result.pass as usize;
        println!(
            "{id:>12} {:<30} {}  {} [{:.1} s]",
            name,
            if result.pass { "PASS" } else { "FAIL" },
            result.detail,
            start.elapsed().as_secs_f64()
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
