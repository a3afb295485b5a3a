use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use vpc::calibration::pav_isotonic;
use vpc::data::{
    load_table, write_table, BinaryPredictionTable, CategoricalPredictionTable, ObservationSample,
    PredictiveDraws, Table,
};
use vpc::estimators::{
    fit_histogram, fit_kde, BandwidthMethod, BinRule, Boundary, HistogramEstimate, KdeConfig, KdeEstimate,
};
use vpc::overlay::{overlay_histogram, OverlaySpec};
use vpc::pit::{pit_from_cdf_values, pit_histogram, pit_kde};
use vpc::synthetic::{generate, DensityKind};
use vpc::uniformity::{gof_test, GofConfig, PlotStyle};

fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![-1e6..1e6f64, -1.0..1.0f64, (-50i32..50).prop_map(|k| k as f64 * 0.25)]
}

fn sample_strategy() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(finite(), 2..120)
}

fn sup_distance(u: &[f64]) -> f64 {
    let mut s = u.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    s.iter()
        .enumerate()
        .map(|(i, &v)| (v - i as f64 / n).abs().max(((i + 1) as f64 / n - v).abs()))
        .fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn observations_round_trip(values in sample_strategy()) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("obs.csv");
        let table = Table::Observations(ObservationSample::new(values, "y").unwrap());
        let schema = write_table(&path, &table).unwrap();
        prop_assert_eq!(load_table(&path, &schema).unwrap(), table);
    }

    #[test]
    fn draws_round_trip(rows in prop::collection::vec(prop::collection::vec(finite(), 4), 1..10)) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("draws.csv");
        let table = Table::Draws(PredictiveDraws::from_rows(rows).unwrap());
        let schema = write_table(&path, &table).unwrap();
        prop_assert_eq!(load_table(&path, &schema).unwrap(), table);
    }

    #[test]
    fn binary_round_trip(rows in prop::collection::vec((0.0..=1.0f64, any::<bool>(), finite()), 1..60)) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bin.csv");
        let pred = rows.iter().map(|r| r.0).collect();
        let y = rows.iter().map(|r| r.1 as u8).collect();
        let x = rows.iter().map(|r| r.2).collect();
        let table = Table::Binary(BinaryPredictionTable::new(pred, y).unwrap().with_covariate("x", x).unwrap());
        let schema = write_table(&path, &table).unwrap();
        prop_assert_eq!(load_table(&path, &schema).unwrap(), table);
    }

    #[test]
    fn categorical_round_trip(rows in prop::collection::vec((0.0..1.0f64, 1usize..=2), 1..60)) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cat.csv");
        let matrix = rows.iter().map(|r| vec![r.0, 1.0 - r.0]).collect();
        let y = rows.iter().map(|r| r.1).collect();
        let table = Table::Categorical(CategoricalPredictionTable::new(matrix, y, true).unwrap());
        let schema = write_table(&path, &table).unwrap();
        prop_assert_eq!(load_table(&path, &schema).unwrap(), table);
    }

    #[test]
    fn kde_pit_monotone_and_clamped(values in sample_strategy(), auto in any::<bool>(), probes in prop::collection::vec(0.0..1.0f64, 30)) {
        let s = ObservationSample::new(values, "x").unwrap();
        let boundary = if auto { Boundary::Auto } else { Boundary::None };
        let cfg = KdeConfig::default().with_bandwidth(BandwidthMethod::Silverman).with_boundary(boundary);
        let Ok(est) = fit_kde(&s, &cfg) else { return Ok(()) };
        let (lo, hi) = est.display_range;
        prop_assert_eq!(pit_kde(&est, lo - 1.0), 0.0);
        prop_assert_eq!(pit_kde(&est, hi + 1.0), 1.0);
        let mut xs: Vec<f64> = probes.iter().map(|p| lo + p * (hi - lo)).collect();
        xs.sort_by(f64::total_cmp);
        let cdf: Vec<f64> = xs.iter().map(|&x| pit_kde(&est, x)).collect();
        prop_assert!(cdf.windows(2).all(|w| w[0] <= w[1]));
        prop_assert!(est.density.iter().all(|&d| d >= 0.0));
    }

    #[test]
    fn histogram_pit_monotone_and_exact_on_edges(values in sample_strategy(), probes in prop::collection::vec(0.0..1.0f64, 30)) {
        let s = ObservationSample::new(values, "x").unwrap();
        let h = fit_histogram(&s, BinRule::FreedmanDiaconis).unwrap();
        prop_assert_eq!(pit_histogram(&h, h.lower() - 1.0), 0.0);
        prop_assert_eq!(pit_histogram(&h, h.upper() + 1.0), 1.0);
        let mut xs: Vec<f64> = probes.iter().map(|p| h.lower() + p * (h.upper() - h.lower())).collect();
        xs.sort_by(f64::total_cmp);
        let cdf: Vec<f64> = xs.iter().map(|&x| pit_histogram(&h, x)).collect();
        prop_assert!(cdf.windows(2).all(|w| w[0] <= w[1]));
        let n = s.len() as f64;
        let stride = (h.edges.len() / 100).max(1);
        let mut below = 0;
        for (j, &edge) in h.edges.iter().enumerate() {
            if j % stride == 0 || j + 1 == h.edges.len() {
                prop_assert!((pit_histogram(&h, edge) - below as f64 / n).abs() <= 1e-14);
            }
            if j < h.counts.len() {
                below += h.counts[j];
            }
        }
    }

    #[test]
    fn pav_mean_preserving_and_monotone(rows in prop::collection::vec((0.0..1.0f64, any::<bool>()), 1..80)) {
        let pred: Vec<f64> = rows.iter().map(|r| (r.0 * 10.0).round() / 10.0).collect();
        let y: Vec<u8> = rows.iter().map(|r| r.1 as u8).collect();
        let fit = pav_isotonic(&pred, &y).unwrap();
        prop_assert!(fit.cep.windows(2).all(|w| w[0] <= w[1]));
        let pooled: u64 = fit.block_sums.iter().map(|b| b.0).sum();
        prop_assert_eq!(pooled, y.iter().map(|&v| v as u64).sum::<u64>());
        // tied predictions share a fitted value
        for k in 1..pred.len() {
            if fit.sorted_pred[k] == fit.sorted_pred[k - 1] {
                prop_assert_eq!(fit.cep[k], fit.cep[k - 1]);
            }
        }
    }

    #[test]
    fn verdict_ignores_style(values in prop::collection::vec(0.0..=1.0f64, 5..300)) {
        let pits = pit_from_cdf_values(values).unwrap();
        let a = gof_test(&pits, &GofConfig { style: PlotStyle::Ecdf, ..GofConfig::default() }).unwrap();
        let b = gof_test(&pits, &GofConfig { style: PlotStyle::EcdfDifference, ..GofConfig::default() }).unwrap();
        prop_assert_eq!(a.pass, b.pass);
        prop_assert_eq!(a.first_exit, b.first_exit);
    }

    #[test]
    fn overlay_histogram_conserves_counts(seed in 0u64..1000, shift in -3.0..3.0f64) {
        let obs = generate(DensityKind::SmoothNormal, 60, seed);
        let rows = (0..8).map(|s| DensityKind::SmoothNormal.sample(60, seed + 1 + s).into_iter().map(|v| v + shift).collect()).collect();
        let draws = PredictiveDraws::from_rows(rows).unwrap();
        let o = overlay_histogram(&obs, &draws, &OverlaySpec::default()).unwrap();
        for counts in &o.draw_counts {
            prop_assert_eq!(counts.len(), o.bins.len() + 2);
            prop_assert_eq!(counts.iter().sum::<usize>(), 60);
        }
    }
}

/// Draw from the truncated, reflected kernel mixture by rejection.
fn sample_kde(est: &KdeEstimate, n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let (lo, hi) = est.display_range;
    let h = est.bandwidth();
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let mut c = est.data[rng.random_range(0..est.data.len())];
        let copies = 1 + est.reflect_lo.is_some() as usize + est.reflect_hi.is_some() as usize;
        match rng.random_range(0..copies) {
            0 => {}
            1 if est.reflect_lo.is_some() => c = 2.0 * est.reflect_lo.unwrap() - c,
            _ => c = 2.0 * est.reflect_hi.unwrap() - c,
        }
        let z: f64 = StandardNormal.sample(rng);
        let x = c + h * z;
        if x > lo && x < hi {
            out.push(x);
        }
    }
    out
}

fn sample_histogram(est: &HistogramEstimate, n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let total: usize = est.counts.iter().sum();
    (0..n)
        .map(|_| {
            let mut k = rng.random_range(0..total);
            let mut j = 0;
            while k >= est.counts[j] {
                k -= est.counts[j];
                j += 1;
            }
            est.edges[j] + rng.random::<f64>() * (est.edges[j + 1] - est.edges[j])
        })
        .collect()
}

#[test]
fn kde_self_consistency() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for (kind, boundary) in [
        (DensityKind::Stepped, Boundary::None),
        (DensityKind::BoundedExp, Boundary::Auto),
        (DensityKind::PointMass, Boundary::None),
    ] {
        let s = generate(kind, 1000, 3);
        let est = fit_kde(&s, &KdeConfig::default().with_boundary(boundary)).unwrap();
        let u: Vec<f64> = sample_kde(&est, 10_000, &mut rng).iter().map(|&x| pit_kde(&est, x)).collect();
        assert!(sup_distance(&u) < 0.02, "{kind}: {}", sup_distance(&u));
    }
}

#[test]
fn histogram_self_consistency() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    for kind in DensityKind::ALL {
        let s = generate(kind, 1000, 4);
        let est = fit_histogram(&s, BinRule::FreedmanDiaconis).unwrap();
        let u: Vec<f64> = sample_histogram(&est, 10_000, &mut rng)
            .iter()
            .map(|&x| pit_histogram(&est, x))
            .collect();
        assert!(sup_distance(&u) < 0.02, "{kind}: {}", sup_distance(&u));
    }
}

#[test]
fn band_coverage_at_three_configurations() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xc0fe);
    for (n, k, alpha) in [(50, 50, 0.05), (250, 100, 0.05), (1000, 100, 0.1)] {
        let cfg = GofConfig { k: Some(k), ..GofConfig::default().with_alpha(alpha) };
        let reps = 10_000;
        let rejected = (0..reps)
            .filter(|_| {
                let u: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
                !gof_test(&pit_from_cdf_values(u).unwrap(), &cfg).unwrap().pass
            })
            .count();
        let rate = rejected as f64 / reps as f64;
        assert!((rate - alpha).abs() <= 0.01, "N={n} K={k} alpha={alpha}: rate {rate}");
    }
}

#[test]
fn unbounded_kde_on_bounded_data_fails() {
    let s = generate(DensityKind::BoundedExp, 1000, 5);
    let est = fit_kde(&s, &KdeConfig::default()).unwrap();
    let pits = pit_from_cdf_values(s.values().iter().map(|&x| pit_kde(&est, x)).collect()).unwrap();
    let v = gof_test(&pits, &GofConfig::default()).unwrap();
    assert!(!v.pass);
    let exit = v.first_exit.unwrap();
    assert!(exit.z < 0.1, "{exit:?}");
}
