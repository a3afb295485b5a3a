//! Screening diagnostics run before choosing a visualization: repeated
//! values (point masses, discreteness) and hard bounds on the support.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::data::ObservationSample;
use crate::stats::sorted_copy;

/// Values repeated more often than this relative frequency are point masses.
pub const DEFAULT_POINT_MASS_THRESHOLD: f64 = 0.02;
/// Spacing ratio below which an edge is treated as a hard bound.
pub const DEFAULT_BOUND_RATIO: f64 = 2.0;
pub const MIN_BOUND_DETECTION_N: usize = 10;
/// Nonnegative integer data with at most this many distinct values is
/// treated as counts suited to a rootogram.
pub const LOW_CARDINALITY: usize = 50;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DataDiagnosis {
    pub n: usize,
    pub n_unique: usize,
    pub max_rel_freq: f64,
    pub discrete_flag: bool,
    pub point_mass_values: Vec<f64>,
    pub left_bound: Option<f64>,
    pub right_bound: Option<f64>,
    pub binary: bool,
    pub nonneg_integer: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct Bounds {
    pub left: Option<f64>,
    pub right: Option<f64>,
}

/// Count distinct values and list those whose relative frequency exceeds
/// `threshold` as point masses, provided any value repeats at all.
pub fn detect_discrete_with(sample: &ObservationSample, threshold: f64) -> DataDiagnosis {
    let x = sample.values();
    let n = x.len();
    let mut freq: BTreeMap<u64, usize> = BTreeMap::new();
    for &v in x {
        // -0.0 and 0.0 are the same value
        let key = if v == 0.0 { 0.0f64 } else { v };
        *freq.entry(ordered_key(key)).or_default() += 1;
    }
    let max_count = freq.values().copied().max().unwrap_or(0);
    let has_duplicates = freq.len() < n;
    let mut point_mass_values: Vec<f64> = if has_duplicates {
        freq.iter()
            .filter(|(_, &c)| c as f64 / n as f64 > threshold)
            .map(|(&k, _)| from_ordered_key(k))
            .collect()
    } else {
        Vec::new()
    };
    point_mass_values.sort_by(f64::total_cmp);
    let binary = x.iter().all(|&v| v == 0.0 || v == 1.0);
    let nonneg_integer = x.iter().all(|&v| v >= 0.0 && v.fract() == 0.0);
    DataDiagnosis {
        n,
        n_unique: freq.len(),
        max_rel_freq: max_count as f64 / n as f64,
        discrete_flag: !point_mass_values.is_empty(),
        point_mass_values,
        left_bound: None,
        right_bound: None,
        binary,
        nonneg_integer,
    }
}

pub fn detect_discrete(sample: &ObservationSample) -> DataDiagnosis {
    detect_discrete_with(sample, DEFAULT_POINT_MASS_THRESHOLD)
}

/// Order-preserving map from f64 to u64 so values can key a BTreeMap.
fn ordered_key(v: f64) -> u64 {
    let b = v.to_bits();
    if b >> 63 == 1 {
        !b
    } else {
        b | (1 << 63)
    }
}

fn from_ordered_key(k: u64) -> f64 {
    if k >> 63 == 1 {
        f64::from_bits(k & !(1 << 63))
    } else {
        f64::from_bits(!k)
    }
}

/// Spacing-ratio bound detector.
///
/// With `k = min(floor((N-1)/2), ceil(sqrt N))` the left statistic is
/// `(x(k+1) - x(1)) / (x(2k+1) - x(k+1))`: near a hard edge where the
/// density stays positive, consecutive blocks of `k` spacings have about the
/// same length, while in a thinning tail the outer block is several times
/// longer. An edge is declared bounded when its ratio is below `tau`, and the
/// bound is placed at the extreme order statistic. The right edge is
/// handled by symmetry. Samples with fewer than ten points report no bounds.
pub fn detect_bounds_with(sample: &ObservationSample, tau: f64) -> Bounds {
    let n = sample.len();
    if n < MIN_BOUND_DETECTION_N {
        return Bounds::default();
    }
    let x = sorted_copy(sample.values());
    let k = ((n - 1) / 2).min((n as f64).sqrt().ceil() as usize);
    let bounded = |outer: f64, inner: f64| {
        if inner > 0.0 {
            outer / inner < tau
        } else {
            // a pile of ties at the edge
            outer == 0.0
        }
    };
    let left = bounded(x[k] - x[0], x[2 * k] - x[k]).then_some(x[0]);
    let right = bounded(x[n - 1] - x[n - 1 - k], x[n - 1 - k] - x[n - 1 - 2 * k])
        .then_some(x[n - 1]);
    Bounds { left, right }
}

pub fn detect_bounds(sample: &ObservationSample) -> Bounds {
    detect_bounds_with(sample, DEFAULT_BOUND_RATIO)
}

/// Discreteness and bound diagnostics together.
pub fn diagnose(sample: &ObservationSample) -> DataDiagnosis {
    let mut d = detect_discrete(sample);
    let b = detect_bounds(sample);
    d.left_bound = b.left;
    d.right_bound = b.right;
    d
}

/// Visualization requested by the user, for recommendation purposes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RequestedCheck {
    Kde,
    Histogram,
    Qdot,
    Bar,
}

/// Suggest a better-suited check for the data, if there is one.
pub fn recommend(diag: &DataDiagnosis, requested: RequestedCheck) -> Option<String> {
    if diag.binary && diag.n_unique <= 2 {
        return match requested {
            RequestedCheck::Kde | RequestedCheck::Bar | RequestedCheck::Histogram => Some(
                "data are binary: density and bar checks carry almost no information here; \
                 use a PAV-adjusted calibration plot with consistency bands \
                 (`calibration --mode binary`), or ovo/ordinal modes for categorical outcomes"
                    .to_string(),
            ),
            RequestedCheck::Qdot => Some(
                "data are binary: use a PAV-adjusted calibration plot (`calibration --mode binary`)"
                    .to_string(),
            ),
        };
    }
    if diag.nonneg_integer && diag.n_unique <= LOW_CARDINALITY && requested != RequestedCheck::Bar {
        return Some(
            "data are low-cardinality counts: use a rootogram (`rootogram --style discrete`)"
                .to_string(),
        );
    }
    if diag.discrete_flag && matches!(requested, RequestedCheck::Kde | RequestedCheck::Histogram) {
        let values: Vec<String> = diag.point_mass_values.iter().map(|v| v.to_string()).collect();
        return Some(format!(
            "point masses at {}: use a quantile dot plot (`--viz qdot`)",
            values.join(", ")
        ));
    }
    if requested == RequestedCheck::Kde && (diag.left_bound.is_some() || diag.right_bound.is_some())
    {
        return Some(
            "data appear bounded: reflect the KDE at the bounds (`--bounds auto`) or use a \
             quantile dot plot"
                .to_string(),
        );
    }
    None
}
