//! Backend-independent plot description. Layers are drawn in order, so
//! later layers sit on top.

use serde::Serialize;

use crate::estimators::{DensityEstimate, HistogramEstimate, KdeEstimate, QuantileDotPlot};
use crate::uniformity::{GofVerdict, PlotStyle};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    #[default]
    Linear,
    /// Positions are square roots, tick labels show the untransformed value.
    SqrtLabels,
}

impl Scale {
    /// Axis position of a data value.
    pub fn position(self, v: f64) -> f64 {
        match self {
            Scale::Linear => v,
            Scale::SqrtLabels => v.max(0.0).sqrt(),
        }
    }

    pub fn inverse(self, p: f64) -> f64 {
        match self {
            Scale::Linear => p,
            Scale::SqrtLabels => p * p,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    /// The observed data; drawn prominently.
    Observed,
    /// Predictive replicates or summaries.
    Predictive,
    /// Reference geometry such as bands or the diagonal.
    Reference,
    /// Points that fall outside their interval.
    Flagged,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Interval {
    pub x: f64,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Dot {
    pub x: f64,
    pub y: f64,
    pub r: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Layer {
    Line { points: Vec<(f64, f64)>, role: Role },
    Step { points: Vec<(f64, f64)>, role: Role },
    Bars { rects: Vec<Rect>, role: Role },
    Points { points: Vec<(f64, f64)>, role: Role },
    Intervals { intervals: Vec<Interval>, role: Role },
    Ribbon { x: Vec<f64>, lo: Vec<f64>, hi: Vec<f64>, role: Role },
    /// Dot radius is in x units; the y axis is scaled to keep dots round.
    Dots { dots: Vec<Dot>, role: Role },
}

impl Layer {
    pub fn role(&self) -> Role {
        match self {
            Layer::Line { role, .. }
            | Layer::Step { role, .. }
            | Layer::Bars { role, .. }
            | Layer::Points { role, .. }
            | Layer::Intervals { role, .. }
            | Layer::Ribbon { role, .. }
            | Layer::Dots { role, .. } => *role,
        }
    }

    /// Every (x, y) coordinate the layer touches.
    pub fn coords(&self) -> Vec<(f64, f64)> {
        match self {
            Layer::Line { points, .. } | Layer::Step { points, .. } | Layer::Points { points, .. } => {
                points.clone()
            }
            Layer::Bars { rects, .. } => rects
                .iter()
                .flat_map(|r| [(r.x0, r.y0), (r.x1, r.y1)])
                .collect(),
            Layer::Intervals { intervals, .. } => intervals
                .iter()
                .flat_map(|i| [(i.x, i.lo), (i.x, i.hi)])
                .collect(),
            Layer::Ribbon { x, lo, hi, .. } => x
                .iter()
                .zip(lo)
                .zip(hi)
                .flat_map(|((&x, &l), &h)| [(x, l), (x, h)])
                .collect(),
            Layer::Dots { dots, .. } => dots
                .iter()
                .flat_map(|d| [(d.x - d.r, d.y - d.r), (d.x + d.r, d.y + d.r)])
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlotSpec {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub x_scale: Scale,
    pub y_scale: Scale,
    pub layers: Vec<Layer>,
    /// Free-text notes rendered under the title (warnings, verdicts).
    pub annotations: Vec<String>,
    pub width: f64,
    pub height: f64,
    /// Fixed axis limits; computed from the layers when absent.
    pub x_range: Option<(f64, f64)>,
    pub y_range: Option<(f64, f64)>,
}

impl PlotSpec {
    pub fn new(title: impl Into<String>) -> Self {
        Self {
            title: title.into(),
            x_label: String::new(),
            y_label: String::new(),
            x_scale: Scale::Linear,
            y_scale: Scale::Linear,
            layers: Vec::new(),
            annotations: Vec::new(),
            width: 640.0,
            height: 400.0,
            x_range: None,
            y_range: None,
        }
    }

    pub fn labels(mut self, x: impl Into<String>, y: impl Into<String>) -> Self {
        self.x_label = x.into();
        self.y_label = y.into();
        self
    }

    pub fn layer(mut self, layer: Layer) -> Self {
        self.layers.push(layer);
        self
    }

    pub fn annotate(mut self, note: impl Into<String>) -> Self {
        self.annotations.push(note.into());
        self
    }

    pub fn all_finite(&self) -> bool {
        self.layers
            .iter()
            .flat_map(|l| l.coords())
            .all(|(x, y)| x.is_finite() && y.is_finite())
    }

    /// Data extent over all layers, in axis (scaled) coordinates.
    pub fn extent(&self) -> ((f64, f64), (f64, f64)) {
        let mut xr = (f64::INFINITY, f64::NEG_INFINITY);
        let mut yr = (f64::INFINITY, f64::NEG_INFINITY);
        for (x, y) in self.layers.iter().flat_map(|l| l.coords()) {
            let (px, py) = (self.x_scale.position(x), self.y_scale.position(y));
            xr = (xr.0.min(px), xr.1.max(px));
            yr = (yr.0.min(py), yr.1.max(py));
        }
        let fix = |r: (f64, f64), fallback: (f64, f64)| {
            if !r.0.is_finite() {
                fallback
            } else if r.0 == r.1 {
                (r.0 - 0.5, r.1 + 0.5)
            } else {
                r
            }
        };
        let x = self
            .x_range
            .map(|(a, b)| (self.x_scale.position(a), self.x_scale.position(b)))
            .unwrap_or_else(|| fix(xr, (0.0, 1.0)));
        let y = self
            .y_range
            .map(|(a, b)| (self.y_scale.position(a), self.y_scale.position(b)))
            .unwrap_or_else(|| fix(yr, (0.0, 1.0)));
        (x, y)
    }
}

/// Several panels laid out in a grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Figure {
    pub panels: Vec<PlotSpec>,
    pub columns: usize,
}

impl Figure {
    pub fn new(panels: Vec<PlotSpec>, columns: usize) -> Self {
        Self {
            panels,
            columns: columns.max(1),
        }
    }
}

pub fn kde_layer(est: &KdeEstimate, role: Role) -> Layer {
    Layer::Line {
        points: est.grid.iter().copied().zip(est.density.iter().copied()).collect(),
        role,
    }
}

pub fn histogram_layer(est: &HistogramEstimate, role: Role) -> Layer {
    Layer::Bars {
        rects: est
            .densities
            .iter()
            .enumerate()
            .map(|(j, &f)| Rect {
                x0: est.edges[j],
                x1: est.edges[j + 1],
                y0: 0.0,
                y1: f,
            })
            .collect(),
        role,
    }
}

/// Dots stacked upward from zero; the y coordinate counts in diameters.
pub fn qdot_layer(est: &QuantileDotPlot, role: Role) -> Layer {
    let r = est.radius;
    let mut dots = Vec::with_capacity(est.n_q);
    for (&c, &h) in est.stack_centers.iter().zip(&est.stack_heights) {
        for level in 0..h {
            dots.push(Dot {
                x: c,
                y: r + 2.0 * r * level as f64,
                r,
            });
        }
    }
    Layer::Dots { dots, role }
}

pub fn density_plot(est: &DensityEstimate, title: &str) -> PlotSpec {
    match est {
        DensityEstimate::Kde(k) => PlotSpec::new(title)
            .labels("value", "density")
            .layer(kde_layer(k, Role::Observed))
            .annotate(format!("KDE, bandwidth {:.4}", k.bandwidth())),
        DensityEstimate::Histogram(h) => PlotSpec::new(title)
            .labels("value", "density")
            .layer(histogram_layer(h, Role::Observed))
            .annotate(format!("histogram, bin width {:.4}", h.bin_width)),
        DensityEstimate::QuantileDots(q) => PlotSpec::new(title)
            .labels("value", "")
            .layer(qdot_layer(q, Role::Observed))
            .annotate(format!("quantile dot plot, {} quantiles", q.n_q)),
    }
}

/// PIT-ECDF (or ECDF-difference) plot with simultaneous bands.
pub fn pit_ecdf_plot(verdict: &GofVerdict, title: &str) -> PlotSpec {
    let (ecdf, lo, hi) = verdict.plotted();
    let z = &verdict.ecdf.z;
    let k = z.len();
    let reference = match verdict.style {
        PlotStyle::Ecdf => vec![(0.0, 0.0), (1.0, 1.0)],
        PlotStyle::EcdfDifference => vec![(0.0, 0.0), (1.0, 0.0)],
    };
    let mut step = vec![(0.0, 0.0)];
    step.extend(z.iter().copied().zip(ecdf.iter().copied()));
    let flagged: Vec<(f64, f64)> = (0..k)
        .filter(|&j| {
            verdict.ecdf.ecdf[j] < verdict.bands.lower[j] || verdict.ecdf.ecdf[j] > verdict.bands.upper[j]
        })
        .map(|j| (z[j], ecdf[j]))
        .collect();
    let y_label = match verdict.style {
        PlotStyle::Ecdf => "ECDF",
        PlotStyle::EcdfDifference => "ECDF difference",
    };
    let mut spec = PlotSpec::new(title)
        .labels("PIT", y_label)
        .layer(Layer::Ribbon {
            x: z.clone(),
            lo,
            hi,
            role: Role::Reference,
        })
        .layer(Layer::Line {
            points: reference,
            role: Role::Reference,
        })
        .layer(Layer::Line {
            points: step,
            role: Role::Observed,
        });
    if !flagged.is_empty() {
        spec = spec.layer(Layer::Points {
            points: flagged,
            role: Role::Flagged,
        });
    }
    spec.x_range = Some((0.0, 1.0));
    spec.annotate(format!(
        "{} at alpha = {}",
        if verdict.pass { "pass" } else { "FAIL" },
        verdict.bands.alpha
    ))
}
