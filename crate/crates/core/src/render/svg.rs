//! Standalone SVG output. Coordinates are written with six decimals and
//! nothing time- or environment-dependent goes into the document, so equal
//! specs give equal bytes.

use std::fmt::Write as _;

use crate::plot::{Figure, Layer, PlotSpec, Role, Scale};

const MARGIN_LEFT: f64 = 64.0;
const MARGIN_RIGHT: f64 = 16.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 48.0;
const NOTE_HEIGHT: f64 = 14.0;

fn color(role: Role) -> &'static str {
    match role {
        Role::Observed => "#1b3a5c",
        Role::Predictive => "#7fa7cf",
        Role::Reference => "#b5b5b5",
        Role::Flagged => "#c62828",
    }
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Six-decimal fixed format without negative zero.
fn num(v: f64) -> String {
    let s = format!("{v:.6}");
    if s == "-0.000000" {
        "0.000000".into()
    } else {
        s
    }
}

/// Rounded step from {1, 2, 5} x 10^k giving roughly `target` ticks.
fn nice_step(span: f64, target: f64) -> f64 {
    let raw = span / target;
    let mag = 10f64.powf(raw.log10().floor());
    let f = raw / mag;
    let m = if f < 1.5 {
        1.0
    } else if f < 3.5 {
        2.0
    } else if f < 7.5 {
        5.0
    } else {
        10.0
    };
    m * mag
}

fn label(v: f64) -> String {
    let r = (v * 1e6).round() / 1e6;
    if r == 0.0 {
        "0".into()
    } else if r.fract() == 0.0 && r.abs() < 1e15 {
        format!("{}", r as i64)
    } else {
        let s = format!("{r:.6}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

/// Ticks as (axis position, label) over the axis range `[lo, hi]`, which is
/// already in scaled coordinates.
#[allow(clippy::neg_cmp_op_on_partial_ord)]
pub fn axis_ticks(scale: Scale, lo: f64, hi: f64) -> Vec<(f64, String)> {
    let span = hi - lo;
    if !(span > 0.0) {
        return vec![(lo, label(scale.inverse(lo)))];
    }
    let step = match scale {
        Scale::Linear => nice_step(span, 5.0),
        // whole-number steps in root space so labels are perfect squares
        Scale::SqrtLabels => nice_step(span, 5.0).max(1.0).round(),
    };
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last)
        .map(|i| {
            let p = i as f64 * step;
            (p, label(scale.inverse(p)))
        })
        .collect()
}

struct Frame {
    x0: f64,
    y0: f64,
    w: f64,
    h: f64,
    xr: (f64, f64),
    yr: (f64, f64),
    x_scale: Scale,
    y_scale: Scale,
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        self.x0 + (self.x_scale.position(x) - self.xr.0) / (self.xr.1 - self.xr.0) * self.w
    }

    fn py(&self, y: f64) -> f64 {
        self.y0 + self.h - (self.y_scale.position(y) - self.yr.0) / (self.yr.1 - self.yr.0) * self.h
    }

    fn sx(&self) -> f64 {
        self.w / (self.xr.1 - self.xr.0)
    }

    fn sy(&self) -> f64 {
        self.h / (self.yr.1 - self.yr.0)
    }
}

fn plot_area(spec: &PlotSpec, ox: f64, oy: f64) -> Frame {
    let notes = spec.annotations.len() as f64 * NOTE_HEIGHT;
    let w = spec.width - MARGIN_LEFT - MARGIN_RIGHT;
    let h = spec.height - MARGIN_TOP - MARGIN_BOTTOM - notes;
    let ((x0, x1), (mut y0, mut y1)) = spec.extent();
    let has_dots = spec.layers.iter().any(|l| matches!(l, Layer::Dots { .. }));
    if has_dots && spec.y_range.is_none() {
        // keep dots round when the stacks fit
        y0 = 0.0;
        y1 = y1.max((x1 - x0) * h / w);
    } else if spec.y_range.is_none() {
        let pad = 0.04 * (y1 - y0);
        if y0 < 0.0 || y0 - pad >= 0.0 {
            y0 -= pad;
        }
        y1 += pad;
    }
    Frame {
        x0: ox + MARGIN_LEFT,
        y0: oy + MARGIN_TOP + notes,
        w,
        h,
        xr: (x0, x1),
        yr: (y0, y1),
        x_scale: spec.x_scale,
        y_scale: spec.y_scale,
    }
}

fn polyline(out: &mut String, f: &Frame, pts: &[(f64, f64)], stroke: &str, width: f64, opacity: f64) {
    if pts.is_empty() {
        return;
    }
    let mut d = String::new();
    for (i, &(x, y)) in pts.iter().enumerate() {
        let _ = write!(d, "{}{},{}", if i == 0 { "M" } else { " L" }, num(f.px(x)), num(f.py(y)));
    }
    let _ = writeln!(
        out,
        r#"<path d="{d}" fill="none" stroke="{stroke}" stroke-width="{}" stroke-opacity="{}"/>"#,
        num(width),
        num(opacity)
    );
}

fn layer(out: &mut String, f: &Frame, l: &Layer) {
    let c = color(l.role());
    let (width, opacity) = match l.role() {
        Role::Observed => (2.0, 1.0),
        Role::Predictive => (1.0, 0.5),
        Role::Reference => (1.0, 1.0),
        Role::Flagged => (1.5, 1.0),
    };
    match l {
        Layer::Line { points, .. } => polyline(out, f, points, c, width, opacity),
        Layer::Step { points, .. } => {
            let mut pts = Vec::with_capacity(points.len() * 2);
            for (i, &p) in points.iter().enumerate() {
                if i > 0 {
                    pts.push((p.0, points[i - 1].1));
                }
                pts.push(p);
            }
            polyline(out, f, &pts, c, width, opacity);
        }
        Layer::Bars { rects, .. } => {
            let fill_opacity = if l.role() == Role::Observed { 0.6 } else { 0.35 };
            for r in rects {
                let (xa, xb) = (f.px(r.x0), f.px(r.x1));
                let (ya, yb) = (f.py(r.y1), f.py(r.y0));
                let _ = writeln!(
                    out,
                    r#"<rect x="{}" y="{}" width="{}" height="{}" fill="{c}" fill-opacity="{}" stroke="{c}" stroke-width="0.5"/>"#,
                    num(xa.min(xb)),
                    num(ya.min(yb)),
                    num((xb - xa).abs()),
                    num((yb - ya).abs()),
                    num(fill_opacity)
                );
            }
        }
        Layer::Points { points, .. } => {
            for &(x, y) in points {
                let _ = writeln!(
                    out,
                    r#"<circle cx="{}" cy="{}" r="3.000000" fill="{c}"/>"#,
                    num(f.px(x)),
                    num(f.py(y))
                );
            }
        }
        Layer::Intervals { intervals, .. } => {
            for i in intervals {
                let _ = writeln!(
                    out,
                    r#"<line x1="{x}" y1="{}" x2="{x}" y2="{}" stroke="{c}" stroke-width="1.500000"/>"#,
                    num(f.py(i.lo)),
                    num(f.py(i.hi)),
                    x = num(f.px(i.x))
                );
            }
        }
        Layer::Ribbon { x, lo, hi, .. } => {
            if x.is_empty() {
                return;
            }
            let mut d = String::new();
            for (i, (&xv, &h)) in x.iter().zip(hi).enumerate() {
                let _ = write!(d, "{}{},{}", if i == 0 { "M" } else { " L" }, num(f.px(xv)), num(f.py(h)));
            }
            for (&xv, &l) in x.iter().zip(lo).rev() {
                let _ = write!(d, " L{},{}", num(f.px(xv)), num(f.py(l)));
            }
            let _ = writeln!(out, r#"<path d="{d} Z" fill="{c}" fill-opacity="0.350000" stroke="none"/>"#);
        }
        Layer::Dots { dots, .. } => {
            let fill = if l.role() == Role::Observed { "fill-opacity=\"0.800000\"" } else { "fill-opacity=\"0.400000\"" };
            for d in dots {
                let _ = writeln!(
                    out,
                    r#"<ellipse cx="{}" cy="{}" rx="{}" ry="{}" fill="{c}" {fill}/>"#,
                    num(f.px(d.x)),
                    num(f.py(d.y)),
                    num(d.r * f.sx()),
                    num(d.r * f.sy())
                );
            }
        }
    }
}

fn panel(out: &mut String, spec: &PlotSpec, ox: f64, oy: f64) {
    let f = plot_area(spec, ox, oy);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" font-size="14" font-weight="bold">{}</text>"#,
        num(ox + MARGIN_LEFT),
        num(oy + 20.0),
        esc(&spec.title)
    );
    for (i, note) in spec.annotations.iter().enumerate() {
        let _ = writeln!(
            out,
            r##"<text x="{}" y="{}" font-size="11" fill="#555555">{}</text>"##,
            num(ox + MARGIN_LEFT),
            num(oy + MARGIN_TOP + (i as f64 + 0.5) * NOTE_HEIGHT),
            esc(note)
        );
    }
    let _ = writeln!(
        out,
        r##"<rect x="{}" y="{}" width="{}" height="{}" fill="none" stroke="#333333" stroke-width="1"/>"##,
        num(f.x0),
        num(f.y0),
        num(f.w),
        num(f.h)
    );
    let clip = format!("clip{}_{}", ox as i64, oy as i64);
    let _ = writeln!(
        out,
        r#"<clipPath id="{clip}"><rect x="{}" y="{}" width="{}" height="{}"/></clipPath>"#,
        num(f.x0),
        num(f.y0),
        num(f.w),
        num(f.h)
    );
    for (p, text) in axis_ticks(f.x_scale, f.xr.0, f.xr.1) {
        let x = f.x0 + (p - f.xr.0) / (f.xr.1 - f.xr.0) * f.w;
        let y = f.y0 + f.h;
        let _ = writeln!(
            out,
            r##"<line x1="{x}" y1="{}" x2="{x}" y2="{}" stroke="#333333"/><text class="xtick" x="{x}" y="{}" font-size="11" text-anchor="middle">{}</text>"##,
            num(y),
            num(y + 4.0),
            num(y + 16.0),
            esc(&text),
            x = num(x)
        );
    }
    for (p, text) in axis_ticks(f.y_scale, f.yr.0, f.yr.1) {
        let y = f.y0 + f.h - (p - f.yr.0) / (f.yr.1 - f.yr.0) * f.h;
        let _ = writeln!(
            out,
            r##"<line x1="{}" y1="{y}" x2="{}" y2="{y}" stroke="#333333"/><text class="ytick" x="{}" y="{}" font-size="11" text-anchor="end">{}</text>"##,
            num(f.x0 - 4.0),
            num(f.x0),
            num(f.x0 - 6.0),
            num(y + 4.0),
            esc(&text),
            y = num(y)
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" font-size="12" text-anchor="middle">{}</text>"#,
        num(f.x0 + f.w / 2.0),
        num(f.y0 + f.h + 36.0),
        esc(&spec.x_label)
    );
    let _ = writeln!(
        out,
        r#"<text x="{x}" y="{y}" font-size="12" text-anchor="middle" transform="rotate(-90 {x} {y})">{}</text>"#,
        esc(&spec.y_label),
        x = num(ox + 16.0),
        y = num(f.y0 + f.h / 2.0)
    );
    let _ = writeln!(out, r#"<g clip-path="url(#{clip})">"#);
    for l in &spec.layers {
        layer(out, &f, l);
    }
    out.push_str("</g>\n");
}

fn document(width: f64, height: f64, body: &str) -> String {
    format!(
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\" font-family=\"sans-serif\">\n<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n{body}</svg>\n",
        w = num(width),
        h = num(height)
    )
}

pub fn render_svg(spec: &PlotSpec) -> String {
    let mut body = String::new();
    panel(&mut body, spec, 0.0, 0.0);
    document(spec.width, spec.height, &body)
}

pub fn render_figure(fig: &Figure) -> String {
    let cols = fig.columns.min(fig.panels.len()).max(1);
    let cell_w = fig.panels.iter().map(|p| p.width).fold(0.0, f64::max);
    let cell_h = fig.panels.iter().map(|p| p.height).fold(0.0, f64::max);
    let rows = fig.panels.len().div_ceil(cols).max(1);
    let mut body = String::new();
    for (i, p) in fig.panels.iter().enumerate() {
        panel(&mut body, p, (i % cols) as f64 * cell_w, (i / cols) as f64 * cell_h);
    }
    document(cols as f64 * cell_w.max(1.0), rows as f64 * cell_h.max(1.0), &body)
}
