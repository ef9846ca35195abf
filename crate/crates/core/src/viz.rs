//! 2-D decision-region slices rendered as SVG.
//!
//! A slice fixes every input except two free dimensions, rasterizes the
//! predictor's class on a regular grid (cell centers) and, for rule sets,
//! strokes the parts of each rule's region boundary that lie on its constraint
//! lines. Boundaries are computed by clipping the view rectangle with each
//! constraint's half-plane.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use alloc::{format, vec};
use core::fmt::Write;

use crate::rules::{Op, RuleSet};
use crate::{Classifier, Error, Result};

const PALETTE: [&str; 8] = [
    "#4e79a7", "#f28e2b", "#59a14f", "#e15759", "#76b7b2", "#edc948", "#b07aa1", "#9c755f",
];
const STROKES: [&str; 6] = ["#1b1b1b", "#7a0019", "#00441b", "#08306b", "#3f007d", "#7f2704"];
const DASHES: [&str; 3] = ["", "6,3", "2,2"];

const PLOT: f64 = 400.0;
const LEFT: f64 = 70.0;
const TOP: f64 = 40.0;
const LEGEND_W: f64 = 140.0;
const BOTTOM: f64 = 60.0;

#[derive(Debug, Clone, PartialEq)]
pub struct SliceSpec {
    pub free_dims: (usize, usize),
    /// Full input vector; entries at the free dimensions are ignored.
    pub fixed_values: Vec<f64>,
    pub ranges: [(f64, f64); 2],
    pub resolution: usize,
    /// Class index → fill color. Falls back to a built-in palette.
    pub palette: Vec<String>,
    pub axis_names: Option<(String, String)>,
    pub title: Option<String>,
}

impl SliceSpec {
    pub fn new(dim: usize, free_dims: (usize, usize), ranges: [(f64, f64); 2]) -> Self {
        SliceSpec {
            free_dims,
            fixed_values: vec![0.0; dim],
            ranges,
            resolution: 400,
            palette: Vec::new(),
            axis_names: None,
            title: None,
        }
    }

    pub fn validate(&self, input_dim: usize) -> Result<()> {
        let (u, v) = self.free_dims;
        if u == v || u >= input_dim || v >= input_dim {
            return Err(Error::InvalidArgument(format!(
                "free dimensions ({u}, {v}) must be distinct and below {input_dim}"
            )));
        }
        if self.fixed_values.len() != input_dim {
            return Err(Error::shape("fixed values", input_dim, self.fixed_values.len()));
        }
        if self.fixed_values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("fixed values"));
        }
        for &(lo, hi) in &self.ranges {
            if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
                return Err(Error::InvalidArgument(format!("invalid slice range ({lo}, {hi})")));
            }
        }
        if self.resolution == 0 {
            return Err(Error::InvalidArgument("resolution must be positive".into()));
        }
        Ok(())
    }

    fn color(&self, class: usize) -> String {
        self.palette
            .get(class)
            .cloned()
            .unwrap_or_else(|| PALETTE[class % PALETTE.len()].to_string())
    }

    /// Input vector at slice coordinates `(a, b)`.
    pub fn point(&self, a: f64, b: f64) -> Vec<f64> {
        let mut x = self.fixed_values.clone();
        x[self.free_dims.0] = a;
        x[self.free_dims.1] = b;
        x
    }

    /// Center of grid cell `(col, row)`; row 0 is the top (largest second coordinate).
    pub fn cell_center(&self, col: usize, row: usize) -> (f64, f64) {
        let n = self.resolution as f64;
        let (lo_a, hi_a) = self.ranges[0];
        let (lo_b, hi_b) = self.ranges[1];
        let a = lo_a + (col as f64 + 0.5) / n * (hi_a - lo_a);
        let b = hi_b - (row as f64 + 0.5) / n * (hi_b - lo_b);
        (a, b)
    }

    fn to_px(&self, a: f64, b: f64) -> (f64, f64) {
        let (lo_a, hi_a) = self.ranges[0];
        let (lo_b, hi_b) = self.ranges[1];
        (
            LEFT + (a - lo_a) / (hi_a - lo_a) * PLOT,
            TOP + (hi_b - b) / (hi_b - lo_b) * PLOT,
        )
    }
}

/// Row-major class labels of the grid, top row first.
pub fn class_map(predictor: &dyn Classifier, spec: &SliceSpec) -> Result<Vec<usize>> {
    spec.validate(predictor.input_dim())?;
    let n = spec.resolution;
    let mut out = Vec::with_capacity(n * n);
    for row in 0..n {
        for col in 0..n {
            let (a, b) = spec.cell_center(col, row);
            out.push(predictor.classify_label(&spec.point(a, b))?);
        }
    }
    Ok(out)
}

/// A boundary piece of one rule's region inside the view, in slice coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionSegment {
    pub rule_index: usize,
    pub constraint_index: usize,
    pub from: (f64, f64),
    pub to: (f64, f64),
}

/// Half-plane `ca·a + cb·b ≤ r` (after orienting `>` constraints).
#[derive(Clone, Copy)]
struct HalfPlane {
    ca: f64,
    cb: f64,
    r: f64,
}

impl HalfPlane {
    fn value(&self, p: (f64, f64)) -> f64 {
        self.ca * p.0 + self.cb * p.1 - self.r
    }
}

/// Clips a polygon (vertices with the tag of their outgoing edge) by a half-plane.
fn clip(poly: &[((f64, f64), Option<usize>)], h: HalfPlane, tag: usize, tol: f64) -> Vec<((f64, f64), Option<usize>)> {
    let mut out = Vec::with_capacity(poly.len() + 1);
    let n = poly.len();
    for i in 0..n {
        let (p, t) = poly[i];
        let (q, _) = poly[(i + 1) % n];
        let (vp, vq) = (h.value(p), h.value(q));
        let (pin, qin) = (vp <= tol, vq <= tol);
        let cross = || {
            let s = vp / (vp - vq);
            (p.0 + s * (q.0 - p.0), p.1 + s * (q.1 - p.1))
        };
        match (pin, qin) {
            (true, true) => out.push((p, t)),
            (true, false) => {
                out.push((p, t));
                out.push((cross(), Some(tag)));
            }
            (false, true) => out.push((cross(), t)),
            (false, false) => {}
        }
    }
    out
}

/// Boundary segments of every rule region that lie on a constraint line.
pub fn rule_region_segments(rs: &RuleSet, spec: &SliceSpec) -> Result<Vec<RegionSegment>> {
    spec.validate(rs.input_dim())?;
    let (u, v) = spec.free_dims;
    let [(lo_a, hi_a), (lo_b, hi_b)] = spec.ranges;
    let scale = (hi_a - lo_a).max(hi_b - lo_b);
    let min_len = 1e-9 * scale;
    let window = vec![
        ((lo_a, lo_b), None),
        ((hi_a, lo_b), None),
        ((hi_a, hi_b), None),
        ((lo_a, hi_b), None),
    ];
    let mut segments = Vec::new();
    for (ri, rule) in rs.rules().iter().enumerate() {
        let mut poly = window.clone();
        for (ci, c) in rule.constraints.iter().enumerate() {
            let fixed: f64 = c
                .coeffs
                .iter()
                .enumerate()
                .filter(|&(k, _)| k != u && k != v)
                .map(|(k, a)| a * spec.fixed_values[k])
                .sum();
            let (ca, cb, r) = (c.coeffs[u], c.coeffs[v], c.rhs - fixed);
            let h = match c.op {
                Op::Le => HalfPlane { ca, cb, r },
                Op::Gt => HalfPlane { ca: -ca, cb: -cb, r: -r },
            };
            if ca == 0.0 && cb == 0.0 {
                // Constant on this slice: either keeps everything or nothing.
                let holds = match c.op {
                    Op::Le => 0.0 <= r,
                    Op::Gt => 0.0 > r,
                };
                if !holds {
                    poly.clear();
                    break;
                }
                continue;
            }
            let tol = 1e-12 * (ca.abs() + cb.abs()) * scale.max(1.0);
            poly = clip(&poly, h, ci, tol);
            if poly.len() < 3 {
                poly.clear();
                break;
            }
        }
        let n = poly.len();
        for i in 0..n {
            let (p, tag) = poly[i];
            let (q, _) = poly[(i + 1) % n];
            if let Some(ci) = tag {
                let len = libm::hypot(q.0 - p.0, q.1 - p.1);
                if len > min_len {
                    segments.push(RegionSegment {
                        rule_index: ri,
                        constraint_index: ci,
                        from: p,
                        to: q,
                    });
                }
            }
        }
    }
    Ok(segments)
}

fn fmt(v: f64) -> String {
    let s = format!("{:.3}", v);
    if s == "-0.000" {
        "0.000".to_string()
    } else {
        s
    }
}

fn tick_label(v: f64) -> String {
    let s = format!("{:.2}", v);
    if s == "-0.00" {
        "0.00".to_string()
    } else {
        s
    }
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn render(classes: &[usize], class_count: usize, spec: &SliceSpec, strokes: &[RegionSegment]) -> String {
    let n = spec.resolution;
    let cell = PLOT / n as f64;
    let width = LEFT + PLOT + LEGEND_W;
    let height = TOP + PLOT + BOTTOM;
    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{}" height="{}" viewBox="0 0 {} {}">"#,
        fmt(width),
        fmt(height),
        fmt(width),
        fmt(height)
    );
    let _ = writeln!(s, r#"<rect x="0" y="0" width="{}" height="{}" fill="white"/>"#, fmt(width), fmt(height));
    if let Some(t) = &spec.title {
        let _ = writeln!(
            s,
            r#"<text x="{}" y="24" font-family="sans-serif" font-size="14" text-anchor="middle">{}</text>"#,
            fmt(LEFT + PLOT / 2.0),
            xml_escape(t)
        );
    }
    let _ = writeln!(s, r#"<g id="regions" shape-rendering="crispEdges">"#);
    for row in 0..n {
        let mut col = 0;
        while col < n {
            let c = classes[row * n + col];
            let start = col;
            while col < n && classes[row * n + col] == c {
                col += 1;
            }
            let _ = writeln!(
                s,
                r#"<rect x="{}" y="{}" width="{}" height="{}" fill="{}"/>"#,
                fmt(LEFT + start as f64 * cell),
                fmt(TOP + row as f64 * cell),
                fmt((col - start) as f64 * cell),
                fmt(cell),
                spec.color(c)
            );
        }
    }
    let _ = writeln!(s, "</g>");
    if !strokes.is_empty() {
        let _ = writeln!(s, r#"<g id="rule-boundaries" fill="none" stroke-width="1.5">"#);
        for seg in strokes {
            let (x1, y1) = spec.to_px(seg.from.0, seg.from.1);
            let (x2, y2) = spec.to_px(seg.to.0, seg.to.1);
            let dash = DASHES[(seg.rule_index / STROKES.len()) % DASHES.len()];
            let dash_attr = if dash.is_empty() {
                String::new()
            } else {
                format!(r#" stroke-dasharray="{dash}""#)
            };
            let _ = writeln!(
                s,
                r#"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="{}"{} data-rule="{}" data-constraint="{}"/>"#,
                fmt(x1),
                fmt(y1),
                fmt(x2),
                fmt(y2),
                STROKES[seg.rule_index % STROKES.len()],
                dash_attr,
                seg.rule_index,
                seg.constraint_index
            );
        }
        let _ = writeln!(s, "</g>");
    }
    // Axes and ticks.
    let _ = writeln!(s, r#"<g id="axes" font-family="sans-serif" font-size="11">"#);
    let _ = writeln!(
        s,
        r#"<rect x="{}" y="{}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        fmt(LEFT),
        fmt(TOP),
        fmt(PLOT),
        fmt(PLOT)
    );
    let [(lo_a, hi_a), (lo_b, hi_b)] = spec.ranges;
    for i in 0..=4 {
        let f = i as f64 / 4.0;
        let x = LEFT + f * PLOT;
        let y = TOP + PLOT - f * PLOT;
        let _ = writeln!(
            s,
            r#"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="black"/>"#,
            fmt(x),
            fmt(TOP + PLOT),
            fmt(x),
            fmt(TOP + PLOT + 5.0)
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            fmt(x),
            fmt(TOP + PLOT + 18.0),
            tick_label(lo_a + f * (hi_a - lo_a))
        );
        let _ = writeln!(
            s,
            r#"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="black"/>"#,
            fmt(LEFT - 5.0),
            fmt(y),
            fmt(LEFT),
            fmt(y)
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#,
            fmt(LEFT - 8.0),
            fmt(y + 4.0),
            tick_label(lo_b + f * (hi_b - lo_b))
        );
    }
    let (name_a, name_b) = spec.axis_names.clone().unwrap_or_else(|| {
        (format!("x{}", spec.free_dims.0 + 1), format!("x{}", spec.free_dims.1 + 1))
    });
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle" font-size="13">{}</text>"#,
        fmt(LEFT + PLOT / 2.0),
        fmt(TOP + PLOT + 40.0),
        xml_escape(&name_a)
    );
    let _ = writeln!(
        s,
        r#"<text x="20" y="{}" text-anchor="middle" font-size="13" transform="rotate(-90 20 {})">{}</text>"#,
        fmt(TOP + PLOT / 2.0),
        fmt(TOP + PLOT / 2.0),
        xml_escape(&name_b)
    );
    let _ = writeln!(s, "</g>");
    // Legend.
    let _ = writeln!(s, r#"<g id="legend" font-family="sans-serif" font-size="12">"#);
    for c in 0..class_count {
        let y = TOP + 10.0 + c as f64 * 22.0;
        let _ = writeln!(
            s,
            r#"<rect x="{}" y="{}" width="14" height="14" fill="{}" stroke="black"/>"#,
            fmt(LEFT + PLOT + 20.0),
            fmt(y),
            spec.color(c)
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}">class {}</text>"#,
            fmt(LEFT + PLOT + 40.0),
            fmt(y + 11.0),
            c
        );
    }
    let _ = writeln!(s, "</g>");
    s.push_str("</svg>\n");
    s
}

fn legend_classes(classes: &[usize], declared: usize) -> usize {
    classes.iter().copied().max().map_or(declared, |m| declared.max(m + 1))
}

/// Class-region image of any predictor. `class_count` sizes the legend.
pub fn render_slice(predictor: &dyn Classifier, class_count: usize, spec: &SliceSpec) -> Result<String> {
    let classes = class_map(predictor, spec)?;
    Ok(render(&classes, legend_classes(&classes, class_count), spec, &[]))
}

/// Class regions of a rule set with each rule's boundary stroked.
pub fn render_rule_regions(rs: &RuleSet, spec: &SliceSpec) -> Result<String> {
    let classes = class_map(rs, spec)?;
    let segments = rule_region_segments(rs, spec)?;
    Ok(render(&classes, legend_classes(&classes, rs.class_count()), spec, &segments))
}
