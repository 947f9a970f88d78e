//! SVG rendering of 2-D pools and samples.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::learner::Pool;
use crate::synthdata::LabeledSample;
use crate::Label;

const SIZE: f64 = 600.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

/// Axis-aligned viewing rectangle in data coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct View {
    pub lo: [f64; 2],
    pub hi: [f64; 2],
}

impl View {
    /// Bounding box, with 5% padding, of the samples and of each plane's
    /// closest point to the origin, so every plane crosses the view.
    pub fn fit(samples: &[LabeledSample], pools: &[&Pool]) -> Self {
        let mut pts: Vec<[f64; 2]> = samples.iter().map(|s| [s.x[0], s.x[1]]).collect();
        for p in pools.iter().flat_map(|p| &p.planes) {
            pts.push([p.w[0] * p.theta, p.w[1] * p.theta]);
        }
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for p in &pts {
            for k in 0..2 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        if pts.is_empty() {
            return Self {
                lo: [-1.0; 2],
                hi: [1.0; 2],
            };
        }
        for k in 0..2 {
            let pad = 0.05 * (hi[k] - lo[k]).max(1.0);
            lo[k] -= pad;
            hi[k] += pad;
        }
        Self { lo, hi }
    }

    fn to_px(self, p: [f64; 2]) -> (f64, f64) {
        let sx = (p[0] - self.lo[0]) / (self.hi[0] - self.lo[0]) * SIZE;
        let sy = (self.hi[1] - p[1]) / (self.hi[1] - self.lo[1]) * SIZE;
        (sx, sy)
    }
}

/// Segment of the line `w·x = θ` inside the view, if any.
pub fn clip_line(w: &[f64], theta: f64, view: &View) -> Option<([f64; 2], [f64; 2])> {
    let mut hits: Vec<[f64; 2]> = Vec::with_capacity(4);
    for k in 0..2 {
        let o = 1 - k;
        if w[o].abs() < 1e-15 {
            continue;
        }
        for edge in [view.lo[k], view.hi[k]] {
            let other = (theta - w[k] * edge) / w[o];
            if other >= view.lo[o] - 1e-12 && other <= view.hi[o] + 1e-12 {
                let mut p = [0.0; 2];
                p[k] = edge;
                p[o] = other;
                hits.push(p);
            }
        }
    }
    // corners may be hit twice; keep the two most distant points
    let mut best: Option<([f64; 2], [f64; 2], f64)> = None;
    for i in 0..hits.len() {
        for j in i + 1..hits.len() {
            let d = (hits[i][0] - hits[j][0]).powi(2) + (hits[i][1] - hits[j][1]).powi(2);
            if best.is_none_or(|b| d > b.2) {
                best = Some((hits[i], hits[j], d));
            }
        }
    }
    best.filter(|b| b.2 > 0.0).map(|b| (b.0, b.1))
}

/// Renders samples coloured by label and the planes of each pool. With two
/// pools the first is drawn dashed and grey (before) and the second solid.
pub fn render_svg(samples: &[LabeledSample], pools: &[&Pool]) -> Result<String> {
    if let Some(s) = samples.iter().find(|s| s.x.len() != 2) {
        return Err(Error::invalid(format!("plots need 2-D data, got {} features", s.x.len())));
    }
    if let Some(p) = pools.iter().find(|p| p.dim != 2) {
        return Err(Error::invalid(format!("plots need a 2-D pool, got dimension {}", p.dim)));
    }
    let view = View::fit(samples, pools);
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#
    );
    let _ = writeln!(out, r#"<rect width="{SIZE}" height="{SIZE}" fill="white" stroke="black"/>"#);

    let mut colour: BTreeMap<Label, &str> = BTreeMap::new();
    for s in samples {
        let n = colour.len();
        colour.entry(s.label).or_insert(PALETTE[n % PALETTE.len()]);
    }
    let _ = writeln!(out, r#"<g id="samples" fill-opacity="0.5">"#);
    for s in samples {
        let (x, y) = view.to_px([s.x[0], s.x[1]]);
        let _ = writeln!(out, r#"<circle cx="{x:.2}" cy="{y:.2}" r="1.5" fill="{}"/>"#, colour[&s.label]);
    }
    let _ = writeln!(out, "</g>");

    for (i, pool) in pools.iter().enumerate() {
        let before = pools.len() > 1 && i == 0;
        let style = if before {
            r##"stroke="#999999" stroke-dasharray="6 4""##
        } else {
            r#"stroke="black""#
        };
        let _ = writeln!(out, r#"<g id="planes{i}" {style} stroke-width="1.5">"#);
        for p in &pool.planes {
            if let Some((a, b)) = clip_line(&p.w, p.theta, &view) {
                let (x1, y1) = view.to_px(a);
                let (x2, y2) = view.to_px(b);
                let _ = writeln!(
                    out,
                    r#"<line data-plane="{}" x1="{x1:.2}" y1="{y1:.2}" x2="{x2:.2}" y2="{y2:.2}"/>"#,
                    p.id
                );
            }
        }
        let _ = writeln!(out, "</g>");
    }
    out.push_str("</svg>\n");
    Ok(out)
}
