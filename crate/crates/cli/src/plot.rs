//! Standalone SVG rendering of log-log scaling plots.

use std::fmt::Write as _;

use scalelaw::{BandPoint, FitResult, Point};
use serde::{Deserialize, Serialize};
use thiserror::Error;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 72.0;
const RIGHT: f64 = 24.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 56.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
];

#[derive(Debug, Error, PartialEq)]
pub enum PlotError {
    #[error("nothing to plot: no series with points")]
    EmptySeries,
    #[error("log-log plots need positive coordinates, got ({0}, {1})")]
    NonPositive(f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlotPoint {
    pub x: f64,
    pub y: f64,
    /// Marker colour group, typically the pretraining seed.
    pub group: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub label: String,
    pub points: Vec<PlotPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotSpec {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
    pub fit: Option<FitResult>,
    /// Confidence sleeve; drawn only when present.
    pub band: Option<Vec<BandPoint>>,
    pub held_out: Vec<Point>,
}

struct Axis {
    lo: f64,
    hi: f64,
    pixel_lo: f64,
    pixel_hi: f64,
}

impl Axis {
    /// Log10 axis spanning `[min, max]` with 5% padding.
    fn new(min: f64, max: f64, pixel_lo: f64, pixel_hi: f64) -> Self {
        let (mut lo, mut hi) = (min.log10(), max.log10());
        if hi - lo < 1e-9 {
            lo -= 0.5;
            hi += 0.5;
        }
        let pad = 0.05 * (hi - lo);
        Axis {
            lo: lo - pad,
            hi: hi + pad,
            pixel_lo,
            pixel_hi,
        }
    }

    fn map(&self, v: f64) -> f64 {
        self.pixel_lo + (v.log10() - self.lo) / (self.hi - self.lo) * (self.pixel_hi - self.pixel_lo)
    }

    /// Decade ticks, or 1-2-5 ticks when the range spans less than two decades.
    fn ticks(&self) -> Vec<f64> {
        let first = self.lo.ceil() as i32;
        let last = self.hi.floor() as i32;
        let mut ticks: Vec<f64> = (first..=last).map(|e| 10f64.powi(e)).collect();
        if ticks.len() < 2 {
            ticks = ((self.lo.floor() as i32)..=(self.hi.ceil() as i32))
                .flat_map(|e| [1.0, 2.0, 5.0].map(|m| m * 10f64.powi(e)))
                .filter(|v| (self.lo..=self.hi).contains(&v.log10()))
                .collect();
        }
        ticks
    }
}

fn tick_label(v: f64) -> String {
    let exp = v.log10().floor();
    let mantissa = v / 10f64.powf(exp);
    if (mantissa - 1.0).abs() < 1e-9 {
        format!("10<tspan dy=\"-6\" font-size=\"9\">{}</tspan>", exp as i32)
    } else {
        format!(
            "{}×10<tspan dy=\"-6\" font-size=\"9\">{}</tspan>",
            mantissa.round() as i32,
            exp as i32
        )
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

pub fn render_plot(spec: &PlotSpec) -> Result<String, PlotError> {
    let scatter: Vec<&PlotPoint> = spec.series.iter().flat_map(|s| &s.points).collect();
    if scatter.is_empty() {
        return Err(PlotError::EmptySeries);
    }
    let mut xs: Vec<f64> = Vec::new();
    let mut ys: Vec<f64> = Vec::new();
    let mut push = |x: f64, y: f64| -> Result<(), PlotError> {
        if !(x > 0.0 && y > 0.0 && x.is_finite() && y.is_finite()) {
            return Err(PlotError::NonPositive(x, y));
        }
        xs.push(x);
        ys.push(y);
        Ok(())
    };
    for p in &scatter {
        push(p.x, p.y)?;
    }
    for p in &spec.held_out {
        push(p.x, p.y)?;
    }
    for b in spec.band.iter().flatten() {
        push(b.x, b.y_lo)?;
        push(b.x, b.y_hi)?;
    }
    let min = |v: &[f64]| v.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = |v: &[f64]| v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let (x_min, x_max) = (min(&xs), max(&xs));
    if let Some(fit) = &spec.fit {
        ys.push(fit.predict(x_min));
        ys.push(fit.predict(x_max));
    }
    let x_axis = Axis::new(x_min, x_max, LEFT, WIDTH - RIGHT);
    let y_axis = Axis::new(min(&ys), max(&ys), HEIGHT - BOTTOM, TOP);

    let mut svg = String::new();
    let w = &mut svg;
    // Writing to a String cannot fail.
    let _ = writeln!(
        w,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(w, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        w,
        r#"<text x="{:.2}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
        WIDTH / 2.0,
        escape(&spec.title)
    );

    for t in x_axis.ticks() {
        let px = x_axis.map(t);
        let _ = writeln!(
            w,
            r##"<line class="grid" x1="{px:.2}" y1="{TOP:.2}" x2="{px:.2}" y2="{:.2}" stroke="#dddddd"/>"##,
            HEIGHT - BOTTOM
        );
        let _ = writeln!(
            w,
            r#"<text x="{px:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            HEIGHT - BOTTOM + 18.0,
            tick_label(t)
        );
    }
    for t in y_axis.ticks() {
        let py = y_axis.map(t);
        let _ = writeln!(
            w,
            r##"<line class="grid" x1="{LEFT:.2}" y1="{py:.2}" x2="{:.2}" y2="{py:.2}" stroke="#dddddd"/>"##,
            WIDTH - RIGHT
        );
        let _ = writeln!(
            w,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            LEFT - 6.0,
            py + 4.0,
            tick_label(t)
        );
    }
    let _ = writeln!(
        w,
        r#"<rect class="frame" x="{LEFT:.2}" y="{TOP:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="black"/>"#,
        WIDTH - LEFT - RIGHT,
        HEIGHT - TOP - BOTTOM
    );
    let _ = writeln!(
        w,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        (LEFT + WIDTH - RIGHT) / 2.0,
        HEIGHT - 12.0,
        escape(&spec.x_label)
    );
    let _ = writeln!(
        w,
        r#"<text x="16" y="{0:.2}" text-anchor="middle" transform="rotate(-90 16 {0:.2})">{1}</text>"#,
        (TOP + HEIGHT - BOTTOM) / 2.0,
        escape(&spec.y_label)
    );

    if let Some(band) = &spec.band {
        let lower = band.iter().map(|b| (b.x, b.y_lo));
        let upper = band.iter().rev().map(|b| (b.x, b.y_hi));
        let vertices: Vec<String> = lower
            .chain(upper)
            .map(|(x, y)| format!("{:.2},{:.2}", x_axis.map(x), y_axis.map(y)))
            .collect();
        let _ = writeln!(
            w,
            r##"<polygon class="sleeve" points="{}" fill="#1f77b4" fill-opacity="0.2" stroke="none"/>"##,
            vertices.join(" ")
        );
    }

    if let Some(fit) = &spec.fit {
        let _ = writeln!(
            w,
            r##"<line class="fit" x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#333333" stroke-width="1.5"/>"##,
            x_axis.map(x_min),
            y_axis.map(fit.predict(x_min)),
            x_axis.map(x_max),
            y_axis.map(fit.predict(x_max))
        );
    }

    let mut groups: Vec<u64> = scatter.iter().map(|p| p.group).collect();
    groups.sort_unstable();
    groups.dedup();
    for series in &spec.series {
        let _ = writeln!(w, r#"<g class="series"><title>{}</title>"#, escape(&series.label));
        for p in &series.points {
            let color = PALETTE[groups.binary_search(&p.group).unwrap_or(0) % PALETTE.len()];
            let _ = writeln!(
                w,
                r#"<circle class="marker" cx="{:.2}" cy="{:.2}" r="3" fill="{color}" fill-opacity="0.8"/>"#,
                x_axis.map(p.x),
                y_axis.map(p.y)
            );
        }
        let _ = writeln!(w, "</g>");
    }
    for p in &spec.held_out {
        let _ = writeln!(
            w,
            r#"<rect class="heldout" x="{:.2}" y="{:.2}" width="7" height="7" fill="none" stroke="black"/>"#,
            x_axis.map(p.x) - 3.5,
            y_axis.map(p.y) - 3.5
        );
    }
    let _ = writeln!(w, "</svg>");
    Ok(svg)
}
