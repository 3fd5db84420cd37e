use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::plant::Trace;

const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesSpec {
    pub column: String,
    #[serde(default)]
    pub label: Option<String>,
    #[serde(default)]
    pub color: Option<String>,
    #[serde(default = "one")]
    pub width: f64,
    /// Multiplies the column before plotting (e.g. rad → deg).
    #[serde(default = "one")]
    pub scale: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PanelSpec {
    pub title: String,
    #[serde(default)]
    pub y_label: String,
    pub series: Vec<SeriesSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FigureSpec {
    /// Output file stem.
    pub name: String,
    pub panels: Vec<PanelSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlotSpec {
    pub width: f64,
    pub panel_height: f64,
    pub t_start: Option<f64>,
    pub t_end: Option<f64>,
    /// Points per series after min/max decimation.
    pub max_points: usize,
    pub figures: Vec<FigureSpec>,
}

impl Default for PlotSpec {
    fn default() -> Self {
        Self {
            width: 900.0,
            panel_height: 180.0,
            t_start: None,
            t_end: None,
            max_points: 1500,
            figures: Vec::new(),
        }
    }
}

const LEFT: f64 = 70.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 28.0;
const BOTTOM: f64 = 34.0;

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Keeps the first, min, max and last sample of each bucket so narrow
/// spikes survive.
fn decimate(t: &[f64], y: &[f64], max_points: usize) -> Vec<(f64, f64)> {
    let n = t.len();
    let buckets = (max_points / 2).max(1);
    if n <= max_points {
        return t.iter().copied().zip(y.iter().copied()).collect();
    }
    let mut out = Vec::with_capacity(2 * buckets + 2);
    for b in 0..buckets {
        let (lo, hi) = (b * n / buckets, ((b + 1) * n / buckets).max(b * n / buckets + 1));
        let (mut imin, mut imax) = (lo, lo);
        for i in lo..hi {
            if y[i] < y[imin] {
                imin = i;
            }
            if y[i] > y[imax] {
                imax = i;
            }
        }
        let (a, c) = if imin <= imax { (imin, imax) } else { (imax, imin) };
        out.push((t[a], y[a]));
        if c != a {
            out.push((t[c], y[c]));
        }
    }
    out
}

fn nice_ticks(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let span = (hi - lo).max(1e-12);
    let raw = span / count as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(10.0 * mag);
    let mut v = (lo / step).ceil() * step;
    let mut out = Vec::new();
    while v <= hi + 1e-9 * step {
        out.push(if v.abs() < 1e-12 * step { 0.0 } else { v });
        v += step;
    }
    out
}

/// One standalone SVG with the figure's panels stacked over a shared time axis.
pub fn render_figure(trace: &Trace, spec: &PlotSpec, fig: &FigureSpec) -> Result<String, HarnessError> {
    if trace.is_empty() {
        return Err(HarnessError::EmptyTrace);
    }
    let t0 = spec.t_start.unwrap_or(trace.t[0]);
    let t1 = spec.t_end.unwrap_or(trace.t[trace.len() - 1]);
    let lo = trace.t.partition_point(|t| *t < t0);
    let hi = trace.t.partition_point(|t| *t <= t1);
    if hi <= lo + 1 || !(t1 > t0) {
        return Err(HarnessError::EmptyTrace);
    }
    let t = &trace.t[lo..hi];
    let w = spec.width;
    let ph = spec.panel_height;
    let height = fig.panels.len() as f64 * (ph + TOP + BOTTOM);
    let pw = w - LEFT - RIGHT;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}" height="{height:.0}" viewBox="0 0 {w:.0} {height:.0}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for (pi, panel) in fig.panels.iter().enumerate() {
        let y_off = pi as f64 * (ph + TOP + BOTTOM) + TOP;
        let mut series = Vec::new();
        for (si, s) in panel.series.iter().enumerate() {
            let col = trace.require(&s.column)?;
            let y: Vec<f64> = col[lo..hi].iter().map(|v| v * s.scale).collect();
            let color = s.color.clone().unwrap_or_else(|| PALETTE[si % PALETTE.len()].to_string());
            series.push((s, color, decimate(t, &y, spec.max_points)));
        }
        let (mut ymin, mut ymax) = (f64::INFINITY, f64::NEG_INFINITY);
        for (_, _, pts) in &series {
            for &(_, v) in pts {
                ymin = ymin.min(v);
                ymax = ymax.max(v);
            }
        }
        if !(ymin.is_finite() && ymax.is_finite()) {
            (ymin, ymax) = (-1.0, 1.0);
        }
        if ymax - ymin < 1e-9 {
            ymin -= 0.5;
            ymax += 0.5;
        }
        let pad = 0.05 * (ymax - ymin);
        let (ymin, ymax) = (ymin - pad, ymax + pad);
        let sx = |x: f64| LEFT + (x - t0) / (t1 - t0) * pw;
        let sy = |v: f64| y_off + ph - (v - ymin) / (ymax - ymin) * ph;

        let _ = writeln!(svg, r#"<text x="{LEFT:.0}" y="{:.1}" font-size="13" font-weight="bold">{}</text>"#, y_off - 8.0, esc(&panel.title));
        let _ = writeln!(svg, r##"<rect x="{LEFT:.0}" y="{y_off:.1}" width="{pw:.1}" height="{ph:.1}" fill="none" stroke="#444"/>"##);
        for v in nice_ticks(ymin, ymax, 4) {
            let y = sy(v);
            let _ = writeln!(svg, r##"<line x1="{LEFT:.0}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="#ddd"/>"##, LEFT + pw);
            let _ = writeln!(svg, r#"<text x="{:.0}" y="{:.1}" text-anchor="end">{}</text>"#, LEFT - 4.0, y + 4.0, fmt_tick(v));
        }
        for v in nice_ticks(t0, t1, 8) {
            let x = sx(v);
            let _ = writeln!(svg, r##"<line x1="{x:.1}" y1="{y_off:.1}" x2="{x:.1}" y2="{:.1}" stroke="#eee"/>"##, y_off + ph);
            let _ = writeln!(svg, r#"<text x="{x:.1}" y="{:.1}" text-anchor="middle">{}</text>"#, y_off + ph + 14.0, fmt_tick(v));
        }
        let _ = writeln!(
            svg,
            r#"<text x="{:.0}" y="{:.1}" text-anchor="middle" transform="rotate(-90 {:.0} {:.1})">{}</text>"#,
            LEFT - 48.0,
            y_off + ph / 2.0,
            LEFT - 48.0,
            y_off + ph / 2.0,
            esc(&panel.y_label)
        );
        let _ = writeln!(svg, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">t (s)</text>"#, LEFT + pw / 2.0, y_off + ph + 28.0);
        for (si, (s, color, pts)) in series.iter().enumerate() {
            let mut d = String::new();
            for (k, &(x, v)) in pts.iter().enumerate() {
                let _ = write!(d, "{}{:.2},{:.2}", if k == 0 { "M" } else { " L" }, sx(x), sy(v));
            }
            let _ = writeln!(svg, r#"<path d="{d}" fill="none" stroke="{}" stroke-width="{}"/>"#, esc(color), s.width);
            let ly = y_off + 12.0 + si as f64 * 15.0;
            let lx = LEFT + pw + 10.0;
            let _ = writeln!(svg, r#"<line x1="{lx:.0}" y1="{ly:.1}" x2="{:.0}" y2="{ly:.1}" stroke="{}" stroke-width="2"/>"#, lx + 18.0, esc(color));
            let label = s.label.clone().unwrap_or_else(|| s.column.clone());
            let _ = writeln!(svg, r#"<text x="{:.0}" y="{:.1}">{}</text>"#, lx + 22.0, ly + 4.0, esc(&label));
        }
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

fn fmt_tick(v: f64) -> String {
    let s = format!("{v:.4}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".into() } else { s.into() }
}

/// Vertical bars, one group per category, one bar per series.
pub fn render_bars(title: &str, y_label: &str, categories: &[String], series: &[(String, Vec<f64>)]) -> String {
    let (w, h) = (120.0 + 110.0 * categories.len() as f64, 300.0);
    let (left, top, ph) = (70.0, 30.0, 220.0);
    let ymax = series.iter().flat_map(|(_, v)| v.iter().copied()).fold(0.0f64, f64::max).max(1e-12) * 1.1;
    let sy = |v: f64| top + ph - v / ymax * ph;
    let mut svg = String::new();
    let _ = writeln!(svg, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.0} {h:.0}" font-family="sans-serif" font-size="11">"#);
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(svg, r#"<text x="{left:.0}" y="18" font-size="13" font-weight="bold">{}</text>"#, esc(title));
    let _ = writeln!(svg, r#"<text x="16" y="{:.0}" transform="rotate(-90 16 {:.0})" text-anchor="middle">{}</text>"#, top + ph / 2.0, top + ph / 2.0, esc(y_label));
    for v in nice_ticks(0.0, ymax, 4) {
        let _ = writeln!(svg, r##"<line x1="{left:.0}" y1="{:.1}" x2="{:.0}" y2="{:.1}" stroke="#ddd"/>"##, sy(v), w - 20.0, sy(v));
        let _ = writeln!(svg, r#"<text x="{:.0}" y="{:.1}" text-anchor="end">{}</text>"#, left - 4.0, sy(v) + 4.0, fmt_tick(v));
    }
    let group = 110.0;
    let bw = 80.0 / series.len().max(1) as f64;
    for (ci, cat) in categories.iter().enumerate() {
        let gx = left + 15.0 + ci as f64 * group;
        for (si, (_, vals)) in series.iter().enumerate() {
            let v = vals.get(ci).copied().unwrap_or(0.0);
            let _ = writeln!(
                svg,
                r#"<rect x="{:.1}" y="{:.1}" width="{:.1}" height="{:.1}" fill="{}"/>"#,
                gx + si as f64 * bw,
                sy(v),
                bw - 2.0,
                top + ph - sy(v),
                PALETTE[si % PALETTE.len()]
            );
        }
        let _ = writeln!(svg, r#"<text x="{:.1}" y="{:.0}" text-anchor="middle">{}</text>"#, gx + 40.0, top + ph + 16.0, esc(cat));
    }
    for (si, (name, _)) in series.iter().enumerate() {
        let x = left + si as f64 * 100.0;
        let _ = writeln!(svg, r#"<rect x="{x:.0}" y="{:.0}" width="10" height="10" fill="{}"/>"#, h - 22.0, PALETTE[si % PALETTE.len()]);
        let _ = writeln!(svg, r#"<text x="{:.0}" y="{:.0}">{}</text>"#, x + 14.0, h - 13.0, esc(name));
    }
    svg.push_str("</svg>\n");
    svg
}
