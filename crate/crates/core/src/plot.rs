//! Small static SVG charts: scatter/line panels and raster heat maps.
//!
//! Output carries no timestamps or random ids, so identical inputs render to
//! identical bytes.

use std::fmt::Write;

pub const ORANGE: &str = "#e66101";
pub const BLUE: &str = "#2c7bb6";
pub const GREEN: &str = "#1a9641";
pub const PURPLE: &str = "#7b3294";
pub const GREY: &str = "#555555";

const PANEL_W: f64 = 360.0;
const PANEL_H: f64 = 260.0;
const MARGIN_L: f64 = 62.0;
const MARGIN_R: f64 = 14.0;
const MARGIN_T: f64 = 28.0;
const MARGIN_B: f64 = 42.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mark {
    Points,
    Line,
    Dashed,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Series {
    pub label: String,
    pub color: &'static str,
    pub mark: Mark,
    pub data: Vec<(f64, f64)>,
}

impl Series {
    pub fn new(label: impl Into<String>, color: &'static str, mark: Mark, data: Vec<(f64, f64)>) -> Self {
        Series {
            label: label.into(),
            color,
            mark,
            data,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Panel {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
    /// Horizontal reference line.
    pub h_line: Option<f64>,
}

impl Panel {
    pub fn new(title: impl Into<String>, x_label: impl Into<String>, y_label: impl Into<String>) -> Self {
        Panel {
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            ..Panel::default()
        }
    }

    pub fn with(mut self, s: Series) -> Self {
        self.series.push(s);
        self
    }

    fn bounds(&self) -> (f64, f64, f64, f64) {
        let pts = self
            .series
            .iter()
            .flat_map(|s| s.data.iter())
            .filter(|(x, y)| x.is_finite() && y.is_finite());
        let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for &(x, y) in pts {
            x0 = x0.min(x);
            x1 = x1.max(x);
            y0 = y0.min(y);
            y1 = y1.max(y);
        }
        if let Some(h) = self.h_line {
            y0 = y0.min(h);
            y1 = y1.max(h);
        }
        if !x0.is_finite() {
            return (0.0, 1.0, 0.0, 1.0);
        }
        let pad = |lo: f64, hi: f64| {
            if hi > lo {
                let p = 0.04 * (hi - lo);
                (lo - p, hi + p)
            } else {
                (lo - 0.5 * lo.abs().max(1.0), hi + 0.5 * hi.abs().max(1.0))
            }
        };
        let (x0, x1) = pad(x0, x1);
        let (y0, y1) = pad(y0, y1);
        (x0, x1, y0, y1)
    }
}

fn nice_ticks(lo: f64, hi: f64, target: usize) -> Vec<f64> {
    let span = hi - lo;
    let raw = span / target as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 2.5, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| span / s <= target as f64 + 0.5)
        .unwrap_or(10.0 * mag);
    let mut t = (lo / step).ceil() * step;
    let mut out = Vec::new();
    while t <= hi + 1e-9 * step {
        out.push(if t.abs() < 1e-12 * step { 0.0 } else { t });
        t += step;
    }
    out
}

fn fmt_tick(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && !(1e-3..1e5).contains(&a) {
        format!("{v:.1e}")
    } else {
        let s = format!("{v:.4}");
        let s = s.trim_end_matches('0').trim_end_matches('.');
        if s == "-0" {
            "0".into()
        } else {
            s.to_string()
        }
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn render_panel(out: &mut String, p: &Panel, ox: f64, oy: f64) {
    let (x0, x1, y0, y1) = p.bounds();
    let pw = PANEL_W - MARGIN_L - MARGIN_R;
    let ph = PANEL_H - MARGIN_T - MARGIN_B;
    let sx = |x: f64| ox + MARGIN_L + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| oy + MARGIN_T + ph - (y - y0) / (y1 - y0) * ph;
    let _ = writeln!(
        out,
        r#"<rect x="{:.2}" y="{:.2}" width="{pw:.2}" height="{ph:.2}" fill="white" stroke="{GREY}"/>"#,
        ox + MARGIN_L,
        oy + MARGIN_T
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" font-size="13" text-anchor="middle">{}</text>"#,
        ox + MARGIN_L + pw / 2.0,
        oy + 18.0,
        escape(&p.title)
    );
    for t in nice_ticks(x0, x1, 5) {
        let x = sx(t);
        let _ = writeln!(
            out,
            r#"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="{GREY}"/><text x="{x:.2}" y="{:.2}" font-size="10" text-anchor="middle">{}</text>"#,
            oy + MARGIN_T + ph,
            oy + MARGIN_T + ph + 4.0,
            oy + MARGIN_T + ph + 15.0,
            fmt_tick(t)
        );
    }
    for t in nice_ticks(y0, y1, 5) {
        let y = sy(t);
        let _ = writeln!(
            out,
            r#"<line x1="{:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="{GREY}"/><text x="{:.2}" y="{:.2}" font-size="10" text-anchor="end">{}</text>"#,
            ox + MARGIN_L - 4.0,
            ox + MARGIN_L,
            ox + MARGIN_L - 6.0,
            y + 3.5,
            fmt_tick(t)
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" font-size="11" text-anchor="middle">{}</text>"#,
        ox + MARGIN_L + pw / 2.0,
        oy + PANEL_H - 8.0,
        escape(&p.x_label)
    );
    let (lx, ly) = (ox + 14.0, oy + MARGIN_T + ph / 2.0);
    let _ = writeln!(
        out,
        r#"<text x="{lx:.2}" y="{ly:.2}" font-size="11" text-anchor="middle" transform="rotate(-90 {lx:.2} {ly:.2})">{}</text>"#,
        escape(&p.y_label)
    );
    if let Some(h) = p.h_line {
        let y = sy(h);
        let _ = writeln!(
            out,
            r#"<line x1="{:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="black" stroke-dasharray="4 3"/>"#,
            ox + MARGIN_L,
            ox + MARGIN_L + pw
        );
    }
    for s in &p.series {
        let pts: Vec<(f64, f64)> = s.data.iter().copied().filter(|(x, y)| x.is_finite() && y.is_finite()).collect();
        match s.mark {
            Mark::Points => {
                for (x, y) in pts {
                    let _ = writeln!(
                        out,
                        r#"<circle cx="{:.2}" cy="{:.2}" r="2" fill="{}" fill-opacity="0.6"/>"#,
                        sx(x),
                        sy(y),
                        s.color
                    );
                }
            }
            Mark::Line | Mark::Dashed => {
                if pts.len() < 2 {
                    continue;
                }
                let path: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
                let dash = if s.mark == Mark::Dashed { r#" stroke-dasharray="5 3""# } else { "" };
                let _ = writeln!(
                    out,
                    r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="1.8"{dash}/>"#,
                    path.join(" "),
                    s.color
                );
            }
        }
    }
    let mut ly = oy + MARGIN_T + 12.0;
    for s in p.series.iter().filter(|s| !s.label.is_empty()) {
        let x = ox + MARGIN_L + 8.0;
        let _ = writeln!(
            out,
            r#"<rect x="{x:.2}" y="{:.2}" width="10" height="4" fill="{}"/><text x="{:.2}" y="{ly:.2}" font-size="10">{}</text>"#,
            ly - 5.0,
            s.color,
            x + 14.0,
            escape(&s.label)
        );
        ly += 13.0;
    }
}

/// Lays panels out `columns` per row.
pub fn render_panels(title: &str, panels: &[Panel], columns: usize) -> String {
    let columns = columns.max(1).min(panels.len().max(1));
    let rows = panels.len().div_ceil(columns).max(1);
    let w = columns as f64 * PANEL_W;
    let h = rows as f64 * PANEL_H + 30.0;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.0} {h:.0}" font-family="sans-serif">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="20" font-size="15" text-anchor="middle">{}</text>"#,
        w / 2.0,
        escape(title)
    );
    for (i, p) in panels.iter().enumerate() {
        render_panel(&mut out, p, (i % columns) as f64 * PANEL_W, 30.0 + (i / columns) as f64 * PANEL_H);
    }
    out.push_str("</svg>\n");
    out
}

fn ramp(t: f64) -> (u8, u8, u8) {
    // blue -> pale yellow -> dark green
    let stops = [(0.0, (43.0, 80.0, 160.0)), (0.5, (250.0, 245.0, 190.0)), (1.0, (20.0, 110.0, 50.0))];
    let t = t.clamp(0.0, 1.0);
    let (a, b) = if t <= 0.5 { (stops[0], stops[1]) } else { (stops[1], stops[2]) };
    let u = (t - a.0) / (b.0 - a.0);
    let mix = |p: f64, q: f64| (p + u * (q - p)).round() as u8;
    (mix(a.1 .0, b.1 .0), mix(a.1 .1, b.1 .1), mix(a.1 .2, b.1 .2))
}

/// Heat map of a row-major raster (row 0 at the bottom).
pub fn render_heatmap(title: &str, n_cols: usize, n_rows: usize, values: &[f64]) -> String {
    let cell = (480.0 / n_cols.max(n_rows) as f64).clamp(1.0, 24.0);
    let (w, h) = (n_cols as f64 * cell, n_rows as f64 * cell);
    let (lo, hi) = values
        .iter()
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let span = if hi > lo { hi - lo } else { 1.0 };
    let mut out = String::new();
    let (tw, th) = (w + 20.0, h + 60.0);
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{tw:.0}" height="{th:.0}" viewBox="0 0 {tw:.0} {th:.0}" font-family="sans-serif">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="18" font-size="13" text-anchor="middle">{}</text>"#,
        tw / 2.0,
        escape(title)
    );
    for r in 0..n_rows {
        for c in 0..n_cols {
            let v = values[r * n_cols + c];
            let (red, g, b) = ramp((v - lo) / span);
            let _ = writeln!(
                out,
                r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="rgb({red},{g},{b})"/>"#,
                10.0 + c as f64 * cell,
                28.0 + (n_rows - 1 - r) as f64 * cell,
                cell + 0.05,
                cell + 0.05
            );
        }
    }
    let _ = writeln!(
        out,
        r#"<text x="10" y="{:.2}" font-size="10">min {}  max {}</text>"#,
        h + 46.0,
        fmt_tick(lo),
        fmt_tick(hi)
    );
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ticks_are_round() {
        let t = nice_ticks(0.0, 1.0, 5);
        assert_eq!(t.len(), 6);
        assert!(t.iter().enumerate().all(|(i, v)| (v - 0.2 * i as f64).abs() < 1e-12));
        assert!(nice_ticks(-37.0, 212.0, 5).iter().all(|t| t % 50.0 == 0.0));
    }

    #[test]
    fn render_is_deterministic_and_well_formed() {
        let p = Panel::new("HT", "esr", "variance")
            .with(Series::new("empirical", ORANGE, Mark::Points, vec![(0.1, 1.0), (0.2, f64::NAN), (0.3, 2.0)]))
            .with(Series::new("", ORANGE, Mark::Line, vec![(0.1, 1.0), (0.3, 2.0)]));
        let a = render_panels("t <x>", &[p.clone(), p.clone(), p], 2);
        assert!(a.starts_with("<svg") && a.trim_end().ends_with("</svg>"));
        assert!(a.contains("t &lt;x&gt;"));
        assert!(!a.contains("NaN"));
        let h = render_heatmap("map", 3, 2, &[0.0, 1.0, 2.0, 3.0, 4.0, 5.0]);
        assert_eq!(h.matches("<rect").count(), 7);
    }

    #[test]
    fn empty_panel_renders() {
        let s = render_panels("none", &[Panel::new("a", "x", "y")], 1);
        assert!(s.contains("</svg>"));
    }
}
