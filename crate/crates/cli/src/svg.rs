//! Minimal SVG plotting: log or linear axes, lines, shaded regions,
//! markers and vertical bars. Enough for the bound and spectrum figures.

use std::fmt::Write as _;

const PANEL_W: f64 = 520.0;
const PANEL_H: f64 = 400.0;
const MARGIN_L: f64 = 78.0;
const MARGIN_R: f64 = 18.0;
const MARGIN_T: f64 = 34.0;
const MARGIN_B: f64 = 56.0;

pub const PALETTE: [&str; 6] = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"];

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Scale {
    Log,
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub scale: Scale,
}

impl Axis {
    pub fn log(lo: f64, hi: f64) -> Self {
        Self {
            lo,
            hi,
            scale: Scale::Log,
        }
    }

    pub fn linear(lo: f64, hi: f64) -> Self {
        Self {
            lo,
            hi,
            scale: Scale::Linear,
        }
    }

    /// Log axis spanning whole decades around the positive finite values.
    pub fn log_fit(values: impl IntoIterator<Item = f64>) -> Self {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in values {
            if v.is_finite() && v > 0.0 {
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        if !lo.is_finite() {
            return Self::log(1e-1, 1e1);
        }
        let (a, mut b) = (lo.log10().floor(), hi.log10().ceil());
        if b <= a {
            b = a + 1.0;
        }
        Self::log(10f64.powf(a), 10f64.powf(b))
    }

    /// Position in [0, 1]; values outside the range map outside it.
    fn unit(&self, v: f64) -> f64 {
        match self.scale {
            Scale::Log => {
                let v = if v > 0.0 { v } else { f64::MIN_POSITIVE };
                (v.log10() - self.lo.log10()) / (self.hi.log10() - self.lo.log10())
            }
            Scale::Linear => (v - self.lo) / (self.hi - self.lo),
        }
    }

    fn ticks(&self) -> Vec<(f64, String)> {
        match self.scale {
            Scale::Log => {
                let (a, b) = (self.lo.log10().ceil() as i32, self.hi.log10().floor() as i32);
                // Every decade gets a tick, at most about eight get a label.
                let step = ((b - a + 7) / 8).max(1);
                (a..=b)
                    .map(|k| {
                        let text = if (k - a) % step == 0 {
                            format!("10<tspan dy=\"-6\" font-size=\"9\">{k}</tspan>")
                        } else {
                            String::new()
                        };
                        (10f64.powi(k), text)
                    })
                    .collect()
            }
            Scale::Linear => {
                let span = self.hi - self.lo;
                let raw = span / 6.0;
                let mag = 10f64.powf(raw.log10().floor());
                let step = [1.0, 2.0, 5.0, 10.0]
                    .iter()
                    .map(|m| m * mag)
                    .find(|s| *s >= raw)
                    .unwrap_or(raw);
                let first = (self.lo / step).ceil() as i64;
                let last = (self.hi / step).floor() as i64;
                (first..=last)
                    .map(|i| {
                        let v = i as f64 * step;
                        (v, fmt_tick(v).to_string())
                    })
                    .collect()
            }
        }
    }
}

fn fmt_tick(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 1e4 || v.abs() < 1e-2 {
        format!("{v:.3e}")
    } else {
        let s = format!("{v:.4}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Fill {
    None,
    /// Shade from the curve to the bottom of the panel.
    Below,
    /// Shade from the curve to the top of the panel.
    Above,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub color: String,
    pub dashed: bool,
    pub fill: Fill,
}

impl Series {
    pub fn line(label: impl Into<String>, points: Vec<(f64, f64)>, color: &str) -> Self {
        Self {
            label: label.into(),
            points,
            color: color.into(),
            dashed: false,
            fill: Fill::None,
        }
    }

    pub fn dashed(mut self) -> Self {
        self.dashed = true;
        self
    }

    pub fn filled(mut self, fill: Fill) -> Self {
        self.fill = fill;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Marker {
    pub label: String,
    pub x: f64,
    pub y: f64,
}

/// Vertical bar at `x` from `y_lo` to `y_hi`.
#[derive(Debug, Clone, PartialEq)]
pub struct Bar {
    pub label: String,
    pub x: f64,
    pub y_lo: f64,
    pub y_hi: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Panel {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub x: Axis,
    pub y: Axis,
    pub series: Vec<Series>,
    pub markers: Vec<Marker>,
    pub bars: Vec<Bar>,
}

impl Panel {
    pub fn new(
        title: impl Into<String>,
        x_label: impl Into<String>,
        y_label: impl Into<String>,
        x: Axis,
        y: Axis,
    ) -> Self {
        Self {
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            x,
            y,
            series: Vec::new(),
            markers: Vec::new(),
            bars: Vec::new(),
        }
    }
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

struct Frame {
    x0: f64,
    y0: f64,
    w: f64,
    h: f64,
}

impl Frame {
    fn px(&self, a: &Axis, v: f64) -> f64 {
        // Clamp far-off values so coordinates stay printable; the clip path
        // hides everything outside the frame.
        self.x0 + self.w * a.unit(v).clamp(-1.0, 2.0)
    }

    fn py(&self, a: &Axis, v: f64) -> f64 {
        self.y0 + self.h * (1.0 - a.unit(v).clamp(-1.0, 2.0))
    }
}

fn render_panel(out: &mut String, p: &Panel, ox: f64, oy: f64, id: usize) {
    let f = Frame {
        x0: ox + MARGIN_L,
        y0: oy + MARGIN_T,
        w: PANEL_W - MARGIN_L - MARGIN_R,
        h: PANEL_H - MARGIN_T - MARGIN_B,
    };
    let _ = writeln!(
        out,
        r#"<clipPath id="clip{id}"><rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}"/></clipPath>"#,
        f.x0, f.y0, f.w, f.h
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="14">{}</text>"#,
        f.x0 + f.w / 2.0,
        oy + 20.0,
        esc(&p.title)
    );
    let _ = writeln!(out, r#"<g clip-path="url(#clip{id})">"#);
    for s in &p.series {
        let pts: Vec<(f64, f64)> = s
            .points
            .iter()
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .map(|&(x, y)| (f.px(&p.x, x), f.py(&p.y, y)))
            .collect();
        if pts.is_empty() {
            continue;
        }
        let path: String = pts
            .iter()
            .map(|(x, y)| format!("{x:.2},{y:.2}"))
            .collect::<Vec<_>>()
            .join(" ");
        let edge = match s.fill {
            Fill::None => None,
            Fill::Below => Some(f.y0 + 2.0 * f.h),
            Fill::Above => Some(f.y0 - f.h),
        };
        if let Some(edge) = edge {
            let (first, last) = (pts[0].0, pts[pts.len() - 1].0);
            let _ = writeln!(
                out,
                r#"<polygon points="{first:.2},{edge:.2} {path} {last:.2},{edge:.2}" fill="{}" fill-opacity="0.35" stroke="none"/>"#,
                s.color
            );
        }
        let dash = if s.dashed { r#" stroke-dasharray="6 4""# } else { "" };
        let _ = writeln!(
            out,
            r#"<polyline points="{path}" fill="none" stroke="{}" stroke-width="1.6"{dash}/>"#,
            s.color
        );
    }
    for b in &p.bars {
        let x = f.px(&p.x, b.x);
        let _ = writeln!(
            out,
            r##"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="#555" stroke-width="6" stroke-opacity="0.7"/>"##,
            f.py(&p.y, b.y_lo),
            f.py(&p.y, b.y_hi)
        );
    }
    for m in &p.markers {
        let _ = writeln!(
            out,
            r#"<circle cx="{:.2}" cy="{:.2}" r="4.5" fill="black"/>"#,
            f.px(&p.x, m.x),
            f.py(&p.y, m.y)
        );
    }
    out.push_str("</g>\n");
    for b in &p.bars {
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" font-size="11">{}</text>"#,
            f.px(&p.x, b.x) + 6.0,
            f.py(&p.y, b.y_hi).max(f.y0) + 12.0,
            esc(&b.label)
        );
    }
    for m in &p.markers {
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" font-size="11">{}</text>"#,
            f.px(&p.x, m.x) + 7.0,
            f.py(&p.y, m.y) - 6.0,
            esc(&m.label)
        );
    }

    let _ = writeln!(
        out,
        r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="black"/>"#,
        f.x0, f.y0, f.w, f.h
    );
    for (v, label) in p.x.ticks() {
        let x = f.px(&p.x, v);
        let _ = writeln!(
            out,
            r#"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/><text x="{x:.2}" y="{:.2}" text-anchor="middle" font-size="11">{label}</text>"#,
            f.y0 + f.h,
            f.y0 + f.h - 5.0,
            f.y0 + f.h + 17.0
        );
    }
    for (v, label) in p.y.ticks() {
        let y = f.py(&p.y, v);
        let _ = writeln!(
            out,
            r#"<line x1="{:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" text-anchor="end" font-size="11">{label}</text>"#,
            f.x0,
            f.x0 + 5.0,
            f.x0 - 6.0,
            y + 4.0
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="12">{}</text>"#,
        f.x0 + f.w / 2.0,
        oy + PANEL_H - 14.0,
        esc(&p.x_label)
    );
    let _ = writeln!(
        out,
        r#"<text transform="translate({:.2},{:.2}) rotate(-90)" text-anchor="middle" font-size="12">{}</text>"#,
        ox + 16.0,
        f.y0 + f.h / 2.0,
        esc(&p.y_label)
    );
    // Legend, top right inside the frame.
    let n_entries = p.series.iter().filter(|s| !s.label.is_empty()).count();
    let lx = f.x0 + f.w - 150.0;
    if n_entries > 0 {
        let _ = writeln!(
            out,
            r#"<rect x="{:.2}" y="{:.2}" width="146" height="{:.2}" fill="white" fill-opacity="0.8" stroke="none"/>"#,
            lx - 4.0,
            f.y0 + 2.0,
            15.0 * n_entries as f64 + 4.0
        );
    }
    let mut ly = f.y0 + 14.0;
    for s in p.series.iter().filter(|s| !s.label.is_empty()) {
        let dash = if s.dashed { r#" stroke-dasharray="6 4""# } else { "" };
        let _ = writeln!(
            out,
            r#"<line x1="{lx:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{}" stroke-width="2"{dash}/><text x="{:.2}" y="{:.2}" font-size="11">{}</text>"#,
            ly - 4.0,
            lx + 22.0,
            ly - 4.0,
            s.color,
            lx + 27.0,
            ly,
            esc(&s.label)
        );
        ly += 15.0;
    }
}

/// Lays the panels out two per row.
pub fn render(panels: &[Panel]) -> String {
    let cols = if panels.len() > 1 { 2 } else { 1 };
    let rows = panels.len().div_ceil(cols).max(1);
    let (w, h) = (cols as f64 * PANEL_W, rows as f64 * PANEL_H);
    let mut out = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\" font-family=\"sans-serif\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    );
    for (i, p) in panels.iter().enumerate() {
        let (c, r) = (i % cols, i / cols);
        render_panel(&mut out, p, c as f64 * PANEL_W, r as f64 * PANEL_H, i);
    }
    out.push_str("</svg>\n");
    out
}
