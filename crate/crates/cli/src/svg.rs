//! Minimal SVG charts. Output depends only on the input numbers.

use std::fmt::Write;

const W: f64 = 640.0;
const H: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 55.0;

pub struct Series<'a> {
    pub name: &'a str,
    pub points: Vec<(f64, f64)>,
    pub color: &'a str,
    pub dashed: bool,
    /// Draw markers only.
    pub scatter: bool,
}

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn fit(points: impl Iterator<Item = (f64, f64)>) -> Self {
        let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for (x, y) in points.filter(|(x, y)| x.is_finite() && y.is_finite()) {
            x0 = x0.min(x);
            x1 = x1.max(x);
            y0 = y0.min(y);
            y1 = y1.max(y);
        }
        if !x0.is_finite() {
            (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
        }
        let pad = |a: f64, b: f64| {
            if b - a > 0.0 {
                (a, b)
            } else {
                (a - 0.5, b + 0.5)
            }
        };
        let (x0, x1) = pad(x0, x1);
        let (y0, y1) = pad(y0, y1);
        let m = 0.05 * (y1 - y0);
        Self { x0, x1, y0: y0 - m, y1: y1 + m }
    }

    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x0) / (self.x1 - self.x0) * (W - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        H - BOTTOM - (y - self.y0) / (self.y1 - self.y0) * (H - TOP - BOTTOM)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn tick(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e4 || v.abs() < 1e-2) {
        format!("{v:.2e}")
    } else {
        format!("{v:.3}")
    }
}

fn header(out: &mut String, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
        W / 2.0,
        escape(title)
    );
}

fn axes(out: &mut String, f: &Frame, x_label: &str, y_label: &str) {
    let (l, r, t, b) = (LEFT, W - RIGHT, TOP, H - BOTTOM);
    let _ = writeln!(out, r#"<rect x="{l}" y="{t}" width="{}" height="{}" fill="none" stroke="black"/>"#, r - l, b - t);
    for i in 0..=4 {
        let fx = f.x0 + (f.x1 - f.x0) * i as f64 / 4.0;
        let fy = f.y0 + (f.y1 - f.y0) * i as f64 / 4.0;
        let (px, py) = (f.px(fx), f.py(fy));
        let _ = writeln!(out, r#"<line x1="{px:.2}" y1="{b}" x2="{px:.2}" y2="{}" stroke="black"/>"#, b + 5.0);
        let _ = writeln!(out, r#"<text x="{px:.2}" y="{}" text-anchor="middle">{}</text>"#, b + 18.0, tick(fx));
        let _ = writeln!(out, r#"<line x1="{}" y1="{py:.2}" x2="{l}" y2="{py:.2}" stroke="black"/>"#, l - 5.0);
        let _ = writeln!(out, r#"<text x="{}" y="{:.2}" text-anchor="end">{}</text>"#, l - 8.0, py + 4.0, tick(fy));
    }
    let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, (l + r) / 2.0, H - 12.0, escape(x_label));
    let _ = writeln!(
        out,
        r#"<text x="16" y="{0}" text-anchor="middle" transform="rotate(-90 16 {0})">{1}</text>"#,
        (t + b) / 2.0,
        escape(y_label)
    );
}

pub fn line_chart(title: &str, x_label: &str, y_label: &str, series: &[Series<'_>]) -> String {
    let f = Frame::fit(series.iter().flat_map(|s| s.points.iter().copied()));
    let mut out = String::new();
    header(&mut out, title);
    axes(&mut out, &f, x_label, y_label);
    for (i, s) in series.iter().enumerate() {
        let pts: Vec<(f64, f64)> = s
            .points
            .iter()
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .map(|&(x, y)| (f.px(x), f.py(y)))
            .collect();
        if s.scatter {
            for (x, y) in &pts {
                let _ = writeln!(out, r#"<circle cx="{x:.2}" cy="{y:.2}" r="2.5" fill="{}"/>"#, s.color);
            }
        } else {
            let path: Vec<String> = pts.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
            let dash = if s.dashed { r#" stroke-dasharray="6 4""# } else { "" };
            let _ = writeln!(
                out,
                r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="1.5"{dash}/>"#,
                path.join(" "),
                s.color
            );
        }
        let ly = TOP + 14.0 + 16.0 * i as f64;
        let lx = W - RIGHT - 170.0;
        let _ = writeln!(
            out,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{}" stroke-width="2"{}/>"#,
            lx + 20.0,
            s.color,
            if s.dashed { r#" stroke-dasharray="6 4""# } else { "" }
        );
        let _ = writeln!(out, r#"<text x="{}" y="{}">{}</text>"#, lx + 26.0, ly + 4.0, escape(s.name));
    }
    out.push_str("</svg>\n");
    out
}

/// Predicted against actual with the y = x line.
pub fn parity_plot(title: &str, points: &[(f64, f64)], r2: Option<f64>) -> String {
    let lo = points.iter().flat_map(|&(a, b)| [a, b]).filter(|v| v.is_finite()).fold(f64::INFINITY, f64::min);
    let hi = points.iter().flat_map(|&(a, b)| [a, b]).filter(|v| v.is_finite()).fold(f64::NEG_INFINITY, f64::max);
    let diag = if lo.is_finite() { vec![(lo, lo), (hi, hi)] } else { Vec::new() };
    let mut svg = line_chart(
        title,
        "actual",
        "predicted",
        &[
            Series { name: "y = x", points: diag, color: "#888888", dashed: true, scatter: false },
            Series { name: "records", points: points.to_vec(), color: "#1f77b4", dashed: false, scatter: true },
        ],
    );
    let label = match r2 {
        Some(v) => format!("R² = {v:.4}"),
        None => "R² undefined".to_string(),
    };
    let note = format!(r#"<text x="{}" y="{}">{label}</text>"#, LEFT + 10.0, TOP + 18.0);
    svg.truncate(svg.len() - "</svg>\n".len());
    svg.push_str(&note);
    svg.push_str("\n</svg>\n");
    svg
}

/// Rows by `row_labels`, columns by `col_labels`, colour by value.
pub fn heatmap(title: &str, x_label: &str, y_label: &str, row_labels: &[String], col_labels: &[String], values: &[Vec<f64>]) -> String {
    let mut out = String::new();
    header(&mut out, title);
    let finite = values.iter().flatten().copied().filter(|v| v.is_finite());
    let lo = finite.clone().fold(f64::INFINITY, f64::min);
    let hi = finite.fold(f64::NEG_INFINITY, f64::max);
    let (nr, nc) = (row_labels.len().max(1) as f64, col_labels.len().max(1) as f64);
    let cw = (W - LEFT - RIGHT) / nc;
    let ch = (H - TOP - BOTTOM) / nr;
    for (i, row) in values.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            let (x, y) = (LEFT + cw * j as f64, TOP + ch * i as f64);
            let fill = if v.is_finite() {
                let s = if hi > lo { (v - lo) / (hi - lo) } else { 1.0 };
                let c = (255.0 * (1.0 - s)).round() as u8;
                format!("rgb({c},{c},255)")
            } else {
                "#dddddd".to_string()
            };
            let _ = writeln!(out, r#"<rect x="{x:.2}" y="{y:.2}" width="{cw:.2}" height="{ch:.2}" fill="{fill}" stroke="white"/>"#);
            let text = if v.is_finite() { format!("{v:.3}") } else { "n/a".into() };
            let _ = writeln!(
                out,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{text}</text>"#,
                x + cw / 2.0,
                y + ch / 2.0 + 4.0
            );
        }
    }
    for (i, l) in row_labels.iter().enumerate() {
        let y = TOP + ch * (i as f64 + 0.5) + 4.0;
        let _ = writeln!(out, r#"<text x="{}" y="{y:.2}" text-anchor="end">{}</text>"#, LEFT - 8.0, escape(l));
    }
    for (j, l) in col_labels.iter().enumerate() {
        let x = LEFT + cw * (j as f64 + 0.5);
        let _ = writeln!(out, r#"<text x="{x:.2}" y="{}" text-anchor="middle">{}</text>"#, H - BOTTOM + 18.0, escape(l));
    }
    let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, W / 2.0, H - 12.0, escape(x_label));
    let _ = writeln!(
        out,
        r#"<text x="16" y="{0}" text-anchor="middle" transform="rotate(-90 16 {0})">{1}</text>"#,
        (TOP + H - BOTTOM) / 2.0,
        escape(y_label)
    );
    out.push_str("</svg>\n");
    out
}
