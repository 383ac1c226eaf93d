//! Standalone SVG plots: line/point charts and a heat map.

use std::fmt::Write;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;

pub enum Style {
    Line,
    Points,
}

pub struct Series<'a> {
    pub name: &'a str,
    pub x: &'a [f64],
    pub y: &'a [f64],
    pub error: Option<&'a [f64]>,
    pub color: &'a str,
    pub style: Style,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi > lo {
        let pad = 0.05 * (hi - lo);
        (lo - pad, hi + pad)
    } else {
        (lo - 0.5 * lo.abs().max(1.0), hi + 0.5 * hi.abs().max(1.0))
    }
}

fn header(out: &mut String, title: &str) {
    let _ = write!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">
<rect width="100%" height="100%" fill="white"/>
<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>
"#,
        WIDTH / 2.0,
        escape(title)
    );
}

fn axes(out: &mut String, xr: (f64, f64), yr: (f64, f64), xlabel: &str, ylabel: &str) {
    let (x0, x1, y0, y1) = (LEFT, WIDTH - RIGHT, HEIGHT - BOTTOM, TOP);
    let _ = writeln!(
        out,
        r#"<rect x="{x0}" y="{y1}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        x1 - x0,
        y0 - y1
    );
    for k in 0..=4 {
        let f = k as f64 / 4.0;
        let px = x0 + f * (x1 - x0);
        let py = y0 - f * (y0 - y1);
        let xv = xr.0 + f * (xr.1 - xr.0);
        let yv = yr.0 + f * (yr.1 - yr.0);
        let _ = writeln!(
            out,
            r#"<line x1="{px:.1}" y1="{y0}" x2="{px:.1}" y2="{}" stroke="black"/><text x="{px:.1}" y="{}" text-anchor="middle">{xv:.4}</text>"#,
            y0 + 5.0,
            y0 + 18.0
        );
        let _ = writeln!(
            out,
            r#"<line x1="{}" y1="{py:.1}" x2="{x0}" y2="{py:.1}" stroke="black"/><text x="{}" y="{:.1}" text-anchor="end">{yv:.4}</text>"#,
            x0 - 5.0,
            x0 - 8.0,
            py + 4.0
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        (x0 + x1) / 2.0,
        HEIGHT - 15.0,
        escape(xlabel)
    );
    let _ = writeln!(
        out,
        r#"<text x="18" y="{0}" text-anchor="middle" transform="rotate(-90 18 {0})">{1}</text>"#,
        (y0 + y1) / 2.0,
        escape(ylabel)
    );
}

pub fn line_plot(title: &str, xlabel: &str, ylabel: &str, series: &[Series]) -> String {
    let xr = range(series.iter().flat_map(|s| s.x.iter().copied()));
    let yr = range(series.iter().flat_map(|s| {
        let e = s.error;
        s.y.iter()
            .enumerate()
            .flat_map(move |(k, &y)| {
                let d = e.map_or(0.0, |e| e[k]);
                [y - d, y + d]
            })
    }));
    let sx = |x: f64| LEFT + (x - xr.0) / (xr.1 - xr.0) * (WIDTH - LEFT - RIGHT);
    let sy = |y: f64| HEIGHT - BOTTOM - (y - yr.0) / (yr.1 - yr.0) * (HEIGHT - BOTTOM - TOP);
    let mut out = String::new();
    header(&mut out, title);
    axes(&mut out, xr, yr, xlabel, ylabel);
    for (idx, s) in series.iter().enumerate() {
        match s.style {
            Style::Line => {
                let pts: Vec<String> = s.x.iter().zip(s.y).map(|(&x, &y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
                let _ = writeln!(
                    out,
                    r#"<polyline fill="none" stroke="{}" stroke-width="1.2" points="{}"/>"#,
                    s.color,
                    pts.join(" ")
                );
            }
            Style::Points => {
                for (k, (&x, &y)) in s.x.iter().zip(s.y).enumerate() {
                    if let Some(e) = s.error {
                        let _ = writeln!(
                            out,
                            r#"<line x1="{0:.2}" y1="{1:.2}" x2="{0:.2}" y2="{2:.2}" stroke="{3}"/>"#,
                            sx(x),
                            sy(y - e[k]),
                            sy(y + e[k]),
                            s.color
                        );
                    }
                    let _ = writeln!(out, r#"<circle cx="{:.2}" cy="{:.2}" r="2" fill="{}"/>"#, sx(x), sy(y), s.color);
                }
            }
        }
        let ly = TOP + 16.0 + 16.0 * idx as f64;
        let _ = writeln!(
            out,
            r#"<rect x="{}" y="{}" width="12" height="4" fill="{}"/><text x="{}" y="{}">{}</text>"#,
            WIDTH - RIGHT - 150.0,
            ly - 6.0,
            s.color,
            WIDTH - RIGHT - 132.0,
            ly,
            escape(s.name)
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Grey-scale map, rows drawn bottom to top in `y` order.
pub fn heat_map(title: &str, xlabel: &str, ylabel: &str, x: &[f64], y: &[f64], rows: &[Vec<f64>]) -> String {
    let xr = (x[0], x[x.len() - 1]);
    let yr = (y[0], y[y.len() - 1]);
    let max = rows.iter().flatten().cloned().fold(0.0, f64::max);
    let mut out = String::new();
    header(&mut out, title);
    let cw = (WIDTH - LEFT - RIGHT) / x.len() as f64;
    let ch = (HEIGHT - TOP - BOTTOM) / y.len() as f64;
    for (r, row) in rows.iter().enumerate() {
        let py = HEIGHT - BOTTOM - (r + 1) as f64 * ch;
        for (c, &v) in row.iter().enumerate() {
            if v <= 0.0 || max <= 0.0 {
                continue;
            }
            let level = 255 - (255.0 * (v / max).clamp(0.0, 1.0)).round() as u8;
            let _ = writeln!(
                out,
                r#"<rect x="{:.2}" y="{py:.2}" width="{:.2}" height="{:.2}" fill="rgb({level},{level},{level})"/>"#,
                LEFT + c as f64 * cw,
                cw + 0.05,
                ch + 0.05
            );
        }
    }
    axes(&mut out, xr, yr, xlabel, ylabel);
    out.push_str("</svg>\n");
    out
}
