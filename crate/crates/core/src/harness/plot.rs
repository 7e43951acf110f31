//! Semi-log convergence plots of sweep output as standalone SVG.

use std::fmt::Write;

use super::{read_csv, SweepRow};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct PlotStyle {
    pub title: String,
    pub width: f64,
    pub height: f64,
}

impl Default for PlotStyle {
    fn default() -> Self {
        Self { title: String::new(), width: 640.0, height: 420.0 }
    }
}

const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2"];
const MARGIN: [f64; 4] = [70.0, 20.0, 40.0, 55.0]; // left, right, top, bottom
const LEGEND_WIDTH: f64 = 170.0;

struct Series {
    eps1: f64,
    eps2: f64,
    energy: Vec<(f64, f64)>,
    balanced: Vec<(f64, f64)>,
}

fn group(rows: &[SweepRow]) -> Vec<Series> {
    let mut out: Vec<Series> = Vec::new();
    for r in rows {
        let idx = match out.iter().position(|s| s.eps1 == r.eps1 && s.eps2 == r.eps2) {
            Some(i) => i,
            None => {
                out.push(Series { eps1: r.eps1, eps2: r.eps2, energy: Vec::new(), balanced: Vec::new() });
                out.len() - 1
            }
        };
        let p = r.p as f64;
        // zero errors have no logarithm; they are left out of the curve
        if r.energy_error > 0.0 {
            out[idx].energy.push((p, r.energy_error.log10()));
        }
        if r.balanced_error > 0.0 {
            out[idx].balanced.push((p, r.balanced_error.log10()));
        }
    }
    for s in &mut out {
        s.energy.sort_by(|a, b| a.0.total_cmp(&b.0));
        s.balanced.sort_by(|a, b| a.0.total_cmp(&b.0));
    }
    out
}

/// `emit_plot`: log₁₀ of the energy (solid) and balanced (dashed) errors
/// against `p`, one color per `(ε₁, ε₂)` series.
pub fn emit_plot(csv: &str, style: &PlotStyle) -> Result<String> {
    let rows = read_csv(csv)?;
    if rows.is_empty() {
        return Err(Error::Parse("no data rows to plot".into()));
    }
    let series = group(&rows);
    let points = series.iter().flat_map(|s| s.energy.iter().chain(&s.balanced));
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in points {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        return Err(Error::Parse("no positive errors to plot".into()));
    }
    if x1 == x0 {
        x0 -= 0.5;
        x1 += 0.5;
    }
    let (y0, y1) = (y0.floor(), if y1.ceil() > y0.floor() { y1.ceil() } else { y0.floor() + 1.0 });

    let (w, h) = (style.width, style.height);
    let plot_w = w - MARGIN[0] - MARGIN[1] - LEGEND_WIDTH;
    let plot_h = h - MARGIN[2] - MARGIN[3];
    let px = |x: f64| MARGIN[0] + (x - x0) / (x1 - x0) * plot_w;
    let py = |y: f64| MARGIN[2] + (y1 - y) / (y1 - y0) * plot_h;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    if !style.title.is_empty() {
        let _ = writeln!(s, r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#, MARGIN[0] + plot_w / 2.0, escape(&style.title));
    }
    // axes and ticks
    let (bx, by) = (MARGIN[0], MARGIN[2] + plot_h);
    let _ = writeln!(s, r#"<g stroke="black" stroke-width="1">"#);
    let _ = writeln!(s, r#"<line x1="{bx}" y1="{by}" x2="{}" y2="{by}"/>"#, bx + plot_w);
    let _ = writeln!(s, r#"<line x1="{bx}" y1="{by}" x2="{bx}" y2="{}"/>"#, MARGIN[2]);
    let _ = writeln!(s, "</g>");
    let mut p = x0.ceil();
    while p <= x1 {
        let x = px(p);
        let _ = writeln!(s, r#"<line x1="{x}" y1="{by}" x2="{x}" y2="{}" stroke="black"/>"#, by + 5.0);
        let _ = writeln!(s, r#"<text x="{x}" y="{}" text-anchor="middle">{p}</text>"#, by + 18.0);
        p += 1.0;
    }
    let mut e = y0;
    while e <= y1 {
        let y = py(e);
        let _ = writeln!(s, r#"<line x1="{}" y1="{y}" x2="{bx}" y2="{y}" stroke="black"/>"#, bx - 5.0);
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{e}</text>"#, bx - 8.0, y + 4.0);
        e += 1.0;
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">polynomial degree p</text>"#, bx + plot_w / 2.0, h - 12.0);
    let _ = writeln!(
        s,
        r#"<text x="18" y="{y}" text-anchor="middle" transform="rotate(-90 18 {y})">log10 error</text>"#,
        y = MARGIN[2] + plot_h / 2.0
    );

    for (k, sr) in series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        for (pts, dash) in [(&sr.energy, ""), (&sr.balanced, r#" stroke-dasharray="6 4""#)] {
            let coords: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y))).collect();
            let _ = writeln!(
                s,
                r#"<polyline fill="none" stroke="{color}" stroke-width="1.5"{dash} points="{}"/>"#,
                coords.join(" ")
            );
        }
    }

    // legend
    let lx = w - MARGIN[1] - LEGEND_WIDTH + 10.0;
    let mut ly = MARGIN[2] + 10.0;
    for (label, dash) in [("energy", ""), ("balanced", r#" stroke-dasharray="6 4""#)] {
        let _ = writeln!(s, r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="black" stroke-width="1.5"{dash}/>"#, lx + 28.0);
        let _ = writeln!(s, r#"<text x="{}" y="{}">{label}</text>"#, lx + 34.0, ly + 4.0);
        ly += 18.0;
    }
    ly += 6.0;
    for (k, sr) in series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let _ = writeln!(s, r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="3"/>"#, lx + 28.0);
        let _ = writeln!(s, r#"<text x="{}" y="{}">ε₁={:e}, ε₂={:e}</text>"#, lx + 34.0, ly + 4.0, sr.eps1, sr.eps2);
        ly += 18.0;
    }
    s.push_str("</svg>\n");
    Ok(s)
}

fn escape(t: &str) -> String {
    t.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
