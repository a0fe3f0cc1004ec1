//! SVG output: a colour-mapped scalar grid with polylines on top.

use std::fmt::Write;

use crate::error::{CliError, CliResult};

/// Scalar samples on the node grid −R + jh, h = 2R/n (row i along y).
pub struct Raster<'a> {
    pub n: usize,
    pub half_width: f64,
    pub values: &'a [f64],
}

/// Five-stop approximation of the viridis map.
const STOPS: [[f64; 3]; 5] = [[68.0, 1.0, 84.0], [59.0, 82.0, 139.0], [33.0, 145.0, 140.0], [94.0, 201.0, 98.0], [253.0, 231.0, 37.0]];

fn colour(t: f64) -> String {
    if !t.is_finite() {
        return "#808080".into();
    }
    let x = t.clamp(0.0, 1.0) * (STOPS.len() - 1) as f64;
    let k = (x.floor() as usize).min(STOPS.len() - 2);
    let f = x - k as f64;
    let c: Vec<u8> = (0..3).map(|i| (STOPS[k][i] + f * (STOPS[k + 1][i] - STOPS[k][i])).round() as u8).collect();
    format!("#{:02x}{:02x}{:02x}", c[0], c[1], c[2])
}

/// Renders `raster` (colours scaled between its finite min and max) and the
/// `lines`, in a `size`-pixel square. Non-finite samples are grey.
pub fn render(raster: &Raster, lines: &[Vec<[f64; 2]>], size: u32, title: &str) -> CliResult<String> {
    let n = raster.n;
    if n == 0 || raster.values.len() != n * n {
        return Err(CliError::invalid("empty field"));
    }
    let finite = raster.values.iter().copied().filter(|v| v.is_finite());
    let (lo, hi) = finite.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    let span = if hi > lo { hi - lo } else { 1.0 };
    let r = raster.half_width;
    let px = size as f64 / (2.0 * r);
    let cell = size as f64 / n as f64;
    let mut s = String::new();
    writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}">"#).unwrap();
    writeln!(s, "<title>{}</title>", escape(title)).unwrap();
    writeln!(s, r#"<g shape-rendering="crispEdges">"#).unwrap();
    for i in 0..n {
        for j in 0..n {
            let v = raster.values[i * n + j];
            let t = if lo.is_finite() { (v - lo) / span } else { f64::NAN };
            // row i sits at y = −R + ih, drawn with y up
            let (x0, y0) = (j as f64 * cell, size as f64 - (i + 1) as f64 * cell);
            writeln!(s, r#"<rect x="{x0:.2}" y="{y0:.2}" width="{c:.2}" height="{c:.2}" fill="{}"/>"#, colour(t), c = cell + 0.01).unwrap();
        }
    }
    writeln!(s, "</g>").unwrap();
    writeln!(s, r#"<g fill="none" stroke="black" stroke-width="0.8">"#).unwrap();
    for l in lines.iter().filter(|l| l.len() >= 2) {
        s.push_str(r#"<polyline points=""#);
        for (k, p) in l.iter().enumerate() {
            let (x, y) = ((p[0] + r) * px, size as f64 - (p[1] + r) * px);
            write!(s, "{}{x:.2},{y:.2}", if k > 0 { " " } else { "" }).unwrap();
        }
        s.push_str("\"/>\n");
    }
    writeln!(s, "</g>").unwrap();
    writeln!(s, "<!-- colour range [{lo:e}, {hi:e}] -->").unwrap();
    s.push_str("</svg>\n");
    Ok(s)
}

fn escape(t: &str) -> String {
    t.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
