//! Plain SVG diagnostics. Coordinates are printed with two decimals so the
//! bytes only depend on the data.

use std::fmt::Write;

use crate::geom::PointSet;
use crate::numfmt::fmt_num;

const SIZE: f64 = 400.0;
const PAD: f64 = 40.0;

fn open(title: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{SIZE}\" height=\"{SIZE}\" viewBox=\"0 0 {SIZE} {SIZE}\">"
    );
    let _ = writeln!(
        s,
        "<text x=\"{:.2}\" y=\"20.00\" font-size=\"12\" text-anchor=\"middle\">{}</text>",
        SIZE / 2.0,
        escape(title)
    );
    s
}

fn escape(t: &str) -> String {
    t.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Maps `[-1, 1]` onto the drawing area.
fn unit(v: f64) -> f64 {
    PAD + (v + 1.0) * 0.5 * (SIZE - 2.0 * PAD)
}

/// Projected contact points over `B^n(0,1)`, `n` = 1 or 2 (a line for `n = 1`).
pub fn contact_scatter(points: &PointSet, title: &str) -> String {
    let mut s = open(title);
    let c = unit(0.0);
    let rad = unit(1.0) - c;
    if points.dim() >= 2 {
        let _ = writeln!(s, "<circle cx=\"{c:.2}\" cy=\"{c:.2}\" r=\"{rad:.2}\" fill=\"none\" stroke=\"gray\"/>");
    } else {
        let _ = writeln!(
            s,
            "<line x1=\"{:.2}\" y1=\"{c:.2}\" x2=\"{:.2}\" y2=\"{c:.2}\" stroke=\"gray\"/>",
            unit(-1.0),
            unit(1.0)
        );
    }
    for p in points.iter() {
        let x = unit(p[0]);
        let y = if p.len() >= 2 { unit(-p[1]) } else { c };
        let _ = writeln!(s, "<circle cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"1.00\" fill=\"black\"/>");
    }
    s.push_str("</svg>\n");
    s
}

/// Bars for the cascade measures `ℒ(F_j)` against the ball measure.
pub fn measure_ladder(levels: &[f64], ball: f64, title: &str) -> String {
    let mut s = open(title);
    let w = (SIZE - 2.0 * PAD) / levels.len().max(1) as f64;
    let top = ball.max(levels.iter().copied().fold(0.0, f64::max)).max(f64::MIN_POSITIVE);
    let base = SIZE - PAD;
    let hmax = SIZE - 2.0 * PAD;
    for (j, &v) in levels.iter().enumerate() {
        let h = hmax * v / top;
        let _ = writeln!(
            s,
            "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{h:.2}\" fill=\"steelblue\"/>",
            PAD + j as f64 * w + 0.1 * w,
            base - h,
            0.8 * w
        );
    }
    let yb = base - hmax * ball / top;
    let _ = writeln!(
        s,
        "<line x1=\"{PAD:.2}\" y1=\"{yb:.2}\" x2=\"{:.2}\" y2=\"{yb:.2}\" stroke=\"red\"/>",
        SIZE - PAD
    );
    s.push_str("</svg>\n");
    s
}

/// Polylines of `(rho, margin)` with `log2 rho` on the horizontal axis.
pub fn margin_curves(series: &[(String, Vec<(f64, f64)>)], title: &str) -> String {
    let mut s = open(title);
    let pts: Vec<(f64, f64)> = series.iter().flat_map(|(_, v)| v.iter().copied()).collect();
    let xs: Vec<f64> = pts.iter().map(|p| p.0.log2()).collect();
    let (x0, x1) = bounds(&xs);
    let (y0, y1) = bounds(&pts.iter().map(|p| p.1).collect::<Vec<_>>());
    let sx = |x: f64| PAD + (x.log2() - x0) / (x1 - x0) * (SIZE - 2.0 * PAD);
    let sy = |y: f64| SIZE - PAD - (y - y0) / (y1 - y0) * (SIZE - 2.0 * PAD);
    if y0 < 0.0 && y1 > 0.0 {
        let z = sy(0.0);
        let _ = writeln!(s, "<line x1=\"{PAD:.2}\" y1=\"{z:.2}\" x2=\"{:.2}\" y2=\"{z:.2}\" stroke=\"gray\"/>", SIZE - PAD);
    }
    for (k, (label, v)) in series.iter().enumerate() {
        let mut sorted = v.clone();
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
        let path: Vec<String> = sorted
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        let _ = writeln!(s, "<polyline points=\"{}\" fill=\"none\" stroke=\"black\"/>", path.join(" "));
        let _ = writeln!(
            s,
            "<text x=\"{PAD:.2}\" y=\"{:.2}\" font-size=\"10\">{} (margin {}..{})</text>",
            SIZE - 10.0 - 12.0 * k as f64,
            escape(label),
            fmt_num(y0),
            fmt_num(y1)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn bounds(v: &[f64]) -> (f64, f64) {
    let lo = v.iter().copied().filter(|x| x.is_finite()).fold(f64::INFINITY, f64::min);
    let hi = v.iter().copied().filter(|x| x.is_finite()).fold(f64::NEG_INFINITY, f64::max);
    if !lo.is_finite() {
        (0.0, 1.0)
    } else if hi - lo < 1e-300 {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}
