//! Minimal SVG rendering for line charts and heat maps. Cosmetic only; the CSV
//! files next to each image are the data of record.

use std::fmt::Write;

const W: f64 = 640.0;
const H: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 36.0;
const BOTTOM: f64 = 50.0;
const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

fn finite_range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.filter(|v| v.is_finite()).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        return (lo - 0.5, hi + 0.5);
    }
    (lo, hi)
}

fn frame(out: &mut String, title: &str, x_label: &str, y_label: &str, x: (f64, f64), y: (f64, f64)) {
    let _ = write!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">
<rect width="100%" height="100%" fill="white"/>
<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>
<rect x="{LEFT}" y="{TOP}" width="{}" height="{}" fill="none" stroke="black"/>
<text x="{}" y="{}" text-anchor="middle">{}</text>
<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>
"#,
        W / 2.0,
        escape(title),
        W - LEFT - RIGHT,
        H - TOP - BOTTOM,
        LEFT + (W - LEFT - RIGHT) / 2.0,
        H - 12.0,
        escape(x_label),
        TOP + (H - TOP - BOTTOM) / 2.0,
        TOP + (H - TOP - BOTTOM) / 2.0,
        escape(y_label),
    );
    for k in 0..=4 {
        let f = k as f64 / 4.0;
        let px = LEFT + f * (W - LEFT - RIGHT);
        let py = H - BOTTOM - f * (H - TOP - BOTTOM);
        let _ = writeln!(out, r#"<text x="{px:.1}" y="{}" text-anchor="middle">{}</text>"#, H - BOTTOM + 16.0, tick(x.0 + f * (x.1 - x.0)));
        let _ = writeln!(out, r#"<text x="{}" y="{:.1}" text-anchor="end">{}</text>"#, LEFT - 6.0, py + 4.0, tick(y.0 + f * (y.1 - y.0)));
    }
}

fn tick(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e4 || v.abs() < 1e-2) {
        format!("{v:.1e}")
    } else {
        format!("{v:.3}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub fn line_chart(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let x = finite_range(series.iter().flat_map(|s| s.points.iter().map(|p| p.0)));
    let y = finite_range(series.iter().flat_map(|s| s.points.iter().map(|p| p.1)));
    let mut out = String::new();
    frame(&mut out, title, x_label, y_label, x, y);
    let sx = |v: f64| LEFT + (v - x.0) / (x.1 - x.0) * (W - LEFT - RIGHT);
    let sy = |v: f64| H - BOTTOM - (v - y.0) / (y.1 - y.0) * (H - TOP - BOTTOM);
    for (k, s) in series.iter().enumerate() {
        let colour = PALETTE[k % PALETTE.len()];
        let mut path = String::new();
        let mut pen_down = false;
        for &(px, py) in &s.points {
            if !(px.is_finite() && py.is_finite()) {
                pen_down = false;
                continue;
            }
            let _ = write!(path, "{}{:.2},{:.2} ", if pen_down { "L" } else { "M" }, sx(px), sy(py));
            pen_down = true;
        }
        let _ = writeln!(out, r#"<path d="{}" fill="none" stroke="{colour}" stroke-width="1.2"/>"#, path.trim_end());
        let ly = TOP + 14.0 + 14.0 * k as f64;
        let _ = writeln!(out, r#"<text x="{}" y="{ly:.1}" fill="{colour}" text-anchor="end">{}</text>"#, W - RIGHT - 6.0, escape(&s.label));
    }
    out.push_str("</svg>\n");
    out
}

/// `values[row][col]` with rows along y and columns along x; NaN cells are left blank.
pub fn heatmap(title: &str, x_label: &str, y_label: &str, xs: &[f64], ys: &[f64], values: &[Vec<f64>]) -> String {
    let x = finite_range(xs.iter().copied());
    let y = finite_range(ys.iter().copied());
    let z = finite_range(values.iter().flatten().copied());
    let mut out = String::new();
    frame(&mut out, title, x_label, y_label, x, y);
    let cw = (W - LEFT - RIGHT) / xs.len().max(1) as f64;
    let ch = (H - TOP - BOTTOM) / ys.len().max(1) as f64;
    for (r, row) in values.iter().enumerate() {
        for (c, v) in row.iter().enumerate() {
            if !v.is_finite() {
                continue;
            }
            let f = (v - z.0) / (z.1 - z.0);
            let _ = writeln!(
                out,
                r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{}"/>"#,
                LEFT + c as f64 * cw,
                H - BOTTOM - (r + 1) as f64 * ch,
                cw + 0.05,
                ch + 0.05,
                colour(f)
            );
        }
    }
    let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="end">range {} .. {}</text>"#, W - RIGHT, TOP - 6.0, tick(z.0), tick(z.1));
    out.push_str("</svg>\n");
    out
}

/// Dark blue through teal to yellow.
fn colour(f: f64) -> String {
    let f = f.clamp(0.0, 1.0);
    let stops = [(0.0, [68.0, 1.0, 84.0]), (0.5, [33.0, 145.0, 140.0]), (1.0, [253.0, 231.0, 37.0])];
    let (a, b) = if f <= 0.5 { (stops[0], stops[1]) } else { (stops[1], stops[2]) };
    let t = (f - a.0) / (b.0 - a.0);
    let c: Vec<u8> = (0..3).map(|i| (a.1[i] + t * (b.1[i] - a.1[i])).round() as u8).collect();
    format!("#{:02x}{:02x}{:02x}", c[0], c[1], c[2])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_chart_skips_gaps() {
        let s = Series { label: "a<b".into(), points: vec![(0.0, 1.0), (1.0, f64::NAN), (2.0, 3.0)] };
        let svg = line_chart("t", "x", "y", &[s]);
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
        assert_eq!(svg.matches('M').count(), 2);
        assert!(svg.contains("a&lt;b"));
    }

    #[test]
    fn heatmap_draws_finite_cells() {
        let svg = heatmap("m", "x", "y", &[0.0, 1.0], &[0.0, 1.0], &[vec![0.0, 1.0], vec![f64::NAN, 0.5]]);
        assert_eq!(svg.matches("<rect x=").count(), 1 + 3);
        assert_eq!(colour(0.0), "#440154");
        assert_eq!(colour(1.0), "#fde725");
    }
}
