//! Minimal SVG line charts for density and timing plots.

use std::fmt::Write;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const LEFT: f64 = 64.0;
const RIGHT: f64 = 16.0;
const TOP: f64 = 36.0;
const BOTTOM: f64 = 48.0;
const COLORS: [&str; 6] = ["#000000", "#c0392b", "#2471a3", "#229954", "#7d3c98", "#b9770e"];

pub struct Series {
    pub label: String,
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub dashed: bool,
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn tick_label(v: f64) -> String {
    if v == 0.0 || (v.abs() >= 0.01 && v.abs() < 1e4) {
        format!("{v:.3}").trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        format!("{v:.2e}")
    }
}

/// Render `series` on shared linear axes. Unless `deterministic`, the file
/// carries a creation timestamp in its metadata.
pub fn line_chart(title: &str, x_label: &str, y_label: &str, series: &[Series], deterministic: bool) -> String {
    let finite = |v: &&f64| v.is_finite();
    let (mut x0, mut x1, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    let mut y0 = 0.0f64;
    for s in series {
        for x in s.xs.iter().filter(finite) {
            x0 = x0.min(*x);
            x1 = x1.max(*x);
        }
        for y in s.ys.iter().filter(finite) {
            y0 = y0.min(*y);
            y1 = y1.max(*y);
        }
    }
    if x1 <= x0 {
        x0 -= 0.5;
        x1 = x0 + 1.0;
    }
    if y1 <= y0 {
        y1 = y0 + 1.0;
    }
    y1 += 0.05 * (y1 - y0);
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| TOP + ph - (y - y0) / (y1 - y0) * ph;

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    if !deterministic {
        let secs = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        let _ = writeln!(out, "<metadata>created {secs} (unix seconds)</metadata>");
    }
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
        WIDTH / 2.0,
        esc(title)
    );
    let _ = writeln!(
        out,
        r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="dimgray"/>"#
    );
    for i in 0..=5 {
        let t = i as f64 / 5.0;
        let xv = x0 + t * (x1 - x0);
        let yv = y0 + t * (y1 - y0);
        let (px, py) = (sx(xv), sy(yv));
        let _ = writeln!(
            out,
            r#"<line x1="{px:.2}" y1="{:.2}" x2="{px:.2}" y2="{:.2}" stroke="dimgray"/><text x="{px:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            TOP + ph,
            TOP + ph + 5.0,
            TOP + ph + 18.0,
            tick_label(xv)
        );
        let _ = writeln!(
            out,
            r#"<line x1="{:.2}" y1="{py:.2}" x2="{LEFT}" y2="{py:.2}" stroke="dimgray"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            LEFT - 5.0,
            LEFT - 7.0,
            py + 4.0,
            tick_label(yv)
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 10.0,
        esc(x_label)
    );
    let _ = writeln!(
        out,
        r#"<text x="14" y="{:.2}" text-anchor="middle" transform="rotate(-90 14 {:.2})">{}</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0,
        esc(y_label)
    );
    for (i, s) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let mut pts = String::new();
        for (x, y) in s.xs.iter().zip(&s.ys) {
            if x.is_finite() && y.is_finite() {
                let _ = write!(pts, "{:.2},{:.2} ", sx(*x), sy(*y));
            }
        }
        let dash = if s.dashed { r#" stroke-dasharray="6 4""# } else { "" };
        let _ = writeln!(
            out,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5"{dash} points="{}"/>"#,
            pts.trim_end()
        );
        let ly = TOP + 14.0 + 16.0 * i as f64;
        let lx = WIDTH - RIGHT - 150.0;
        let _ = writeln!(
            out,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="1.5"{dash}/><text x="{}" y="{}">{}</text>"#,
            lx + 24.0,
            lx + 30.0,
            ly + 4.0,
            esc(&s.label)
        );
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_charts_are_stable() {
        let s = vec![Series {
            label: "a<b".into(),
            xs: vec![0.0, 1.0, 2.0],
            ys: vec![0.0, 1.0, f64::NAN],
            dashed: true,
        }];
        let a = line_chart("t", "x", "y", &s, true);
        assert_eq!(a, line_chart("t", "x", "y", &s, true));
        assert!(a.contains("a&lt;b") && a.contains("stroke-dasharray"));
        assert!(!a.contains("<metadata>"));
        assert!(line_chart("t", "x", "y", &s, false).contains("<metadata>"));
    }
}
