//! Minimal self-contained SVG plots.

use std::fmt::Write;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 200.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

/// Viridis-like colour stops for the heatmap.
const STOPS: [(f64, [u8; 3]); 5] = [
    (0.0, [68, 1, 84]),
    (0.25, [59, 82, 139]),
    (0.5, [33, 145, 140]),
    (0.75, [94, 201, 98]),
    (1.0, [253, 231, 37]),
];

#[derive(Clone, Debug, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Range padded so that a degenerate span still has width.
fn span(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 * lo.abs().max(1.0) {
        let pad = 0.5 * lo.abs().max(1.0);
        return (lo - pad, hi + pad);
    }
    (lo, hi)
}

/// Roughly five round tick values inside `[lo, hi]`.
fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let raw = (hi - lo) / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step + 1e-9).floor() as i64;
    (first..=last).map(|i| i as f64 * step).collect()
}

fn label(v: f64) -> String {
    if v != 0.0 && (v.abs() < 1e-3 || v.abs() >= 1e5) {
        format!("{v:.2e}")
    } else {
        let s = format!("{v:.4}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

struct Frame {
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x.0) / (self.x.1 - self.x.0) * (WIDTH - LEFT - RIGHT)
    }
    fn py(&self, y: f64) -> f64 {
        HEIGHT - BOTTOM - (y - self.y.0) / (self.y.1 - self.y.0) * (HEIGHT - TOP - BOTTOM)
    }

    fn axes(&self, out: &mut String, title: &str, x_label: &str, y_label: &str) {
        let (x0, x1) = (LEFT, WIDTH - RIGHT);
        let (y0, y1) = (HEIGHT - BOTTOM, TOP);
        let _ = writeln!(
            out,
            r#"<rect x="{x0}" y="{y1}" width="{}" height="{}" fill="none" stroke="black"/>"#,
            x1 - x0,
            y0 - y1
        );
        for t in ticks(self.x.0, self.x.1) {
            let x = self.px(t);
            let _ = writeln!(
                out,
                r#"<line x1="{x:.2}" y1="{y0}" x2="{x:.2}" y2="{}" stroke="black"/><text x="{x:.2}" y="{}" text-anchor="middle" font-size="12">{}</text>"#,
                y0 + 5.0,
                y0 + 20.0,
                label(t)
            );
        }
        for t in ticks(self.y.0, self.y.1) {
            let y = self.py(t);
            let _ = writeln!(
                out,
                r#"<line x1="{}" y1="{y:.2}" x2="{x0}" y2="{y:.2}" stroke="black"/><text x="{}" y="{:.2}" text-anchor="end" font-size="12">{}</text>"#,
                x0 - 5.0,
                x0 - 8.0,
                y + 4.0,
                label(t)
            );
        }
        let _ = writeln!(
            out,
            r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
            (x0 + x1) / 2.0,
            escape(title)
        );
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" text-anchor="middle" font-size="13">{}</text>"#,
            (x0 + x1) / 2.0,
            HEIGHT - 15.0,
            escape(x_label)
        );
        let _ = writeln!(
            out,
            r#"<text x="20" y="{0}" text-anchor="middle" font-size="13" transform="rotate(-90 20 {0})">{1}</text>"#,
            (y0 + y1) / 2.0,
            escape(y_label)
        );
    }
}

fn open() -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    out
}

/// Scatter plot with one colour per series and a legend on the right.
pub fn scatter(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let all = || series.iter().flat_map(|s| s.points.iter());
    let frame = Frame {
        x: span(all().map(|p| p.0)),
        y: span(all().map(|p| p.1)),
    };
    let mut out = open();
    frame.axes(&mut out, title, x_label, y_label);
    for (i, s) in series.iter().enumerate() {
        let colour = PALETTE[i % PALETTE.len()];
        for &(x, y) in s.points.iter().filter(|p| p.0.is_finite() && p.1.is_finite()) {
            let _ = writeln!(
                out,
                r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{colour}"/>"#,
                frame.px(x),
                frame.py(y)
            );
        }
        let ly = TOP + 10.0 + 20.0 * i as f64;
        let lx = WIDTH - RIGHT + 15.0;
        let _ = writeln!(
            out,
            r#"<circle cx="{lx}" cy="{ly}" r="4" fill="{colour}"/><text x="{}" y="{}" font-size="12">{}</text>"#,
            lx + 10.0,
            ly + 4.0,
            escape(&s.label)
        );
    }
    out.push_str("</svg>\n");
    out
}

fn colour(f: f64) -> String {
    let f = f.clamp(0.0, 1.0);
    let k = STOPS.iter().position(|s| s.0 >= f).unwrap_or(STOPS.len() - 1).max(1);
    let (a, b) = (STOPS[k - 1], STOPS[k]);
    let w = (f - a.0) / (b.0 - a.0);
    let mix = |i: usize| (a.1[i] as f64 + w * (b.1[i] as f64 - a.1[i] as f64)).round() as u8;
    format!("#{:02x}{:02x}{:02x}", mix(0), mix(1), mix(2))
}

/// Heatmap of `values[i][j]` at `(xs[i], ys[j])` on a linear colour scale;
/// missing cells are drawn grey.
pub fn heatmap(
    title: &str,
    x_label: &str,
    y_label: &str,
    xs: &[f64],
    ys: &[f64],
    values: &[Vec<Option<f64>>],
) -> String {
    // Cell edges halfway between grid points.
    let edges = |v: &[f64]| -> Vec<f64> {
        match v.len() {
            0 => vec![0.0, 1.0],
            1 => vec![v[0] - 0.5, v[0] + 0.5],
            n => {
                let mut e = Vec::with_capacity(n + 1);
                e.push(v[0] - (v[1] - v[0]) / 2.0);
                for w in v.windows(2) {
                    e.push((w[0] + w[1]) / 2.0);
                }
                e.push(v[n - 1] + (v[n - 1] - v[n - 2]) / 2.0);
                e
            }
        }
    };
    let (ex, ey) = (edges(xs), edges(ys));
    let frame = Frame {
        x: (ex[0], ex[ex.len() - 1]),
        y: (ey[0], ey[ey.len() - 1]),
    };
    let (lo, hi) = span(values.iter().flatten().flatten().copied());
    let mut out = open();
    for (i, column) in values.iter().enumerate().take(xs.len()) {
        for (j, v) in column.iter().enumerate().take(ys.len()) {
            let fill = match v {
                Some(v) if v.is_finite() => colour((v - lo) / (hi - lo)),
                _ => "#bbbbbb".to_string(),
            };
            let (x0, x1) = (frame.px(ex[i]), frame.px(ex[i + 1]));
            let (y0, y1) = (frame.py(ey[j + 1]), frame.py(ey[j]));
            let _ = writeln!(
                out,
                r#"<rect x="{x0:.2}" y="{y0:.2}" width="{:.2}" height="{:.2}" fill="{fill}"/>"#,
                x1 - x0 + 0.3,
                y1 - y0 + 0.3
            );
        }
    }
    frame.axes(&mut out, title, x_label, y_label);
    let bar_x = WIDTH - RIGHT + 30.0;
    let bar_h = HEIGHT - TOP - BOTTOM;
    const STEPS: usize = 50;
    for s in 0..STEPS {
        let f = s as f64 / (STEPS - 1) as f64;
        let y = TOP + bar_h * (1.0 - (s + 1) as f64 / STEPS as f64);
        let _ = writeln!(
            out,
            r#"<rect x="{bar_x}" y="{y:.2}" width="20" height="{:.2}" fill="{}"/>"#,
            bar_h / STEPS as f64 + 0.3,
            colour(f)
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" font-size="12">{}</text><text x="{}" y="{}" font-size="12">{}</text>"#,
        bar_x + 26.0,
        TOP + 10.0,
        label(hi),
        bar_x + 26.0,
        TOP + bar_h,
        label(lo)
    );
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scatter_contains_points_and_legend() {
        let s = scatter(
            "a < b",
            "k",
            "P",
            &[
                Series {
                    label: "plus / exact".into(),
                    points: vec![(1.0, 0.5), (2.0, 0.9)],
                },
                Series {
                    label: "empty".into(),
                    points: vec![],
                },
            ],
        );
        assert!(s.starts_with("<svg"));
        assert!(s.trim_end().ends_with("</svg>"));
        assert_eq!(s.matches("<circle").count(), 2 + 2);
        assert!(s.contains("a &lt; b"));
        assert!(s.contains("plus / exact"));
    }

    #[test]
    fn heatmap_cells() {
        let xs = [1.0, 2.0, 3.0];
        let ys = [0.0, 0.5];
        let values = vec![
            vec![Some(0.0), Some(1.0)],
            vec![None, Some(0.5)],
            vec![Some(0.25), Some(0.75)],
        ];
        let s = heatmap("m", "x", "y", &xs, &ys, &values);
        assert!(s.contains("#bbbbbb"));
        assert!(s.contains("#440154"));
        assert!(s.contains("#fde725"));
        let single = heatmap("m", "x", "y", &[1.0], &[0.0], &[vec![Some(0.0)]]);
        assert!(single.contains("<rect"));
    }

    #[test]
    fn tick_values() {
        let t = ticks(0.0, 1.0);
        assert_eq!(t.len(), 6);
        assert!(t.iter().zip([0.0, 0.2, 0.4, 0.6, 0.8, 1.0]).all(|(a, b)| (a - b).abs() < 1e-12));
        assert_eq!(ticks(1.0, 30.0), vec![10.0, 20.0, 30.0]);
        assert_eq!(span([2.0, 2.0].into_iter()), (1.0, 3.0));
    }
}
