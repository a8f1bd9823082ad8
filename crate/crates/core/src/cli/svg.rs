//! Minimal self-contained SVG line plots and heatmaps.
//!
//! Coordinates are printed with fixed precision so identical data gives
//! byte-identical files.

use std::fmt::Write;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 110.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;

pub struct Series<'a> {
    pub label: &'a str,
    pub color: &'a str,
    pub x: &'a [f64],
    pub y: &'a [Option<f64>],
}

pub struct LinePlot<'a> {
    pub title: &'a str,
    pub x_label: &'a str,
    pub y_label: &'a str,
    pub series: Vec<Series<'a>>,
    pub description: &'a str,
}

pub struct Heatmap<'a> {
    pub title: &'a str,
    pub x_label: &'a str,
    pub y_label: &'a str,
    pub value_label: &'a str,
    /// Column coordinates.
    pub x: &'a [f64],
    /// Row coordinates.
    pub y: &'a [f64],
    /// `values[row][column]`; `None` is drawn as a gray cell.
    pub values: &'a [Vec<Option<f64>>],
    pub description: &'a str,
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

fn nice_ticks(lo: f64, hi: f64) -> Vec<f64> {
    if !(hi > lo) {
        return vec![lo];
    }
    let raw = (hi - lo) / 5.0;
    let magnitude = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * magnitude)
        .find(|&s| s >= raw)
        .unwrap_or(10.0 * magnitude);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|i| i as f64 * step).collect()
}

fn tick_label(value: f64) -> String {
    let text = format!("{:.4}", value);
    let text = text.trim_end_matches('0').trim_end_matches('.');
    if text == "-0" {
        "0".into()
    } else {
        text.into()
    }
}

fn extent<'a>(values: impl Iterator<Item = &'a f64>) -> (f64, f64) {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if !lo.is_finite() {
        (0.0, 1.0)
    } else if lo == hi {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
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
            r#"<rect x="{x0:.2}" y="{y1:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="black"/>"#,
            x1 - x0,
            y0 - y1
        );
        for t in nice_ticks(self.x.0, self.x.1) {
            let x = self.px(t);
            let _ = writeln!(
                out,
                r#"<line x1="{x:.2}" y1="{y0:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/><text x="{x:.2}" y="{:.2}" font-size="12" text-anchor="middle">{}</text>"#,
                y0 + 5.0,
                y0 + 20.0,
                tick_label(t)
            );
        }
        for t in nice_ticks(self.y.0, self.y.1) {
            let y = self.py(t);
            let _ = writeln!(
                out,
                r#"<line x1="{:.2}" y1="{y:.2}" x2="{x0:.2}" y2="{y:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" font-size="12" text-anchor="end">{}</text>"#,
                x0 - 5.0,
                x0 - 8.0,
                y + 4.0,
                tick_label(t)
            );
        }
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="24" font-size="15" text-anchor="middle">{}</text>"#,
            0.5 * (x0 + x1),
            escape(title)
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" font-size="13" text-anchor="middle">{}</text>"#,
            0.5 * (x0 + x1),
            HEIGHT - 15.0,
            escape(x_label)
        );
        let _ = writeln!(
            out,
            r#"<text x="20" y="{:.2}" font-size="13" text-anchor="middle" transform="rotate(-90 20 {:.2})">{}</text>"#,
            0.5 * (y0 + y1),
            0.5 * (y0 + y1),
            escape(y_label)
        );
    }
}

fn header(out: &mut String, description: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif">"#
    );
    let _ = writeln!(out, "<desc>{}</desc>", escape(description));
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
}

impl LinePlot<'_> {
    pub fn render(&self) -> String {
        let xs = self.series.iter().flat_map(|s| s.x.iter());
        let ys: Vec<f64> = self
            .series
            .iter()
            .flat_map(|s| s.y.iter().flatten().copied())
            .collect();
        let frame = Frame {
            x: extent(xs),
            y: extent(ys.iter()),
        };

        let mut out = String::new();
        header(&mut out, self.description);
        frame.axes(&mut out, self.title, self.x_label, self.y_label);
        for (index, series) in self.series.iter().enumerate() {
            // flagged points break the line
            let mut segment: Vec<String> = Vec::new();
            let flush = |segment: &mut Vec<String>, out: &mut String| {
                if segment.len() > 1 {
                    let _ = writeln!(
                        out,
                        r#"<polyline fill="none" stroke="{}" stroke-width="1.5" points="{}"/>"#,
                        series.color,
                        segment.join(" ")
                    );
                }
                segment.clear();
            };
            for (x, y) in series.x.iter().zip(series.y) {
                match y {
                    Some(y) if y.is_finite() => {
                        segment.push(format!("{:.2},{:.2}", frame.px(*x), frame.py(*y)))
                    }
                    _ => flush(&mut segment, &mut out),
                }
            }
            flush(&mut segment, &mut out);

            let ly = TOP + 10.0 + 18.0 * index as f64;
            let lx = WIDTH - RIGHT + 8.0;
            let _ = writeln!(
                out,
                r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{}" stroke-width="2"/><text x="{:.2}" y="{:.2}" font-size="11">{}</text>"#,
                lx + 16.0,
                series.color,
                lx + 20.0,
                ly + 4.0,
                escape(series.label)
            );
        }
        out.push_str("</svg>\n");
        out
    }
}

/// Piecewise-linear approximation of the viridis colormap.
fn viridis(t: f64) -> String {
    const STOPS: [(f64, f64, f64); 5] = [
        (68.0, 1.0, 84.0),
        (59.0, 82.0, 139.0),
        (33.0, 145.0, 140.0),
        (94.0, 201.0, 98.0),
        (253.0, 231.0, 37.0),
    ];
    let t = t.clamp(0.0, 1.0) * (STOPS.len() - 1) as f64;
    let i = (t.floor() as usize).min(STOPS.len() - 2);
    let f = t - i as f64;
    let (a, b) = (STOPS[i], STOPS[i + 1]);
    let mix = |p: f64, q: f64| (p + f * (q - p)).round() as u8;
    format!("#{:02x}{:02x}{:02x}", mix(a.0, b.0), mix(a.1, b.1), mix(a.2, b.2))
}

fn cell_edges(centers: &[f64]) -> Vec<f64> {
    match centers.len() {
        0 => Vec::new(),
        1 => vec![centers[0] - 0.5, centers[0] + 0.5],
        n => {
            let mut edges = Vec::with_capacity(n + 1);
            edges.push(centers[0] - 0.5 * (centers[1] - centers[0]));
            for pair in centers.windows(2) {
                edges.push(0.5 * (pair[0] + pair[1]));
            }
            edges.push(centers[n - 1] + 0.5 * (centers[n - 1] - centers[n - 2]));
            edges
        }
    }
}

impl Heatmap<'_> {
    pub fn render(&self) -> String {
        let x_edges = cell_edges(self.x);
        let y_edges = cell_edges(self.y);
        let frame = Frame {
            x: extent(x_edges.iter()),
            y: extent(y_edges.iter()),
        };
        let (v_lo, v_hi) = extent(self.values.iter().flat_map(|row| row.iter().flatten()));

        let mut out = String::new();
        header(&mut out, self.description);
        for (r, row) in self.values.iter().enumerate() {
            for (c, value) in row.iter().enumerate() {
                let fill = match value {
                    Some(v) if v.is_finite() => viridis((v - v_lo) / (v_hi - v_lo)),
                    _ => "#bbbbbb".to_string(),
                };
                let (xa, xb) = (frame.px(x_edges[c]), frame.px(x_edges[c + 1]));
                let (ya, yb) = (frame.py(y_edges[r + 1]), frame.py(y_edges[r]));
                let _ = writeln!(
                    out,
                    r#"<rect x="{xa:.2}" y="{ya:.2}" width="{:.2}" height="{:.2}" fill="{fill}" stroke="{fill}" stroke-width="0.3"/>"#,
                    xb - xa,
                    yb - ya
                );
            }
        }
        frame.axes(&mut out, self.title, self.x_label, self.y_label);

        // colorbar
        let bar_x = WIDTH - RIGHT + 20.0;
        let steps = 50;
        let span = HEIGHT - TOP - BOTTOM;
        for i in 0..steps {
            let t = i as f64 / (steps - 1) as f64;
            let y = HEIGHT - BOTTOM - (i + 1) as f64 * span / steps as f64;
            let _ = writeln!(
                out,
                r#"<rect x="{bar_x:.2}" y="{y:.2}" width="16" height="{:.2}" fill="{}"/>"#,
                span / steps as f64 + 0.2,
                viridis(t)
            );
        }
        let bar = Frame {
            x: (0.0, 1.0),
            y: (v_lo, v_hi),
        };
        for t in nice_ticks(v_lo, v_hi) {
            let _ = writeln!(
                out,
                r#"<text x="{:.2}" y="{:.2}" font-size="11">{}</text>"#,
                bar_x + 20.0,
                bar.py(t) + 4.0,
                tick_label(t)
            );
        }
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" font-size="12" text-anchor="middle">{}</text>"#,
            bar_x + 8.0,
            TOP - 8.0,
            escape(self.value_label)
        );
        out.push_str("</svg>\n");
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ticks_are_round() {
        assert_eq!(nice_ticks(1.0, 11.0), vec![2.0, 4.0, 6.0, 8.0, 10.0]);
        assert_eq!(nice_ticks(0.0, 1.0), vec![0.0, 0.2, 0.4, 0.6000000000000001, 0.8, 1.0]);
        assert_eq!(tick_label(0.6000000000000001), "0.6");
    }

    #[test]
    fn flagged_points_split_polylines() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0];
        let y = [Some(1.0), Some(2.0), None, Some(3.0), Some(1.0)];
        let svg = LinePlot {
            title: "t",
            x_label: "x",
            y_label: "y",
            series: vec![Series { label: "a", color: "black", x: &x, y: &y }],
            description: "a <b>",
        }
        .render();
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains("a &lt;b&gt;"));
    }

    #[test]
    fn heatmap_marks_missing_cells() {
        let values = vec![vec![Some(0.0), None], vec![Some(1.0), Some(2.0)]];
        let svg = Heatmap {
            title: "t",
            x_label: "x",
            y_label: "y",
            value_label: "dB",
            x: &[1.0, 2.0],
            y: &[10.0, 20.0],
            values: &values,
            description: "",
        }
        .render();
        assert_eq!(svg.matches("#bbbbbb").count(), 2);
        assert!(svg.contains(&viridis(0.0)) && svg.contains(&viridis(1.0)));
    }
}
