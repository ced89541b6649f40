//! Self-contained SVG heatmaps with a linear colour scale.

use std::fmt::Write;

const STOPS: [(f64, f64, f64); 5] = [
    (68.0, 1.0, 84.0),
    (59.0, 82.0, 139.0),
    (33.0, 145.0, 140.0),
    (94.0, 201.0, 98.0),
    (253.0, 231.0, 37.0),
];

const CELL_AREA: f64 = 480.0;
const LEFT: f64 = 90.0;
const TOP: f64 = 50.0;
const MAX_TICKS: usize = 6;

/// A heatmap over `x_ticks.len() × y_ticks.len()` cells; `values[i * ny + j]` is
/// drawn at column `i`, row `j` counted from the bottom.
#[derive(Debug, Clone)]
pub struct Heatmap<'a> {
    pub title: &'a str,
    pub x_label: &'a str,
    pub y_label: &'a str,
    pub x_ticks: Vec<String>,
    pub y_ticks: Vec<String>,
    pub values: &'a [f64],
}

fn colour(frac: f64) -> String {
    let f = frac.clamp(0.0, 1.0) * (STOPS.len() - 1) as f64;
    let k = (f.floor() as usize).min(STOPS.len() - 2);
    let w = f - k as f64;
    let (a, b) = (STOPS[k], STOPS[k + 1]);
    let mix = |x: f64, y: f64| (x + (y - x) * w).round() as u8;
    format!("#{:02x}{:02x}{:02x}", mix(a.0, b.0), mix(a.1, b.1), mix(a.2, b.2))
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn tick_indices(n: usize) -> Vec<usize> {
    if n <= MAX_TICKS {
        return (0..n).collect();
    }
    let mut idx: Vec<usize> = (0..MAX_TICKS).map(|k| k * (n - 1) / (MAX_TICKS - 1)).collect();
    idx.dedup();
    idx
}

/// Short label for an axis value.
pub fn tick_label(x: f64) -> String {
    if x != 0.0 && (x.abs() < 1e-2 || x.abs() >= 1e4) {
        format!("{x:.2e}")
    } else {
        let s = format!("{x:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

impl Heatmap<'_> {
    pub fn render(&self) -> String {
        let nx = self.x_ticks.len();
        let ny = self.y_ticks.len();
        assert_eq!(self.values.len(), nx * ny, "heatmap values do not match the axes");
        let finite = self.values.iter().copied().filter(|v| v.is_finite());
        let (lo, hi) = finite.fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| (l.min(v), h.max(v)));
        let (lo, hi) = if lo <= hi { (lo, hi) } else { (0.0, 1.0) };
        let span = if hi > lo { hi - lo } else { 1.0 };

        let cw = CELL_AREA / nx.max(1) as f64;
        let ch = CELL_AREA / ny.max(1) as f64;
        let width = LEFT + CELL_AREA + 130.0;
        let height = TOP + CELL_AREA + 70.0;

        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
            LEFT + CELL_AREA / 2.0,
            escape(self.title)
        );
        for i in 0..nx {
            for j in 0..ny {
                let v = self.values[i * ny + j];
                let fill = if v.is_finite() { colour((v - lo) / span) } else { "#bbbbbb".into() };
                let x = LEFT + i as f64 * cw;
                let y = TOP + (ny - 1 - j) as f64 * ch;
                let _ = writeln!(
                    s,
                    r#"<rect x="{x:.3}" y="{y:.3}" width="{:.3}" height="{:.3}" fill="{fill}"/>"#,
                    cw + 0.05,
                    ch + 0.05
                );
            }
        }
        let _ = writeln!(
            s,
            r#"<rect x="{LEFT:.2}" y="{TOP:.2}" width="{CELL_AREA:.2}" height="{CELL_AREA:.2}" fill="none" stroke="black"/>"#
        );
        let base = TOP + CELL_AREA;
        for i in tick_indices(nx) {
            let x = LEFT + (i as f64 + 0.5) * cw;
            let _ = writeln!(
                s,
                r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
                base + 16.0,
                escape(&self.x_ticks[i])
            );
        }
        for j in tick_indices(ny) {
            let y = TOP + (ny as f64 - 1.0 - j as f64 + 0.5) * ch + 4.0;
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{y:.2}" text-anchor="end">{}</text>"#,
                LEFT - 6.0,
                escape(&self.y_ticks[j])
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            LEFT + CELL_AREA / 2.0,
            base + 40.0,
            escape(self.x_label)
        );
        let cy = TOP + CELL_AREA / 2.0;
        let _ = writeln!(
            s,
            r#"<text x="20" y="{cy:.2}" text-anchor="middle" transform="rotate(-90 20 {cy:.2})">{}</text>"#,
            escape(self.y_label)
        );

        // colour bar
        let bx = LEFT + CELL_AREA + 30.0;
        let steps = 50;
        let bh = CELL_AREA / steps as f64;
        for k in 0..steps {
            let frac = (steps - 1 - k) as f64 / (steps - 1) as f64;
            let _ = writeln!(
                s,
                r#"<rect x="{bx:.2}" y="{:.3}" width="20" height="{:.3}" fill="{}"/>"#,
                TOP + k as f64 * bh,
                bh + 0.05,
                colour(frac)
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}">{}</text>"#,
            bx + 26.0,
            TOP + 10.0,
            escape(&tick_label(hi))
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}">{}</text>"#,
            bx + 26.0,
            TOP + CELL_AREA,
            escape(&tick_label(lo))
        );
        s.push_str("</svg>\n");
        s
    }
}
