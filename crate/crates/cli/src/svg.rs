//! Minimal deterministic SVG output: a world-to-pixel transform, a few
//! primitives, and marching-squares contour extraction.

use std::fmt::Write as _;

/// Maps a world rectangle onto a `width` x `height` canvas, y pointing up.
#[derive(Debug, Clone, Copy)]
pub struct Viewport {
    pub min: [f64; 2],
    pub max: [f64; 2],
    pub width: f64,
    pub height: f64,
}

impl Viewport {
    /// Keeps the aspect ratio of the world box; `width` is fixed.
    pub fn fit(min: [f64; 2], max: [f64; 2], width: f64) -> Self {
        let height = width * (max[1] - min[1]) / (max[0] - min[0]);
        Self { min, max, width, height }
    }

    pub fn x(&self, x: f64) -> f64 {
        (x - self.min[0]) / (self.max[0] - self.min[0]) * self.width
    }

    pub fn y(&self, y: f64) -> f64 {
        (self.max[1] - y) / (self.max[1] - self.min[1]) * self.height
    }

    pub fn scale(&self) -> f64 {
        self.width / (self.max[0] - self.min[0])
    }
}

pub struct Svg {
    view: Viewport,
    body: String,
}

impl Svg {
    pub fn new(view: Viewport) -> Self {
        Self {
            view,
            body: String::new(),
        }
    }

    pub fn line(&mut self, a: [f64; 2], b: [f64; 2], class: &str) {
        let v = self.view;
        writeln!(
            self.body,
            r#"<line class="{class}" x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="black" stroke-width="3"/>"#,
            v.x(a[0]),
            v.y(a[1]),
            v.x(b[0]),
            v.y(b[1])
        )
        .unwrap();
    }

    pub fn rect(&mut self, min: [f64; 2], max: [f64; 2], class: &str, fill: &str) {
        let v = self.view;
        writeln!(
            self.body,
            r#"<rect class="{class}" x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{fill}" fill-opacity="0.3"/>"#,
            v.x(min[0]),
            v.y(max[1]),
            v.x(max[0]) - v.x(min[0]),
            v.y(min[1]) - v.y(max[1])
        )
        .unwrap();
    }

    pub fn circle(&mut self, c: [f64; 2], radius_px: f64, class: &str, fill: &str) {
        let v = self.view;
        writeln!(
            self.body,
            r#"<circle class="{class}" cx="{:.2}" cy="{:.2}" r="{radius_px:.2}" fill="{fill}"/>"#,
            v.x(c[0]),
            v.y(c[1])
        )
        .unwrap();
    }

    /// Circle with a radius in world units.
    pub fn disk(&mut self, c: [f64; 2], radius: f64, class: &str, fill: &str) {
        let r = radius * self.view.scale();
        self.circle(c, r, class, fill);
    }

    pub fn polyline(&mut self, points: &[[f64; 2]], class: &str, stroke: &str) {
        let v = self.view;
        let pts: Vec<String> = points
            .iter()
            .map(|p| format!("{:.2},{:.2}", v.x(p[0]), v.y(p[1])))
            .collect();
        writeln!(
            self.body,
            r#"<polyline class="{class}" points="{}" fill="none" stroke="{stroke}" stroke-width="2"/>"#,
            pts.join(" ")
        )
        .unwrap();
    }

    /// Unconnected segments drawn as one path.
    pub fn segments(&mut self, segs: &[([f64; 2], [f64; 2])], class: &str, stroke: &str) {
        if segs.is_empty() {
            return;
        }
        let v = self.view;
        let mut d = String::new();
        for (a, b) in segs {
            write!(d, "M{:.2} {:.2}L{:.2} {:.2}", v.x(a[0]), v.y(a[1]), v.x(b[0]), v.y(b[1])).unwrap();
        }
        writeln!(
            self.body,
            r#"<path class="{class}" d="{d}" fill="none" stroke="{stroke}" stroke-width="1"/>"#
        )
        .unwrap();
    }

    pub fn finish(self) -> String {
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{:.0}\" height=\"{:.0}\" viewBox=\"0 0 {:.0} {:.0}\">\n{}</svg>\n",
            self.view.width, self.view.height, self.view.width, self.view.height, self.body
        )
    }
}

/// Iso-segments of `f = level` over a regular grid on `[min, max]` with
/// `n x n` cells.
///
/// Saddle cells are resolved by the value at the cell center.
pub fn marching_squares(
    f: &dyn Fn(f64, f64) -> f64,
    min: [f64; 2],
    max: [f64; 2],
    n: usize,
    level: f64,
) -> Vec<([f64; 2], [f64; 2])> {
    let hx = (max[0] - min[0]) / n as f64;
    let hy = (max[1] - min[1]) / n as f64;
    let grid: Vec<Vec<f64>> = (0..=n)
        .map(|j| (0..=n).map(|i| f(min[0] + i as f64 * hx, min[1] + j as f64 * hy)).collect())
        .collect();
    let mut out = Vec::new();
    for j in 0..n {
        for i in 0..n {
            let x0 = min[0] + i as f64 * hx;
            let y0 = min[1] + j as f64 * hy;
            // corners counterclockwise from bottom-left
            let p = [[x0, y0], [x0 + hx, y0], [x0 + hx, y0 + hy], [x0, y0 + hy]];
            let v = [grid[j][i], grid[j][i + 1], grid[j + 1][i + 1], grid[j + 1][i]];
            let edge = |k: usize| {
                let (a, b) = (k, (k + 1) % 4);
                let t = (level - v[a]) / (v[b] - v[a]);
                [p[a][0] + t * (p[b][0] - p[a][0]), p[a][1] + t * (p[b][1] - p[a][1])]
            };
            let crosses: Vec<usize> = (0..4)
                .filter(|&k| (v[k] < level) != (v[(k + 1) % 4] < level))
                .collect();
            match crosses.len() {
                2 => out.push((edge(crosses[0]), edge(crosses[1]))),
                4 => {
                    let center_below = f(x0 + hx / 2.0, y0 + hy / 2.0) < level;
                    if center_below == (v[0] < level) {
                        out.push((edge(0), edge(1)));
                        out.push((edge(2), edge(3)));
                    } else {
                        out.push((edge(3), edge(0)));
                        out.push((edge(1), edge(2)));
                    }
                }
                _ => {}
            }
        }
    }
    out
}
