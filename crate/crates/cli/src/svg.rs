//! Minimal SVG scatter plots: data cloud, shape outline, sample clouds and
//! probe markers. Pure view layer; nothing here feeds back into the numbers.

use std::fmt::Write;

use localex::geom::AlphaShape;

pub struct Scatter {
    width: f64,
    height: f64,
    min: [f64; 2],
    max: [f64; 2],
    body: String,
}

impl Scatter {
    /// A canvas covering the given data bounds plus a 5% margin.
    pub fn new(min: [f64; 2], max: [f64; 2]) -> Self {
        let pad = [
            0.05 * (max[0] - min[0]).max(1.0),
            0.05 * (max[1] - min[1]).max(1.0),
        ];
        Scatter {
            width: 900.0,
            height: 900.0,
            min: [min[0] - pad[0], min[1] - pad[1]],
            max: [max[0] + pad[0], max[1] + pad[1]],
            body: String::new(),
        }
    }

    pub fn bounds_of(points: impl Iterator<Item = [f64; 2]>) -> ([f64; 2], [f64; 2]) {
        let mut min = [f64::INFINITY; 2];
        let mut max = [f64::NEG_INFINITY; 2];
        for p in points {
            for axis in 0..2 {
                min[axis] = min[axis].min(p[axis]);
                max[axis] = max[axis].max(p[axis]);
            }
        }
        if !min[0].is_finite() {
            (min, max) = ([-1.0, -1.0], [1.0, 1.0]);
        }
        (min, max)
    }

    fn to_px(&self, p: [f64; 2]) -> (f64, f64) {
        let sx = self.width / (self.max[0] - self.min[0]);
        let sy = self.height / (self.max[1] - self.min[1]);
        (
            (p[0] - self.min[0]) * sx,
            // SVG y grows downward.
            self.height - (p[1] - self.min[1]) * sy,
        )
    }

    pub fn circles(&mut self, points: &[[f64; 2]], radius: f64, color: &str, opacity: f64) {
        for &p in points {
            let (x, y) = self.to_px(p);
            let _ = write!(
                self.body,
                r#"<circle cx="{x:.1}" cy="{y:.1}" r="{radius}" fill="{color}" fill-opacity="{opacity}"/>"#
            );
            self.body.push('\n');
        }
    }

    /// The outline of the kept region: every edge used by exactly one
    /// triangle.
    pub fn shape_outline(&mut self, shape: &AlphaShape, color: &str) {
        for [u, v] in shape.boundary_edges() {
            let a = shape.vertices()[u];
            let b = shape.vertices()[v];
            let (x1, y1) = self.to_px([a.x, a.y]);
            let (x2, y2) = self.to_px([b.x, b.y]);
            let _ = write!(
                self.body,
                r#"<line x1="{x1:.1}" y1="{y1:.1}" x2="{x2:.1}" y2="{y2:.1}" stroke="{color}" stroke-width="1"/>"#
            );
            self.body.push('\n');
        }
    }

    pub fn cross(&mut self, p: [f64; 2], size: f64, color: &str) {
        let (x, y) = self.to_px(p);
        let _ = write!(
            self.body,
            r#"<path d="M {x0:.1} {y:.1} H {x1:.1} M {x:.1} {y0:.1} V {y1:.1}" stroke="{color}" stroke-width="2.5"/>"#,
            x0 = x - size,
            x1 = x + size,
            y0 = y - size,
            y1 = y + size,
        );
        self.body.push('\n');
    }

    pub fn finish(self, title: &str) -> String {
        format!(
            concat!(
                r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" "#,
                r#"viewBox="0 0 {w} {h}">"#,
                "\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n",
                "<title>{title}</title>\n{body}</svg>\n"
            ),
            w = self.width,
            h = self.height,
            title = title,
            body = self.body,
        )
    }
}
