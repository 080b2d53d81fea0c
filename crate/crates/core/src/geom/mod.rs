//! Planar geometry: Delaunay triangulation and the alpha-shape domain
//! estimator built on top of it.
//!
//! Predicates are evaluated in floating point with a relative tolerance of
//! [`PREDICATE_TOL`]; results within the tolerance band count as degenerate
//! (collinear, cocircular). Exact arithmetic is deliberately out of scope:
//! the inputs are noisy data clouds, not adversarial geometry.

mod alpha;
mod delaunay;

pub use alpha::{build_alpha_shape, AlphaShape, Domain, ShapeExport};
pub use delaunay::{delaunay, Triangulation};

use crate::error::{Error, Result};

/// Relative tolerance of the orientation and in-circle tests.
pub const PREDICATE_TOL: f64 = 1e-10;

/// A point in the plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub fn new(x: f64, y: f64) -> Self {
        Point2 { x, y }
    }

    pub fn dist(self, other: Point2) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

impl From<[f64; 2]> for Point2 {
    fn from(p: [f64; 2]) -> Self {
        Point2 { x: p[0], y: p[1] }
    }
}

impl From<Point2> for [f64; 2] {
    fn from(p: Point2) -> Self {
        [p.x, p.y]
    }
}

/// Twice the signed area of (a, b, c); positive for counterclockwise order.
pub(crate) fn orient_raw(a: Point2, b: Point2, c: Point2) -> f64 {
    (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
}

/// Sign of the orientation with the relative tolerance applied:
/// `1` counterclockwise, `-1` clockwise, `0` collinear within tolerance.
pub(crate) fn orient_sign(a: Point2, b: Point2, c: Point2) -> i8 {
    let det = orient_raw(a, b, c);
    // Scale by the product of edge norms, so the band corresponds to a
    // relative perpendicular offset from the line.
    let mag = ((b.x - a.x).abs() + (b.y - a.y).abs()) * ((c.x - a.x).abs() + (c.y - a.y).abs());
    if det.abs() <= PREDICATE_TOL * mag {
        0
    } else if det > 0.0 {
        1
    } else {
        -1
    }
}

/// True iff `d` lies strictly inside the circumcircle of the
/// counterclockwise triangle (a, b, c), beyond the predicate tolerance.
///
/// Coordinates are translated to `d` before forming the determinant, which
/// keeps the evaluation well conditioned even when the triangle involves the
/// far-away bounding vertices used during construction.
pub(crate) fn in_circle_strict(a: Point2, b: Point2, c: Point2, d: Point2) -> bool {
    let (ax, ay) = (a.x - d.x, a.y - d.y);
    let (bx, by) = (b.x - d.x, b.y - d.y);
    let (cx, cy) = (c.x - d.x, c.y - d.y);
    let a2 = ax * ax + ay * ay;
    let b2 = bx * bx + by * by;
    let c2 = cx * cx + cy * cy;
    let det = ax * (by * c2 - b2 * cy) - ay * (bx * c2 - b2 * cx) + a2 * (bx * cy - by * cx);
    let (la, lb, lc) = (ax.abs() + ay.abs(), bx.abs() + by.abs(), cx.abs() + cy.abs());
    let mag = la * lb * c2 + la * b2 * lc + a2 * lb * lc;
    det > PREDICATE_TOL * mag
}

/// Radius of the unique circle through `a`, `b`, `c`, computed as
/// `|ab| |bc| |ca| / (4 area)`.
pub fn circumradius(a: Point2, b: Point2, c: Point2) -> Result<f64> {
    if orient_sign(a, b, c) == 0 {
        return Err(Error::DegenerateGeometry(
            "circumradius of collinear points is undefined".into(),
        ));
    }
    let area2 = orient_raw(a, b, c).abs();
    Ok(a.dist(b) * b.dist(c) * c.dist(a) / (2.0 * area2))
}

/// Center of the circle through `a`, `b`, `c`.
pub fn circumcenter(a: Point2, b: Point2, c: Point2) -> Result<Point2> {
    if orient_sign(a, b, c) == 0 {
        return Err(Error::DegenerateGeometry(
            "circumcenter of collinear points is undefined".into(),
        ));
    }
    let d = 2.0 * orient_raw(a, b, c);
    let a2 = a.x * a.x + a.y * a.y;
    let b2 = b.x * b.x + b.y * b.y;
    let c2 = c.x * c.x + c.y * c.y;
    let ux = (a2 * (b.y - c.y) + b2 * (c.y - a.y) + c2 * (a.y - b.y)) / d;
    let uy = (a2 * (c.x - b.x) + b2 * (a.x - c.x) + c2 * (b.x - a.x)) / d;
    Ok(Point2::new(ux, uy))
}

/// Circumradius that reports degenerate triangles as infinite instead of
/// erroring; used by the alpha filter, where slivers are simply never kept.
pub(crate) fn circumradius_or_inf(a: Point2, b: Point2, c: Point2) -> f64 {
    circumradius(a, b, c).unwrap_or(f64::INFINITY)
}

/// Barycentric sign test: true iff `p` is inside or on the boundary of the
/// counterclockwise triangle (a, b, c), with the predicate tolerance counting
/// boundary grazes as inside.
pub(crate) fn point_in_triangle(p: Point2, a: Point2, b: Point2, c: Point2) -> bool {
    orient_sign(a, b, p) >= 0 && orient_sign(b, c, p) >= 0 && orient_sign(c, a, p) >= 0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn circumradius_right_triangle() {
        let r = circumradius(
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(0.0, 1.0),
        )
        .unwrap();
        assert!((r - std::f64::consts::SQRT_2 / 2.0).abs() < 1e-14);
    }

    #[test]
    fn circumradius_equilateral_cross_checked_against_center() {
        let a = Point2::new(0.0, 0.0);
        let b = Point2::new(1.0, 0.0);
        let c = Point2::new(0.5, 3.0f64.sqrt() / 2.0);
        let r = circumradius(a, b, c).unwrap();
        assert!((r - 0.57735).abs() < 1e-5);
        let center = circumcenter(a, b, c).unwrap();
        for v in [a, b, c] {
            assert!((center.dist(v) - r).abs() < 1e-12);
        }
    }

    #[test]
    fn circumradius_collinear_errors() {
        let err = circumradius(
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(2.0, 0.0),
        );
        assert!(matches!(err, Err(Error::DegenerateGeometry(_))));
    }

    #[test]
    fn orientation_signs() {
        let a = Point2::new(0.0, 0.0);
        let b = Point2::new(1.0, 0.0);
        assert_eq!(orient_sign(a, b, Point2::new(0.0, 1.0)), 1);
        assert_eq!(orient_sign(a, b, Point2::new(0.0, -1.0)), -1);
        assert_eq!(orient_sign(a, b, Point2::new(2.0, 0.0)), 0);
        // Within the relative tolerance band counts as collinear.
        assert_eq!(orient_sign(a, b, Point2::new(0.5, 1e-12)), 0);
    }

    #[test]
    fn in_circle_basic() {
        let a = Point2::new(0.0, 0.0);
        let b = Point2::new(2.0, 0.0);
        let c = Point2::new(1.0, 2.0);
        assert!(in_circle_strict(a, b, c, Point2::new(1.0, 0.5)));
        assert!(!in_circle_strict(a, b, c, Point2::new(50.0, 50.0)));
        // A triangle vertex is on the circle, not strictly inside.
        assert!(!in_circle_strict(a, b, c, a));
    }

    #[test]
    fn point_in_triangle_boundary_counts() {
        let a = Point2::new(0.0, 0.0);
        let b = Point2::new(4.0, 0.0);
        let c = Point2::new(0.0, 4.0);
        assert!(point_in_triangle(Point2::new(1.0, 1.0), a, b, c));
        assert!(point_in_triangle(Point2::new(2.0, 0.0), a, b, c));
        assert!(point_in_triangle(a, a, b, c));
        assert!(!point_in_triangle(Point2::new(3.0, 3.0), a, b, c));
    }
}
