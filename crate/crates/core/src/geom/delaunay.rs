//! Incremental Delaunay triangulation.
//!
//! Points are inserted one at a time, in a seeded-shuffle order, into a large
//! bounding triangle. Each insertion splits the containing triangle (or the
//! two triangles sharing an edge, when the point lands on one) and restores
//! the Delaunay property with Lawson edge flips. Dead triangles keep links to
//! their replacements, forming a history DAG that locates later points in
//! expected logarithmic time under the shuffled order.
//!
//! The bounding triangle is finite but four orders of magnitude larger than
//! the data extent. Together with the tolerance-based predicates this keeps
//! every test well conditioned; only triangles with circumradius beyond
//! 10^4 times the data extent can be affected by its finiteness, far outside
//! the alpha scales this module feeds.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{in_circle_strict, orient_raw, orient_sign, Point2};
use crate::error::{Error, Result};

/// Fixed seed of the insertion-order shuffle. The shuffle randomizes the
/// insertion sequence (for expected O(n log n) construction and to break
/// cocircular ties by order), while keeping the result a pure function of
/// the input.
pub const INSERTION_SHUFFLE_SEED: u64 = 0x2D0C_A11E;

const SUPER_SCALE: f64 = 1.0e4;

/// A Delaunay triangulation of a deduplicated point set.
#[derive(Debug, Clone, PartialEq)]
pub struct Triangulation {
    vertices: Vec<Point2>,
    triangles: Vec<[usize; 3]>,
}

impl Triangulation {
    /// The distinct input points, in first-occurrence order.
    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    /// Vertex-index triples, each in counterclockwise order.
    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn triangle_points(&self, t: [usize; 3]) -> [Point2; 3] {
        [
            self.vertices[t[0]],
            self.vertices[t[1]],
            self.vertices[t[2]],
        ]
    }
}

/// Triangulate `points` (at least three distinct, not all collinear).
pub fn delaunay(points: &[Point2]) -> Result<Triangulation> {
    let vertices = dedup(points);
    if vertices.len() < 3 {
        return Err(Error::DegenerateGeometry(format!(
            "triangulation needs at least 3 distinct points, got {}",
            vertices.len()
        )));
    }
    if !has_non_collinear_triple(&vertices) {
        return Err(Error::DegenerateGeometry(
            "all points are collinear".into(),
        ));
    }

    let mut order: Vec<usize> = (0..vertices.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(INSERTION_SHUFFLE_SEED));

    let mut mesh = Mesh::new(&vertices);
    for &i in &order {
        mesh.insert(i as u32);
    }
    let triangles = mesh.finish();
    Ok(Triangulation {
        vertices,
        triangles,
    })
}

fn dedup(points: &[Point2]) -> Vec<Point2> {
    let mut seen = HashMap::with_capacity(points.len());
    let mut unique = Vec::with_capacity(points.len());
    for p in points {
        let key = (p.x.to_bits(), p.y.to_bits());
        seen.entry(key).or_insert_with(|| {
            unique.push(*p);
            unique.len() - 1
        });
    }
    unique
}

fn has_non_collinear_triple(pts: &[Point2]) -> bool {
    let p0 = pts[0];
    // Anchor the test line on the point farthest from p0 for stability.
    let p1 = *pts[1..]
        .iter()
        .max_by(|a, b| p0.dist(**a).total_cmp(&p0.dist(**b)))
        .expect("len checked >= 3");
    pts.iter().any(|&p| orient_sign(p0, p1, p) != 0)
}

struct Tri {
    v: [u32; 3],
    /// Replacement triangles; empty means the triangle is live.
    children: Vec<u32>,
}

struct Mesh {
    pts: Vec<Point2>,
    n_data: u32,
    tris: Vec<Tri>,
    /// Directed edge (u, v) -> live triangle listing u, v consecutively.
    edge: HashMap<(u32, u32), u32>,
}

impl Mesh {
    fn new(data: &[Point2]) -> Self {
        let (mut min_x, mut min_y) = (f64::INFINITY, f64::INFINITY);
        let (mut max_x, mut max_y) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in data {
            min_x = min_x.min(p.x);
            min_y = min_y.min(p.y);
            max_x = max_x.max(p.x);
            max_y = max_y.max(p.y);
        }
        let cx = 0.5 * (min_x + max_x);
        let cy = 0.5 * (min_y + max_y);
        let r = SUPER_SCALE * (0.5 * (max_x - min_x)).max(0.5 * (max_y - min_y)).max(1.0);

        let n_data = data.len() as u32;
        let mut pts = data.to_vec();
        // Equilateral triangle with inradius r about the bounding-box center.
        pts.push(Point2::new(cx, cy + 2.0 * r));
        pts.push(Point2::new(cx - 3.0f64.sqrt() * r, cy - r));
        pts.push(Point2::new(cx + 3.0f64.sqrt() * r, cy - r));

        let root = Tri {
            v: [n_data, n_data + 1, n_data + 2],
            children: Vec::new(),
        };
        let mut edge = HashMap::new();
        edge.insert((n_data, n_data + 1), 0);
        edge.insert((n_data + 1, n_data + 2), 0);
        edge.insert((n_data + 2, n_data), 0);
        Mesh {
            pts,
            n_data,
            tris: vec![root],
            edge,
        }
    }

    fn point(&self, i: u32) -> Point2 {
        self.pts[i as usize]
    }

    fn alive(&self, t: u32) -> bool {
        self.tris[t as usize].children.is_empty()
    }

    fn corners(&self, t: u32) -> [Point2; 3] {
        let v = self.tris[t as usize].v;
        [self.point(v[0]), self.point(v[1]), self.point(v[2])]
    }

    fn push_tri(&mut self, v: [u32; 3]) -> u32 {
        let id = self.tris.len() as u32;
        self.tris.push(Tri {
            v,
            children: Vec::new(),
        });
        for k in 0..3 {
            self.edge.insert((v[k], v[(k + 1) % 3]), id);
        }
        id
    }

    fn insert(&mut self, pi: u32) {
        let p = self.point(pi);
        let (t, on_edge) = self.locate(p);
        let suspects = match on_edge {
            Some(k) => self.split_edge(t, k, pi),
            None => self.split_interior(t, pi),
        };
        self.legalize(pi, suspects);
    }

    /// Walk the history DAG to the live triangle containing `p`.
    fn locate(&self, p: Point2) -> (u32, Option<usize>) {
        let mut cur = 0u32;
        loop {
            let tri = &self.tris[cur as usize];
            if tri.children.is_empty() {
                break;
            }
            let mut next = None;
            let mut best = (f64::NEG_INFINITY, tri.children[0]);
            for &child in &tri.children {
                let [a, b, c] = self.corners(child);
                if orient_sign(a, b, p) >= 0
                    && orient_sign(b, c, p) >= 0
                    && orient_sign(c, a, p) >= 0
                {
                    next = Some(child);
                    break;
                }
                let margin = orient_raw(a, b, p)
                    .min(orient_raw(b, c, p))
                    .min(orient_raw(c, a, p));
                if margin > best.0 {
                    best = (margin, child);
                }
            }
            cur = next.unwrap_or(best.1);
        }
        cur = self.repair_walk(cur, p);

        // Within-tolerance contact with an edge splits both incident
        // triangles, keeping all triangles properly oriented.
        let v = self.tris[cur as usize].v;
        for k in 0..3 {
            let a = self.point(v[(k + 1) % 3]);
            let b = self.point(v[(k + 2) % 3]);
            if orient_sign(a, b, p) == 0 && self.edge.contains_key(&(v[(k + 2) % 3], v[(k + 1) % 3]))
            {
                return (cur, Some(k));
            }
        }
        (cur, None)
    }

    /// If tolerance noise parked the walk one triangle off, step across
    /// violated edges until `p` is contained. Bounded; a failure to converge
    /// falls back to the current triangle.
    fn repair_walk(&self, mut cur: u32, p: Point2) -> u32 {
        for _ in 0..64 {
            let v = self.tris[cur as usize].v;
            let mut moved = false;
            for k in 0..3 {
                let (u, w) = (v[(k + 1) % 3], v[(k + 2) % 3]);
                if orient_sign(self.point(u), self.point(w), p) < 0 {
                    if let Some(&twin) = self.edge.get(&(w, u)) {
                        if self.alive(twin) {
                            cur = twin;
                            moved = true;
                            break;
                        }
                    }
                }
            }
            if !moved {
                break;
            }
        }
        cur
    }

    fn split_interior(&mut self, t: u32, pi: u32) -> Vec<u32> {
        let [a, b, c] = self.tris[t as usize].v;
        let n0 = self.push_tri([pi, a, b]);
        let n1 = self.push_tri([pi, b, c]);
        let n2 = self.push_tri([pi, c, a]);
        self.tris[t as usize].children = vec![n0, n1, n2];
        vec![n0, n1, n2]
    }

    fn split_edge(&mut self, t: u32, k: usize, pi: u32) -> Vec<u32> {
        let v = self.tris[t as usize].v;
        let (w, a, b) = (v[k], v[(k + 1) % 3], v[(k + 2) % 3]);
        let twin = *self
            .edge
            .get(&(b, a))
            .expect("interior edge checked in locate");
        let tv = self.tris[twin as usize].v;
        let z = *tv
            .iter()
            .find(|&&x| x != a && x != b)
            .expect("twin shares exactly one extra vertex");

        let n0 = self.push_tri([pi, w, a]);
        let n1 = self.push_tri([pi, b, w]);
        let n2 = self.push_tri([pi, z, b]);
        let n3 = self.push_tri([pi, a, z]);
        self.edge.remove(&(a, b));
        self.edge.remove(&(b, a));
        self.tris[t as usize].children = vec![n0, n1];
        self.tris[twin as usize].children = vec![n2, n3];
        vec![n0, n1, n2, n3]
    }

    /// Lawson flips: each entry is a live triangle whose first vertex is the
    /// newly inserted point and whose opposite edge is suspect.
    fn legalize(&mut self, pi: u32, mut stack: Vec<u32>) {
        while let Some(t) = stack.pop() {
            if !self.alive(t) {
                continue;
            }
            let [p, u, v] = self.tris[t as usize].v;
            debug_assert_eq!(p, pi);
            let Some(&twin) = self.edge.get(&(v, u)) else {
                continue;
            };
            let tv = self.tris[twin as usize].v;
            let z = *tv
                .iter()
                .find(|&&x| x != u && x != v)
                .expect("twin shares exactly one extra vertex");
            if !in_circle_strict(self.point(p), self.point(u), self.point(v), self.point(z)) {
                continue;
            }
            let n0 = self.push_tri([p, u, z]);
            let n1 = self.push_tri([p, z, v]);
            self.edge.remove(&(u, v));
            self.edge.remove(&(v, u));
            self.tris[t as usize].children = vec![n0, n1];
            self.tris[twin as usize].children = vec![n0, n1];
            stack.push(n0);
            stack.push(n1);
        }
    }

    /// Live triangles without bounding vertices, canonically ordered.
    fn finish(&self) -> Vec<[usize; 3]> {
        let mut out = Vec::new();
        for tri in &self.tris {
            if !tri.children.is_empty() {
                continue;
            }
            if tri.v.iter().any(|&v| v >= self.n_data) {
                continue;
            }
            let v = [tri.v[0] as usize, tri.v[1] as usize, tri.v[2] as usize];
            // Rotate the smallest index first; cyclic order (and thus
            // counterclockwise orientation) is preserved.
            let s = (0..3).min_by_key(|&k| v[k]).expect("three candidates");
            out.push([v[s], v[(s + 1) % 3], v[(s + 2) % 3]]);
        }
        out.sort_unstable();
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{circumcenter, circumradius};
    use proptest::prelude::*;
    use rand::Rng;

    fn pts(coords: &[[f64; 2]]) -> Vec<Point2> {
        coords.iter().map(|&c| Point2::from(c)).collect()
    }

    fn triangle_area(t: &Triangulation, tri: [usize; 3]) -> f64 {
        let [a, b, c] = t.triangle_points(tri);
        0.5 * orient_raw(a, b, c)
    }

    /// Convex hull area by the monotone chain, an oracle independent of the
    /// triangulation internals.
    fn hull(points: &[Point2]) -> Vec<Point2> {
        let mut sorted: Vec<Point2> = points.to_vec();
        sorted.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
        let chain = |iter: &mut dyn Iterator<Item = &Point2>| {
            let mut out: Vec<Point2> = Vec::new();
            for &p in iter {
                while out.len() >= 2
                    && orient_raw(out[out.len() - 2], out[out.len() - 1], p) <= 0.0
                {
                    out.pop();
                }
                out.push(p);
            }
            out
        };
        let mut lower = chain(&mut sorted.iter());
        let mut upper = chain(&mut sorted.iter().rev());
        lower.pop();
        upper.pop();
        lower.append(&mut upper);
        lower
    }

    fn polygon_area(poly: &[Point2]) -> f64 {
        let mut area = 0.0;
        for i in 0..poly.len() {
            let a = poly[i];
            let b = poly[(i + 1) % poly.len()];
            area += a.x * b.y - b.x * a.y;
        }
        0.5 * area
    }

    /// Structural checks against independent oracles: counterclockwise
    /// orientation, the Euler count 2n - h - 2, hull-area coverage, and the
    /// brute-force empty-circumcircle property over all (triangle, vertex)
    /// pairs.
    fn check_delaunay(t: &Triangulation) {
        let n = t.vertices().len();
        let hull_pts = hull(t.vertices());
        let expected_tris = 2 * n - hull_pts.len() - 2;
        assert_eq!(t.triangles().len(), expected_tris, "Euler count");

        let mut area_sum = 0.0;
        for &tri in t.triangles() {
            let a = triangle_area(t, tri);
            assert!(a > 0.0, "triangle {tri:?} not counterclockwise");
            area_sum += a;
        }
        let hull_area = polygon_area(&hull_pts);
        assert!(
            (area_sum - hull_area).abs() <= 1e-9 * hull_area.max(1.0),
            "area {area_sum} vs hull {hull_area}"
        );

        for &tri in t.triangles() {
            let [a, b, c] = t.triangle_points(tri);
            let center = circumcenter(a, b, c).unwrap();
            let r2 = circumradius(a, b, c).unwrap().powi(2);
            for (vi, &v) in t.vertices().iter().enumerate() {
                if tri.contains(&vi) {
                    continue;
                }
                let d2 = (v.x - center.x).powi(2) + (v.y - center.y).powi(2);
                assert!(
                    d2 >= r2 * (1.0 - 3e-9),
                    "vertex {vi} strictly inside circumcircle of {tri:?}"
                );
            }
        }
    }

    #[test]
    fn unit_square_two_triangles() {
        let t = delaunay(&pts(&[[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])).unwrap();
        assert_eq!(t.triangles().len(), 2);
        let total: f64 = t.triangles().iter().map(|&tri| triangle_area(&t, tri)).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn three_points_single_triangle() {
        let t = delaunay(&pts(&[[0.0, 0.0], [2.0, 0.0], [1.0, 1.5]])).unwrap();
        assert_eq!(t.triangles().len(), 1);
        let [a, b, c] = t.triangle_points(t.triangles()[0]);
        assert!(orient_raw(a, b, c) > 0.0);
    }

    #[test]
    fn fifty_random_points_are_delaunay() {
        let mut rng = ChaCha8Rng::seed_from_u64(404);
        let points: Vec<Point2> = (0..50)
            .map(|_| Point2::new(rng.random_range(-10.0..10.0), rng.random_range(-10.0..10.0)))
            .collect();
        let t = delaunay(&points).unwrap();
        check_delaunay(&t);
    }

    #[test]
    fn duplicate_points_are_deduplicated() {
        let t = delaunay(&pts(&[
            [0.0, 0.0],
            [1.0, 0.0],
            [0.0, 0.0],
            [1.0, 1.0],
            [0.0, 1.0],
            [1.0, 0.0],
        ]))
        .unwrap();
        assert_eq!(t.vertices().len(), 4);
        assert_eq!(t.triangles().len(), 2);
    }

    #[test]
    fn too_few_points_error() {
        assert!(delaunay(&pts(&[[0.0, 0.0], [1.0, 1.0]])).is_err());
        assert!(delaunay(&pts(&[[0.0, 0.0], [0.0, 0.0], [0.0, 0.0]])).is_err());
    }

    #[test]
    fn collinear_points_error() {
        let t = delaunay(&pts(&[[0.0, 0.0], [1.0, 1.0], [2.0, 2.0], [3.0, 3.0]]));
        assert!(matches!(t, Err(Error::DegenerateGeometry(_))));
    }

    #[test]
    fn deterministic_for_fixed_input() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let points: Vec<Point2> = (0..120)
            .map(|_| Point2::new(rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0)))
            .collect();
        let a = delaunay(&points).unwrap();
        let b = delaunay(&points).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn cocircular_square_with_center() {
        // Four cocircular corners plus the center: tolerance treats the
        // cocircular quadruple as ties, broken by insertion order.
        let t = delaunay(&pts(&[
            [0.0, 0.0],
            [1.0, 0.0],
            [1.0, 1.0],
            [0.0, 1.0],
            [0.5, 0.5],
        ]))
        .unwrap();
        assert_eq!(t.triangles().len(), 4);
        check_delaunay(&t);
    }

    #[test]
    fn point_on_existing_edge_is_handled() {
        // (0.5, 0.5) falls exactly on the diagonal of the square no matter
        // which diagonal the square picks; plus a strictly interior point.
        let t = delaunay(&pts(&[
            [0.0, 0.0],
            [1.0, 0.0],
            [1.0, 1.0],
            [0.0, 1.0],
            [0.5, 0.5],
            [0.25, 0.5],
        ]))
        .unwrap();
        check_delaunay(&t);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn random_sets_satisfy_delaunay_structure(
            seed in 0u64..10_000,
            n in 3usize..40,
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let points: Vec<Point2> = (0..n)
                .map(|_| Point2::new(rng.random_range(-8.0..8.0), rng.random_range(-8.0..8.0)))
                .collect();
            let t = delaunay(&points).unwrap();
            check_delaunay(&t);
        }
    }
}
