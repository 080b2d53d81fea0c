//! Alpha-shape domain estimation.
//!
//! The alpha shape of a point set, realized here in two dimensions, is the
//! union of the Delaunay triangles whose circumradius is at most `alpha`.
//! Small alpha values carve the shape down toward the points themselves;
//! `alpha -> inf` keeps every triangle and recovers the convex hull.
//! Membership queries run through a uniform grid over the kept triangles.

use serde::{Deserialize, Serialize};

use super::delaunay::{delaunay, Triangulation};
use super::{circumradius_or_inf, point_in_triangle, Point2};
use crate::error::{Error, Result};

/// A region of the feature space that can answer membership queries.
///
/// The interface is dimension-generic so that other domain estimators can
/// slot in; the alpha shape implements it for two-dimensional inputs.
pub trait Domain {
    fn dim(&self) -> usize;

    /// True iff `x` (of length [`dim`](Domain::dim)) lies in the region.
    fn contains(&self, x: &[f64]) -> bool;
}

/// The alpha shape of a point set, with a spatial index for membership tests.
#[derive(Debug, Clone)]
pub struct AlphaShape {
    alpha: f64,
    vertices: Vec<Point2>,
    kept: Vec<[usize; 3]>,
    n_delaunay_triangles: usize,
    grid: Grid,
}

/// Uniform bucket grid over the kept triangles. Each cell lists every
/// triangle whose bounding box intersects the cell, a superset of the
/// triangles that actually do.
#[derive(Debug, Clone)]
struct Grid {
    x0: f64,
    y0: f64,
    cell: f64,
    nx: usize,
    ny: usize,
    cells: Vec<Vec<u32>>,
}

impl Grid {
    fn empty() -> Self {
        Grid {
            x0: 0.0,
            y0: 0.0,
            cell: 1.0,
            nx: 0,
            ny: 0,
            cells: Vec::new(),
        }
    }

    fn build(vertices: &[Point2], kept: &[[usize; 3]], cell: f64) -> Self {
        if kept.is_empty() {
            return Grid::empty();
        }
        let (mut min_x, mut min_y) = (f64::INFINITY, f64::INFINITY);
        let (mut max_x, mut max_y) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
        for tri in kept {
            for &v in tri {
                min_x = min_x.min(vertices[v].x);
                min_y = min_y.min(vertices[v].y);
                max_x = max_x.max(vertices[v].x);
                max_y = max_y.max(vertices[v].y);
            }
        }
        let nx = (((max_x - min_x) / cell).floor() as usize + 1).max(1);
        let ny = (((max_y - min_y) / cell).floor() as usize + 1).max(1);
        let mut grid = Grid {
            x0: min_x,
            y0: min_y,
            cell,
            nx,
            ny,
            cells: vec![Vec::new(); nx * ny],
        };
        for (id, tri) in kept.iter().enumerate() {
            let xs = tri.map(|v| vertices[v].x);
            let ys = tri.map(|v| vertices[v].y);
            let lo_i = grid.clamp_ix(xs.iter().copied().fold(f64::INFINITY, f64::min));
            let hi_i = grid.clamp_ix(xs.iter().copied().fold(f64::NEG_INFINITY, f64::max));
            let lo_j = grid.clamp_iy(ys.iter().copied().fold(f64::INFINITY, f64::min));
            let hi_j = grid.clamp_iy(ys.iter().copied().fold(f64::NEG_INFINITY, f64::max));
            for j in lo_j..=hi_j {
                for i in lo_i..=hi_i {
                    grid.cells[j * grid.nx + i].push(id as u32);
                }
            }
        }
        grid
    }

    fn clamp_ix(&self, x: f64) -> usize {
        (((x - self.x0) / self.cell).floor().max(0.0) as usize).min(self.nx - 1)
    }

    fn clamp_iy(&self, y: f64) -> usize {
        (((y - self.y0) / self.cell).floor().max(0.0) as usize).min(self.ny - 1)
    }

    /// Candidate triangles for a query point; `None` when the point falls
    /// outside the gridded bounding box entirely.
    fn candidates(&self, p: Point2) -> Option<&[u32]> {
        if self.nx == 0 {
            return None;
        }
        let fx = (p.x - self.x0) / self.cell;
        let fy = (p.y - self.y0) / self.cell;
        if fx < 0.0 || fy < 0.0 {
            return None;
        }
        let (i, j) = (fx.floor() as usize, fy.floor() as usize);
        if i >= self.nx || j >= self.ny {
            return None;
        }
        Some(&self.cells[j * self.nx + i])
    }
}

/// Build the alpha shape of `points` for the given `alpha > 0`.
///
/// The grid cell size is `alpha` clamped to `[diag/1024, diag/8]`, where
/// `diag` is the diagonal of the input bounding box, so lookups stay cheap
/// for any alpha.
pub fn build_alpha_shape(points: &[Point2], alpha: f64) -> Result<AlphaShape> {
    if alpha <= 0.0 || alpha.is_nan() {
        return Err(Error::InvalidConfig(format!(
            "alpha must be positive, got {alpha}"
        )));
    }
    let triangulation = delaunay(points)?;
    Ok(alpha_shape_of(triangulation, alpha))
}

/// Filter an existing triangulation; useful when exploring several alphas
/// over one point set.
pub fn alpha_shape_of(triangulation: Triangulation, alpha: f64) -> AlphaShape {
    let vertices = triangulation.vertices().to_vec();
    let kept: Vec<[usize; 3]> = triangulation
        .triangles()
        .iter()
        .copied()
        .filter(|&tri| {
            let [a, b, c] = triangulation.triangle_points(tri);
            circumradius_or_inf(a, b, c) <= alpha
        })
        .collect();

    let (mut min_x, mut min_y) = (f64::INFINITY, f64::INFINITY);
    let (mut max_x, mut max_y) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in &vertices {
        min_x = min_x.min(p.x);
        min_y = min_y.min(p.y);
        max_x = max_x.max(p.x);
        max_y = max_y.max(p.y);
    }
    let diag = (max_x - min_x).hypot(max_y - min_y).max(f64::MIN_POSITIVE);
    let cell = alpha.clamp(diag / 1024.0, diag / 8.0);
    let grid = Grid::build(&vertices, &kept, cell);

    AlphaShape {
        alpha,
        vertices,
        n_delaunay_triangles: triangulation.triangles().len(),
        kept,
        grid,
    }
}

impl AlphaShape {
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// The distinct input points the shape was built over.
    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    /// Triangles with circumradius at most alpha, counterclockwise.
    pub fn kept_triangles(&self) -> &[[usize; 3]] {
        &self.kept
    }

    /// Size of the underlying Delaunay triangulation.
    pub fn n_delaunay_triangles(&self) -> usize {
        self.n_delaunay_triangles
    }

    pub fn triangle_points(&self, tri: [usize; 3]) -> [Point2; 3] {
        [
            self.vertices[tri[0]],
            self.vertices[tri[1]],
            self.vertices[tri[2]],
        ]
    }

    /// True iff `p` lies inside or on the boundary of some kept triangle.
    pub fn contains_point(&self, p: Point2) -> bool {
        let Some(candidates) = self.grid.candidates(p) else {
            return false;
        };
        candidates.iter().any(|&id| {
            let [a, b, c] = self.triangle_points(self.kept[id as usize]);
            point_in_triangle(p, a, b, c)
        })
    }

    /// Boundary edges (edges used by exactly one kept triangle), for
    /// plotting the shape outline.
    pub fn boundary_edges(&self) -> Vec<[usize; 2]> {
        use std::collections::HashMap;
        let mut count: HashMap<(usize, usize), usize> = HashMap::new();
        for tri in &self.kept {
            for k in 0..3 {
                let (u, v) = (tri[k], tri[(k + 1) % 3]);
                let key = (u.min(v), u.max(v));
                *count.entry(key).or_insert(0) += 1;
            }
        }
        let mut edges: Vec<[usize; 2]> = count
            .into_iter()
            .filter(|&(_, c)| c == 1)
            .map(|((u, v), _)| [u, v])
            .collect();
        edges.sort_unstable();
        edges
    }

    pub fn export(&self) -> ShapeExport {
        ShapeExport {
            alpha: self.alpha,
            vertices: self.vertices.iter().map(|p| [p.x, p.y]).collect(),
            triangles: self.kept.clone(),
        }
    }
}

impl Domain for AlphaShape {
    fn dim(&self) -> usize {
        2
    }

    fn contains(&self, x: &[f64]) -> bool {
        debug_assert_eq!(x.len(), 2);
        self.contains_point(Point2::new(x[0], x[1]))
    }
}

/// JSON-friendly snapshot of a shape: vertex coordinates plus the kept
/// triangle index triples.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ShapeExport {
    pub alpha: f64,
    pub vertices: Vec<[f64; 2]>,
    pub triangles: Vec<[usize; 3]>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spiral::{generate_dataset, spiral_point, GenerationConfig};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn pts(coords: &[[f64; 2]]) -> Vec<Point2> {
        coords.iter().map(|&c| Point2::from(c)).collect()
    }

    fn square() -> Vec<Point2> {
        pts(&[[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    }

    /// Exhaustive scan over all kept triangles with an independently written
    /// sign test; the grid-backed query must agree exactly.
    fn contains_bruteforce(shape: &AlphaShape, p: Point2) -> bool {
        shape.kept_triangles().iter().any(|&tri| {
            let [a, b, c] = shape.triangle_points(tri);
            let edges = [(a, b), (b, c), (c, a)];
            edges.iter().all(|&(u, v)| {
                let det = (v.x - u.x) * (p.y - u.y) - (v.y - u.y) * (p.x - u.x);
                let mag =
                    (v.x - u.x).abs() * (p.y - u.y).abs() + (v.y - u.y).abs() * (p.x - u.x).abs();
                det >= -super::super::PREDICATE_TOL * mag
            })
        })
    }

    #[test]
    fn huge_alpha_recovers_convex_hull() {
        let shape = build_alpha_shape(&square(), 10.0).unwrap();
        assert_eq!(shape.kept_triangles().len(), 2);
        assert_eq!(shape.n_delaunay_triangles(), 2);
    }

    #[test]
    fn small_alpha_keeps_nothing() {
        // Both square triangles have circumradius sqrt(2)/2 > 0.1.
        let shape = build_alpha_shape(&square(), 0.1).unwrap();
        assert!(shape.kept_triangles().is_empty());
        assert!(!shape.contains_point(Point2::new(0.5, 0.5)));
    }

    #[test]
    fn centroids_inside_far_points_outside() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let points: Vec<Point2> = (0..80)
            .map(|_| Point2::new(rng.random_range(-4.0..4.0), rng.random_range(-4.0..4.0)))
            .collect();
        let shape = build_alpha_shape(&points, 2.0).unwrap();
        assert!(!shape.kept_triangles().is_empty());
        for &tri in shape.kept_triangles() {
            let [a, b, c] = shape.triangle_points(tri);
            let centroid = Point2::new((a.x + b.x + c.x) / 3.0, (a.y + b.y + c.y) / 3.0);
            assert!(shape.contains_point(centroid));
        }
        assert!(!shape.contains_point(Point2::new(100.0, -3.0)));
    }

    #[test]
    fn grid_matches_bruteforce_on_10k_probes() {
        let mut rng = ChaCha8Rng::seed_from_u64(51);
        let points: Vec<Point2> = (0..50)
            .map(|_| Point2::new(rng.random_range(-6.0..6.0), rng.random_range(-6.0..6.0)))
            .collect();
        let shape = build_alpha_shape(&points, 1.5).unwrap();
        let mut inside = 0usize;
        for _ in 0..10_000 {
            let p = Point2::new(rng.random_range(-8.0..8.0), rng.random_range(-8.0..8.0));
            let grid_answer = shape.contains_point(p);
            assert_eq!(grid_answer, contains_bruteforce(&shape, p));
            inside += grid_answer as usize;
        }
        assert!(inside > 0, "degenerate test: no probe ever inside");
    }

    #[test]
    fn monotone_in_alpha() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let points: Vec<Point2> = (0..60)
            .map(|_| Point2::new(rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0)))
            .collect();
        let mut prev: Option<Vec<[usize; 3]>> = None;
        for alpha in [0.2, 0.5, 1.0, 2.0, 5.0, 100.0] {
            let shape = build_alpha_shape(&points, alpha).unwrap();
            let kept = shape.kept_triangles().to_vec();
            if let Some(smaller) = prev {
                assert!(
                    smaller.iter().all(|t| kept.contains(t)),
                    "alpha {alpha}: kept set is not a superset"
                );
            }
            prev = Some(kept);
        }
    }

    #[test]
    fn contains_invariant_under_input_permutation() {
        let mut rng = ChaCha8Rng::seed_from_u64(27);
        let points: Vec<Point2> = (0..70)
            .map(|_| Point2::new(rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0)))
            .collect();
        let mut shuffled = points.clone();
        use rand::seq::SliceRandom;
        shuffled.shuffle(&mut rng);

        let a = build_alpha_shape(&points, 1.7).unwrap();
        let b = build_alpha_shape(&shuffled, 1.7).unwrap();
        for _ in 0..2_000 {
            let p = Point2::new(rng.random_range(-6.0..6.0), rng.random_range(-6.0..6.0));
            assert_eq!(a.contains_point(p), b.contains_point(p));
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn kept_region_within_two_alpha_of_data(seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let points: Vec<Point2> = (0..40)
                .map(|_| Point2::new(rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0)))
                .collect();
            let alpha = rng.random_range(0.3..3.0);
            let shape = build_alpha_shape(&points, alpha).unwrap();
            // Sample points of the kept region via triangle interpolation.
            for &tri in shape.kept_triangles().iter().step_by(3) {
                let [a, b, c] = shape.triangle_points(tri);
                let (u, v): (f64, f64) = (rng.random_range(0.0..1.0), rng.random_range(0.0..1.0));
                let (u, v) = if u + v > 1.0 { (1.0 - u, 1.0 - v) } else { (u, v) };
                let p = Point2::new(
                    a.x + u * (b.x - a.x) + v * (c.x - a.x),
                    a.y + u * (b.y - a.y) + v * (c.y - a.y),
                );
                let nearest = points
                    .iter()
                    .map(|q| q.dist(p))
                    .fold(f64::INFINITY, f64::min);
                prop_assert!(nearest <= 2.0 * alpha + 1e-9);
            }
        }
    }

    #[test]
    fn spiral_shape_excludes_arm_gaps() {
        let config = GenerationConfig {
            n: 15_000,
            seed: 6,
            ..GenerationConfig::default()
        };
        let data = generate_dataset(&config).unwrap();
        let points: Vec<Point2> = data.samples().iter().map(|s| Point2::from(s.features())).collect();
        let shape = build_alpha_shape(&points, 1.0).unwrap();

        for theta in [8.0, 12.0, 16.0, 20.0] {
            let on_arm = Point2::from(spiral_point(theta));
            assert!(
                shape.contains_point(on_arm),
                "spiral point at theta={theta} should be inside"
            );
            // Midway to the next winding: radius theta + pi at the same angle.
            let gap = Point2::new(
                (theta + std::f64::consts::PI) * theta.cos(),
                (theta + std::f64::consts::PI) * theta.sin(),
            );
            assert!(
                !shape.contains_point(gap),
                "gap point at theta={theta} should be outside"
            );
        }
    }

    #[test]
    fn rejects_non_positive_alpha() {
        assert!(build_alpha_shape(&square(), 0.0).is_err());
        assert!(build_alpha_shape(&square(), -1.0).is_err());
    }
}
