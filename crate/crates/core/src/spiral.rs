//! Synthetic spiral regression task.
//!
//! Samples live on an Archimedean spiral in the plane. The features are the
//! noisy Cartesian coordinates and the target is the arc length of the spiral
//! up to the latent parameter `theta`:
//!
//! ```text
//! x1 = theta*cos(theta) + e1      e1 ~ N(0, noise_sigma)
//! x2 = theta*sin(theta) + e2      e2 ~ N(0, noise_sigma)
//! y  = (theta*sqrt(1+theta^2) + asinh(theta)) / 2
//! ```
//!
//! `theta` is kept alongside each sample (and in the CSV column `theta`) so
//! that analytic oracles can be evaluated against generated data; models never
//! see it.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};

/// One observation of the spiral process.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpiralSample {
    pub x1: f64,
    pub x2: f64,
    /// Target: arc length of the spiral at `theta`.
    pub y: f64,
    /// Latent parameter, retained for oracle checks only.
    pub theta: f64,
}

impl SpiralSample {
    pub fn features(&self) -> [f64; 2] {
        [self.x1, self.x2]
    }
}

/// An ordered collection of spiral samples.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    samples: Vec<SpiralSample>,
    feature_dim: usize,
}

impl Dataset {
    pub fn new(samples: Vec<SpiralSample>) -> Self {
        Dataset {
            samples,
            feature_dim: 2,
        }
    }

    pub fn samples(&self) -> &[SpiralSample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    /// Feature vectors in sample order.
    pub fn feature_rows(&self) -> Vec<[f64; 2]> {
        self.samples.iter().map(|s| s.features()).collect()
    }

    /// Targets in sample order.
    pub fn targets(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.y).collect()
    }
}

/// Parameters of the spiral generator.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct GenerationConfig {
    pub n: usize,
    pub theta_min: f64,
    pub theta_max: f64,
    /// Standard deviation of the additive coordinate noise.
    pub noise_sigma: f64,
    pub seed: u64,
}

impl Default for GenerationConfig {
    /// The benchmark dataset: 80k points, `theta` uniform on `[0, 8*pi]`,
    /// coordinate noise 0.4.
    fn default() -> Self {
        GenerationConfig {
            n: 80_000,
            theta_min: 0.0,
            theta_max: 8.0 * std::f64::consts::PI,
            noise_sigma: 0.4,
            seed: 0,
        }
    }
}

impl GenerationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidConfig("n must be positive".into()));
        }
        if self.theta_min >= self.theta_max || self.theta_min.is_nan() || self.theta_max.is_nan() {
            return Err(Error::InvalidConfig(format!(
                "theta_min ({}) must be < theta_max ({})",
                self.theta_min, self.theta_max
            )));
        }
        if self.theta_min < 0.0 {
            return Err(Error::InvalidConfig(
                "theta_min must be non-negative".into(),
            ));
        }
        if self.noise_sigma < 0.0 || self.noise_sigma.is_nan() {
            return Err(Error::InvalidConfig(
                "noise_sigma must be non-negative".into(),
            ));
        }
        Ok(())
    }
}

/// Arc length of the spiral at parameter `theta`.
///
/// `asinh` is evaluated as `ln(theta + sqrt(1+theta^2))`, which is stable for
/// non-negative arguments.
pub fn spiral_target(theta: f64) -> Result<f64> {
    if theta < 0.0 || theta.is_nan() {
        return Err(Error::InvalidConfig(format!(
            "spiral_target requires theta >= 0, got {theta}"
        )));
    }
    let root = (1.0 + theta * theta).sqrt();
    Ok(0.5 * (theta * root + (theta + root).ln()))
}

/// Noise-free spiral position at `theta`.
pub fn spiral_point(theta: f64) -> [f64; 2] {
    [theta * theta.cos(), theta * theta.sin()]
}

/// Derivative of the spiral position with respect to `theta`.
pub fn spiral_tangent(theta: f64) -> [f64; 2] {
    let (sin, cos) = theta.sin_cos();
    [cos - theta * sin, sin + theta * cos]
}

/// `ds/dtheta`, the speed of the spiral parametrization. Also equals
/// `dy/dtheta` since the target is the arc length.
pub fn arc_speed(theta: f64) -> f64 {
    (1.0 + theta * theta).sqrt()
}

/// Generate `config.n` samples with `theta` uniform on
/// `[theta_min, theta_max)`.
///
/// Per sample the generator consumes exactly three draws in a fixed order
/// (`theta`, `e1`, `e2`) from a ChaCha8 stream seeded with `config.seed`, so
/// equal configs produce bitwise-identical datasets.
pub fn generate_dataset(config: &GenerationConfig) -> Result<Dataset> {
    config.validate()?;
    Ok(generate_on_interval(
        config.n,
        config.theta_min,
        config.theta_max,
        config.noise_sigma,
        config.seed,
    ))
}

/// Generator core used by [`generate_dataset`] and by local evaluation sets
/// restricted to a sub-interval of `theta`.
pub fn generate_on_interval(
    n: usize,
    theta_lo: f64,
    theta_hi: f64,
    noise_sigma: f64,
    seed: u64,
) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, noise_sigma).expect("noise_sigma validated as non-negative");
    let mut samples = Vec::with_capacity(n);
    for _ in 0..n {
        let theta = rng.random_range(theta_lo..theta_hi);
        let e1 = noise.sample(&mut rng);
        let e2 = noise.sample(&mut rng);
        let [px, py] = spiral_point(theta);
        let y = spiral_target(theta).expect("theta_lo validated as non-negative");
        samples.push(SpiralSample {
            x1: px + e1,
            x2: py + e2,
            y,
            theta,
        });
    }
    Dataset::new(samples)
}

/// Shuffled disjoint partition into `(train, test)` with
/// `|train| = round(n * train_fraction)`.
pub fn split(dataset: &Dataset, train_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if train_fraction.is_nan() || train_fraction <= 0.0 || train_fraction >= 1.0 {
        return Err(Error::InvalidConfig(format!(
            "train_fraction must be in (0, 1), got {train_fraction}"
        )));
    }
    let n = dataset.len();
    let n_train = (n as f64 * train_fraction).round() as usize;
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    use rand::seq::SliceRandom;
    order.shuffle(&mut rng);
    let take = |idx: &[usize]| Dataset::new(idx.iter().map(|&i| dataset.samples[i]).collect());
    Ok((take(&order[..n_train]), take(&order[n_train..])))
}

pub const CSV_HEADER: &str = "x1,x2,y,theta";

/// Write a dataset as CSV (`x1,x2,y,theta` header, LF line endings). Floats
/// are written in shortest round-trip form, so a read-back is bit-exact.
pub fn write_csv(dataset: &Dataset, path: &Path) -> Result<()> {
    let mut out = String::with_capacity(dataset.len() * 48 + 16);
    out.push_str(CSV_HEADER);
    out.push('\n');
    for s in &dataset.samples {
        writeln!(out, "{},{},{},{}", s.x1, s.x2, s.y, s.theta).expect("string write");
    }
    fs::write(path, out)?;
    Ok(())
}

/// Read a dataset written by [`write_csv`]. An empty file yields an empty
/// dataset; malformed rows are reported with their 1-based line number.
pub fn read_csv(path: &Path) -> Result<Dataset> {
    let text = fs::read_to_string(path)?;
    parse_csv(&text)
}

pub(crate) fn parse_csv(text: &str) -> Result<Dataset> {
    if text.trim().is_empty() {
        return Ok(Dataset::new(Vec::new()));
    }
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().expect("non-empty text has a first line");
    if header.trim() != CSV_HEADER {
        return Err(Error::CsvParse {
            line: 1,
            message: format!("expected header `{CSV_HEADER}`, found `{}`", header.trim()),
        });
    }
    let mut samples = Vec::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(Error::CsvParse {
                line: line_no,
                message: format!("expected 4 columns, found {}", fields.len()),
            });
        }
        let mut values = [0.0f64; 4];
        for (slot, field) in values.iter_mut().zip(&fields) {
            *slot = field.trim().parse::<f64>().map_err(|_| Error::CsvParse {
                line: line_no,
                message: format!("invalid number `{}`", field.trim()),
            })?;
        }
        samples.push(SpiralSample {
            x1: values[0],
            x2: values[1],
            y: values[2],
            theta: values[3],
        });
    }
    Ok(Dataset::new(samples))
}

/// Parameter of the noise-free spiral point nearest to `p`, searched over
/// `[0, theta_max]` by a coarse scan followed by golden-section refinement.
pub fn nearest_theta(p: [f64; 2], theta_max: f64) -> f64 {
    let dist2 = |theta: f64| {
        let [sx, sy] = spiral_point(theta);
        (sx - p[0]).powi(2) + (sy - p[1]).powi(2)
    };
    // Coarse scan; the objective has one local minimum per arm, spaced ~pi
    // apart in theta, so a 0.01 step cannot skip the global basin.
    let steps = ((theta_max / 0.01).ceil() as usize).max(8);
    let mut best_k = 0usize;
    let mut best = f64::INFINITY;
    for k in 0..=steps {
        let theta = theta_max * k as f64 / steps as f64;
        let d = dist2(theta);
        if d < best {
            best = d;
            best_k = k;
        }
    }
    let step = theta_max / steps as f64;
    let mut lo = (best_k as f64 - 1.0).max(0.0) * step;
    let mut hi = ((best_k + 1) as f64 * step).min(theta_max);
    // Golden-section refinement.
    let inv_phi = 0.5 * (5.0f64.sqrt() - 1.0);
    let mut a = hi - inv_phi * (hi - lo);
    let mut b = lo + inv_phi * (hi - lo);
    let (mut fa, mut fb) = (dist2(a), dist2(b));
    while hi - lo > 1e-12 {
        if fa < fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - inv_phi * (hi - lo);
            fa = dist2(a);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + inv_phi * (hi - lo);
            fb = dist2(b);
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Adaptive Simpson quadrature of sqrt(1+t^2) on [0, theta]; independent
    /// oracle for the closed-form arc length.
    fn arc_length_quadrature(theta: f64) -> f64 {
        fn f(t: f64) -> f64 {
            (1.0 + t * t).sqrt()
        }
        fn simpson(a: f64, b: f64) -> f64 {
            (b - a) / 6.0 * (f(a) + 4.0 * f(0.5 * (a + b)) + f(b))
        }
        fn adapt(a: f64, b: f64, whole: f64, eps: f64, depth: u32) -> f64 {
            let m = 0.5 * (a + b);
            let left = simpson(a, m);
            let right = simpson(m, b);
            if depth == 0 || (left + right - whole).abs() <= 15.0 * eps {
                left + right + (left + right - whole) / 15.0
            } else {
                adapt(a, m, left, eps / 2.0, depth - 1) + adapt(m, b, right, eps / 2.0, depth - 1)
            }
        }
        if theta == 0.0 {
            0.0
        } else {
            adapt(0.0, theta, simpson(0.0, theta), 1e-13, 48)
        }
    }

    #[test]
    fn target_at_zero_is_zero() {
        assert_eq!(spiral_target(0.0).unwrap(), 0.0);
    }

    #[test]
    fn target_matches_quadrature_at_one() {
        let expected = arc_length_quadrature(1.0);
        assert!((expected - 1.147793).abs() < 1e-6);
        let got = spiral_target(1.0).unwrap();
        assert!((got - expected).abs() <= 1e-9 * expected.max(1.0));
    }

    #[test]
    fn target_matches_quadrature_at_eight_pi() {
        let theta = 8.0 * std::f64::consts::PI;
        let expected = arc_length_quadrature(theta);
        assert!((expected - 318.03).abs() < 0.01);
        let got = spiral_target(theta).unwrap();
        assert!(((got - expected) / expected).abs() <= 1e-9);
    }

    #[test]
    fn target_rejects_negative_theta() {
        assert!(spiral_target(-0.5).is_err());
    }

    proptest! {
        #[test]
        fn target_agrees_with_quadrature(theta in 0.0f64..25.132741228718345) {
            let expected = arc_length_quadrature(theta);
            let got = spiral_target(theta).unwrap();
            prop_assert!((got - expected).abs() <= 1e-9 * expected.abs().max(1.0));
        }
    }

    #[test]
    fn zero_noise_lies_on_spiral() {
        let config = GenerationConfig {
            n: 5,
            noise_sigma: 0.0,
            seed: 42,
            ..GenerationConfig::default()
        };
        let data = generate_dataset(&config).unwrap();
        assert_eq!(data.len(), 5);
        for s in data.samples() {
            let r2 = s.x1 * s.x1 + s.x2 * s.x2;
            let t2 = s.theta * s.theta;
            assert!((r2 - t2).abs() <= 1e-12 * t2.max(1.0));
            assert!(s.y >= 0.0);
        }
    }

    #[test]
    fn theta_mean_matches_uniform_moments() {
        let config = GenerationConfig {
            seed: 7,
            ..GenerationConfig::default()
        };
        let data = generate_dataset(&config).unwrap();
        let n = data.len() as f64;
        let mean = data.samples().iter().map(|s| s.theta).sum::<f64>() / n;
        let width = config.theta_max - config.theta_min;
        let tol = 3.0 * width / (12.0 * n).sqrt();
        assert!((mean - width / 2.0).abs() <= tol, "mean {mean} tol {tol}");
    }

    #[test]
    fn generation_is_deterministic() {
        let config = GenerationConfig {
            n: 257,
            seed: 99,
            ..GenerationConfig::default()
        };
        let a = generate_dataset(&config).unwrap();
        let b = generate_dataset(&config).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn target_strictly_increasing_in_theta() {
        let mut prev = -1.0;
        for k in 0..=1000 {
            let theta = 25.0 * k as f64 / 1000.0;
            let y = spiral_target(theta).unwrap();
            assert!(y > prev);
            prev = y;
        }
    }

    #[test]
    fn split_sizes_and_partition() {
        let config = GenerationConfig {
            n: 10,
            seed: 1,
            ..GenerationConfig::default()
        };
        let data = generate_dataset(&config).unwrap();
        let (train, test) = split(&data, 0.9, 5).unwrap();
        assert_eq!((train.len(), test.len()), (9, 1));

        let mut union: Vec<SpiralSample> = train
            .samples()
            .iter()
            .chain(test.samples())
            .copied()
            .collect();
        let mut original = data.samples().to_vec();
        let key = |s: &SpiralSample| (s.theta, s.x1);
        union.sort_by(|a, b| key(a).partial_cmp(&key(b)).unwrap());
        original.sort_by(|a, b| key(a).partial_cmp(&key(b)).unwrap());
        assert_eq!(union, original);
    }

    #[test]
    fn split_ninety_ten_of_80k() {
        let data = generate_dataset(&GenerationConfig::default()).unwrap();
        let (train, test) = split(&data, 0.9, 0).unwrap();
        assert_eq!((train.len(), test.len()), (72_000, 8_000));
    }

    #[test]
    fn split_rejects_out_of_range_fraction() {
        let data = generate_on_interval(4, 0.0, 1.0, 0.0, 0);
        assert!(split(&data, 0.0, 0).is_err());
        assert!(split(&data, 1.0, 0).is_err());
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("spiral.csv");
        let config = GenerationConfig {
            n: 64,
            seed: 3,
            ..GenerationConfig::default()
        };
        let data = generate_dataset(&config).unwrap();
        write_csv(&data, &path).unwrap();
        let back = read_csv(&path).unwrap();
        assert_eq!(data, back);
    }

    #[test]
    fn csv_empty_file_is_empty_dataset() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.csv");
        std::fs::write(&path, "").unwrap();
        let data = read_csv(&path).unwrap();
        assert!(data.is_empty());
    }

    #[test]
    fn csv_wrong_column_count_names_line() {
        let text = "x1,x2,y,theta\n1.0,2.0,3.0,4.0\n1.0,2.0\n";
        let err = parse_csv(text).unwrap_err();
        match err {
            Error::CsvParse { line, message } => {
                assert_eq!(line, 3);
                assert!(message.contains("2"), "{message}");
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn csv_non_numeric_field_names_line() {
        let text = "x1,x2,y,theta\n1.0,abc,3.0,4.0\n";
        let err = parse_csv(text).unwrap_err();
        match err {
            Error::CsvParse { line, message } => {
                assert_eq!(line, 2);
                assert!(message.contains("abc"));
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn pipeline_deterministic_end_to_end() {
        let dir = tempfile::tempdir().unwrap();
        let config = GenerationConfig {
            n: 200,
            seed: 11,
            ..GenerationConfig::default()
        };
        let run = |tag: &str| {
            let data = generate_dataset(&config).unwrap();
            let (train, _) = split(&data, 0.9, 21).unwrap();
            let path = dir.path().join(format!("{tag}.csv"));
            write_csv(&train, &path).unwrap();
            read_csv(&path).unwrap()
        };
        assert_eq!(run("a"), run("b"));
    }

    #[test]
    fn nearest_theta_recovers_on_spiral_points() {
        for &theta in &[0.5, 3.0, 8.2, 14.137, 20.0] {
            let p = spiral_point(theta);
            let got = nearest_theta(p, 8.0 * std::f64::consts::PI);
            assert!(
                (got - theta).abs() < 1e-6,
                "theta {theta} recovered as {got}"
            );
        }
    }

    #[test]
    fn nearest_theta_for_first_probe() {
        // Probe above the arm crossing the positive x2 axis near radius 14.1.
        let theta = nearest_theta([0.0, 14.5], 8.0 * std::f64::consts::PI);
        assert!((theta - 14.16).abs() < 0.1, "theta {theta}");
    }
}
