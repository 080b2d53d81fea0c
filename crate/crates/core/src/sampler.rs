//! Neighborhood sampling around a probe instance.
//!
//! Both strategies consume one point at a time from a seeded Gaussian
//! stream: `sample_normal` keeps every draw, `sample_selected` keeps only
//! draws inside a [`Domain`] until the requested count is reached. Because
//! the stream is shared, the selected output is exactly the accepted
//! subsequence of the normal stream for the same seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::Domain;

/// Configuration of the neighborhood sampler.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    /// Standard deviation of the isotropic Gaussian around the probe.
    pub sigma: f64,
    /// Number of points to return (accepted points, for the selected
    /// strategy).
    pub m: usize,
    /// Attempt budget multiplier: rejection sampling aborts after
    /// `max_attempt_factor * m` draws.
    pub max_attempt_factor: usize,
    pub seed: u64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            sigma: 2.0,
            m: 1000,
            max_attempt_factor: 100,
            seed: 0,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.sigma <= 0.0 || self.sigma.is_nan() {
            return Err(Error::InvalidConfig(format!(
                "sampler sigma must be positive, got {}",
                self.sigma
            )));
        }
        if self.m == 0 {
            return Err(Error::InvalidConfig("sampler m must be positive".into()));
        }
        if self.max_attempt_factor == 0 {
            return Err(Error::InvalidConfig(
                "max_attempt_factor must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

struct GaussianStream {
    rng: ChaCha8Rng,
    noise: Normal<f64>,
    center: [f64; 2],
}

impl GaussianStream {
    fn new(x_star: [f64; 2], config: &SamplerConfig) -> Self {
        GaussianStream {
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            noise: Normal::new(0.0, config.sigma).expect("sigma validated as positive"),
            center: x_star,
        }
    }

    fn next_point(&mut self) -> [f64; 2] {
        let e1 = self.noise.sample(&mut self.rng);
        let e2 = self.noise.sample(&mut self.rng);
        [self.center[0] + e1, self.center[1] + e2]
    }
}

/// `m` i.i.d. draws from an isotropic Gaussian centered at the probe.
pub fn sample_normal(x_star: [f64; 2], config: &SamplerConfig) -> Result<Vec<[f64; 2]>> {
    config.validate()?;
    let mut stream = GaussianStream::new(x_star, config);
    Ok((0..config.m).map(|_| stream.next_point()).collect())
}

/// Rejection-sampling record, kept for plots and acceptance-rate reporting.
#[derive(Debug, Clone)]
pub struct SelectedSample {
    pub accepted: Vec<[f64; 2]>,
    pub rejected: Vec<[f64; 2]>,
    pub attempts: usize,
}

impl SelectedSample {
    pub fn acceptance_rate(&self) -> f64 {
        if self.attempts == 0 {
            0.0
        } else {
            self.accepted.len() as f64 / self.attempts as f64
        }
    }
}

/// Gaussian draws filtered through the domain until `m` are accepted.
///
/// Exhausting the attempt budget is an error: silently returning a short
/// sample would distort the surrogate fit downstream.
pub fn sample_selected<D: Domain + ?Sized>(
    x_star: [f64; 2],
    config: &SamplerConfig,
    domain: &D,
) -> Result<Vec<[f64; 2]>> {
    sample_selected_traced(x_star, config, domain).map(|s| s.accepted)
}

/// [`sample_selected`] with the rejected draws and attempt count retained.
pub fn sample_selected_traced<D: Domain + ?Sized>(
    x_star: [f64; 2],
    config: &SamplerConfig,
    domain: &D,
) -> Result<SelectedSample> {
    config.validate()?;
    let budget = config.max_attempt_factor.saturating_mul(config.m);
    let mut stream = GaussianStream::new(x_star, config);
    let mut accepted = Vec::with_capacity(config.m);
    let mut rejected = Vec::new();
    let mut attempts = 0usize;
    while accepted.len() < config.m && attempts < budget {
        let p = stream.next_point();
        attempts += 1;
        if domain.contains(&p) {
            accepted.push(p);
        } else {
            rejected.push(p);
        }
    }
    if accepted.len() < config.m {
        let rate = accepted.len() as f64 / attempts as f64;
        return Err(Error::LowAcceptance {
            accepted: accepted.len(),
            requested: config.m,
            attempts,
            rate,
        });
    }
    Ok(SelectedSample {
        accepted,
        rejected,
        attempts,
    })
}

/// Derive a stream seed from a master seed (splitmix64 finalizer). Used to
/// give every probe, repeat and evaluation set its own independent stream.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master
        .wrapping_add(index.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{build_alpha_shape, AlphaShape, Point2};

    /// A coarse grid of points whose convex hull swallows any realistic
    /// Gaussian cloud around the origin.
    fn huge_domain() -> AlphaShape {
        let mut pts = Vec::new();
        for i in -4i32..=4 {
            for j in -4i32..=4 {
                pts.push(Point2::new(12.0 * i as f64, 12.0 * j as f64));
            }
        }
        build_alpha_shape(&pts, 1.0e6).unwrap()
    }

    #[test]
    fn degenerate_sigma_collapses_to_probe() {
        let config = SamplerConfig {
            sigma: 1e-12,
            m: 5,
            ..SamplerConfig::default()
        };
        let pts = sample_normal([3.0, -4.0], &config).unwrap();
        for p in pts {
            assert!((p[0] - 3.0).abs() < 1e-9 && (p[1] + 4.0).abs() < 1e-9);
        }
    }

    #[test]
    fn sample_mean_matches_clt_bound() {
        let config = SamplerConfig {
            sigma: 2.0,
            m: 10_000,
            seed: 5,
            ..SamplerConfig::default()
        };
        let center = [1.5, -2.5];
        let pts = sample_normal(center, &config).unwrap();
        let tol = 3.0 * config.sigma / (config.m as f64).sqrt();
        for axis in 0..2 {
            let mean = pts.iter().map(|p| p[axis]).sum::<f64>() / config.m as f64;
            assert!((mean - center[axis]).abs() <= tol);
        }
    }

    #[test]
    fn same_seed_same_points() {
        let config = SamplerConfig {
            seed: 77,
            m: 64,
            ..SamplerConfig::default()
        };
        assert_eq!(
            sample_normal([0.0, 14.5], &config).unwrap(),
            sample_normal([0.0, 14.5], &config).unwrap()
        );
    }

    #[test]
    fn covering_domain_reproduces_normal_sampling() {
        let domain = huge_domain();
        let config = SamplerConfig {
            sigma: 2.0,
            m: 500,
            seed: 9,
            ..SamplerConfig::default()
        };
        let normal = sample_normal([0.0, 0.0], &config).unwrap();
        let selected = sample_selected([0.0, 0.0], &config, &domain).unwrap();
        assert_eq!(normal, selected);
    }

    #[test]
    fn disjoint_support_reports_low_acceptance() {
        let far = build_alpha_shape(
            &[
                Point2::new(500.0, 500.0),
                Point2::new(501.0, 500.0),
                Point2::new(500.0, 501.0),
                Point2::new(501.0, 501.0),
            ],
            5.0,
        )
        .unwrap();
        let config = SamplerConfig {
            sigma: 1.0,
            m: 10,
            max_attempt_factor: 20,
            seed: 1,
        };
        match sample_selected([0.0, 0.0], &config, &far) {
            Err(Error::LowAcceptance {
                accepted,
                requested,
                attempts,
                rate,
            }) => {
                assert_eq!(accepted, 0);
                assert_eq!(requested, 10);
                assert_eq!(attempts, 200);
                assert_eq!(rate, 0.0);
            }
            other => panic!("expected low-acceptance error, got {other:?}"),
        }
    }

    #[test]
    fn selected_is_the_accepted_subsequence_of_the_stream() {
        // A domain that actually rejects: a thin horizontal band.
        let mut pts = Vec::new();
        for i in 0..60 {
            pts.push(Point2::new(i as f64 * 0.5 - 15.0, -0.4));
            pts.push(Point2::new(i as f64 * 0.5 - 15.0, 0.4));
        }
        let band = build_alpha_shape(&pts, 2.0).unwrap();
        let config = SamplerConfig {
            sigma: 2.0,
            m: 200,
            max_attempt_factor: 100,
            seed: 31,
        };
        let trace = sample_selected_traced([0.0, 0.0], &config, &band).unwrap();
        assert!(trace.attempts > trace.accepted.len(), "band must reject");

        // Replay the raw stream and filter with contains().
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let noise = Normal::new(0.0, config.sigma).unwrap();
        let mut accepted = Vec::new();
        let mut rejected = Vec::new();
        for _ in 0..trace.attempts {
            let p = [noise.sample(&mut rng), noise.sample(&mut rng)];
            if band.contains(&p) {
                accepted.push(p);
            } else {
                rejected.push(p);
            }
        }
        assert_eq!(trace.accepted, accepted);
        assert_eq!(trace.rejected, rejected);
        let rate = trace.acceptance_rate();
        assert!(rate > 0.0 && rate < 1.0);
        for p in &trace.accepted {
            assert!(band.contains(p));
        }
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let bad_sigma = SamplerConfig {
            sigma: 0.0,
            ..SamplerConfig::default()
        };
        assert!(sample_normal([0.0, 0.0], &bad_sigma).is_err());
        let bad_m = SamplerConfig {
            m: 0,
            ..SamplerConfig::default()
        };
        assert!(sample_normal([0.0, 0.0], &bad_m).is_err());
    }

    #[test]
    fn derived_seeds_differ_and_are_stable() {
        assert_eq!(derive_seed(42, 0), derive_seed(42, 0));
        assert_ne!(derive_seed(42, 0), derive_seed(42, 1));
        assert_ne!(derive_seed(42, 0), derive_seed(43, 0));
    }
}
