//! Run configuration: a flat, human-editable TOML document. Every key has a
//! default, so an empty file (or no file) reproduces the reference pipeline.

use std::path::Path;

use serde::{Deserialize, Serialize};

use localex::bench::BenchConfig;
use localex::properties::{FeatureMap, PropertyFunction, PropertyKind};
use localex::solver::{SolverConfig, StepPolicy};
use localex::spiral::GenerationConfig;
use localex::tree::TreeParams;
use localex::{Error, Result};

const THETA_MAX_DEFAULT: f64 = 8.0 * std::f64::consts::PI;

/// All pipeline knobs as flat key-value pairs. Unknown keys are rejected so
/// typos surface as validation errors instead of silently using defaults.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    // Dataset generation.
    pub n: usize,
    pub theta_min: f64,
    pub theta_max: f64,
    pub noise_sigma: f64,
    pub train_fraction: f64,
    // Black-box tree; `tree_max_depth = 0` means unlimited.
    pub tree_max_depth: usize,
    pub tree_min_samples_leaf: usize,
    pub tree_min_samples_split: usize,
    // Domain estimation.
    pub alpha: f64,
    // Neighborhood sampling.
    pub sigma: f64,
    pub m: usize,
    pub max_attempt_factor: usize,
    // Surrogate solver.
    pub huber_delta: f64,
    pub solver_tol: f64,
    pub solver_max_iter: usize,
    // Property functions: builtin constructors with 1-based feature
    // indices, e.g. "identity(1)", "product(1,2)", "square(2)", "radius()".
    pub properties: Vec<String>,
    /// Uniform L1 penalty for every property.
    pub lambda: f64,
    /// Per-property penalties; overrides `lambda` when non-empty.
    pub lambdas: Vec<f64>,
    // Probe instances.
    pub probes: Vec<[f64; 2]>,
    pub robustness_probes: Vec<[f64; 2]>,
    // Local evaluation sets.
    pub eval_n: usize,
    pub eval_radius_factor: f64,
    pub seed: u64,
    pub repeats: usize,
    pub out_dir: String,
}

impl Default for RunConfig {
    fn default() -> Self {
        let bench = BenchConfig::default();
        RunConfig {
            n: bench.n,
            theta_min: bench.theta_min,
            theta_max: THETA_MAX_DEFAULT,
            noise_sigma: bench.noise_sigma,
            train_fraction: bench.train_fraction,
            tree_max_depth: bench.tree.max_depth.unwrap_or(0),
            tree_min_samples_leaf: bench.tree.min_samples_leaf,
            tree_min_samples_split: bench.tree.min_samples_split,
            alpha: bench.alpha,
            sigma: bench.sigma,
            m: bench.m,
            max_attempt_factor: bench.max_attempt_factor,
            huber_delta: bench.solver.huber_delta,
            solver_tol: bench.solver.tol,
            solver_max_iter: bench.solver.max_iter,
            properties: vec!["identity(1)".into(), "identity(2)".into()],
            lambda: bench.lambda,
            lambdas: Vec::new(),
            probes: bench.probes,
            robustness_probes: bench.robustness_probes,
            eval_n: bench.eval_n,
            eval_radius_factor: bench.eval_radius_factor,
            seed: bench.master_seed,
            repeats: bench.repeats,
            out_dir: "out".into(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        toml::from_str(&text)
            .map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))
    }

    pub fn tree_params(&self) -> TreeParams {
        TreeParams {
            max_depth: if self.tree_max_depth == 0 {
                None
            } else {
                Some(self.tree_max_depth)
            },
            min_samples_leaf: self.tree_min_samples_leaf,
            min_samples_split: self.tree_min_samples_split,
        }
    }

    pub fn generation_config(&self, seed: u64) -> GenerationConfig {
        GenerationConfig {
            n: self.n,
            theta_min: self.theta_min,
            theta_max: self.theta_max,
            noise_sigma: self.noise_sigma,
            seed,
        }
    }

    pub fn solver_config(&self) -> SolverConfig {
        SolverConfig {
            huber_delta: self.huber_delta,
            tol: self.solver_tol,
            max_iter: self.solver_max_iter,
            step: StepPolicy::default(),
            accelerate: true,
        }
    }

    pub fn feature_map(&self) -> Result<FeatureMap> {
        if !self.lambdas.is_empty() && self.lambdas.len() != self.properties.len() {
            return Err(Error::InvalidConfig(format!(
                "lambdas has {} entries but there are {} properties",
                self.lambdas.len(),
                self.properties.len()
            )));
        }
        let functions = self
            .properties
            .iter()
            .enumerate()
            .map(|(i, text)| {
                let kind = PropertyKind::parse(text)?;
                let lambda = self.lambdas.get(i).copied().unwrap_or(self.lambda);
                Ok(PropertyFunction::new(kind, lambda))
            })
            .collect::<Result<Vec<_>>>()?;
        FeatureMap::new(functions)
    }

    /// The benchmark view of this configuration. The benchmark always uses
    /// the raw-feature map, so `properties` does not apply here.
    pub fn bench_config(&self) -> BenchConfig {
        BenchConfig {
            n: self.n,
            theta_min: self.theta_min,
            theta_max: self.theta_max,
            noise_sigma: self.noise_sigma,
            train_fraction: self.train_fraction,
            tree: self.tree_params(),
            alpha: self.alpha,
            sigma: self.sigma,
            m: self.m,
            max_attempt_factor: self.max_attempt_factor,
            solver: self.solver_config(),
            lambda: self.lambda,
            probes: self.probes.clone(),
            robustness_probes: self.robustness_probes.clone(),
            eval_n: self.eval_n,
            eval_radius_factor: self.eval_radius_factor,
            master_seed: self.seed,
            repeats: self.repeats,
        }
    }
}
