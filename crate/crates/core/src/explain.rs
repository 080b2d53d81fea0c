//! One local explanation end to end: sample the neighborhood, query the
//! black box, fit the penalized robust surrogate, package importances.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::Domain;
use crate::metrics;
use crate::properties::FeatureMap;
use crate::sampler::{self, SamplerConfig};
use crate::solver::{self, Coefficients, SolverConfig};
use crate::spiral::{self, Dataset};
use crate::Predictor;

/// How the fitting neighborhood is drawn around the probe.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplingStrategy {
    /// Isotropic Gaussian around the probe.
    Normal,
    /// Gaussian filtered through the estimated data domain.
    Selected,
}

impl std::fmt::Display for SamplingStrategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SamplingStrategy::Normal => write!(f, "normal"),
            SamplingStrategy::Selected => write!(f, "selected"),
        }
    }
}

impl std::str::FromStr for SamplingStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "normal" => Ok(SamplingStrategy::Normal),
            "selected" => Ok(SamplingStrategy::Selected),
            other => Err(Error::InvalidConfig(format!(
                "unknown sampling strategy `{other}` (expected `normal` or `selected`)"
            ))),
        }
    }
}

/// Everything needed to produce one explanation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExplanationRequest {
    pub probe: Vec<f64>,
    pub strategy: SamplingStrategy,
    pub sampler: SamplerConfig,
    pub map: FeatureMap,
    pub solver: SolverConfig,
}

/// One named coefficient of the fitted surrogate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Importance {
    pub name: String,
    pub value: f64,
}

/// Agreement of the surrogate with reference values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalMetrics {
    pub mse: f64,
    pub r2: f64,
    pub n: usize,
}

/// A fitted local explanation, fully reproducible from its echoed
/// configuration and seed.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Explanation {
    pub probe: Vec<f64>,
    pub strategy: SamplingStrategy,
    pub intercept: f64,
    pub importances: Vec<Importance>,
    /// Surrogate-vs-black-box MSE on the fitting sample.
    pub fit_mse: f64,
    pub samples_used: usize,
    /// Accepted fraction of the Gaussian stream (selected strategy only).
    pub acceptance_rate: Option<f64>,
    /// False when the solver hit its iteration budget; the explanation is
    /// still usable, with `kkt_residual` reporting how far optimality was.
    pub converged: bool,
    pub kkt_residual: f64,
    pub seed: u64,
    pub map: FeatureMap,
    pub sampler: SamplerConfig,
    pub solver: SolverConfig,
    /// Surrogate-vs-truth metrics on a held-out local set, when computed.
    pub evaluation: Option<EvalMetrics>,
}

impl Explanation {
    pub fn coefficients(&self) -> Coefficients {
        Coefficients {
            intercept: self.intercept,
            weights: self.importances.iter().map(|i| i.value).collect(),
        }
    }

    pub fn importance_of(&self, name: &str) -> Option<f64> {
        self.importances
            .iter()
            .find(|i| i.name == name)
            .map(|i| i.value)
    }
}

/// The explanation plus the raw sampling record (for plots and diagnostics).
#[derive(Debug, Clone)]
pub struct ExplainOutcome {
    pub explanation: Explanation,
    pub accepted: Vec<[f64; 2]>,
    pub rejected: Vec<[f64; 2]>,
}

/// Produce one explanation. The selected strategy requires a domain.
pub fn explain(
    model: &dyn Predictor,
    domain: Option<&dyn Domain>,
    request: &ExplanationRequest,
) -> Result<Explanation> {
    explain_traced(model, domain, request).map(|o| o.explanation)
}

/// [`explain`] with the sample cloud retained.
pub fn explain_traced(
    model: &dyn Predictor,
    domain: Option<&dyn Domain>,
    request: &ExplanationRequest,
) -> Result<ExplainOutcome> {
    if request.probe.len() != model.n_features() {
        return Err(Error::DimensionMismatch {
            expected: model.n_features(),
            got: request.probe.len(),
        });
    }
    if request.probe.len() < request.map.required_dim() {
        return Err(Error::DimensionMismatch {
            expected: request.map.required_dim(),
            got: request.probe.len(),
        });
    }
    if request.probe.len() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: request.probe.len(),
        });
    }
    let probe = [request.probe[0], request.probe[1]];

    let (accepted, rejected, acceptance_rate) = match request.strategy {
        SamplingStrategy::Normal => {
            let pts = sampler::sample_normal(probe, &request.sampler)?;
            (pts, Vec::new(), None)
        }
        SamplingStrategy::Selected => {
            let domain = domain.ok_or_else(|| {
                Error::InvalidConfig(
                    "selected sampling requires an estimated domain (alpha shape)".into(),
                )
            })?;
            let trace = sampler::sample_selected_traced(probe, &request.sampler, domain)?;
            let rate = trace.acceptance_rate();
            (trace.accepted, trace.rejected, Some(rate))
        }
    };

    let targets: Vec<f64> = accepted.iter().map(|p| model.predict(p)).collect();
    let design = solver::build_design(&request.map, &accepted)?;
    let fit = solver::fit(&design, &targets, &request.map, &request.solver)?;

    let surrogate: Vec<f64> = accepted
        .iter()
        .map(|p| solver::predict_surrogate(&fit.coefficients, &request.map, p))
        .collect::<Result<_>>()?;
    let fit_mse = metrics::mse(&targets, &surrogate)?;

    let importances = request
        .map
        .names()
        .iter()
        .zip(&fit.coefficients.weights)
        .map(|(name, &value)| Importance {
            name: (*name).to_string(),
            value,
        })
        .collect();

    let explanation = Explanation {
        probe: request.probe.clone(),
        strategy: request.strategy,
        intercept: fit.coefficients.intercept,
        importances,
        fit_mse,
        samples_used: accepted.len(),
        acceptance_rate,
        converged: fit.converged,
        kkt_residual: fit.kkt_residual,
        seed: request.sampler.seed,
        map: request.map.clone(),
        sampler: request.sampler,
        solver: request.solver,
        evaluation: None,
    };
    Ok(ExplainOutcome {
        explanation,
        accepted,
        rejected,
    })
}

/// Surrogate-vs-truth MSE and R^2 on a local test set carrying true targets.
pub fn evaluate_explanation(explanation: &Explanation, local_test: &Dataset) -> Result<(f64, f64)> {
    if local_test.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let coeffs = explanation.coefficients();
    let preds: Vec<f64> = local_test
        .samples()
        .iter()
        .map(|s| solver::predict_surrogate(&coeffs, &explanation.map, &s.features()))
        .collect::<Result<_>>()?;
    let truth = local_test.targets();
    Ok((metrics::mse(&truth, &preds)?, metrics::r2(&truth, &preds)?))
}

/// A held-out evaluation set near `probe`, drawn from the spiral process:
/// the arc within `radius` (measured along the spiral) of the noise-free
/// point nearest the probe, mapped through the target function and noised.
pub fn local_spiral_test_set(
    probe: [f64; 2],
    radius: f64,
    n: usize,
    noise_sigma: f64,
    theta_max: f64,
    seed: u64,
) -> Dataset {
    let theta_star = spiral::nearest_theta(probe, theta_max);
    let half_width = radius / spiral::arc_speed(theta_star);
    let lo = (theta_star - half_width).max(0.0);
    let hi = (theta_star + half_width).min(theta_max);
    spiral::generate_on_interval(n, lo, hi, noise_sigma, seed)
}
