//! Local surrogate explanations for black-box regression models, with
//! neighborhoods restricted to the estimated domain of the feature space.
//!
//! The pipeline explains a single prediction of an opaque regression model by
//! fitting a small, robust, L1-penalized linear model on samples drawn around
//! the probe instance. Two sampling strategies are provided:
//!
//! * **normal** — an isotropic Gaussian around the probe;
//! * **selected** — the same Gaussian filtered through an [`AlphaShape`]
//!   built over the training data, so that every fitting sample lies on the
//!   region actually covered by data.
//!
//! The crate also ships the spiral regression benchmark used to validate the
//! approach end to end: a synthetic spiral dataset ([`spiral`]), a CART-style
//! regression tree as the black box ([`tree`]), and a reproducible benchmark
//! harness ([`bench`]) comparing both strategies on a set of probe instances.
//!
//! All randomized stages are driven by explicit 64-bit seeds through a
//! ChaCha-based generator, so every artifact in the pipeline is reproducible
//! bit for bit. Fitted trees, built shapes and datasets are immutable after
//! construction and safe to share across threads; independent explanations
//! can run concurrently against the same model and shape.

pub mod bench;
pub mod error;
pub mod explain;
pub mod geom;
pub mod metrics;
pub mod properties;
pub mod sampler;
pub mod solver;
pub mod spiral;
pub mod tree;

pub use error::{Error, Result};
pub use explain::{Explanation, ExplanationRequest, SamplingStrategy};
pub use geom::{build_alpha_shape, delaunay, AlphaShape, Domain, Point2, Triangulation};
pub use properties::{FeatureMap, PropertyFunction};
pub use sampler::SamplerConfig;
pub use solver::{Coefficients, FitResult, SolverConfig};
pub use spiral::{Dataset, GenerationConfig, SpiralSample};
pub use tree::{RegressionTree, TreeParams};

/// A trained regression model queried only through its predictions.
pub trait Predictor {
    /// Number of input features the model expects.
    fn n_features(&self) -> usize;

    /// Predict the target for a single feature vector of length
    /// [`n_features`](Predictor::n_features).
    fn predict(&self, x: &[f64]) -> f64;
}

impl<P: Predictor + ?Sized> Predictor for &P {
    fn n_features(&self) -> usize {
        (**self).n_features()
    }

    fn predict(&self, x: &[f64]) -> f64 {
        (**self).predict(x)
    }
}
