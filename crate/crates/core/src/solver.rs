//! Penalized robust fitting of the surrogate coefficients.
//!
//! The solver minimizes, over the intercept `a0` and weight vector `w`,
//!
//! ```text
//! F(a0, w) = sum_k rho_delta(y_k - a0 - phi_k . w) + sum_i lambda_i |w_i|
//! ```
//!
//! where `rho_delta` is the Huber function scaled so that `delta = inf`
//! reduces the first term to the plain squared error. Only the weights are
//! penalized; the intercept is a free coordinate of the same proximal
//! gradient descent (soft thresholding on the L1 term, backtracking line
//! search, monotone accelerated variant). Estimating the intercept inside
//! the robust loss matters: with outliers present, pinning it to the target
//! mean would leave a constant residual offset that biases every weight.
//! The property columns are centered during optimization so the intercept
//! coordinate stays decoupled from the weights; `delta = inf` with zero
//! penalties reproduces ordinary least squares exactly.
//!
//! Convergence is declared when the L1-subgradient KKT residual (including
//! the intercept gradient) drops to the configured tolerance.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::properties::{apply_map, FeatureMap};

/// Row-major design matrix of property evaluations (`rows` samples by
/// `cols` properties).
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    data: Vec<f64>,
    rows: usize,
    cols: usize,
}

impl DesignMatrix {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let Some(first) = rows.first() else {
            return Err(Error::EmptyDesign);
        };
        let cols = first.len();
        if cols == 0 {
            return Err(Error::EmptyDesign);
        }
        let mut data = Vec::with_capacity(rows.len() * cols);
        for row in &rows {
            if row.len() != cols {
                return Err(Error::LengthMismatch {
                    left: cols,
                    right: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Ok(DesignMatrix {
            data,
            rows: rows.len(),
            cols,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, k: usize) -> &[f64] {
        &self.data[k * self.cols..(k + 1) * self.cols]
    }
}

/// Evaluate the feature map on every sample to form the design matrix.
pub fn build_design(map: &FeatureMap, samples: &[[f64; 2]]) -> Result<DesignMatrix> {
    let rows = samples
        .iter()
        .map(|x| apply_map(map, x))
        .collect::<Result<Vec<_>>>()?;
    DesignMatrix::from_rows(rows)
}

/// Backtracking line-search parameters for the proximal gradient step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepPolicy {
    /// Factor the local curvature estimate grows by on a failed step.
    pub backtrack_factor: f64,
    /// Optimistic shrink applied once per iteration, letting the step
    /// recover after a conservative stretch.
    pub relax_factor: f64,
    pub max_backtracks: usize,
}

impl Default for StepPolicy {
    fn default() -> Self {
        StepPolicy {
            backtrack_factor: 2.0,
            relax_factor: 0.9,
            max_backtracks: 60,
        }
    }
}

/// Solver settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Huber threshold; residuals beyond it contribute linearly. `inf`
    /// recovers the plain squared-error objective.
    pub huber_delta: f64,
    /// KKT residual tolerance.
    pub tol: f64,
    pub max_iter: usize,
    pub step: StepPolicy,
    /// Use the monotone accelerated variant (never increases the objective).
    pub accelerate: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            huber_delta: 1.35,
            tol: 1e-8,
            max_iter: 100_000,
            step: StepPolicy::default(),
            accelerate: true,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.huber_delta <= 0.0 || self.huber_delta.is_nan() {
            return Err(Error::InvalidConfig(format!(
                "huber_delta must be positive, got {}",
                self.huber_delta
            )));
        }
        if self.tol <= 0.0 || self.tol.is_nan() {
            return Err(Error::InvalidConfig("tol must be positive".into()));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidConfig("max_iter must be at least 1".into()));
        }
        if self.step.backtrack_factor <= 1.0
            || self.step.relax_factor <= 0.0
            || self.step.backtrack_factor.is_nan()
            || self.step.relax_factor.is_nan()
        {
            return Err(Error::InvalidConfig("invalid step policy".into()));
        }
        Ok(())
    }
}

/// Fitted surrogate coefficients: the unpenalized intercept and one weight
/// per property, in map order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coefficients {
    pub intercept: f64,
    pub weights: Vec<f64>,
}

/// Fit outcome. `converged == false` flags that `max_iter` was reached with
/// the KKT residual still above tolerance; the coefficients are still the
/// best iterate found.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub coefficients: Coefficients,
    pub converged: bool,
    pub iterations: usize,
    pub kkt_residual: f64,
    pub objective: f64,
}

/// Huber rho, scaled to match the squared error below the threshold.
fn huber(r: f64, delta: f64) -> f64 {
    let a = r.abs();
    if a <= delta {
        r * r
    } else {
        delta * (2.0 * a - delta)
    }
}

/// d rho / d r: `2r` clipped to `[-2 delta, 2 delta]`.
fn huber_grad(r: f64, delta: f64) -> f64 {
    (2.0 * r).clamp(-2.0 * delta, 2.0 * delta)
}

fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

/// Solver state: intercept coordinate plus weights, against the
/// column-centered design.
#[derive(Clone)]
struct State {
    b: f64,
    w: Vec<f64>,
}

struct Problem {
    /// Column-centered design, row major.
    x: Vec<f64>,
    rows: usize,
    cols: usize,
    /// Raw (uncentered) targets.
    y: Vec<f64>,
    col_means: Vec<f64>,
    lambdas: Vec<f64>,
    delta: f64,
}

impl Problem {
    fn new(design: &DesignMatrix, targets: &[f64], lambdas: Vec<f64>, delta: f64) -> Self {
        let (rows, cols) = (design.rows, design.cols);
        let mut col_means = vec![0.0; cols];
        for k in 0..rows {
            for (mean, v) in col_means.iter_mut().zip(design.row(k)) {
                *mean += v;
            }
        }
        for mean in &mut col_means {
            *mean /= rows as f64;
        }
        let mut x = Vec::with_capacity(rows * cols);
        for k in 0..rows {
            for (v, mean) in design.row(k).iter().zip(&col_means) {
                x.push(v - mean);
            }
        }
        Problem {
            x,
            rows,
            cols,
            y: targets.to_vec(),
            col_means,
            lambdas,
            delta,
        }
    }

    fn residuals(&self, s: &State, out: &mut Vec<f64>) {
        out.clear();
        for (row, y) in self.x.chunks_exact(self.cols).zip(&self.y) {
            let pred: f64 = s.b + row.iter().zip(&s.w).map(|(a, b)| a * b).sum::<f64>();
            out.push(y - pred);
        }
    }

    fn smooth_loss(&self, s: &State, scratch: &mut Vec<f64>) -> f64 {
        self.residuals(s, scratch);
        scratch.iter().map(|&r| huber(r, self.delta)).sum()
    }

    fn objective(&self, s: &State, scratch: &mut Vec<f64>) -> f64 {
        self.smooth_loss(s, scratch)
            + s.w
                .iter()
                .zip(&self.lambdas)
                .map(|(wi, li)| li * wi.abs())
                .sum::<f64>()
    }

    /// Gradient of the smooth part: intercept component `-sum psi` and
    /// weight components `-X^T psi`.
    fn gradient(&self, s: &State, scratch: &mut Vec<f64>, out_w: &mut [f64]) -> f64 {
        self.residuals(s, scratch);
        out_w.fill(0.0);
        let mut g_b = 0.0;
        for (row, &r) in self.x.chunks_exact(self.cols).zip(scratch.iter()) {
            let psi = huber_grad(r, self.delta);
            g_b -= psi;
            for (g, v) in out_w.iter_mut().zip(row) {
                *g -= psi * v;
            }
        }
        g_b
    }

    /// Curvature bound of the smooth part: `2 max(M, lambda_max(X^T X))`.
    /// The intercept column (all ones) is orthogonal to the centered
    /// columns, so the augmented Gram matrix is block diagonal.
    fn lipschitz_bound(&self) -> f64 {
        let n = self.cols;
        let mut gram = vec![0.0; n * n];
        for row in self.x.chunks_exact(self.cols) {
            for i in 0..n {
                for j in 0..n {
                    gram[i * n + j] += row[i] * row[j];
                }
            }
        }
        let mut v = vec![1.0 / (n as f64).sqrt(); n];
        let mut eig = 0.0;
        for _ in 0..100 {
            let mut next = vec![0.0; n];
            for i in 0..n {
                for j in 0..n {
                    next[i] += gram[i * n + j] * v[j];
                }
            }
            let norm = next.iter().map(|a| a * a).sum::<f64>().sqrt();
            if norm == 0.0 {
                break;
            }
            eig = norm;
            for (vi, ni) in v.iter_mut().zip(&next) {
                *vi = ni / norm;
            }
        }
        (2.0 * eig.max(self.rows as f64)).max(1e-12)
    }

    /// L1-subgradient optimality violation at `s`, including the intercept
    /// gradient (the intercept is unpenalized, so optimality needs it zero).
    fn kkt_residual(&self, s: &State, scratch: &mut Vec<f64>, grad: &mut [f64]) -> f64 {
        let g_b = self.gradient(s, scratch, grad);
        let mut worst = g_b.abs();
        for ((&g, &w), &lambda) in grad.iter().zip(&s.w).zip(&self.lambdas) {
            let v = if w != 0.0 {
                (g + lambda * w.signum()).abs()
            } else {
                (g.abs() - lambda).max(0.0)
            };
            worst = worst.max(v);
        }
        worst
    }

    /// Proximal gradient step from `point`, backtracking the curvature
    /// estimate until the quadratic majorization holds.
    fn step_from(
        &self,
        point: &State,
        l: &mut f64,
        policy: &StepPolicy,
        scratch: &mut Vec<f64>,
        grad: &mut [f64],
    ) -> State {
        let f_point = self.smooth_loss(point, scratch);
        let g_b = self.gradient(point, scratch, grad);
        for _ in 0..=policy.max_backtracks {
            let candidate = State {
                b: point.b - g_b / *l,
                w: point
                    .w
                    .iter()
                    .zip(grad.iter())
                    .zip(&self.lambdas)
                    .map(|((&w, &g), &lambda)| soft_threshold(w - g / *l, lambda / *l))
                    .collect(),
            };
            let f_cand = self.smooth_loss(&candidate, scratch);
            let db = candidate.b - point.b;
            let mut quad = f_point + g_b * db + 0.5 * *l * db * db;
            for ((&cw, &pw), &g) in candidate.w.iter().zip(&point.w).zip(grad.iter()) {
                let d = cw - pw;
                quad += g * d + 0.5 * *l * d * d;
            }
            // Tiny slack absorbs rounding when the step is essentially exact.
            if f_cand <= quad + 1e-12 * f_point.abs().max(1.0) {
                return candidate;
            }
            *l *= policy.backtrack_factor;
        }
        point.clone()
    }
}

/// Minimize the penalized robust objective over intercept and weights.
///
/// Returns when the KKT residual reaches `config.tol` or after
/// `config.max_iter` iterations (flagged in the result). The objective is
/// convex but not strictly so when properties are collinear; in that case
/// any minimizer passing the KKT check may be returned (the zero
/// initialization keeps the outcome deterministic).
pub fn fit(
    design: &DesignMatrix,
    targets: &[f64],
    map: &FeatureMap,
    config: &SolverConfig,
) -> Result<FitResult> {
    fit_with_trace(design, targets, map, config).map(|(result, _)| result)
}

/// [`fit`], also returning the objective value at every iterate. The trace
/// is non-increasing: each step either satisfies the majorization bound or
/// falls back to a plain descent step.
pub fn fit_with_trace(
    design: &DesignMatrix,
    targets: &[f64],
    map: &FeatureMap,
    config: &SolverConfig,
) -> Result<(FitResult, Vec<f64>)> {
    config.validate()?;
    if design.rows == 0 || design.cols == 0 {
        return Err(Error::EmptyDesign);
    }
    if design.rows != targets.len() {
        return Err(Error::LengthMismatch {
            left: design.rows,
            right: targets.len(),
        });
    }
    if design.cols != map.len() {
        return Err(Error::LengthMismatch {
            left: design.cols,
            right: map.len(),
        });
    }
    let problem = Problem::new(design, targets, map.lambdas(), config.huber_delta);
    let n = problem.cols;

    let mut scratch = Vec::with_capacity(problem.rows);
    let mut grad = vec![0.0; n];

    // Start at zero weights with the intercept at the target mean.
    let y_mean = targets.iter().sum::<f64>() / problem.rows as f64;
    let mut state = State {
        b: y_mean,
        w: vec![0.0; n],
    };
    let mut prev = state.clone();
    let mut extrapolated = state.clone();
    let mut t = 1.0f64;
    let mut l = problem.lipschitz_bound();
    let mut objective = problem.objective(&state, &mut scratch);
    let mut trace = vec![objective];
    let mut converged = false;
    let mut iterations = 0;
    let mut residual = problem.kkt_residual(&state, &mut scratch, &mut grad);

    if residual <= config.tol {
        converged = true;
    } else {
        for iter in 1..=config.max_iter {
            iterations = iter;
            l *= config.step.relax_factor;

            let candidate = if config.accelerate {
                problem.step_from(&extrapolated, &mut l, &config.step, &mut scratch, &mut grad)
            } else {
                problem.step_from(&state, &mut l, &config.step, &mut scratch, &mut grad)
            };
            let cand_obj = problem.objective(&candidate, &mut scratch);

            // Monotone safeguard: an accelerated step that overshoots is
            // replaced by a plain step from the current iterate.
            let (next, next_obj) = if cand_obj <= objective || !config.accelerate {
                (candidate, cand_obj)
            } else {
                let fallback =
                    problem.step_from(&state, &mut l, &config.step, &mut scratch, &mut grad);
                let fb_obj = problem.objective(&fallback, &mut scratch);
                if fb_obj <= cand_obj {
                    (fallback, fb_obj)
                } else {
                    (candidate, cand_obj)
                }
            };

            let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
            let beta = (t - 1.0) / t_next;
            extrapolated = State {
                b: next.b + beta * (next.b - prev.b),
                w: (0..n)
                    .map(|i| next.w[i] + beta * (next.w[i] - prev.w[i]))
                    .collect(),
            };
            t = t_next;
            prev = state;
            state = next;
            objective = next_obj.min(objective);
            trace.push(objective);

            residual = problem.kkt_residual(&state, &mut scratch, &mut grad);
            if residual <= config.tol {
                converged = true;
                break;
            }
        }
    }

    // Convert back to raw units: the intercept was fit against centered
    // columns.
    let intercept = state.b
        - state
            .w
            .iter()
            .zip(&problem.col_means)
            .map(|(wi, mi)| wi * mi)
            .sum::<f64>();
    let coefficients = Coefficients {
        intercept,
        weights: state.w,
    };
    let objective = objective_value(
        design,
        targets,
        &problem.lambdas,
        config.huber_delta,
        &coefficients,
    );
    Ok((
        FitResult {
            coefficients,
            converged,
            iterations,
            kkt_residual: residual,
            objective,
        },
        trace,
    ))
}

/// The full objective at given coefficients:
/// `sum_k rho_delta(y_k - a0 - phi_k . w) + sum_i lambda_i |w_i|`.
pub fn objective_value(
    design: &DesignMatrix,
    targets: &[f64],
    lambdas: &[f64],
    delta: f64,
    coeffs: &Coefficients,
) -> f64 {
    let mut loss = 0.0;
    for (k, &y) in targets.iter().enumerate() {
        let pred: f64 = coeffs.intercept
            + design
                .row(k)
                .iter()
                .zip(&coeffs.weights)
                .map(|(a, b)| a * b)
                .sum::<f64>();
        loss += huber(y - pred, delta);
    }
    loss + coeffs
        .weights
        .iter()
        .zip(lambdas)
        .map(|(wi, li)| li * wi.abs())
        .sum::<f64>()
}

/// KKT residual of the penalized objective at the given coefficients,
/// including the (unpenalized) intercept gradient.
pub fn kkt_residual(
    design: &DesignMatrix,
    targets: &[f64],
    map: &FeatureMap,
    delta: f64,
    coeffs: &Coefficients,
) -> f64 {
    let problem = Problem::new(design, targets, map.lambdas(), delta);
    let b = coeffs.intercept
        + coeffs
            .weights
            .iter()
            .zip(&problem.col_means)
            .map(|(wi, mi)| wi * mi)
            .sum::<f64>();
    let state = State {
        b,
        w: coeffs.weights.clone(),
    };
    let mut scratch = Vec::new();
    let mut grad = vec![0.0; problem.cols];
    problem.kkt_residual(&state, &mut scratch, &mut grad)
}

/// Surrogate prediction `a0 + sum_i w_i f_i(x)`.
pub fn predict_surrogate(coeffs: &Coefficients, map: &FeatureMap, x: &[f64]) -> Result<f64> {
    let props = apply_map(map, x)?;
    Ok(coeffs.intercept
        + props
            .iter()
            .zip(&coeffs.weights)
            .map(|(a, b)| a * b)
            .sum::<f64>())
}
