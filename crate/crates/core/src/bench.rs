//! The spiral benchmark: train the black box, estimate the domain, explain
//! the probe instances under both sampling strategies, and compare every
//! headline number against its reference band.
//!
//! A full run is a pure function of the configuration (all seeds derive from
//! `master_seed`), so reports are byte-identical across runs.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::explain::{
    evaluate_explanation, explain, local_spiral_test_set, Explanation, ExplanationRequest,
    Importance, SamplingStrategy,
};
use crate::geom::{build_alpha_shape, AlphaShape, Point2};
use crate::metrics::{mse, r2};
use crate::properties::FeatureMap;
use crate::sampler::{derive_seed, SamplerConfig};
use crate::solver::SolverConfig;
use crate::spiral::{self, GenerationConfig};
use crate::tree::{fit_tree, RegressionTree, TreeParams};

// Seed-stream tags; every random stage gets its own derived seed.
const STREAM_GENERATE: u64 = 0x01;
const STREAM_SPLIT: u64 = 0x02;
const STREAM_PROBE: u64 = 0x100;
const STREAM_PROBE_EVAL: u64 = 0x200;
const STREAM_ROBUST: u64 = 0x300;
const STREAM_ROBUST_EVAL: u64 = 0x400;
const STREAM_REPEAT_STRIDE: u64 = 0x1_0000;

/// Full configuration of a benchmark run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchConfig {
    pub n: usize,
    pub theta_min: f64,
    pub theta_max: f64,
    pub noise_sigma: f64,
    pub train_fraction: f64,
    pub tree: TreeParams,
    pub alpha: f64,
    pub sigma: f64,
    pub m: usize,
    pub max_attempt_factor: usize,
    pub solver: SolverConfig,
    /// Uniform L1 penalty applied to both raw-feature coefficients.
    pub lambda: f64,
    /// Probe instances; the first three drive the headline checks.
    pub probes: Vec<[f64; 2]>,
    /// The stability study set: a base probe and small perturbations of it.
    pub robustness_probes: Vec<[f64; 2]>,
    /// Size of each local evaluation set.
    pub eval_n: usize,
    /// Evaluation radius in units of `sigma`.
    pub eval_radius_factor: f64,
    pub master_seed: u64,
    /// Explanations per probe; above 1, mean and spread statistics over
    /// re-samples are attached to every row.
    pub repeats: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            n: 80_000,
            theta_min: 0.0,
            theta_max: 8.0 * std::f64::consts::PI,
            noise_sigma: 0.4,
            train_fraction: 0.9,
            tree: TreeParams::default(),
            alpha: 1.0,
            sigma: 1.5,
            m: 1000,
            max_attempt_factor: 100,
            solver: SolverConfig {
                huber_delta: 0.4,
                ..SolverConfig::default()
            },
            lambda: 75.0,
            probes: vec![[0.0, 14.5], [10.0, 10.0], [-16.0, 0.0]],
            robustness_probes: vec![[0.0, 14.5], [-2.0, 14.5], [1.0, 14.0], [0.5, 13.7]],
            eval_n: 500,
            eval_radius_factor: 2.0,
            master_seed: 42,
            repeats: 1,
        }
    }
}

impl BenchConfig {
    pub fn validate(&self) -> Result<()> {
        self.generation_config().validate()?;
        self.tree.validate()?;
        if self.alpha <= 0.0 || self.alpha.is_nan() {
            return Err(Error::InvalidConfig("alpha must be positive".into()));
        }
        if self.probes.len() < 3 {
            return Err(Error::InvalidConfig(
                "benchmark needs the three probe instances".into(),
            ));
        }
        if self.robustness_probes.len() < 2 {
            return Err(Error::InvalidConfig(
                "robustness study needs at least two probes".into(),
            ));
        }
        if self.eval_n < 2 {
            return Err(Error::InvalidConfig("eval_n must be at least 2".into()));
        }
        if self.repeats == 0 {
            return Err(Error::InvalidConfig("repeats must be at least 1".into()));
        }
        self.sampler_config(0).validate()?;
        self.solver.validate()?;
        if self.lambda < 0.0 || self.lambda.is_nan() {
            return Err(Error::InvalidConfig("lambda must be non-negative".into()));
        }
        Ok(())
    }

    pub fn generation_config(&self) -> GenerationConfig {
        GenerationConfig {
            n: self.n,
            theta_min: self.theta_min,
            theta_max: self.theta_max,
            noise_sigma: self.noise_sigma,
            seed: derive_seed(self.master_seed, STREAM_GENERATE),
        }
    }

    fn sampler_config(&self, seed: u64) -> SamplerConfig {
        SamplerConfig {
            sigma: self.sigma,
            m: self.m,
            max_attempt_factor: self.max_attempt_factor,
            seed,
        }
    }

    fn feature_map(&self) -> FeatureMap {
        FeatureMap::identity(2, self.lambda)
    }

    fn eval_radius(&self) -> f64 {
        self.eval_radius_factor * self.sigma
    }
}

/// Black-box quality on the held-out split.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BlackboxMetrics {
    pub train_size: usize,
    pub test_size: usize,
    pub test_mse: f64,
    pub test_r2: f64,
    pub n_leaves: usize,
    pub depth: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ShapeSummary {
    pub alpha: f64,
    pub points: usize,
    pub kept_triangles: usize,
    pub delaunay_triangles: usize,
}

/// Mean and spread of importances over repeated explanations.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RepeatStats {
    pub count: usize,
    pub importance_mean: Vec<Importance>,
    pub importance_spread: Vec<Importance>,
    pub local_mse_mean: f64,
    pub local_r2_mean: f64,
}

/// One probe-strategy result row.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProbeRow {
    pub label: String,
    pub probe: [f64; 2],
    pub strategy: SamplingStrategy,
    pub importances: Vec<Importance>,
    pub intercept: f64,
    pub fit_mse: f64,
    pub local_mse: f64,
    pub local_r2: f64,
    pub acceptance_rate: Option<f64>,
    pub converged: bool,
    pub seed: u64,
    /// Set when this row's explanation failed outright; metrics are zeroed.
    pub error: Option<String>,
    pub repeats: Option<RepeatStats>,
}

impl ProbeRow {
    pub fn importance_of(&self, name: &str) -> Option<f64> {
        self.importances
            .iter()
            .find(|i| i.name == name)
            .map(|i| i.value)
    }
}

/// Per-strategy importance spread (max minus min) over the robustness rows.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StrategySpread {
    pub strategy: SamplingStrategy,
    pub spreads: Vec<Importance>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RobustnessStudy {
    pub rows: Vec<ProbeRow>,
    pub spreads: Vec<StrategySpread>,
}

/// One reference-band comparison: `pass` iff `value` lies in `[lo, hi]`
/// (missing bounds are one-sided).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BandCheck {
    pub id: String,
    pub label: String,
    pub value: f64,
    /// The published value this band was built around, when one exists.
    pub reference: Option<f64>,
    pub lo: Option<f64>,
    pub hi: Option<f64>,
    pub pass: bool,
}

fn check(
    id: &str,
    label: &str,
    value: f64,
    reference: Option<f64>,
    lo: Option<f64>,
    hi: Option<f64>,
) -> BandCheck {
    let pass = value.is_finite()
        && lo.is_none_or(|l| value >= l)
        && hi.is_none_or(|h| value <= h);
    BandCheck {
        id: id.to_string(),
        label: label.to_string(),
        value,
        reference,
        lo,
        hi,
        pass,
    }
}

/// The full benchmark artifact.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub config: BenchConfig,
    pub blackbox: BlackboxMetrics,
    pub shape: ShapeSummary,
    pub probe_study: Vec<ProbeRow>,
    pub robustness: RobustnessStudy,
    pub checks: Vec<BandCheck>,
    pub all_pass: bool,
}

impl BenchmarkReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn row(&self, label: &str, strategy: SamplingStrategy) -> Option<&ProbeRow> {
        self.probe_study
            .iter()
            .find(|r| r.label == label && r.strategy == strategy)
    }

    pub fn check_by_id(&self, id: &str) -> Option<&BandCheck> {
        self.checks.iter().find(|c| c.id == id)
    }
}

struct Harness<'a> {
    config: &'a BenchConfig,
    tree: RegressionTree,
    shape: AlphaShape,
    map: FeatureMap,
}

impl Harness<'_> {
    /// Run one probe-strategy cell; errors are folded into the row.
    fn run_row(
        &self,
        label: &str,
        probe: [f64; 2],
        strategy: SamplingStrategy,
        sample_seed_base: u64,
        eval_seed_base: u64,
    ) -> ProbeRow {
        let config = self.config;
        let one = |rep: u64| -> Result<(Explanation, f64, f64)> {
            let request = ExplanationRequest {
                probe: probe.to_vec(),
                strategy,
                sampler: config.sampler_config(derive_seed(
                    config.master_seed,
                    sample_seed_base + rep * STREAM_REPEAT_STRIDE,
                )),
                map: self.map.clone(),
                solver: config.solver,
            };
            let explanation = explain(&self.tree, Some(&self.shape), &request)?;
            let local = local_spiral_test_set(
                probe,
                config.eval_radius(),
                config.eval_n,
                config.noise_sigma,
                config.theta_max,
                derive_seed(config.master_seed, eval_seed_base + rep * STREAM_REPEAT_STRIDE),
            );
            let (local_mse, local_r2) = evaluate_explanation(&explanation, &local)?;
            Ok((explanation, local_mse, local_r2))
        };

        match one(0) {
            Err(err) => ProbeRow {
                label: label.to_string(),
                probe,
                strategy,
                importances: Vec::new(),
                intercept: 0.0,
                fit_mse: 0.0,
                local_mse: 0.0,
                local_r2: 0.0,
                acceptance_rate: None,
                converged: false,
                seed: derive_seed(config.master_seed, sample_seed_base),
                error: Some(err.to_string()),
                repeats: None,
            },
            Ok((explanation, local_mse, local_r2)) => {
                let repeats = if config.repeats > 1 {
                    Some(self.repeat_stats(&explanation, local_mse, local_r2, &one))
                } else {
                    None
                };
                ProbeRow {
                    label: label.to_string(),
                    probe,
                    strategy,
                    importances: explanation.importances.clone(),
                    intercept: explanation.intercept,
                    fit_mse: explanation.fit_mse,
                    local_mse,
                    local_r2,
                    acceptance_rate: explanation.acceptance_rate,
                    converged: explanation.converged,
                    seed: explanation.seed,
                    error: None,
                    repeats,
                }
            }
        }
    }

    fn repeat_stats(
        &self,
        first: &Explanation,
        first_mse: f64,
        first_r2: f64,
        one: &dyn Fn(u64) -> Result<(Explanation, f64, f64)>,
    ) -> RepeatStats {
        let names: Vec<String> = first.importances.iter().map(|i| i.name.clone()).collect();
        let mut values: Vec<Vec<f64>> = vec![first.importances.iter().map(|i| i.value).collect()];
        let mut mses = vec![first_mse];
        let mut r2s = vec![first_r2];
        for rep in 1..self.config.repeats as u64 {
            if let Ok((explanation, m, r)) = one(rep) {
                values.push(explanation.importances.iter().map(|i| i.value).collect());
                mses.push(m);
                r2s.push(r);
            }
        }
        let count = values.len();
        let stat = |f: &dyn Fn(&[f64]) -> f64| -> Vec<Importance> {
            names
                .iter()
                .enumerate()
                .map(|(j, name)| {
                    let column: Vec<f64> = values.iter().map(|v| v[j]).collect();
                    Importance {
                        name: name.clone(),
                        value: f(&column),
                    }
                })
                .collect()
        };
        RepeatStats {
            count,
            importance_mean: stat(&|v| v.iter().sum::<f64>() / v.len() as f64),
            importance_spread: stat(&|v| {
                v.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
                    - v.iter().cloned().fold(f64::INFINITY, f64::min)
            }),
            local_mse_mean: mses.iter().sum::<f64>() / count as f64,
            local_r2_mean: r2s.iter().sum::<f64>() / count as f64,
        }
    }
}

fn spread_of(rows: &[&ProbeRow], name: &str) -> f64 {
    let values: Vec<f64> = rows.iter().filter_map(|r| r.importance_of(name)).collect();
    if values.is_empty() {
        return f64::NAN;
    }
    values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - values.iter().cloned().fold(f64::INFINITY, f64::min)
}

/// The heavyweight intermediate products of a benchmark run, exposed for
/// plotting and inspection.
pub struct BenchArtifacts {
    pub train: spiral::Dataset,
    pub test: spiral::Dataset,
    pub tree: RegressionTree,
    pub shape: AlphaShape,
}

/// Run the complete benchmark.
pub fn run_bench(config: &BenchConfig) -> Result<BenchmarkReport> {
    run_bench_with_artifacts(config).map(|(report, _)| report)
}

/// [`run_bench`], also returning the trained model, the shape and the data
/// split.
pub fn run_bench_with_artifacts(
    config: &BenchConfig,
) -> Result<(BenchmarkReport, BenchArtifacts)> {
    config.validate()?;

    let data = spiral::generate_dataset(&config.generation_config())?;
    let (train, test) = spiral::split(
        &data,
        config.train_fraction,
        derive_seed(config.master_seed, STREAM_SPLIT),
    )?;

    let tree = fit_tree(&train, &config.tree)?;
    let preds = tree.predict_batch(&test.feature_rows())?;
    let truth = test.targets();
    let blackbox = BlackboxMetrics {
        train_size: train.len(),
        test_size: test.len(),
        test_mse: mse(&truth, &preds)?,
        test_r2: r2(&truth, &preds)?,
        n_leaves: tree.n_leaves(),
        depth: tree.depth(),
    };

    let points: Vec<Point2> = train
        .samples()
        .iter()
        .map(|s| Point2::from(s.features()))
        .collect();
    let shape = build_alpha_shape(&points, config.alpha)?;
    let shape_summary = ShapeSummary {
        alpha: config.alpha,
        points: points.len(),
        kept_triangles: shape.kept_triangles().len(),
        delaunay_triangles: shape.n_delaunay_triangles(),
    };

    let harness = Harness {
        config,
        tree,
        shape,
        map: config.feature_map(),
    };

    let mut probe_study = Vec::new();
    for (idx, &probe) in config.probes.iter().enumerate() {
        let label = format!("x{}", idx + 1);
        for strategy in [SamplingStrategy::Normal, SamplingStrategy::Selected] {
            probe_study.push(harness.run_row(
                &label,
                probe,
                strategy,
                STREAM_PROBE + idx as u64,
                STREAM_PROBE_EVAL + idx as u64,
            ));
        }
    }

    let mut robustness_rows = Vec::new();
    for (idx, &probe) in config.robustness_probes.iter().enumerate() {
        // x1, x1a, x1b, ... following the perturbation study's naming.
        let label = if idx == 0 {
            "x1".to_string()
        } else {
            format!("x1{}", (b'a' + (idx as u8 - 1)) as char)
        };
        for strategy in [SamplingStrategy::Normal, SamplingStrategy::Selected] {
            robustness_rows.push(harness.run_row(
                &label,
                probe,
                strategy,
                STREAM_ROBUST + idx as u64,
                STREAM_ROBUST_EVAL + idx as u64,
            ));
        }
    }
    let names = harness.map.names();
    let mut spreads = Vec::new();
    for strategy in [SamplingStrategy::Normal, SamplingStrategy::Selected] {
        let rows: Vec<&ProbeRow> = robustness_rows
            .iter()
            .filter(|r| r.strategy == strategy)
            .collect();
        spreads.push(StrategySpread {
            strategy,
            spreads: names
                .iter()
                .map(|name| Importance {
                    name: (*name).to_string(),
                    value: spread_of(&rows, name),
                })
                .collect(),
        });
    }
    let robustness = RobustnessStudy {
        rows: robustness_rows,
        spreads,
    };

    let mut report = BenchmarkReport {
        config: config.clone(),
        blackbox,
        shape: shape_summary,
        probe_study,
        robustness,
        checks: Vec::new(),
        all_pass: false,
    };
    report.checks = build_checks(&report);
    report.all_pass = report.checks.iter().all(|c| c.pass);
    let artifacts = BenchArtifacts {
        train,
        test,
        tree: harness.tree,
        shape: harness.shape,
    };
    Ok((report, artifacts))
}

/// Compare the report against every reference band.
fn build_checks(report: &BenchmarkReport) -> Vec<BandCheck> {
    let mut checks = Vec::new();

    checks.push(check(
        "blackbox_r2",
        "held-out R^2 of the black-box tree",
        report.blackbox.test_r2,
        Some(0.997),
        Some(0.99),
        None,
    ));
    checks.push(check(
        "blackbox_mse",
        "held-out MSE of the black-box tree",
        report.blackbox.test_mse,
        Some(24.0),
        Some(10.0),
        Some(50.0),
    ));

    let sel = |label: &str| report.row(label, SamplingStrategy::Selected);
    let nor = |label: &str| report.row(label, SamplingStrategy::Normal);
    let imp = |row: Option<&ProbeRow>, name: &str| -> f64 {
        row.and_then(|r| r.importance_of(name)).unwrap_or(f64::NAN)
    };

    // First probe: the arm runs along x1, so x1 must dominate.
    let x1s = sel("x1");
    checks.push(check(
        "x1_selected_x1_importance",
        "x1 importance at probe x1, selected sampling",
        imp(x1s, "x1"),
        Some(-0.96),
        Some(-1.15),
        Some(-0.80),
    ));
    checks.push(check(
        "x1_selected_x2_magnitude",
        "|x2 importance| at probe x1, selected sampling",
        imp(x1s, "x2").abs(),
        Some(0.33),
        None,
        Some(0.5),
    ));
    checks.push(check(
        "x1_selected_local_r2",
        "local R^2 at probe x1, selected sampling",
        x1s.map_or(f64::NAN, |r| r.local_r2),
        Some(0.95),
        Some(0.90),
        None,
    ));
    checks.push(check(
        "x1_selected_local_mse",
        "local MSE at probe x1, selected sampling",
        x1s.map_or(f64::NAN, |r| r.local_mse),
        Some(0.19),
        None,
        Some(0.5),
    ));
    checks.push(check(
        "x1_strategy_r2_gap",
        "selected minus normal local R^2 at probe x1",
        x1s.map_or(f64::NAN, |r| r.local_r2) - nor("x1").map_or(f64::NAN, |r| r.local_r2),
        Some(0.23),
        Some(0.1),
        None,
    ));

    // Second probe: equal contribution of both features.
    let x2s = sel("x2");
    let (i1, i2) = (imp(x2s, "x1"), imp(x2s, "x2"));
    checks.push(check(
        "x2_selected_share_sign",
        "sign product of the importances at probe x2, selected sampling",
        i1 * i2,
        None,
        Some(f64::MIN_POSITIVE),
        None,
    ));
    checks.push(check(
        "x2_selected_magnitude_ratio",
        "|x1/x2| importance ratio at probe x2, selected sampling",
        (i1 / i2).abs(),
        Some(1.0),
        Some(0.5),
        Some(2.0),
    ));
    checks.push(check(
        "x2_selected_local_r2",
        "local R^2 at probe x2, selected sampling",
        x2s.map_or(f64::NAN, |r| r.local_r2),
        Some(0.96),
        Some(0.90),
        None,
    ));

    // Third probe: the arm runs along x2.
    let x3s = sel("x3");
    checks.push(check(
        "x3_selected_x2_importance",
        "x2 importance at probe x3, selected sampling",
        imp(x3s, "x2"),
        Some(-1.0),
        Some(-1.15),
        Some(-0.85),
    ));
    checks.push(check(
        "x3_selected_dominance",
        "|x2| minus |x1| importance at probe x3, selected sampling",
        imp(x3s, "x2").abs() - imp(x3s, "x1").abs(),
        None,
        Some(f64::MIN_POSITIVE),
        None,
    ));
    checks.push(check(
        "x3_selected_local_r2",
        "local R^2 at probe x3, selected sampling",
        x3s.map_or(f64::NAN, |r| r.local_r2),
        Some(0.97),
        Some(0.90),
        None,
    ));

    // Robustness: tight selected spreads, every one of them beating the
    // corresponding normal-sampling spread.
    let spread = |strategy: SamplingStrategy, name: &str| -> f64 {
        report
            .robustness
            .spreads
            .iter()
            .find(|s| s.strategy == strategy)
            .and_then(|s| s.spreads.iter().find(|i| i.name == name))
            .map_or(f64::NAN, |i| i.value)
    };
    checks.push(check(
        "robustness_selected_x1_spread",
        "spread of the x1 importance across perturbed probes, selected",
        spread(SamplingStrategy::Selected, "x1"),
        Some(0.02),
        None,
        Some(0.1),
    ));
    let min_gap = ["x1", "x2"]
        .iter()
        .map(|name| {
            spread(SamplingStrategy::Normal, name) - spread(SamplingStrategy::Selected, name)
        })
        .fold(f64::INFINITY, f64::min);
    checks.push(check(
        "robustness_spread_ordering",
        "min over importances of normal spread minus selected spread",
        min_gap,
        Some(2.42),
        Some(f64::MIN_POSITIVE),
        None,
    ));

    // Analytic tangent oracle at the first probe: the chain rule
    // (dy/dtheta)/(dx1/dtheta) at the nearest noise-free spiral point.
    let theta_star = spiral::nearest_theta(report.config.probes[0], report.config.theta_max);
    let oracle = spiral::arc_speed(theta_star) / spiral::spiral_tangent(theta_star)[0];
    checks.push(check(
        "x1_tangent_oracle_gap",
        "x1 importance minus the tangent-derivative oracle at probe x1",
        imp(x1s, "x1") - oracle,
        Some(0.0),
        Some(-0.2),
        Some(0.2),
    ));

    checks
}

/// Plain-text rendering: probe tables in the reference layout plus one
/// pass/fail line per check.
pub fn render_text(report: &BenchmarkReport) -> String {
    use std::fmt::Write;
    let mut out = String::new();
    let _ = writeln!(
        out,
        "Black box: train {} / test {}  MSE={:.2}  R2={:.4}  ({} leaves, depth {})",
        report.blackbox.train_size,
        report.blackbox.test_size,
        report.blackbox.test_mse,
        report.blackbox.test_r2,
        report.blackbox.n_leaves,
        report.blackbox.depth,
    );
    let _ = writeln!(
        out,
        "Alpha shape: alpha={}  kept {}/{} triangles over {} points",
        report.shape.alpha,
        report.shape.kept_triangles,
        report.shape.delaunay_triangles,
        report.shape.points,
    );

    let table = |out: &mut String, title: &str, rows: &[&ProbeRow]| {
        let _ = writeln!(out, "\n{title}");
        let _ = writeln!(
            out,
            "{:<6} {:>8} {:>8} {:>10} {:>10} {:>9} {:>7}",
            "point", "x1", "x2", "x1 imp", "x2 imp", "MSE", "R2"
        );
        for row in rows {
            if let Some(err) = &row.error {
                let _ = writeln!(out, "{:<6} error: {err}", row.label);
                continue;
            }
            let _ = write!(
                out,
                "{:<6} {:>8.2} {:>8.2} {:>10.3} {:>10.3} {:>9.3} {:>7.3}",
                row.label,
                row.probe[0],
                row.probe[1],
                row.importance_of("x1").unwrap_or(f64::NAN),
                row.importance_of("x2").unwrap_or(f64::NAN),
                row.local_mse,
                row.local_r2,
            );
            if let Some(stats) = &row.repeats {
                let columns: Vec<String> = stats
                    .importance_mean
                    .iter()
                    .zip(&stats.importance_spread)
                    .map(|(mean, spread)| {
                        format!("{} {:+.3} (spread {:.3})", mean.name, mean.value, spread.value)
                    })
                    .collect();
                let _ = write!(
                    out,
                    "  | over {} repeats: {}",
                    stats.count,
                    columns.join(", ")
                );
            }
            let _ = writeln!(out);
        }
    };

    for (study, rows) in [
        ("Probe study", &report.probe_study),
        ("Robustness study", &report.robustness.rows),
    ] {
        for strategy in [SamplingStrategy::Normal, SamplingStrategy::Selected] {
            let subset: Vec<&ProbeRow> = rows.iter().filter(|r| r.strategy == strategy).collect();
            table(&mut out, &format!("{study} - {strategy} sampling"), &subset);
        }
    }

    let _ = writeln!(out, "\nRobustness importance spreads (max - min):");
    for s in &report.robustness.spreads {
        let parts: Vec<String> = s
            .spreads
            .iter()
            .map(|i| format!("{}={:.3}", i.name, i.value))
            .collect();
        let _ = writeln!(out, "  {:<9} {}", s.strategy.to_string(), parts.join("  "));
    }

    let _ = writeln!(out, "\nReference-band checks:");
    for c in &report.checks {
        let band = match (c.lo, c.hi) {
            (Some(lo), Some(hi)) => format!("[{lo:.3}, {hi:.3}]"),
            (Some(lo), None) => format!(">= {lo:.3}"),
            (None, Some(hi)) => format!("<= {hi:.3}"),
            (None, None) => "(unbounded)".to_string(),
        };
        let reference = c
            .reference
            .map_or(String::new(), |r| format!("  reference={r:.3}"));
        let _ = writeln!(
            out,
            "[{}] {:<32} value={:+.4}  band={band}{reference}",
            if c.pass { "PASS" } else { "FAIL" },
            c.id,
            c.value,
        );
    }
    let _ = writeln!(
        out,
        "\nOverall: {}",
        if report.all_pass {
            "all checks passed"
        } else {
            "SOME CHECKS FAILED"
        }
    );
    out
}
