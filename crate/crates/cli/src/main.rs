//! Command-line front end for the explanation pipeline.
//!
//! Exit codes: 0 on success, 1 for configuration and validation errors,
//! 2 for runtime or numerical failures, 3 when a benchmark run completes
//! but some reference-band check fails.

mod config;
mod svg;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Parser, Subcommand};

use localex::bench::{render_text, run_bench_with_artifacts, BenchArtifacts, BenchmarkReport};
use localex::explain::{
    evaluate_explanation, explain_traced, local_spiral_test_set, EvalMetrics, ExplanationRequest,
    SamplingStrategy,
};
use localex::geom::{build_alpha_shape, AlphaShape, Point2};
use localex::sampler::{derive_seed, SamplerConfig};
use localex::spiral::{self, Dataset};
use localex::tree::{fit_tree, load_tree, save_tree};
use localex::{Error, Result};

use config::RunConfig;
use svg::Scatter;

#[derive(Parser)]
#[command(
    name = "localex",
    version,
    about = "Local surrogate explanations with domain-aware sampling"
)]
struct Cli {
    /// TOML configuration file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Master seed for every random stage.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Directory for generated artifacts.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the spiral dataset and write it as CSV.
    Generate {
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        noise_sigma: Option<f64>,
        /// Output path (default: <out_dir>/spiral.csv).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train the black-box tree and report held-out accuracy.
    Train {
        /// Dataset CSV produced by `generate`.
        #[arg(long)]
        data: PathBuf,
        /// Model output path (default: <out_dir>/tree.json).
        #[arg(long)]
        model_out: Option<PathBuf>,
        /// Maximum tree depth; 0 means unlimited.
        #[arg(long)]
        max_depth: Option<usize>,
        #[arg(long)]
        min_samples_leaf: Option<usize>,
        #[arg(long)]
        min_samples_split: Option<usize>,
        #[arg(long)]
        train_fraction: Option<f64>,
    },
    /// Build the alpha shape over a dataset and export it as JSON.
    Shape {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        alpha: Option<f64>,
        /// Output path (default: <out_dir>/shape.json).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Explain the model's prediction at one probe instance.
    Explain {
        /// Tree JSON produced by `train`.
        #[arg(long)]
        model: PathBuf,
        /// Training dataset CSV (domain estimation and evaluation).
        #[arg(long)]
        data: PathBuf,
        /// Probe instance as `x1,x2`.
        #[arg(long)]
        probe: String,
        /// Sampling strategy: `normal` or `selected`.
        #[arg(long, default_value = "selected")]
        strategy: String,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        sigma: Option<f64>,
        #[arg(long)]
        m: Option<usize>,
        /// Explanation output path (default: <out_dir>/explanation.json).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also render the sampling picture to this SVG path.
        #[arg(long)]
        svg: Option<PathBuf>,
        /// Also dump the fitting samples as `x1,x2` CSV.
        #[arg(long)]
        dump_samples: Option<PathBuf>,
    },
    /// Run the full benchmark: train, estimate the domain, explain every
    /// probe under both strategies, and check all reference bands.
    Bench {
        /// Explanations per probe; above 1 adds mean/spread statistics.
        #[arg(long)]
        repeat: Option<usize>,
        /// Skip the SVG renderings.
        #[arg(long)]
        no_svg: bool,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(classify(&e))
        }
    }
}

fn classify(e: &Error) -> u8 {
    match e {
        Error::InvalidConfig(_) | Error::DimensionMismatch { .. } | Error::LengthMismatch { .. } => {
            1
        }
        _ => 2,
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    let mut config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(dir) = &cli.out_dir {
        config.out_dir = dir.display().to_string();
    }

    match cli.command {
        Command::Generate { n, noise_sigma, out } => {
            if let Some(n) = n {
                config.n = n;
            }
            if let Some(s) = noise_sigma {
                config.noise_sigma = s;
            }
            let out = out.unwrap_or_else(|| out_path(&config, "spiral.csv"));
            cmd_generate(&config, &out)
        }
        Command::Train {
            data,
            model_out,
            max_depth,
            min_samples_leaf,
            min_samples_split,
            train_fraction,
        } => {
            if let Some(d) = max_depth {
                config.tree_max_depth = d;
            }
            if let Some(l) = min_samples_leaf {
                config.tree_min_samples_leaf = l;
            }
            if let Some(s) = min_samples_split {
                config.tree_min_samples_split = s;
            }
            if let Some(f) = train_fraction {
                config.train_fraction = f;
            }
            let model_out = model_out.unwrap_or_else(|| out_path(&config, "tree.json"));
            cmd_train(&config, &data, &model_out)
        }
        Command::Shape { data, alpha, out } => {
            if let Some(a) = alpha {
                config.alpha = a;
            }
            let out = out.unwrap_or_else(|| out_path(&config, "shape.json"));
            cmd_shape(&config, &data, &out)
        }
        Command::Explain {
            model,
            data,
            probe,
            strategy,
            alpha,
            sigma,
            m,
            out,
            svg,
            dump_samples,
        } => {
            if let Some(a) = alpha {
                config.alpha = a;
            }
            if let Some(s) = sigma {
                config.sigma = s;
            }
            if let Some(m) = m {
                config.m = m;
            }
            let out = out.unwrap_or_else(|| out_path(&config, "explanation.json"));
            let probe = parse_probe(&probe)?;
            let strategy = SamplingStrategy::from_str(&strategy)?;
            cmd_explain(
                &config,
                &model,
                &data,
                probe,
                strategy,
                &out,
                svg.as_deref(),
                dump_samples.as_deref(),
            )
        }
        Command::Bench { repeat, no_svg } => {
            if let Some(r) = repeat {
                config.repeats = r;
            }
            cmd_bench(&config, no_svg)
        }
    }
}

fn out_path(config: &RunConfig, name: &str) -> PathBuf {
    Path::new(&config.out_dir).join(name)
}

fn ensure_parent(path: &Path) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    Ok(())
}

fn parse_probe(text: &str) -> Result<[f64; 2]> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 2 {
        return Err(Error::InvalidConfig(format!(
            "probe must be `x1,x2`, got `{text}`"
        )));
    }
    let parse = |s: &str| -> Result<f64> {
        s.trim()
            .parse()
            .map_err(|_| Error::InvalidConfig(format!("invalid probe coordinate `{s}`")))
    };
    Ok([parse(parts[0])?, parse(parts[1])?])
}

fn cmd_generate(config: &RunConfig, out: &Path) -> Result<ExitCode> {
    let generation = config.generation_config(config.seed);
    let data = spiral::generate_dataset(&generation)?;
    ensure_parent(out)?;
    spiral::write_csv(&data, out)?;
    println!(
        "wrote {}: {} samples, theta in [{}, {}), noise sigma {}",
        out.display(),
        data.len(),
        generation.theta_min,
        generation.theta_max,
        generation.noise_sigma,
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_train(config: &RunConfig, data_path: &Path, model_out: &Path) -> Result<ExitCode> {
    let data = spiral::read_csv(data_path)?;
    let (train, test) = spiral::split(&data, config.train_fraction, derive_seed(config.seed, 2))?;
    let tree = fit_tree(&train, &config.tree_params())?;
    ensure_parent(model_out)?;
    save_tree(&tree, model_out)?;

    let preds = tree.predict_batch(&test.feature_rows())?;
    let truth = test.targets();
    let mse = localex::metrics::mse(&truth, &preds)?;
    // R^2 is undefined for degenerate held-out sets (fewer than two rows or
    // constant targets); report the MSE anyway.
    match localex::metrics::r2(&truth, &preds) {
        Ok(r2) => println!("MSE={mse:.4} R2={r2:.5}"),
        Err(_) => println!("MSE={mse:.4} R2=n/a"),
    }
    println!(
        "wrote {} ({} leaves, depth {}, trained on {} samples)",
        model_out.display(),
        tree.n_leaves(),
        tree.depth(),
        train.len(),
    );
    Ok(ExitCode::SUCCESS)
}

fn shape_from_dataset(data: &Dataset, alpha: f64) -> Result<AlphaShape> {
    let points: Vec<Point2> = data
        .samples()
        .iter()
        .map(|s| Point2::from(s.features()))
        .collect();
    build_alpha_shape(&points, alpha)
}

fn cmd_shape(config: &RunConfig, data_path: &Path, out: &Path) -> Result<ExitCode> {
    let data = spiral::read_csv(data_path)?;
    let shape = shape_from_dataset(&data, config.alpha)?;
    ensure_parent(out)?;
    std::fs::write(out, serde_json::to_string(&shape.export())?)?;
    println!(
        "wrote {}: alpha={}, kept {}/{} triangles over {} points",
        out.display(),
        config.alpha,
        shape.kept_triangles().len(),
        shape.n_delaunay_triangles(),
        shape.vertices().len(),
    );
    Ok(ExitCode::SUCCESS)
}

#[allow(clippy::too_many_arguments)]
fn cmd_explain(
    config: &RunConfig,
    model_path: &Path,
    data_path: &Path,
    probe: [f64; 2],
    strategy: SamplingStrategy,
    out: &Path,
    svg_out: Option<&Path>,
    dump_samples: Option<&Path>,
) -> Result<ExitCode> {
    let tree = load_tree(model_path)?;
    let data = spiral::read_csv(data_path)?;
    let shape = match strategy {
        SamplingStrategy::Selected => Some(shape_from_dataset(&data, config.alpha)?),
        SamplingStrategy::Normal => None,
    };

    let request = ExplanationRequest {
        probe: probe.to_vec(),
        strategy,
        sampler: SamplerConfig {
            sigma: config.sigma,
            m: config.m,
            max_attempt_factor: config.max_attempt_factor,
            seed: config.seed,
        },
        map: config.feature_map()?,
        solver: config.solver_config(),
    };
    let outcome = explain_traced(
        &tree,
        shape.as_ref().map(|s| s as &dyn localex::geom::Domain),
        &request,
    )?;
    let mut explanation = outcome.explanation;

    // Evaluate against fresh draws of the generating process near the probe.
    let local = local_spiral_test_set(
        probe,
        config.eval_radius_factor * config.sigma,
        config.eval_n,
        config.noise_sigma,
        config.theta_max,
        derive_seed(config.seed, 0xE7A1),
    );
    let (mse, r2) = evaluate_explanation(&explanation, &local)?;
    explanation.evaluation = Some(EvalMetrics {
        mse,
        r2,
        n: local.len(),
    });

    ensure_parent(out)?;
    std::fs::write(out, serde_json::to_string_pretty(&explanation)?)?;

    let importances: Vec<String> = explanation
        .importances
        .iter()
        .map(|i| format!("{}={:+.4}", i.name, i.value))
        .collect();
    println!(
        "{} sampling at ({}, {}): {}  intercept={:+.4}",
        explanation.strategy,
        probe[0],
        probe[1],
        importances.join("  "),
        explanation.intercept,
    );
    println!("local fit vs truth: MSE={mse:.4} R2={r2:.4}");
    if let Some(rate) = explanation.acceptance_rate {
        println!("acceptance rate: {rate:.3}");
    }
    if !explanation.converged {
        eprintln!(
            "warning: solver stopped at max_iter with KKT residual {:.2e}",
            explanation.kkt_residual
        );
    }
    println!("wrote {}", out.display());

    if let Some(path) = dump_samples {
        ensure_parent(path)?;
        let mut text = String::from("x1,x2\n");
        for p in &outcome.accepted {
            text.push_str(&format!("{},{}\n", p[0], p[1]));
        }
        std::fs::write(path, text)?;
        println!("wrote {}", path.display());
    }

    if let Some(path) = svg_out {
        let svg = render_explain_svg(&data, shape.as_ref(), &outcome.accepted, &outcome.rejected, probe);
        ensure_parent(path)?;
        std::fs::write(path, svg)?;
        println!("wrote {}", path.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn render_explain_svg(
    data: &Dataset,
    shape: Option<&AlphaShape>,
    accepted: &[[f64; 2]],
    rejected: &[[f64; 2]],
    probe: [f64; 2],
) -> String {
    let background: Vec<[f64; 2]> = data
        .samples()
        .iter()
        .step_by((data.len() / 4000).max(1))
        .map(|s| s.features())
        .collect();
    let (min, max) = Scatter::bounds_of(
        background
            .iter()
            .copied()
            .chain(accepted.iter().copied())
            .chain(rejected.iter().copied())
            .chain([probe]),
    );
    let mut plot = Scatter::new(min, max);
    plot.circles(&background, 1.2, "steelblue", 0.25);
    if let Some(shape) = shape {
        plot.shape_outline(shape, "palevioletred");
    }
    plot.circles(rejected, 2.0, "gray", 0.6);
    plot.circles(accepted, 2.0, "red", 0.7);
    plot.cross(probe, 10.0, "black");
    plot.finish("neighborhood sample")
}

fn cmd_bench(config: &RunConfig, no_svg: bool) -> Result<ExitCode> {
    let bench_config = config.bench_config();
    let (report, artifacts) = run_bench_with_artifacts(&bench_config)?;

    let dir = PathBuf::from(&config.out_dir);
    std::fs::create_dir_all(&dir)?;
    std::fs::write(dir.join("report.json"), report.to_json())?;
    let text = render_text(&report);
    std::fs::write(dir.join("report.txt"), &text)?;
    print!("{text}");

    if !no_svg {
        render_bench_svgs(&report, &artifacts, &dir)?;
    }
    println!("wrote {}", dir.join("report.json").display());

    if report.all_pass {
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!("some reference-band checks failed (see report)");
        Ok(ExitCode::from(3))
    }
}

/// One picture per probe: data cloud, shape outline, the normal cloud in
/// gray and the accepted selected samples in red. Sample clouds are
/// regenerated from the seeds recorded in the report, so the picture shows
/// exactly the points the fits used.
fn render_bench_svgs(
    report: &BenchmarkReport,
    artifacts: &BenchArtifacts,
    dir: &Path,
) -> Result<()> {
    for row in &report.probe_study {
        if row.strategy != SamplingStrategy::Selected || row.error.is_some() {
            continue;
        }
        let normal_row = report
            .probe_study
            .iter()
            .find(|r| r.label == row.label && r.strategy == SamplingStrategy::Normal);

        let make_request = |seed: u64, strategy: SamplingStrategy| ExplanationRequest {
            probe: row.probe.to_vec(),
            strategy,
            sampler: SamplerConfig {
                sigma: report.config.sigma,
                m: report.config.m,
                max_attempt_factor: report.config.max_attempt_factor,
                seed,
            },
            map: config_map(report),
            solver: report.config.solver,
        };
        let selected = explain_traced(
            &artifacts.tree,
            Some(&artifacts.shape),
            &make_request(row.seed, SamplingStrategy::Selected),
        )?;
        let normal = match normal_row {
            Some(nr) => Some(explain_traced(
                &artifacts.tree,
                Some(&artifacts.shape),
                &make_request(nr.seed, SamplingStrategy::Normal),
            )?),
            None => None,
        };

        let background: Vec<[f64; 2]> = artifacts
            .train
            .samples()
            .iter()
            .step_by((artifacts.train.len() / 4000).max(1))
            .map(|s| s.features())
            .collect();
        let (min, max) = Scatter::bounds_of(background.iter().copied());
        let mut plot = Scatter::new(min, max);
        plot.circles(&background, 1.2, "steelblue", 0.25);
        plot.shape_outline(&artifacts.shape, "palevioletred");
        if let Some(normal) = &normal {
            plot.circles(&normal.accepted, 2.0, "gray", 0.55);
        }
        plot.circles(&selected.accepted, 2.0, "red", 0.7);
        plot.cross(row.probe, 10.0, "black");
        let path = dir.join(format!("bench_probe_{}.svg", row.label));
        std::fs::write(&path, plot.finish(&format!("probe {}", row.label)))?;
    }
    Ok(())
}

fn config_map(report: &BenchmarkReport) -> localex::properties::FeatureMap {
    localex::properties::FeatureMap::identity(2, report.config.lambda)
}
