//! Command-line front end: clustering, image filtering, synthetic data
//! generation, evaluation, and the strategy benchmark.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use meanshift::data::{load_labels, load_points, save_labels, save_points, synth_gaussians};
use meanshift::engine::{cluster, EngineConfig, EngineMode};
use meanshift::eval::{mode_localization_error, pri, MetricReport};
use meanshift::imaging::{filter_image, FeatureSpace, Image};
use meanshift::{Error, KernelProfile, PointSet, Strategy, StrategyParams, SynthSpec};

#[derive(Parser)]
#[command(name = "meanshift", version, about = "Mean shift clustering with adaptive bandwidth strategies")]
struct Cli {
    /// Cap the worker thread count (results are identical at any count).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Cluster a CSV of points and write labels, modes, and a manifest.
    Cluster(ClusterArgs),
    /// Mean-shift filter a PNG image in L*u*v space.
    Filter(FilterArgs),
    /// Generate a seeded synthetic Gaussian mixture.
    Synth(SynthArgs),
    /// Compare two label files with the Rand index.
    Eval(EvalArgs),
    /// Run all six strategies over seeded synthetic instances.
    Bench(BenchArgs),
}

#[derive(Args, Clone, Serialize)]
struct StrategyFlags {
    /// Strategy: fms | eams | sams | esams | weams | bams.
    #[arg(long, default_value = "bams")]
    strategy: String,
    /// Kernel profile: epanechnikov | gaussian.
    #[arg(long, default_value = "gaussian")]
    kernel: String,
    /// Neighbor count for knn bandwidths.
    #[arg(long, default_value_t = 30)]
    knn: usize,
    /// Fixed bandwidth (fms only; defaults to 0.1 × data diameter).
    #[arg(long)]
    fixed_h: Option<f64>,
    /// λ of the sigmoid-stabilized weight.
    #[arg(long, default_value_t = 0.975)]
    lambda: f64,
    /// β of the sigmoid-stabilized weight.
    #[arg(long, default_value_t = 100.0)]
    beta: f64,
    /// Convergence threshold (defaults to 1e−3 × data diameter).
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long, default_value_t = 100)]
    max_iter: usize,
    /// Mode-merging distance (defaults to 5 × epsilon).
    #[arg(long)]
    merge_tol: Option<f64>,
    /// Engine mode: probe | blur.
    #[arg(long, default_value = "probe")]
    mode: String,
}

impl StrategyFlags {
    fn parse_kernel(&self) -> Result<KernelProfile, Error> {
        match self.kernel.to_ascii_lowercase().as_str() {
            "epanechnikov" => Ok(KernelProfile::Epanechnikov),
            "gaussian" => Ok(KernelProfile::Gaussian),
            other => Err(Error::InvalidParameter(format!("unknown kernel {other:?}"))),
        }
    }

    fn parse_mode(&self) -> Result<EngineMode, Error> {
        match self.mode.to_ascii_lowercase().as_str() {
            "probe" => Ok(EngineMode::Probe),
            "blur" => Ok(EngineMode::Blur),
            other => Err(Error::InvalidParameter(format!("unknown mode {other:?}"))),
        }
    }

    fn params(&self, points: &PointSet<f64>) -> Result<StrategyParams<f64>, Error> {
        let strategy: Strategy = self.strategy.parse()?;
        let fixed_h = match (strategy, self.fixed_h) {
            (Strategy::Fms, None) => Some(0.1 * points.diameter()),
            (_, h) => h,
        };
        let params = StrategyParams {
            strategy,
            kernel: self.parse_kernel()?,
            k_neighbors: self.knn,
            lambda: self.lambda,
            beta: self.beta,
            fixed_h,
        };
        params.validate()?;
        Ok(params)
    }

    fn config(&self, points: &PointSet<f64>) -> Result<EngineConfig<f64>, Error> {
        let mut cfg = EngineConfig::for_points(points);
        if let Some(e) = self.epsilon {
            cfg.epsilon = e;
            cfg.merge_tol = 5.0 * e;
        }
        if let Some(t) = self.merge_tol {
            cfg.merge_tol = t;
        }
        cfg.max_iter = self.max_iter;
        cfg.mode = self.parse_mode()?;
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args, Serialize)]
struct ClusterArgs {
    #[arg(long)]
    input: PathBuf,
    /// Output directory for labels.csv, modes.csv, manifest.json.
    #[arg(long, default_value = "meanshift-out")]
    output: PathBuf,
    #[command(flatten)]
    #[serde(flatten)]
    flags: StrategyFlags,
}

#[derive(Args, Serialize)]
struct FilterArgs {
    #[arg(long)]
    input: PathBuf,
    /// Output PNG path; a manifest is written alongside.
    #[arg(long)]
    output: PathBuf,
    /// Feature space: luv3 | joint5.
    #[arg(long, default_value = "luv3")]
    space: String,
    /// Divisor for pixel coordinates in joint5 mode.
    #[arg(long, default_value_t = 8.0)]
    spatial_scale: f64,
    #[command(flatten)]
    #[serde(flatten)]
    flags: StrategyFlags,
}

#[derive(Args, Serialize)]
struct SynthArgs {
    /// Mixture preset; currently four-gauss.
    #[arg(long, default_value = "four-gauss")]
    preset: String,
    /// JSON mixture specification (overrides --preset).
    #[arg(long)]
    spec_file: Option<PathBuf>,
    /// Generator seed; required for reproducibility.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for points.csv, labels.csv, manifest.json.
    #[arg(long, default_value = "meanshift-out")]
    output: PathBuf,
}

#[derive(Args, Serialize)]
struct EvalArgs {
    /// Reference label file.
    truth: PathBuf,
    /// Predicted label file.
    predicted: PathBuf,
}

#[derive(Args, Serialize)]
struct BenchArgs {
    /// Number of seeded instances per strategy.
    #[arg(long, default_value_t = 20)]
    seeds: u64,
    /// Neighbor count for knn bandwidths.
    #[arg(long, default_value_t = 30)]
    knn: usize,
    /// Kernel profile: epanechnikov | gaussian.
    #[arg(long, default_value = "gaussian")]
    kernel: String,
    /// Output directory for bench.csv, bench.svg, manifest.json.
    #[arg(long, default_value = "meanshift-out")]
    output: PathBuf,
}

#[derive(Serialize)]
struct Manifest<A: Serialize> {
    command: &'static str,
    #[serde(flatten)]
    args: A,
    wall_time_s: f64,
}

fn write_manifest<A: Serialize>(path: &Path, command: &'static str, args: &A, started: Instant) -> Result<(), Error> {
    let manifest = Manifest {
        command,
        args,
        wall_time_s: started.elapsed().as_secs_f64(),
    };
    std::fs::write(path, serde_json::to_string_pretty(&manifest).expect("manifest serializes"))?;
    Ok(())
}

fn cmd_cluster(args: &ClusterArgs) -> Result<(), Error> {
    let started = Instant::now();
    if !args.input.is_file() {
        return Err(Error::InvalidParameter(format!(
            "input file {} does not exist",
            args.input.display()
        )));
    }
    let points: PointSet<f64> = load_points(&args.input)?;
    let params = args.flags.params(&points)?;
    let config = args.flags.config(&points)?;
    let result = cluster(&points, &params, &config)?;
    std::fs::create_dir_all(&args.output)?;
    save_labels(&result.labels, args.output.join("labels.csv"))?;
    save_points(&result.modes, args.output.join("modes.csv"))?;
    write_manifest(&args.output.join("manifest.json"), "cluster", args, started)?;
    eprintln!(
        "clustered {} points into {} modes",
        points.len(),
        result.modes.len()
    );
    Ok(())
}

fn cmd_filter(args: &FilterArgs) -> Result<(), Error> {
    let started = Instant::now();
    if !args.input.is_file() {
        return Err(Error::InvalidParameter(format!(
            "input file {} does not exist",
            args.input.display()
        )));
    }
    let space = match args.space.to_ascii_lowercase().as_str() {
        "luv3" => FeatureSpace::Luv3,
        "joint5" => FeatureSpace::Joint5 {
            spatial_scale: args.spatial_scale,
        },
        other => {
            return Err(Error::InvalidParameter(format!(
                "unknown feature space {other:?}"
            )))
        }
    };
    let image = Image::load_png(&args.input)?;
    // scale-free engine defaults come from the Luv feature cloud
    let features: Vec<Vec<f64>> = image
        .pixels
        .iter()
        .map(|&p| meanshift::imaging::rgb_to_luv(p).to_vec())
        .collect();
    let cloud = PointSet::from_rows(&features)?;
    let params = args.flags.params(&cloud)?;
    let config = args.flags.config(&cloud)?;
    let filtered = filter_image(&image, space, &params, &config)?;
    filtered.save_png(&args.output)?;
    let manifest_path = args.output.with_extension("manifest.json");
    write_manifest(&manifest_path, "filter", args, started)?;
    Ok(())
}

fn cmd_synth(args: &SynthArgs) -> Result<(), Error> {
    let started = Instant::now();
    let seed = args.seed.ok_or_else(|| {
        Error::InvalidParameter("--seed is required for reproducibility".into())
    })?;
    let spec: SynthSpec<f64> = match &args.spec_file {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            let mut spec: SynthSpec<f64> = serde_json::from_str(&text)
                .map_err(|e| Error::InvalidParameter(format!("bad spec file: {e}")))?;
            spec.seed = seed;
            spec
        }
        None => match args.preset.as_str() {
            "four-gauss" => SynthSpec::four_gauss(seed),
            other => {
                return Err(Error::InvalidParameter(format!("unknown preset {other:?}")))
            }
        },
    };
    let (points, labels) = synth_gaussians(&spec)?;
    std::fs::create_dir_all(&args.output)?;
    save_points(&points, args.output.join("points.csv"))?;
    save_labels(&labels, args.output.join("labels.csv"))?;
    write_manifest(&args.output.join("manifest.json"), "synth", args, started)?;
    Ok(())
}

fn cmd_eval(args: &EvalArgs) -> Result<(), Error> {
    let truth = load_labels(&args.truth)?;
    let predicted = load_labels(&args.predicted)?;
    let report = MetricReport {
        pri: Some(pri(&truth, &predicted)?),
        n_clusters_found: predicted.n_clusters(),
        mode_error: None,
    };
    println!("{}", report.to_json_line());
    Ok(())
}

fn cmd_bench(args: &BenchArgs) -> Result<(), Error> {
    let started = Instant::now();
    let kernel = match args.kernel.to_ascii_lowercase().as_str() {
        "epanechnikov" => KernelProfile::Epanechnikov,
        "gaussian" => KernelProfile::Gaussian,
        other => return Err(Error::InvalidParameter(format!("unknown kernel {other:?}"))),
    };
    std::fs::create_dir_all(&args.output)?;

    let mut csv = String::from("strategy,seed,clusters_found,mode_error,iterations\n");
    let mut mean_errors: Vec<(Strategy, f64)> = Vec::new();
    for strategy in Strategy::ALL {
        let mut error_sum = 0.0;
        for seed in 0..args.seeds {
            let spec = SynthSpec::<f64>::four_gauss(seed);
            let (points, _) = synth_gaussians(&spec)?;
            let mut params = StrategyParams::defaults(strategy, kernel);
            params.k_neighbors = args.knn;
            if strategy == Strategy::Fms {
                params.fixed_h = Some(0.1 * points.diameter());
            }
            let config = EngineConfig::for_points(&points);
            let result = cluster(&points, &params, &config)?;
            let truth_means = spec.means()?;
            let err = mode_localization_error(&result.modes, &truth_means)?;
            let iters = result.iterations.iter().sum::<usize>() / result.iterations.len();
            csv.push_str(&format!(
                "{},{},{},{},{}\n",
                strategy.name(),
                seed,
                result.modes.len(),
                err,
                iters
            ));
            error_sum += err;
        }
        mean_errors.push((strategy, error_sum / args.seeds as f64));
    }
    std::fs::write(args.output.join("bench.csv"), &csv)?;
    std::fs::write(args.output.join("bench.svg"), bench_svg(&mean_errors))?;
    write_manifest(&args.output.join("manifest.json"), "bench", args, started)?;
    Ok(())
}

/// Static bar chart of mean mode-localization error per strategy.
fn bench_svg(mean_errors: &[(Strategy, f64)]) -> String {
    let width = 480.0;
    let height = 300.0;
    let margin = 40.0;
    let max_err = mean_errors
        .iter()
        .map(|(_, e)| *e)
        .fold(f64::MIN_POSITIVE, f64::max);
    let bar_w = (width - 2.0 * margin) / mean_errors.len() as f64;
    let mut svg = format!(
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">"#
    );
    svg.push_str(&format!(
        r#"<text x="{}" y="20" text-anchor="middle" font-family="sans-serif" font-size="14">Mean mode localization error by strategy</text>"#,
        width / 2.0
    ));
    for (i, (strategy, err)) in mean_errors.iter().enumerate() {
        let h = (err / max_err) * (height - 3.0 * margin);
        let x = margin + i as f64 * bar_w;
        let y = height - margin - h;
        svg.push_str(&format!(
            r##"<rect x="{:.1}" y="{:.1}" width="{:.1}" height="{:.1}" fill="#4477aa"/>"##,
            x + bar_w * 0.1,
            y,
            bar_w * 0.8,
            h
        ));
        svg.push_str(&format!(
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-family="sans-serif" font-size="11">{}</text>"#,
            x + bar_w / 2.0,
            height - margin + 15.0,
            strategy.name()
        ));
        svg.push_str(&format!(
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-family="sans-serif" font-size="10">{:.3}</text>"#,
            x + bar_w / 2.0,
            y - 4.0,
            err
        ));
    }
    svg.push_str("</svg>\n");
    svg
}

fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Io(_) | Error::Image(_) => 2,
        _ => 1,
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    if let Some(threads) = cli.threads {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
    let result = match &cli.command {
        Command::Cluster(args) => cmd_cluster(args),
        Command::Filter(args) => cmd_filter(args),
        Command::Synth(args) => cmd_synth(args),
        Command::Eval(args) => cmd_eval(args),
        Command::Bench(args) => cmd_bench(args),
    };
    if let Err(e) = result {
        eprintln!("error: {e}");
        std::process::exit(exit_code(&e));
    }
}
