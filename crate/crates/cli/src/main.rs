//! Command-line frontend for density ridge estimation: data generation,
//! the ridge-finding pipeline, density evaluation, set distances, and the
//! scaling experiments, all emitting reproducible CSV/JSON artifacts.
//!
//! Exit codes: 0 success, 1 usage error, 2 runtime or data error.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

use ridges::density::{silverman_bandwidth, DensityModel};
use ridges::experiments::{
    bandwidth_sweep, bias_experiment, rate_experiment, BiasConfig, RateConfig, RateReference,
};
use ridges::geometry::{format_float, hausdorff, ManifoldSpec, ManifoldWeight, PointCloud};
use ridges::ridge::{surf, PointStatus, SurfConfig};
use ridges::synth::{cosmic_web, default_web_layout, HiddenManifoldModel};

#[derive(Parser)]
#[command(
    name = "ridges",
    version,
    about = "Estimate density ridges from point clouds",
    propagate_version = true
)]
struct Cli {
    /// Cap the number of worker threads (does not change any result).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample synthetic data from a hidden-manifold model.
    Generate(GenerateArgs),
    /// Run the ridge-finding pipeline on a CSV of points.
    Surf(SurfArgs),
    /// Evaluate the kernel density estimator at given coordinates.
    EvalDensity(EvalDensityArgs),
    /// Hausdorff distance between two point CSVs.
    Hausdorff { a: PathBuf, b: PathBuf },
    /// Estimation error against sample size.
    Rate(RateArgs),
    /// Surrogate bias of the oracle ridge against noise scale.
    Bias(BiasArgs),
    /// Ridge structure across a bandwidth grid.
    Sweep(SweepArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelKind {
    Circle,
    Web,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, value_enum, default_value = "circle")]
    model: ModelKind,
    /// Circle radius.
    #[arg(long, default_value_t = 3.0)]
    r: f64,
    /// Circle center as "x,y".
    #[arg(long, default_value = "0,0", value_parser = parse_f64_list)]
    center: std::vec::Vec<f64>,
    /// Noise scale.
    #[arg(long, default_value_t = 0.5)]
    sigma: f64,
    /// Signal fraction; 1 - eta is uniform background clutter.
    #[arg(long, default_value_t = 1.0)]
    eta: f64,
    /// Amplitude a of the nonuniform circle weight w(θ) ∝ 1 + a·cos θ.
    #[arg(long, default_value_t = 0.0)]
    weight_tilt: f64,
    /// Padding of the clutter box beyond the manifold bounding box
    /// (defaults to 4·sigma + 0.5).
    #[arg(long)]
    box_pad: Option<f64>,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    seed: u64,
    /// Output CSV; a JSON manifest is written beside it.
    #[arg(long)]
    out: PathBuf,
    /// Prepend an x0,...,x{D-1} header row.
    #[arg(long, default_value_t = false)]
    header: bool,
}

#[derive(Args)]
struct SurfArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value_t = 1)]
    d: usize,
    /// Kernel bandwidth; Silverman rule when omitted.
    #[arg(long)]
    bandwidth: Option<f64>,
    /// Denoise cutoff as a fraction of the maximum mesh density.
    #[arg(long, default_value_t = 0.05)]
    threshold: f64,
    /// Ascend the log-density (default).
    #[arg(long, default_value_t = true, overrides_with = "no_log")]
    log: bool,
    #[arg(long = "no-log")]
    no_log: bool,
    #[arg(long, default_value_t = 1e-7)]
    step_tol: f64,
    #[arg(long, default_value_t = 1e-6)]
    grad_tol: f64,
    #[arg(long, default_value_t = 500)]
    max_iter: usize,
    /// Ridge CSV output; per-point diagnostics JSON is written beside it.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvalDensityArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    bandwidth: Option<f64>,
    /// Evaluation point "x0,x1,..."; repeatable.
    #[arg(long = "at", required = true, value_parser = parse_f64_list)]
    at: Vec<Vec<f64>>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ReferenceKind {
    Oracle,
    Manifold,
}

#[derive(Args)]
struct RateArgs {
    #[arg(long, value_parser = parse_usize_list, default_value = "500,2000,8000")]
    n_grid: std::vec::Vec<usize>,
    #[arg(long, default_value_t = 5)]
    reps: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 3.0)]
    r: f64,
    #[arg(long, default_value_t = 0.5)]
    sigma: f64,
    #[arg(long, default_value_t = 1.0)]
    eta: f64,
    #[arg(long, default_value_t = 1)]
    d: usize,
    /// Fixed bandwidth for every cell; Silverman per cell when omitted.
    #[arg(long)]
    bandwidth: Option<f64>,
    #[arg(long, default_value_t = 0.25)]
    threshold: f64,
    #[arg(long, value_enum, default_value = "oracle")]
    reference: ReferenceKind,
    /// Restriction radius around the reference; defaults to 3·sigma²/r.
    #[arg(long)]
    delta_restrict: Option<f64>,
    #[arg(long)]
    out: PathBuf,
    /// Also write the cells as CSV (one row per cell) for plotting.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct BiasArgs {
    #[arg(long, value_parser = parse_f64_list, default_value = "0.4,0.2,0.1")]
    sigma_grid: Vec<Vec<f64>>,
    #[arg(long, default_value_t = 3.0)]
    r: f64,
    /// Mixture components per oracle.
    #[arg(long, default_value_t = 1024)]
    m: usize,
    #[arg(long, default_value_t = 1)]
    d: usize,
    #[arg(long, default_value_t = true, overrides_with = "no_log")]
    log: bool,
    #[arg(long = "no-log")]
    no_log: bool,
    #[arg(long, default_value_t = 1024)]
    starts: usize,
    #[arg(long, default_value_t = 1024)]
    probes: usize,
    #[arg(long)]
    out: PathBuf,
    /// Also write the cells as CSV (one row per cell) for plotting.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_parser = parse_f64_list)]
    h_grid: Vec<Vec<f64>>,
    #[arg(long, default_value_t = 1)]
    d: usize,
    #[arg(long, default_value_t = 0.25)]
    threshold: f64,
    #[arg(long, default_value_t = 0.25)]
    eps_connect: f64,
    /// Radius of a ground-truth circle centered at --truth-center.
    #[arg(long)]
    truth_circle_r: Option<f64>,
    #[arg(long, default_value = "0,0", value_parser = parse_f64_list)]
    truth_center: std::vec::Vec<f64>,
    #[arg(long)]
    out: PathBuf,
    /// Also write the cells as CSV (one row per cell) for plotting.
    #[arg(long)]
    csv: Option<PathBuf>,
}

fn parse_f64_list(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .map(|f| {
            f.trim()
                .parse::<f64>()
                .map_err(|_| format!("cannot parse `{f}` as a number"))
                .and_then(|v| {
                    if v.is_finite() {
                        Ok(v)
                    } else {
                        Err(format!("non-finite value `{f}`"))
                    }
                })
        })
        .collect()
}

fn parse_usize_list(s: &str) -> Result<Vec<usize>, String> {
    s.split(',')
        .map(|f| {
            f.trim()
                .parse::<usize>()
                .map_err(|_| format!("cannot parse `{f}` as an integer"))
        })
        .collect()
}

/// Runtime failure carrying the message printed before exit code 2.
struct RunError(String);

impl<E: std::fmt::Display> From<E> for RunError {
    fn from(e: E) -> Self {
        RunError(e.to_string())
    }
}

type RunResult = Result<(), RunError>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(threads) = cli.threads {
        if threads == 0 {
            eprintln!("error: --threads must be >= 1");
            return ExitCode::from(1);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(RunError(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn run(command: Command) -> RunResult {
    match command {
        Command::Generate(args) => generate(args),
        Command::Surf(args) => run_surf(args),
        Command::EvalDensity(args) => eval_density(args),
        Command::Hausdorff { a, b } => {
            let pa = PointCloud::read_csv_path(&a)?;
            let pb = PointCloud::read_csv_path(&b)?;
            println!("{}", format_float(hausdorff(&pa, &pb)?));
            Ok(())
        }
        Command::Rate(args) => rate(args),
        Command::Bias(args) => bias(args),
        Command::Sweep(args) => sweep(args),
    }
}

fn sidecar_path(out: &Path, suffix: &str) -> PathBuf {
    let mut name = out.file_name().unwrap_or_default().to_os_string();
    name.push(suffix);
    out.with_file_name(name)
}

fn write_report(
    report: &ridges::experiments::ExperimentReport,
    out: &Path,
    csv: Option<&Path>,
) -> RunResult {
    write_json(out, report)?;
    if let Some(csv_path) = csv {
        fs_write(csv_path, report.to_csv())?;
    }
    Ok(())
}

fn fs_write(path: &Path, contents: String) -> RunResult {
    std::fs::write(path, contents)?;
    Ok(())
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> RunResult {
    let f = File::create(path)?;
    let mut w = BufWriter::new(f);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    Ok(())
}

fn generate(args: GenerateArgs) -> RunResult {
    match args.model {
        ModelKind::Circle => {
            if args.center.len() != 2 {
                return Err("--center must have exactly two coordinates".into());
            }
            let manifold = ManifoldSpec::circle(args.center.clone(), args.r)?;
            let weight = if args.weight_tilt == 0.0 {
                ManifoldWeight::Uniform
            } else {
                ManifoldWeight::CosineTilt {
                    amplitude: args.weight_tilt,
                }
            };
            let pad = args.box_pad.unwrap_or(4.0 * args.sigma + 0.5);
            let bounds = vec![
                (args.center[0] - args.r - pad, args.center[0] + args.r + pad),
                (args.center[1] - args.r - pad, args.center[1] + args.r + pad),
            ];
            let model = HiddenManifoldModel::new(
                manifold, weight, args.sigma, args.eta, bounds, args.seed,
            )?;
            let points = model.sample(args.n)?;
            points.write_csv_path(&args.out, args.header)?;
            write_json(
                &sidecar_path(&args.out, ".manifest.json"),
                &model.manifest(args.n),
            )
        }
        ModelKind::Web => {
            let (points, spec) = cosmic_web(
                args.seed,
                args.n,
                default_web_layout(),
                args.sigma,
                1.0 - args.eta,
            )?;
            points.write_csv_path(&args.out, args.header)?;
            let manifest = serde_json::json!({
                "manifold": spec,
                "sigma": args.sigma,
                "eta": args.eta,
                "seed": args.seed,
                "n": args.n,
            });
            write_json(&sidecar_path(&args.out, ".manifest.json"), &manifest)
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn surf_config(
    d: usize,
    bandwidth: Option<f64>,
    threshold: f64,
    no_log: bool,
    step_tol: f64,
    grad_tol: f64,
    max_iter: usize,
) -> SurfConfig {
    let mut config = SurfConfig::new(d);
    config.bandwidth = bandwidth;
    config.threshold_frac = threshold;
    config.use_log = !no_log;
    config.step_tol = step_tol;
    config.grad_tol = grad_tol;
    config.max_iter = max_iter;
    config
}

fn run_surf(args: SurfArgs) -> RunResult {
    let data = PointCloud::read_csv_path(&args.input)?;
    let config = surf_config(
        args.d,
        args.bandwidth,
        args.threshold,
        args.no_log,
        args.step_tol,
        args.grad_tol,
        args.max_iter,
    );
    let estimate = surf(&data, &config)?;
    estimate.ridge_points().write_csv_path(&args.out, false)?;
    write_json(&sidecar_path(&args.out, ".diagnostics.json"), &estimate)?;
    let converged = estimate.count(|s| matches!(s, PointStatus::Converged { .. }));
    let denoised = estimate.count(|s| matches!(s, PointStatus::Denoised));
    eprintln!(
        "surf: {} mesh points, {} converged, {} denoised, bandwidth {}",
        estimate.records.len(),
        converged,
        denoised,
        estimate.config.bandwidth.expect("resolved"),
    );
    Ok(())
}

fn eval_density(args: EvalDensityArgs) -> RunResult {
    let data = PointCloud::read_csv_path(&args.input)?;
    let bandwidth = match args.bandwidth {
        Some(h) => h,
        None => silverman_bandwidth(&data)?,
    };
    let model = DensityModel::kde(data, bandwidth)?;
    let mut out = Vec::new();
    for x in &args.at {
        let info = model.eval(x, false)?;
        let dim = x.len();
        let hess: Vec<Vec<f64>> = (0..dim).map(|i| info.hess.row(i).to_vec()).collect();
        out.push(serde_json::json!({
            "x": x,
            "p": info.p,
            "g": info.g,
            "hess": hess,
        }));
    }
    let doc = serde_json::json!({ "bandwidth": bandwidth, "evaluations": out });
    println!("{}", serde_json::to_string_pretty(&doc)?);
    Ok(())
}

fn rate(args: RateArgs) -> RunResult {
    let manifold = ManifoldSpec::circle(vec![0.0, 0.0], args.r)?;
    let pad = 4.0 * args.sigma + 0.5;
    let half = args.r + pad;
    let model = HiddenManifoldModel::new(
        manifold,
        ManifoldWeight::Uniform,
        args.sigma,
        args.eta,
        vec![(-half, half), (-half, half)],
        args.seed,
    )?;
    let reference = match args.reference {
        ReferenceKind::Oracle => RateReference::OracleRidge {
            quadrature: 512,
            starts: 512,
        },
        ReferenceKind::Manifold => RateReference::Manifold { probes: 1024 },
    };
    let config = RateConfig {
        n_grid: args.n_grid,
        replications: args.reps,
        surf: surf_config(
            args.d,
            args.bandwidth,
            args.threshold,
            false,
            1e-7,
            1e-6,
            500,
        ),
        reference,
        delta_restrict: args.delta_restrict,
    };
    let report = rate_experiment(&model, &config)?;
    write_report(&report, &args.out, args.csv.as_deref())
}

fn bias(args: BiasArgs) -> RunResult {
    let sigma_grid = args.sigma_grid.into_iter().flatten().collect::<Vec<f64>>();
    let manifold = ManifoldSpec::circle(vec![0.0, 0.0], args.r)?;
    let config = BiasConfig {
        sigma_grid,
        quadrature: args.m,
        d: args.d,
        use_log: !args.no_log,
        starts: args.starts,
        probe_count: args.probes,
    };
    let report = bias_experiment(&manifold, &config)?;
    write_report(&report, &args.out, args.csv.as_deref())
}

fn sweep(args: SweepArgs) -> RunResult {
    let data = PointCloud::read_csv_path(&args.input)?;
    let h_grid = args.h_grid.into_iter().flatten().collect::<Vec<f64>>();
    let truth = match args.truth_circle_r {
        Some(r) => {
            if args.truth_center.len() != 2 {
                return Err("--truth-center must have exactly two coordinates".into());
            }
            Some(ManifoldSpec::circle(args.truth_center.clone(), r)?)
        }
        None => None,
    };
    let config = surf_config(args.d, None, args.threshold, false, 1e-7, 1e-6, 500);
    let report = bandwidth_sweep(&data, &h_grid, &config, args.eps_connect, truth.as_ref())?;
    write_report(&report, &args.out, args.csv.as_deref())
}
