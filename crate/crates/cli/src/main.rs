use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use shrinkerlab::acceptance::{run_criterion, CRITERIA};
use shrinkerlab::flow::{run_flow, CurveState, FlowConfig};
use shrinkerlab::functionals::{
    cm_entropy, ly_confvol, stable_confvol_estimate, vt_lower_bound, with_refinement, FunctionalResult,
};
use shrinkerlab::heatlab::{
    density_from_weight, estimate_virtual_time, gaussian_distance, heat_at, moment_match, GridDensity, GridSpec,
    DEFAULT_TAIL_TOL,
};
use shrinkerlab::manifold::{
    build_samples, default_resolution, from_manifest, parse_catalog, ChartManifest, ChartSpec, DerivativeMode,
};
use shrinkerlab::optimize::OptimizerConfig;
use shrinkerlab::weights::{alpha_mass, c_const, c_hat};

/// Entropy, conformal volume and heat-flow experiments on self-shrinkers.
#[derive(Debug, Parser)]
#[command(name = "shrinkerlab", version)]
struct Cli {
    /// Worker threads for parallel evaluation.
    #[arg(long, global = true, env = "SHRINKERLAB_THREADS")]
    threads: Option<usize>,

    /// Seed for randomized optimizer starts.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Write results here instead of stdout.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Colding-Minicozzi entropy of a catalog entry.
    Entropy(FunctionalArgs),
    /// Normalized Li-Yau conformal volume of a catalog entry.
    Confvol(FunctionalArgs),
    /// Stabilized conformal volumes along a list of m.
    Stable {
        #[command(flatten)]
        source: Source,
        /// Increasing list of m, e.g. `0,1,2,5`.
        #[arg(long, value_delimiter = ',', default_value = "0,1,2,5")]
        m: Vec<usize>,
        #[command(flatten)]
        opt: OptimizerArgs,
    },
    /// Virtual-entropy lower bound from one modified weight.
    Vtbound {
        #[command(flatten)]
        source: Source,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        rho: f64,
        /// Weight center; defaults to the origin.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        x0: Option<Vec<f64>>,
    },
    /// CSV table of the normalizing constants.
    Constants {
        #[arg(long)]
        n: usize,
        /// Range `a..b` (inclusive) or a single value.
        #[arg(long, default_value = "0..5")]
        m: String,
        /// Ambient dimension for the mass normalizer; defaults to `n`.
        #[arg(long)]
        ambient: Option<usize>,
    },
    /// Heat flow of a grid density; CSV rows per time.
    Heat {
        /// Grid dimension (1 or 2).
        #[arg(long = "N", default_value_t = 1)]
        dim: usize,
        /// Grid half-width.
        #[arg(long = "L", default_value_t = 204.75)]
        extent: f64,
        /// Grid spacing.
        #[arg(long = "h", default_value_t = 0.1)]
        spacing: f64,
        /// `gaussian[:t]`, `what:m,rho` or `bump[:half_width,eps]`.
        #[arg(long, default_value = "what:1,1")]
        density: String,
        #[arg(long, value_delimiter = ',', default_value = "1,4,16")]
        times: Vec<f64>,
    },
    /// Curve-shortening flow with entropy checkpoints; CSV rows per checkpoint.
    Flow {
        /// `circle:R` or `ellipse:a,b`.
        #[arg(long)]
        curve: String,
        #[arg(long = "T")]
        horizon: f64,
        #[arg(long, default_value_t = 0.2)]
        dt_factor: f64,
        #[arg(long, default_value_t = 10)]
        checkpoints: usize,
        #[arg(long, default_value_t = 128)]
        points: usize,
    },
    /// Run acceptance criteria and print one line each.
    Verify {
        /// `all` or a comma-separated list of criterion numbers.
        #[arg(long, default_value = "all")]
        suite: String,
    },
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
struct Source {
    /// Catalog entry `name:p1,p2,...`, e.g. `sphere:2,2`.
    #[arg(long)]
    catalog: Option<String>,
    /// JSON chart manifest {name, params, resolution, truncation}.
    #[arg(long)]
    manifest: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct FunctionalArgs {
    #[command(flatten)]
    source: Source,
    /// Per-axis node counts overriding the default.
    #[arg(long, value_delimiter = ',')]
    resolution: Option<Vec<usize>>,
    /// Skip the half-resolution rerun that fills `refinement_gap`.
    #[arg(long)]
    no_refine: bool,
    /// Dump every coarse-scan probe as CSV (center..., scale, value).
    #[arg(long)]
    scan_csv: Option<PathBuf>,
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[command(flatten)]
    opt: OptimizerArgs,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Debug, Args)]
struct OptimizerArgs {
    #[arg(long)]
    scale_min: Option<f64>,
    #[arg(long)]
    scale_max: Option<f64>,
    #[arg(long)]
    scale_count: Option<usize>,
    /// Nelder-Mead restarts from the best coarse centers.
    #[arg(long)]
    starts: Option<usize>,
    /// Random coarse centers used above three ambient dimensions.
    #[arg(long)]
    random_centers: Option<usize>,
}

impl OptimizerArgs {
    fn config(&self, seed: u64) -> OptimizerConfig {
        let mut cfg = OptimizerConfig { seed, ..OptimizerConfig::default() };
        if let Some(v) = self.scale_min {
            cfg.scale_min = v;
        }
        if let Some(v) = self.scale_max {
            cfg.scale_max = v;
        }
        if let Some(v) = self.scale_count {
            cfg.scale_count = v;
        }
        if let Some(v) = self.starts {
            cfg.n_starts = v;
        }
        if let Some(v) = self.random_centers {
            cfg.random_centers = v;
        }
        cfg
    }
}

/// Bad input detected by the CLI itself.
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

/// A run that completed but whose result fails its own check.
#[derive(Debug)]
struct Failed(String);

impl std::fmt::Display for Failed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Failed {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    Usage(msg.into()).into()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    if e.downcast_ref::<Usage>().is_some() {
        return 2;
    }
    match e.downcast_ref::<shrinkerlab::Error>() {
        Some(inner) if inner.is_validation() => 2,
        _ => 3,
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(usage("--threads must be positive"));
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("configuring the thread pool")?;
    }
    let out = match cli.command {
        Command::Entropy(args) => functional(args, cli.seed, cm_entropy)?,
        Command::Confvol(args) => functional(args, cli.seed, ly_confvol)?,
        Command::Stable { source, m, opt } => {
            let (chart, res) = load(&source)?;
            let sampled = build_samples(&chart, &res, DerivativeMode::Analytic)?;
            let est = stable_confvol_estimate(&sampled, &m, &opt.config(cli.seed))?;
            json(&est)?
        }
        Command::Vtbound { source, m, rho, x0 } => {
            let (chart, res) = load(&source)?;
            let sampled = build_samples(&chart, &res, DerivativeMode::Analytic)?;
            let x0 = x0.unwrap_or_else(|| vec![0.0; sampled.ambient_dim]);
            let value = vt_lower_bound(&sampled, m, rho, &x0)?;
            json(&VtOutput { value, center: x0, scale: rho, m })?
        }
        Command::Constants { n, m, ambient } => constants(n, &m, ambient)?,
        Command::Heat { dim, extent, spacing, density, times } => heat(dim, extent, spacing, &density, &times)?,
        Command::Flow { curve, horizon, dt_factor, checkpoints, points } => {
            let cfg = FlowConfig {
                dt_factor,
                checkpoints,
                optimizer: OptimizerConfig { seed: cli.seed, ..OptimizerConfig::default() },
                ..FlowConfig::default()
            };
            flow(&curve, horizon, points, &cfg)?
        }
        Command::Verify { suite } => return verify(&suite, cli.output.as_deref()),
    };
    emit(cli.output.as_deref(), &out)
}

fn emit(path: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
            Ok(())
        }
    }
}

fn json<T: Serialize>(value: &T) -> anyhow::Result<String> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

fn load(source: &Source) -> anyhow::Result<(ChartSpec, Vec<usize>)> {
    if let Some(spec) = &source.catalog {
        let chart = parse_catalog(spec)?;
        let res = default_resolution(&chart);
        return Ok((chart, res));
    }
    let path = source.manifest.as_ref().expect("clap enforces one source");
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let manifest: ChartManifest =
        serde_json::from_str(&text).map_err(|e| usage(format!("bad manifest {}: {e}", path.display())))?;
    let chart = from_manifest(&manifest)?;
    let res = if manifest.resolution.is_empty() { default_resolution(&chart) } else { manifest.resolution };
    Ok((chart, res))
}

fn functional<F>(args: FunctionalArgs, seed: u64, f: F) -> anyhow::Result<String>
where
    F: Fn(&shrinkerlab::manifold::SampledManifold, &OptimizerConfig) -> shrinkerlab::Result<FunctionalResult>,
{
    let (chart, mut res) = load(&args.source)?;
    if let Some(r) = args.resolution {
        res = r;
    }
    let mut cfg = args.opt.config(seed);
    cfg.record_scan = args.scan_csv.is_some();
    let result = if args.no_refine {
        f(&build_samples(&chart, &res, DerivativeMode::Analytic)?, &cfg)?
    } else {
        with_refinement(&chart, &res, |s| f(s, &cfg))?
    };
    if let (Some(path), Some(scan)) = (&args.scan_csv, &result.scan) {
        let dim = result.center.len();
        let mut csv = String::new();
        let header: Vec<String> = (0..dim).map(|k| format!("x{k}")).chain(["scale".into(), "value".into()]).collect();
        writeln!(csv, "{}", header.join(","))?;
        for row in scan {
            let cells: Vec<String> = row.center.iter().chain([&row.scale, &row.value]).map(|v| v.to_string()).collect();
            writeln!(csv, "{}", cells.join(","))?;
        }
        fs::write(path, csv).with_context(|| format!("writing {}", path.display()))?;
    }
    if !result.value.is_finite() {
        return Err(Failed(format!("supremum is not finite: {}", result.value)).into());
    }
    match args.format {
        Format::Json => json(&result),
        Format::Csv => {
            let center: Vec<String> = result.center.iter().map(|v| v.to_string()).collect();
            Ok(format!(
                "value,scale,refinement_gap,converged,center\n{},{},{},{},\"{}\"\n",
                result.value,
                result.scale,
                result.refinement_gap,
                result.diagnostics.converged,
                center.join(" ")
            ))
        }
    }
}

#[derive(Serialize)]
struct VtOutput {
    value: f64,
    center: Vec<f64>,
    scale: f64,
    m: usize,
}

fn parse_range(text: &str) -> anyhow::Result<(usize, usize)> {
    let bad = || usage(format!("cannot parse range `{text}`; use `a..b` or a single number"));
    match text.split_once("..") {
        Some((a, b)) => {
            let (a, b) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
            if a > b {
                return Err(bad());
            }
            Ok((a, b))
        }
        None => {
            let v = text.trim().parse().map_err(|_| bad())?;
            Ok((v, v))
        }
    }
}

fn constants(n: usize, m: &str, ambient: Option<usize>) -> anyhow::Result<String> {
    let (lo, hi) = parse_range(m)?;
    let ambient = ambient.unwrap_or(n);
    let mut csv = String::from("n,m,c_const,c_hat,alpha\n");
    for m in lo..=hi {
        let alpha = if n + m >= ambient { alpha_mass(n, m, ambient)?.to_string() } else { String::new() };
        writeln!(csv, "{n},{m},{},{},{alpha}", c_const(n, m)?, c_hat(n, m)?)?;
    }
    Ok(csv)
}

fn numbers(text: &str, what: &str) -> anyhow::Result<Vec<f64>> {
    text.split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|_| usage(format!("cannot parse `{p}` in {what}"))))
        .collect()
}

fn split_spec(text: &str) -> (&str, &str) {
    text.split_once(':').unwrap_or((text, ""))
}

fn heat(dim: usize, extent: f64, spacing: f64, density: &str, times: &[f64]) -> anyhow::Result<String> {
    if !(spacing > 0.0 && extent > 0.0) {
        return Err(usage("--L and --h must be positive"));
    }
    let nodes = (2.0 * extent / spacing).round() as usize + 1;
    let spec = GridSpec::new(dim, extent, nodes)?;
    let (kind, rest) = split_spec(density);
    let u0 = match kind {
        "gaussian" => {
            let t = if rest.is_empty() { 1.0 } else { numbers(rest, "--density")?[0] };
            GridDensity::gaussian(spec, t, &vec![0.0; dim])?
        }
        "what" => {
            let p = numbers(rest, "--density")?;
            if p.len() != 2 || p[0] < 0.0 || p[0].fract() != 0.0 {
                return Err(usage("--density what:m,rho needs an integer m and a scale rho"));
            }
            density_from_weight(spec, p[0] as usize, p[1], DEFAULT_TAIL_TOL)?
        }
        "bump" => {
            let p = if rest.is_empty() { vec![1.0, 0.03] } else { numbers(rest, "--density")? };
            if p.len() != 2 {
                return Err(usage("--density bump:half_width,eps needs two numbers"));
            }
            GridDensity::bump(spec, p[0], p[1])?
        }
        other => return Err(usage(format!("unknown density `{other}`; use gaussian, what or bump"))),
    };
    let mut csv = String::from("t,mass,tau,harnack_margin,l1_to_gaussian\n");
    for &t in times {
        let u = heat_at(&u0, t)?;
        let est = estimate_virtual_time(&u)?;
        let (x0, s) = moment_match(&u);
        let l1 = gaussian_distance(&u, t, t - s, &x0)?.l1;
        writeln!(csv, "{t},{},{},{},{l1}", u.mass(), est.tau, est.min_eigenvalue + 0.5 / t)?;
    }
    Ok(csv)
}

fn flow(curve: &str, horizon: f64, points: usize, cfg: &FlowConfig) -> anyhow::Result<String> {
    let (kind, rest) = split_spec(curve);
    let p = numbers(rest, "--curve")?;
    let state = match (kind, p.as_slice()) {
        ("circle", [r]) => CurveState::circle(*r, points, &[0.0, 0.0])?,
        ("ellipse", [a, b]) => CurveState::ellipse(*a, *b, points)?,
        _ => return Err(usage(format!("cannot parse curve `{curve}`; use circle:R or ellipse:a,b"))),
    };
    let trace = run_flow(&state, horizon, cfg)?;
    let mut csv = String::from("t,length,entropy,residual\n");
    for i in 0..trace.times.len() {
        writeln!(csv, "{},{},{},{}", trace.times[i], trace.lengths[i], trace.entropies[i].value, trace.residuals[i])?;
    }
    Ok(csv)
}

fn verify(suite: &str, output: Option<&Path>) -> anyhow::Result<()> {
    let ids: Vec<usize> = if suite == "all" {
        (1..=CRITERIA).collect()
    } else {
        suite
            .split(',')
            .map(|p| match p.trim().parse::<usize>() {
                Ok(id) if (1..=CRITERIA).contains(&id) => Ok(id),
                _ => Err(usage(format!("unknown criterion `{p}`; use all or numbers 1..={CRITERIA}"))),
            })
            .collect::<anyhow::Result<_>>()?
    };
    let mut log = String::new();
    let mut failed = Vec::new();
    for id in ids {
        let report = run_criterion(id);
        println!("{report}");
        writeln!(log, "{report}")?;
        if !report.passed {
            failed.push(id);
        }
    }
    if let Some(p) = output {
        fs::write(p, &log).with_context(|| format!("writing {}", p.display()))?;
    }
    if !failed.is_empty() {
        bail!(Failed(format!("criteria {failed:?} failed")));
    }
    Ok(())
}
