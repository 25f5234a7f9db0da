//! `stein-info`: Stein operators, Stein equations and Fisher-information
//! bounds from the command line.
//!
//! Exit status: 0 when every check passes, 1 when some check fails, 2 for
//! configuration and input errors, 3 when a computation does not converge.

mod commands;
mod config;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use stein_core::density::kde::Bandwidth;
use stein_core::density::spec::DensitySpec;
use stein_core::{BoundReport, Density, ObservableSpec, SteinError, Support};

use config::{DensityInput, ObservableInput, RunConfig};
use output::{emit, metrics_to_string, num, reports_to_string, Format};

#[derive(Parser)]
#[command(
    name = "stein-info",
    version,
    about = "Stein operators and Fisher-information bounds between densities"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every identity and bound check over a target and its alternatives.
    Verify(Common),
    /// Fisher distance J, total variation, Kolmogorov, Wasserstein-1 and sup-density distances.
    Distance(Common),
    /// Solve the Stein equation for one observable and evaluate the solution.
    Solve {
        #[command(flatten)]
        common: Common,
        /// Points at which to evaluate the solution (comma separated or repeated).
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        at: Vec<f64>,
    },
    /// Zero-mean checks under the target, or separation from `--alt`.
    Characterize(Common),
    /// Build a kernel density estimate from a sample file, or write seeded samples.
    Ingest(IngestArgs),
}

#[derive(Args, Default)]
struct Common {
    /// Run configuration (JSON); command-line flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Target density, e.g. `exp:1`, `gauss:0,1`, `quartic`, `file:samples.txt`.
    #[arg(long)]
    target: Option<String>,
    /// Alternative density; may be repeated.
    #[arg(long = "alt")]
    alt: Vec<String>,
    /// Observable: `poly:C0,C1,...`, `indicator:Z` or `tv_sign`; may be repeated.
    #[arg(long = "obs")]
    obs: Vec<String>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Absolute and relative tolerance for the outer integrals.
    #[arg(long)]
    quad_tol: Option<f64>,
    /// Grid size for the factorization and residual scans.
    #[arg(long)]
    grid: Option<usize>,
}

#[derive(Args)]
struct IngestArgs {
    /// Sample file, one value per line; `#` starts a comment line.
    path: PathBuf,
    /// `silverman` or a fixed positive bandwidth.
    #[arg(long, default_value = "silverman")]
    bandwidth: String,
    /// Support hint `A,B` for bounded data; kernels are reflected at the ends.
    #[arg(long, allow_hyphen_values = true)]
    support: Option<String>,
    /// Treat the support hint endpoints as closed.
    #[arg(long)]
    closed: bool,
    /// Also report the Fisher distance J from this target to the estimate.
    #[arg(long)]
    target: Option<String>,
    /// Write `--count` seeded draws from this density to PATH instead of reading it.
    #[arg(long)]
    generate: Option<String>,
    #[arg(long, default_value_t = 100_000)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

struct Failure {
    code: u8,
    message: String,
}

impl From<SteinError> for Failure {
    fn from(e: SteinError) -> Self {
        Failure {
            code: if e.is_numerical() { 3 } else { 2 },
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure {
            code: 2,
            message: format!("i/o error: {e}"),
        }
    }
}

fn config_error(message: impl Into<String>) -> Failure {
    Failure {
        code: 2,
        message: message.into(),
    }
}

/// Flags layered over an optional config file.
struct Setup {
    config: RunConfig,
    base_dir: Option<PathBuf>,
}

fn setup(c: &Common, need_alt: bool) -> Result<Setup, Failure> {
    let (mut config, base_dir) = match &c.config {
        Some(path) => {
            let cfg = RunConfig::load(path).map_err(config_error)?;
            (cfg, path.parent().map(Path::to_path_buf))
        }
        None => {
            let target = c
                .target
                .clone()
                .ok_or_else(|| config_error("either --config or --target is required"))?;
            let cfg = RunConfig {
                target: DensityInput::Text(target),
                alternatives: Vec::new(),
                observables: Vec::new(),
                quad: Default::default(),
                grid: Default::default(),
                output: Default::default(),
            };
            (cfg, None)
        }
    };
    if let Some(t) = &c.target {
        config.target = DensityInput::Text(t.clone());
    }
    if !c.alt.is_empty() {
        config.alternatives = c.alt.iter().cloned().map(DensityInput::Text).collect();
    }
    if !c.obs.is_empty() {
        config.observables = c.obs.iter().cloned().map(ObservableInput::Text).collect();
    } else if c.config.is_none() {
        config.observables = vec![
            ObservableInput::Spec(ObservableSpec::Poly { coeffs: vec![0.0, 1.0] }),
            ObservableInput::Spec(ObservableSpec::Poly {
                coeffs: vec![0.0, 0.0, 1.0],
            }),
            ObservableInput::Spec(ObservableSpec::TvSign),
        ];
    }
    if let Some(t) = c.quad_tol {
        config.quad.abs_tol = Some(t);
        config.quad.rel_tol = Some(t);
    }
    if let Some(n) = c.grid {
        config.grid.factorization = n;
        config.grid.residual = n;
    }
    if let Some(f) = c.format {
        config.output.format = f;
    }
    if let Some(o) = &c.out {
        config.output.path = Some(o.clone());
    }
    if need_alt && config.alternatives.is_empty() {
        return Err(config_error(
            "at least one alternative (--alt or config `alternatives`) is required",
        ));
    }
    Ok(Setup { config, base_dir })
}

fn summarize(reports: &[BoundReport]) -> bool {
    let failed: Vec<&BoundReport> = reports.iter().filter(|r| !r.pass).collect();
    for r in &failed {
        eprintln!(
            "FAIL {} [{} vs {}] {}: lhs {} rhs {} tol {}",
            r.name,
            r.target,
            r.alternative,
            r.observable,
            num(r.lhs),
            num(r.rhs),
            num(r.tolerance)
        );
    }
    eprintln!("{} checks, {} failed", reports.len(), failed.len());
    failed.is_empty()
}

fn run_verify(c: &Common) -> Result<bool, Failure> {
    let s = setup(c, true)?;
    let run = s.config.resolve(s.base_dir.as_deref())?;
    let reports = commands::verify(&run)?;
    let text = reports_to_string(&reports, s.config.output.format);
    emit(s.config.output.path.as_deref(), &text)?;
    Ok(summarize(&reports))
}

fn run_distance(c: &Common) -> Result<bool, Failure> {
    let s = setup(c, true)?;
    let run = s.config.resolve(s.base_dir.as_deref())?;
    let mut rows = Vec::new();
    for q in &run.alternatives {
        rows.extend(commands::distance(&run.target, q, &run.quad)?);
    }
    emit(
        s.config.output.path.as_deref(),
        &metrics_to_string(&rows, s.config.output.format),
    )?;
    Ok(true)
}

fn run_characterize(c: &Common) -> Result<bool, Failure> {
    let s = setup(c, false)?;
    let base = s.base_dir.as_deref();
    let p = s.config.target.build(base)?;
    let ws = if s.config.alternatives.is_empty() {
        vec![p.clone()]
    } else {
        s.config
            .alternatives
            .iter()
            .map(|a| a.build(base))
            .collect::<stein_core::Result<Vec<_>>>()?
    };
    let quad = s.config.quad.apply()?;
    let mut reports = Vec::new();
    for w in &ws {
        reports.extend(commands::characterize(&p, w, &quad)?);
    }
    stein_core::report::sort_reports(&mut reports);
    emit(
        s.config.output.path.as_deref(),
        &reports_to_string(&reports, s.config.output.format),
    )?;
    Ok(summarize(&reports))
}

fn run_solve(c: &Common, at: &[f64]) -> Result<bool, Failure> {
    let s = setup(c, false)?;
    let base = s.base_dir.as_deref();
    let p = s.config.target.build(base)?;
    let q = match s.config.alternatives.first() {
        Some(a) => Some(a.build(base)?),
        None => None,
    };
    let obs = match s.config.observables.as_slice() {
        [one] => one.spec()?,
        [] => return Err(config_error("solve needs one --obs")),
        _ => return Err(config_error("solve takes exactly one --obs")),
    };
    let out = commands::solve(&p, q.as_ref(), &obs, at, s.config.grid.residual)?;
    let text = match s.config.output.format {
        Format::Csv => {
            let mut t = String::from("x,f\n");
            for (x, f) in &out.points {
                t.push_str(&format!("{},{}\n", num(*x), num(*f)));
            }
            t
        }
        Format::Json => {
            let body = serde_json::json!({
                "target": p.label(),
                "observable": obs.label(),
                "points": out.points.iter().map(|(x, f)| serde_json::json!({"x": x, "f": f})).collect::<Vec<_>>(),
                "residual": out.residual,
            });
            let mut t = serde_json::to_string_pretty(&body).expect("json");
            t.push('\n');
            t
        }
    };
    emit(s.config.output.path.as_deref(), &text)?;
    eprintln!(
        "max equation residual {} (tolerance {}): {}",
        num(out.residual.lhs),
        num(out.residual.tolerance),
        if out.residual.pass { "pass" } else { "FAIL" }
    );
    Ok(out.residual.pass)
}

fn parse_support(text: &str, closed: bool) -> Result<Support, Failure> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    let bound = |t: &str| -> Result<f64, Failure> {
        match t {
            "-inf" => Ok(f64::NEG_INFINITY),
            "inf" | "+inf" => Ok(f64::INFINITY),
            _ => t.parse().map_err(|_| config_error(format!("bad support bound `{t}`"))),
        }
    };
    if parts.len() != 2 {
        return Err(config_error(format!("support must be `A,B`, got `{text}`")));
    }
    let (a, b) = (bound(parts[0])?, bound(parts[1])?);
    Ok(Support::new(a, b, closed && a.is_finite(), closed && b.is_finite())?)
}

fn run_ingest(args: &IngestArgs) -> Result<bool, Failure> {
    if let Some(spec) = &args.generate {
        let p: Density = spec.parse::<DensitySpec>()?.build()?;
        let values = commands::draw(&p, args.count, args.seed);
        let mut text = format!("# {} draws from {}, seed {}\n", args.count, p.label(), args.seed);
        for v in values {
            text.push_str(&num(v));
            text.push('\n');
        }
        output::write_atomic(&args.path, &text)?;
        return Ok(true);
    }
    let bandwidth = match args.bandwidth.as_str() {
        "silverman" => Bandwidth::Silverman,
        h => Bandwidth::Fixed(h.parse().map_err(|_| config_error(format!("bad bandwidth `{h}`")))?),
    };
    let hint = args
        .support
        .as_deref()
        .map(|s| parse_support(s, args.closed))
        .transpose()?;
    let ingested = commands::ingest(&args.path, bandwidth, hint)?;
    let mut rows = vec![
        output::MetricRow {
            metric: "samples".into(),
            target: String::new(),
            alternative: ingested.density.label().into(),
            value: ingested.count as f64,
            error_estimate: 0.0,
            at: None,
        },
        output::MetricRow {
            metric: "bandwidth".into(),
            target: String::new(),
            alternative: ingested.density.label().into(),
            value: ingested.bandwidth,
            error_estimate: 0.0,
            at: None,
        },
    ];
    if let Some(t) = &args.target {
        let p = t.parse::<DensitySpec>()?.build()?;
        let j = stein_core::metrics::fisher_info_distance(&p, &ingested.density)?;
        rows.push(output::MetricRow {
            metric: "fisher_J".into(),
            target: p.label().into(),
            alternative: ingested.density.label().into(),
            value: j.value,
            error_estimate: j.error_estimate,
            at: None,
        });
    }
    emit(None, &metrics_to_string(&rows, args.format.unwrap_or_default()))?;
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Verify(c) => run_verify(c),
        Command::Distance(c) => run_distance(c),
        Command::Characterize(c) => run_characterize(c),
        Command::Solve { common, at } => run_solve(common, at),
        Command::Ingest(a) => run_ingest(a),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
