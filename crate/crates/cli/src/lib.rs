//! Benchmark driver behind the `grasseig` binary.
//!
//! `run` solves one problem with one or more methods, writing a per-iteration
//! CSV trace for each and printing a summary table. `validate` runs the
//! randomized theory suites.

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, ensure, Context, Result};
use clap::{Args, Parser, Subcommand};
use ndarray::Array2;
use rayon::prelude::*;

use grasseig::subspace::{random_orthonormal, OrthonormalBasis};
use grasseig::theory::{dense_eig_oracle, fd_spectrum, run_suite, SpectrumInfo, Suite};
use grasseig::{
    load_matrix_market, solve_observed, AffineOperator, Error, FdGrid, IterationRecord, IterationView, Method, SolverConfig,
    SparseSymmetricMatrix, Target,
};

pub const CSV_HEADER: &str = "iter,matvecs,phi,phi_err,grad_fro,grad_inf_rel,mu,restart,wall_secs";

#[derive(Debug, Parser)]
#[command(name = "grasseig", version, about = "Dominant invariant subspaces by Grassmann optimization")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve one problem and write per-iteration traces.
    Run(RunArgs),
    /// Run a randomized validation suite.
    Validate(ValidateArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Matrix Market file (real symmetric, coordinate storage).
    #[arg(long, conflicts_with = "gen", required_unless_present = "gen")]
    pub matrix: Option<PathBuf>,
    /// Generated matrix: `fd2d NX NY`, `fd3d NX NY NZ` or `diag V1,V2,...`.
    #[arg(long, num_args = 2..=4, value_names = ["KIND", "DIMS"])]
    pub gen: Option<Vec<String>>,
    /// Subspace dimension.
    #[arg(long)]
    pub p: usize,
    /// Single method.
    #[arg(long, conflicts_with = "compare")]
    pub method: Option<Method>,
    /// Comma-separated methods run on the same start.
    #[arg(long, value_delimiter = ',')]
    pub compare: Vec<Method>,
    #[arg(long, default_value = "max")]
    pub target: Target,
    /// Stop when `‖G‖∞/‖G₀‖∞` falls below this.
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    #[arg(long, default_value_t = 10_000)]
    pub max_iters: usize,
    /// Conjugate gradient restart period.
    #[arg(long)]
    pub k_restart: Option<usize>,
    #[arg(long, default_value_t = 1)]
    pub cheb_degree: usize,
    /// Unwanted interval as `UPPER,LOWER` (`λ_{p+1}`, `λ_n` of the target operator).
    #[arg(long, value_delimiter = ',', num_args = 2)]
    pub cheb_bounds: Option<Vec<f64>>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Starting basis: `random` or `plane13` (`(e₁ + e₃)/√2`, p = 1).
    #[arg(long, default_value = "random")]
    pub x0: String,
    /// Compute the spectrum for `φ*`, `κ` and Chebyshev bounds.
    #[arg(long)]
    pub oracle: bool,
    /// Directory for the CSV traces.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Run the compared methods concurrently.
    #[arg(long)]
    pub parallel: bool,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// grad-bound, decrease, growth, local-rate, sublinear, lobcg-dominance,
    /// linesearch-oracle or all.
    pub suite: Suite,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Print JSON summaries instead of the text report.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum MatrixSource {
    File(PathBuf),
    Fd(Vec<usize>),
    Diag(Vec<f64>),
}

impl MatrixSource {
    pub fn from_args(matrix: Option<&Path>, gen: Option<&[String]>) -> Result<Self> {
        match (matrix, gen) {
            (Some(path), None) => Ok(MatrixSource::File(path.to_path_buf())),
            (None, Some([kind, rest @ ..])) => match kind.as_str() {
                "fd2d" | "fd3d" => {
                    let want = if kind == "fd2d" { 2 } else { 3 };
                    ensure!(rest.len() == want, "{kind} takes {want} grid sizes, got {}", rest.len());
                    let dims = rest
                        .iter()
                        .map(|s| s.parse::<usize>().with_context(|| format!("bad grid size {s:?}")))
                        .collect::<Result<_>>()?;
                    Ok(MatrixSource::Fd(dims))
                }
                "diag" => {
                    ensure!(rest.len() == 1, "diag takes one comma-separated list");
                    let values = rest[0]
                        .split(',')
                        .map(|s| s.trim().parse::<f64>().with_context(|| format!("bad diagonal entry {s:?}")))
                        .collect::<Result<_>>()?;
                    Ok(MatrixSource::Diag(values))
                }
                other => bail!("unknown generator {other:?}; expected fd2d, fd3d or diag"),
            },
            _ => bail!("give exactly one of --matrix and --gen"),
        }
    }

    pub fn load(&self) -> Result<SparseSymmetricMatrix> {
        Ok(match self {
            MatrixSource::File(path) => load_matrix_market(path)?,
            MatrixSource::Fd(dims) => FdGrid::new(dims.clone())?.matrix()?,
            MatrixSource::Diag(values) => SparseSymmetricMatrix::diagonal(values)?,
        })
    }

    fn label(&self) -> String {
        match self {
            MatrixSource::File(path) => path.display().to_string(),
            MatrixSource::Fd(dims) => {
                let dims: Vec<String> = dims.iter().map(|d| d.to_string()).collect();
                format!("fd{}d {}", dims.len(), dims.join("x"))
            }
            MatrixSource::Diag(_) => "diag".to_string(),
        }
    }
}

/// Validated `run` request.
#[derive(Debug, Clone)]
pub struct RunSpec {
    pub source: MatrixSource,
    pub config: SolverConfig,
    pub methods: Vec<Method>,
    pub x0: String,
    pub oracle: bool,
    pub out: PathBuf,
    pub parallel: bool,
}

impl RunSpec {
    pub fn from_args(args: &RunArgs) -> Result<Self> {
        let source = MatrixSource::from_args(args.matrix.as_deref(), args.gen.as_deref())?;
        let methods = match (args.method, args.compare.is_empty()) {
            (Some(m), true) => vec![m],
            (None, false) => args.compare.clone(),
            (None, true) => bail!("give --method or --compare"),
            (Some(_), false) => bail!("--method and --compare are exclusive"),
        };
        let mut config = SolverConfig::new(methods[0], args.p);
        config.target = args.target;
        config.tol = args.tol;
        config.max_iters = args.max_iters;
        if let Some(k) = args.k_restart {
            config.k_restart = k;
        }
        config.cheb_degree = args.cheb_degree;
        config.cheb_bounds = args.cheb_bounds.as_ref().map(|b| (b[0], b[1]));
        config.seed = args.seed;
        if methods.contains(&Method::SiCheb) && config.cheb_bounds.is_none() && !args.oracle {
            bail!("si-cheb needs --cheb-bounds or --oracle");
        }
        ensure!(matches!(args.x0.as_str(), "random" | "plane13"), "unknown start {:?}; expected random or plane13", args.x0);
        Ok(RunSpec {
            source,
            config,
            methods,
            x0: args.x0.clone(),
            oracle: args.oracle,
            out: args.out.clone(),
            parallel: args.parallel,
        })
    }
}

/// Outcome of one method in a run.
#[derive(Debug, Clone)]
pub struct MethodRow {
    pub method: Method,
    pub csv: PathBuf,
    pub iterations: usize,
    pub matvecs: u64,
    pub seconds: f64,
    pub phi: f64,
    pub grad_inf_rel: f64,
    pub converged: bool,
    pub failure: Option<String>,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub label: String,
    pub n: usize,
    pub p: usize,
    pub spectrum: Option<SpectrumInfo>,
    pub rows: Vec<MethodRow>,
}

fn start_basis(name: &str, n: usize, p: usize, seed: u64) -> Result<OrthonormalBasis> {
    match name {
        "plane13" => {
            ensure!(p == 1 && n >= 3, "plane13 needs p = 1 and n >= 3");
            let mut x = Array2::zeros((n, 1));
            x[[0, 0]] = 0.5f64.sqrt();
            x[[2, 0]] = 0.5f64.sqrt();
            Ok(OrthonormalBasis::new(x)?)
        }
        _ => Ok(random_orthonormal(n, p, seed)?),
    }
}

fn spectrum_for(source: &MatrixSource, op: &AffineOperator<'_>, p: usize) -> Result<SpectrumInfo> {
    match source {
        MatrixSource::Fd(dims) => Ok(fd_spectrum(&FdGrid::new(dims.clone())?, p, op.scale(), op.shift())?),
        _ => Ok(dense_eig_oracle(op, p)?),
    }
}

/// Format with 17 significant digits, blank for NaN.
fn num(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        format!("{v:.16e}")
    }
}

pub fn csv_line(r: &IterationRecord, phi_star: Option<f64>) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{}",
        r.iter,
        r.matvecs,
        num(r.phi),
        phi_star.map_or(String::new(), |s| num(r.phi - s)),
        num(r.grad_fro),
        num(r.grad_inf_rel),
        num(r.mu),
        u8::from(r.restart),
        num(r.wall_secs)
    )
}

fn run_method(
    op: &AffineOperator<'_>,
    x0: &OrthonormalBasis,
    cfg: &SolverConfig,
    phi_star: Option<f64>,
    csv: PathBuf,
) -> Result<MethodRow> {
    let mut out = BufWriter::new(File::create(&csv).with_context(|| format!("cannot create {}", csv.display()))?);
    writeln!(out, "{CSV_HEADER}")?;
    out.flush()?;
    let mut io_error = None;
    let mut last: Option<IterationRecord> = None;
    let t = Instant::now();
    let result = solve_observed(op, x0, cfg, &mut |v: &IterationView<'_>| {
        last = Some(*v.record);
        if io_error.is_none() {
            if let Err(e) = writeln!(out, "{}", csv_line(v.record, phi_star)).and_then(|_| out.flush()) {
                io_error = Some(e);
            }
        }
    });
    let seconds = t.elapsed().as_secs_f64();
    if let Some(e) = io_error {
        return Err(e).with_context(|| format!("writing {}", csv.display()));
    }
    let (converged, failure) = match result {
        Ok(res) => (res.converged(), None),
        Err(e @ Error::Argument(_)) => return Err(e.into()),
        Err(e) => (false, Some(e.to_string())),
    };
    let last = last.context("solver produced no iterations")?;
    Ok(MethodRow {
        method: cfg.method,
        csv,
        iterations: last.iter,
        matvecs: last.matvecs,
        seconds,
        phi: last.phi,
        grad_inf_rel: last.grad_inf_rel,
        converged,
        failure,
    })
}

/// Execute a run. Solver failures become failed rows; configuration and I/O
/// problems are errors.
pub fn run(spec: &RunSpec) -> Result<RunReport> {
    let a = spec.source.load()?;
    let op = AffineOperator::identity(&a);
    let p = spec.config.p;
    ensure!(p >= 1 && p < a.n(), "need 1 <= p < n, got p = {p}, n = {}", a.n());
    let eff = spec.config.effective_operator(&op);
    let spectrum = if spec.oracle || (spec.methods.contains(&Method::SiCheb) && spec.config.cheb_bounds.is_none()) {
        Some(spectrum_for(&spec.source, &eff, p)?)
    } else {
        None
    };
    let x0 = start_basis(&spec.x0, a.n(), p, spec.config.seed)?;
    let phi_star = spectrum.as_ref().filter(|_| spec.oracle).map(|s| s.phi_star);

    let configs: Vec<SolverConfig> = spec
        .methods
        .iter()
        .map(|&m| {
            let mut cfg = spec.config.clone();
            cfg.method = m;
            if m == Method::SiCheb && cfg.cheb_bounds.is_none() {
                cfg.cheb_bounds = spectrum.as_ref().and_then(|s| s.unwanted_interval());
            }
            cfg.validate()?;
            Ok(cfg)
        })
        .collect::<Result<_>>()?;

    fs::create_dir_all(&spec.out).with_context(|| format!("cannot create {}", spec.out.display()))?;
    let job = |cfg: &SolverConfig| run_method(&op, &x0, cfg, phi_star, spec.out.join(format!("{}.csv", cfg.method.name())));
    let rows = if spec.parallel {
        configs.par_iter().map(job).collect::<Result<Vec<_>>>()?
    } else {
        configs.iter().map(job).collect::<Result<Vec<_>>>()?
    };
    Ok(RunReport { label: spec.source.label(), n: a.n(), p, spectrum: spectrum.filter(|_| spec.oracle), rows })
}

/// Aligned summary. A star marks methods that stopped at `max_iters`.
pub fn summary_table(report: &RunReport) -> String {
    let mut s = String::new();
    let _ = write!(s, "{}  n={}  p={}", report.label, report.n, report.p);
    if let Some(spec) = &report.spectrum {
        let _ = write!(s, "  phi*={:.12e}", spec.phi_star);
        if let Some(k) = spec.kappa {
            let _ = write!(s, "  kappa={k:.4}");
        }
    }
    s.push('\n');
    let _ = writeln!(s, "{:<11} {:>9} {:>10} {:>10} {:>12} {:>10}  status", "method", "iters", "matvecs", "seconds", "phi_err", "grad_rel");
    for row in &report.rows {
        let iters = if row.converged { row.iterations.to_string() } else { format!("{}*", row.iterations) };
        let err = report.spectrum.as_ref().map_or("-".to_string(), |sp| format!("{:.3e}", row.phi - sp.phi_star));
        let status = match &row.failure {
            Some(f) => format!("failed: {f}"),
            None if row.converged => "converged".to_string(),
            None => "max_iters".to_string(),
        };
        let _ = writeln!(
            s,
            "{:<11} {:>9} {:>10} {:>10.3} {:>12} {:>10.3e}  {status}",
            row.method.name(),
            iters,
            row.matvecs,
            row.seconds,
            err,
            row.grad_inf_rel
        );
    }
    s
}

/// Run a suite; `Ok(false)` when any check is violated.
pub fn validate(args: &ValidateArgs, out: &mut impl Write) -> Result<bool> {
    let t = Instant::now();
    let reports = run_suite(args.suite, args.seed)?;
    if args.json {
        let summaries: Vec<_> = reports.iter().map(|r| r.summary()).collect();
        writeln!(out, "{}", serde_json::to_string_pretty(&summaries)?)?;
    } else {
        for r in &reports {
            write!(out, "{r}")?;
        }
        writeln!(out, "suite {} seed {} finished in {:.2}s", args.suite, args.seed, t.elapsed().as_secs_f64())?;
    }
    Ok(reports.iter().all(|r| r.passed()))
}

/// Cap rayon's pool from `GRASSEIG_THREADS`.
pub fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var("GRASSEIG_THREADS") {
        let n: usize = v.parse().with_context(|| format!("GRASSEIG_THREADS must be a positive integer, got {v:?}"))?;
        ensure!(n > 0, "GRASSEIG_THREADS must be positive");
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}
