//! Iterative eigensolvers for the dominant `p`-dimensional invariant subspace.
//!
//! Every solver reports one [`IterationRecord`] per iteration and stops on the
//! relative gradient residual `‖G_k‖_∞ / ‖G_0‖_∞ ≤ tol`, where `‖·‖_∞` is the
//! maximum absolute row sum. Matvecs are counted per column of a block
//! product; the initial `AX_0` costs `p`.

mod chebyshev;
mod lobcg;
mod riemannian;
mod subspace_iteration;

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use ndarray::{Array2, ArrayView2};

use crate::dense;
use crate::error::{Error, Result};
use crate::operators::AffineOperator;
use crate::subspace::{self, GradientEval, OrthonormalBasis};

pub use chebyshev::{chebyshev_filter, si_chebyshev};
pub use lobcg::lobcg;
pub use riemannian::{rcg, rsd};
pub use subspace_iteration::subspace_iteration;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Rsd,
    Rcg,
    Si,
    SiCheb,
    Lobcg,
    LobcgPlus,
}

impl Method {
    pub const ALL: [Method; 6] = [Method::Rsd, Method::Rcg, Method::Si, Method::SiCheb, Method::Lobcg, Method::LobcgPlus];

    pub fn name(self) -> &'static str {
        match self {
            Method::Rsd => "rsd",
            Method::Rcg => "rcg",
            Method::Si => "si",
            Method::SiCheb => "si_cheb",
            Method::Lobcg => "lobcg",
            Method::LobcgPlus => "lobcg_plus",
        }
    }

    /// Methods whose step length comes from the exact line search.
    pub fn uses_line_search(self) -> bool {
        matches!(self, Method::Rsd | Method::Rcg)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "rsd" => Ok(Method::Rsd),
            "rcg" => Ok(Method::Rcg),
            "si" => Ok(Method::Si),
            "si_cheb" => Ok(Method::SiCheb),
            "lobcg" => Ok(Method::Lobcg),
            "lobcg_plus" | "lobcg+" => Ok(Method::LobcgPlus),
            _ => Err(Error::arg(format!("unknown method {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Target {
    /// Largest eigenvalues.
    #[default]
    Max,
    /// Smallest eigenvalues, by maximizing `−A`.
    Min,
}

impl FromStr for Target {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "max" => Ok(Target::Max),
            "min" => Ok(Target::Min),
            _ => Err(Error::arg(format!("unknown target {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub method: Method,
    pub target: Target,
    pub p: usize,
    pub tol: f64,
    pub max_iters: usize,
    /// Conjugate-gradient restart period; `0` disables periodic restarts.
    pub k_restart: usize,
    pub cheb_degree: usize,
    /// `(λ_{p+1}, λ_n)` of the operator being maximized.
    pub cheb_bounds: Option<(f64, f64)>,
    pub seed: u64,
    /// Steps `μ` at or below this recompute `AX` explicitly. `None` uses
    /// `16·ε·(1 + max μ so far)`.
    pub matvec_refresh_threshold: Option<f64>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            method: Method::Rsd,
            target: Target::Max,
            p: 1,
            tol: 1e-8,
            max_iters: 10_000,
            k_restart: 0,
            cheb_degree: 1,
            cheb_bounds: None,
            seed: 0,
            matvec_refresh_threshold: None,
        }
    }
}

impl SolverConfig {
    pub fn new(method: Method, p: usize) -> Self {
        Self { method, p, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::arg(format!("tol must be positive, got {}", self.tol)));
        }
        if self.p == 0 {
            return Err(Error::arg("p must be at least 1"));
        }
        if self.method == Method::SiCheb {
            if self.cheb_degree == 0 {
                return Err(Error::arg("Chebyshev degree must be at least 1"));
            }
            if self.cheb_bounds.is_none() {
                return Err(Error::arg("si_cheb needs bounds (λ_{p+1}, λ_n)"));
            }
        }
        if let Some((upper, lower)) = self.cheb_bounds {
            if !(upper > lower) || !upper.is_finite() || !lower.is_finite() {
                return Err(Error::arg(format!("unwanted interval [{lower}, {upper}] is empty")));
            }
        }
        if let Some(t) = self.matvec_refresh_threshold {
            if !(t >= 0.0) {
                return Err(Error::arg("refresh threshold must be non-negative"));
            }
        }
        Ok(())
    }

    /// `σ = −1` for [`Target::Min`], applied on top of `op`.
    pub fn effective_operator<'a>(&self, op: &AffineOperator<'a>) -> AffineOperator<'a> {
        match self.target {
            Target::Max => *op,
            Target::Min => op.then(-1.0, 0.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub iter: usize,
    /// Cumulative single-vector products, including the initial `AX_0`.
    pub matvecs: u64,
    pub phi: f64,
    pub grad_fro: f64,
    pub grad_inf_rel: f64,
    /// Step length; `NaN` for methods without a line search.
    pub mu: f64,
    pub restart: bool,
    pub wall_secs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverTrace {
    pub method: Method,
    pub p: usize,
    pub records: Vec<IterationRecord>,
    pub converged: bool,
}

impl SolverTrace {
    pub fn iterations(&self) -> usize {
        self.records.last().map_or(0, |r| r.iter)
    }

    pub fn matvecs(&self) -> u64 {
        self.records.last().map_or(0, |r| r.matvecs)
    }

    pub fn final_record(&self) -> Option<&IterationRecord> {
        self.records.last()
    }

    pub fn phis(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.phi).collect()
    }
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub x: OrthonormalBasis,
    /// Cached `AX` for the final iterate (of the effective operator).
    pub ax: Array2<f64>,
    pub trace: SolverTrace,
}

impl SolveResult {
    pub fn converged(&self) -> bool {
        self.trace.converged
    }
}

/// State handed to an observer after every iteration, including iteration 0.
pub struct IterationView<'a> {
    pub record: &'a IterationRecord,
    pub x: ArrayView2<'a, f64>,
    /// The solver's cached `AX`, possibly obtained by recursion.
    pub ax: ArrayView2<'a, f64>,
}

pub type Observer<'o> = dyn FnMut(&IterationView<'_>) + 'o;

/// Run the configured method from `x0`.
pub fn solve(op: &AffineOperator<'_>, x0: &OrthonormalBasis, cfg: &SolverConfig) -> Result<SolveResult> {
    solve_observed(op, x0, cfg, &mut |_| {})
}

pub fn solve_observed(
    op: &AffineOperator<'_>,
    x0: &OrthonormalBasis,
    cfg: &SolverConfig,
    observer: &mut Observer<'_>,
) -> Result<SolveResult> {
    match cfg.method {
        Method::Rsd => riemannian::run(op, x0, cfg, false, observer),
        Method::Rcg => riemannian::run(op, x0, cfg, true, observer),
        Method::Si => subspace_iteration::run(op, x0, cfg, observer),
        Method::SiCheb => chebyshev::run(op, x0, cfg, observer),
        Method::Lobcg => lobcg::run(op, x0, cfg, false, observer),
        Method::LobcgPlus => lobcg::run(op, x0, cfg, true, observer),
    }
}

/// `A X(μ) = (AX − μAP) V D_μ^{−1} Vᵀ` from the cached products, valid for
/// the polar retraction with `PᵀP = V D_β Vᵀ`.
pub fn matvec_cache_update(
    ax: &ArrayView2<'_, f64>,
    ap: &ArrayView2<'_, f64>,
    mu: f64,
    v: &ArrayView2<'_, f64>,
    beta: &[f64],
) -> Result<Array2<f64>> {
    if ax.dim() != ap.dim() || v.nrows() != ax.ncols() || beta.len() != ax.ncols() {
        return Err(Error::arg("cache update blocks differ in shape"));
    }
    Ok(subspace::step_and_normalize(ax, ap, mu, v, beta))
}

/// Block products with a local matvec tally, so concurrent runs sharing a
/// matrix still report their own counts.
struct Meter<'a> {
    op: AffineOperator<'a>,
    matvecs: u64,
}

impl<'a> Meter<'a> {
    fn new(op: AffineOperator<'a>) -> Self {
        Self { op, matvecs: 0 }
    }

    fn apply(&mut self, x: &ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        self.matvecs += x.ncols() as u64;
        self.op.apply(x)
    }
}

/// Residual bookkeeping shared by all methods.
struct Recorder {
    start: Instant,
    g0: f64,
    tol: f64,
    records: Vec<IterationRecord>,
}

/// A gradient at rounding level relative to `‖AX‖_∞` counts as converged,
/// so exact invariant subspaces stop at iteration 0.
const ABSOLUTE_FLOOR: f64 = 64.0 * f64::EPSILON;

impl Recorder {
    fn new(tol: f64, g0: f64) -> Self {
        Self { start: Instant::now(), g0, tol, records: Vec::new() }
    }

    fn push(&mut self, iter: usize, matvecs: u64, eval: &GradientEval, mu: f64, restart: bool) -> Result<IterationRecord> {
        let phi = eval.phi();
        let g = eval.gradient.view();
        let grad_inf = dense::inf_norm(&g);
        if !phi.is_finite() || !grad_inf.is_finite() {
            return Err(Error::Divergence { iter, reason: format!("non-finite objective {phi} or gradient {grad_inf}") });
        }
        let grad_inf_rel = if self.g0 > 0.0 { grad_inf / self.g0 } else { 0.0 };
        let rec = IterationRecord {
            iter,
            matvecs,
            phi,
            grad_fro: dense::frobenius(&g),
            grad_inf_rel,
            mu,
            restart,
            wall_secs: self.start.elapsed().as_secs_f64(),
        };
        self.records.push(rec);
        Ok(rec)
    }

    fn is_converged(&self, eval: &GradientEval) -> bool {
        let grad_inf = dense::inf_norm(&eval.gradient.view());
        grad_inf <= self.tol * self.g0 || grad_inf <= ABSOLUTE_FLOOR * dense::inf_norm(&eval.ax.view())
    }

    fn finish(self, method: Method, p: usize, converged: bool) -> SolverTrace {
        SolverTrace { method, p, records: self.records, converged }
    }
}

fn check_start(op: &AffineOperator<'_>, x0: &OrthonormalBasis, cfg: &SolverConfig) -> Result<()> {
    cfg.validate()?;
    if x0.n() != op.n() {
        return Err(Error::arg(format!("start basis has {} rows, operator is {}x{}", x0.n(), op.n(), op.n())));
    }
    if x0.p() != cfg.p {
        return Err(Error::arg(format!("start basis has {} columns, config asks for p = {}", x0.p(), cfg.p)));
    }
    Ok(())
}

/// Common prologue: validates, computes `AX_0`, records iteration 0.
fn start<'a>(
    op: &AffineOperator<'a>,
    x0: &OrthonormalBasis,
    cfg: &SolverConfig,
    observer: &mut Observer<'_>,
) -> Result<(Meter<'a>, Recorder, Array2<f64>, GradientEval)> {
    check_start(op, x0, cfg)?;
    let mut meter = Meter::new(cfg.effective_operator(op));
    let x = x0.as_array().clone();
    let ax = meter.apply(&x.view())?;
    let eval = subspace::gradient_from(&x.view(), ax);
    let g0 = dense::inf_norm(&eval.gradient.view());
    let mut rec = Recorder::new(cfg.tol, g0);
    let r = rec.push(0, meter.matvecs, &eval, f64::NAN, false)?;
    observer(&IterationView { record: &r, x: x.view(), ax: eval.ax.view() });
    Ok((meter, rec, x, eval))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::SparseSymmetricMatrix;
    use ndarray::array;

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        assert_eq!("si-cheb".parse::<Method>().unwrap(), Method::SiCheb);
        assert_eq!("lobcg-plus".parse::<Method>().unwrap(), Method::LobcgPlus);
        assert!("newton".parse::<Method>().is_err());
    }

    #[test]
    fn config_validation() {
        let mut cfg = SolverConfig::new(Method::SiCheb, 2);
        assert!(cfg.validate().is_err());
        cfg.cheb_bounds = Some((2.0, 1.0));
        cfg.cheb_degree = 3;
        assert!(cfg.validate().is_ok());
        cfg.cheb_degree = 0;
        assert!(cfg.validate().is_err());
        let mut cfg = SolverConfig::new(Method::Rsd, 0);
        assert!(cfg.validate().is_err());
        cfg.p = 1;
        cfg.tol = 0.0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn cache_update_identity_step() {
        let ax = array![[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]];
        let ap = array![[0.5, 0.0], [0.0, 0.5], [1.0, 1.0]];
        let v = array![[0.6, 0.8], [-0.8, 0.6]];
        let out = matvec_cache_update(&ax.view(), &ap.view(), 0.0, &v.view(), &[2.0, 1.0]).unwrap();
        assert!((&out - &ax).iter().all(|d| d.abs() < 1e-15));
    }

    #[test]
    fn cache_update_matches_explicit_product() {
        let a = SparseSymmetricMatrix::fd_laplacian_2d(6, 5).unwrap();
        let op = AffineOperator::identity(&a);
        let x = subspace::random_orthonormal(30, 3, 4).unwrap();
        let ax = op.apply(&x.view()).unwrap();
        let g = subspace::gradient_from(&x.view(), ax.clone()).gradient;
        let ag = op.apply(&g.view()).unwrap();
        let eig = subspace::sym_eig_small(&g.view().t().dot(&g.view()).view()).unwrap();
        let beta = eig.values.to_vec();
        let mu = 0.37;
        let x1 = subspace::polar_retraction(&x, &g, mu, &eig.vectors.view(), &beta).unwrap();
        let cached = matvec_cache_update(&ax.view(), &ag.view(), mu, &eig.vectors.view(), &beta).unwrap();
        let explicit = op.apply(&x1.view()).unwrap();
        let rel = dense::frobenius(&(&cached - &explicit).view()) / dense::frobenius(&explicit.view());
        assert!(rel <= 1e-12, "relative deviation {rel:e}");
    }
}
