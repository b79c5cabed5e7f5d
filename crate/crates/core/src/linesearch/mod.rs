//! Exact line search along a tangent direction.
//!
//! After rotating by the eigenvectors `V` of `PᵀP`, the objective along the
//! retracted curve `X(μ)` splits into `p` independent rational branches
//!
//! ```text
//! φ(μ) = −½ Σᵢ (αᵢ + 2ζᵢμ + γᵢμ²) / (1 + βᵢμ²)
//! ```
//!
//! so the step is found by scalar root finding on `φ′` inside a bracket
//! built from the branch-wise second roots.

mod root;

use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};

pub use root::{brent_root, brent_root_until, golden_section_min, RootResult, MAX_EVALUATIONS};

/// Branches with `βᵢ` below this fraction of `max β` are left out of the bracket.
pub const BETA_FLOOR: f64 = 1e-14;

const SCAN_POINTS: usize = 32;
const SCAN_SPLIT: usize = 4;

/// Diagonals `α, β, γ, ζ` of the rotated line-search problem plus the rotation.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchCoefficients {
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub gamma: Vec<f64>,
    pub zeta: Vec<f64>,
    pub rotation: Array2<f64>,
    /// The direction is the gradient itself, so `ζ ≡ β`.
    pub is_gradient: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bracket {
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepKind {
    /// Bracket collapsed to a point; no root finding needed.
    Collapsed,
    /// Safeguarded root of `φ′`.
    Root,
    /// Golden-section fallback on `φ`.
    Golden,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineSearchOutcome {
    pub mu: f64,
    pub bracket: Bracket,
    pub evaluations: usize,
    pub kind: StepKind,
}

fn clean_beta(beta: &[f64]) -> Result<Vec<f64>> {
    let scale = beta.iter().fold(1.0f64, |a, b| a.max(b.abs()));
    beta.iter()
        .map(|&b| {
            if b < -1e-14 * scale || b.is_nan() {
                Err(Error::Consistency(format!("eigenvalue of PᵀP is negative: {b:e}")))
            } else {
                Ok(b.max(0.0))
            }
        })
        .collect()
}

fn column_dot(a: &ArrayView2<'_, f64>, b: &ArrayView2<'_, f64>, i: usize) -> f64 {
    a.column(i).dot(&b.column(i))
}

/// Coefficients from blocks already rotated by `V` (`X_v = XV`, ...).
/// Each diagonal entry is a single column dot product.
pub fn compute_branch_coefficients(
    xv: &ArrayView2<'_, f64>,
    pv: &ArrayView2<'_, f64>,
    axv: &ArrayView2<'_, f64>,
    apv: &ArrayView2<'_, f64>,
    beta: &[f64],
    v: &ArrayView2<'_, f64>,
    is_gradient: bool,
) -> Result<BranchCoefficients> {
    let p = xv.ncols();
    if [pv.ncols(), axv.ncols(), apv.ncols(), beta.len(), v.nrows()].iter().any(|&k| k != p) {
        return Err(Error::arg("line-search blocks differ in column count"));
    }
    let beta = clean_beta(beta)?;
    let alpha = (0..p).map(|i| column_dot(xv, axv, i)).collect();
    let gamma = (0..p).map(|i| column_dot(pv, apv, i)).collect();
    let zeta = if is_gradient { beta.clone() } else { (0..p).map(|i| -column_dot(pv, axv, i)).collect() };
    Ok(BranchCoefficients { alpha, beta, gamma, zeta, rotation: v.to_owned(), is_gradient })
}

impl BranchCoefficients {
    /// Coefficients from the unrotated `p × p` products `XᵀAX`, `PᵀAP` and
    /// `PᵀAX`: the diagonals of `Vᵀ M V`.
    pub fn from_projections(
        xax: &ArrayView2<'_, f64>,
        pap: &ArrayView2<'_, f64>,
        pax: &ArrayView2<'_, f64>,
        beta: &[f64],
        v: &ArrayView2<'_, f64>,
        is_gradient: bool,
    ) -> Result<Self> {
        let p = v.nrows();
        if beta.len() != p {
            return Err(Error::arg("β and V differ in size"));
        }
        let beta = clean_beta(beta)?;
        let rotated_diag = |m: &ArrayView2<'_, f64>| -> Vec<f64> {
            let mv = m.dot(v);
            (0..p).map(|i| v.column(i).dot(&mv.column(i))).collect()
        };
        let alpha = rotated_diag(xax);
        let gamma = rotated_diag(pap);
        let zeta = if is_gradient { beta.clone() } else { rotated_diag(pax).into_iter().map(|z| -z).collect() };
        Ok(Self { alpha, beta, gamma, zeta, rotation: v.to_owned(), is_gradient })
    }

    pub fn len(&self) -> usize {
        self.alpha.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alpha.is_empty()
    }

    pub fn beta_sum(&self) -> f64 {
        self.beta.iter().sum()
    }

    /// `Σζᵢ = Tr(PᵀG)`; positive for a descent direction.
    pub fn zeta_sum(&self) -> f64 {
        self.zeta.iter().sum()
    }

    /// Branches with `βᵢ` above the floor. The others have `P vᵢ` at
    /// rounding level: their slope inside the bracket is negligible, but
    /// their limit `−½γᵢ/βᵢ` is noise that must not steer the step.
    fn significant(&self) -> BranchCoefficients {
        let cutoff = self.beta_cutoff();
        let keep: Vec<usize> = (0..self.len()).filter(|&i| self.beta[i] > cutoff).collect();
        let pick = |v: &[f64]| keep.iter().map(|&i| v[i]).collect::<Vec<f64>>();
        BranchCoefficients {
            alpha: pick(&self.alpha),
            beta: pick(&self.beta),
            gamma: pick(&self.gamma),
            zeta: pick(&self.zeta),
            rotation: self.rotation.select(ndarray::Axis(1), &keep),
            is_gradient: self.is_gradient,
        }
    }

    fn beta_cutoff(&self) -> f64 {
        BETA_FLOOR * self.beta.iter().fold(0.0f64, |a, b| a.max(*b))
    }

    fn is_retained(&self, i: usize) -> bool {
        let cutoff = self.beta_cutoff();
        self.beta[i] > cutoff && self.beta[i] > 0.0 && self.zeta[i] > 0.0
    }
}

/// `φ(X(μ)) = −½ Σ (αᵢ + 2ζᵢμ + γᵢμ²)/(1 + βᵢμ²)`.
pub fn phi_of_mu(c: &BranchCoefficients, mu: f64) -> f64 {
    let mut s = 0.0;
    for i in 0..c.len() {
        s += (c.alpha[i] + 2.0 * c.zeta[i] * mu + c.gamma[i] * mu * mu) / (1.0 + c.beta[i] * mu * mu);
    }
    -0.5 * s
}

/// `dφ/dμ = −Σ (ζᵢ + (γᵢ − αᵢβᵢ)μ − βᵢζᵢμ²)/(1 + βᵢμ²)²`.
pub fn dphi_of_mu(c: &BranchCoefficients, mu: f64) -> f64 {
    let mut s = 0.0;
    for i in 0..c.len() {
        let delta = c.gamma[i] - c.alpha[i] * c.beta[i];
        let den = 1.0 + c.beta[i] * mu * mu;
        s += (c.zeta[i] + delta * mu - c.beta[i] * c.zeta[i] * mu * mu) / (den * den);
    }
    -s
}

/// Positive root of `ζ + δμ − βζμ² = 0` for a convex branch (`β, ζ > 0`),
/// evaluated without cancellation.
pub fn branch_root(beta: f64, zeta: f64, delta: f64) -> f64 {
    let disc = delta.hypot(2.0 * zeta * beta.sqrt());
    if delta < 0.0 {
        2.0 * zeta / (delta.abs() + disc)
    } else {
        ((delta + disc) / (2.0 * zeta)) / beta
    }
}

/// `[min ξᵢ, max ξᵢ]` over the convex branches. Concave branches
/// (`ζᵢ ≤ 0`) and branches with negligible `βᵢ` are skipped.
pub fn bracket(c: &BranchCoefficients) -> Result<Bracket> {
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    let mut any = false;
    for i in 0..c.len() {
        if !c.is_retained(i) {
            continue;
        }
        let delta = c.gamma[i] - c.alpha[i] * c.beta[i];
        let xi = branch_root(c.beta[i], c.zeta[i], delta);
        if !xi.is_finite() {
            continue;
        }
        any = true;
        lo = lo.min(xi);
        hi = hi.max(xi);
    }
    if !any {
        return Err(Error::BracketFailure);
    }
    Ok(Bracket { lo, hi })
}

/// Optimal step along the direction described by `c`.
///
/// Roots of `φ′` are located by Dekker–Brent on every sign change of a
/// short scan of the bracket (the branch roots plus a uniform grid), and the
/// root with the lowest `φ` wins. When no stationary point can be bracketed
/// the step falls back to golden-section search on `φ`.
pub fn get_mu(c: &BranchCoefficients) -> Result<LineSearchOutcome> {
    let br = bracket(c)?;
    let active = c.significant();
    let c = &active;
    let all_retained = (0..c.len()).all(|i| c.is_retained(i));
    let xtol = 1e-14 * (1.0 + br.hi);
    if br.hi - br.lo <= xtol && all_retained {
        return Ok(LineSearchOutcome { mu: br.lo, bracket: br, evaluations: 0, kind: StepKind::Collapsed });
    }

    let ftol = 1e-12 * (1.0 + c.beta_sum());
    let mut evaluations = 0usize;
    let mut dphi = |mu: f64| {
        evaluations += 1;
        dphi_of_mu(c, mu)
    };

    let mut lo = br.lo;
    let mut hi = br.hi;
    let mut d_lo = dphi(lo);
    while d_lo > 0.0 && lo > 1e-16 {
        lo *= 0.5;
        d_lo = dphi(lo);
    }
    if d_lo > 0.0 {
        lo = 0.0;
        d_lo = dphi(lo);
    }
    let mut d_hi = dphi(hi);
    let mut doublings = 0;
    while d_hi < 0.0 && doublings < 64 {
        hi *= 2.0;
        d_hi = dphi(hi);
        doublings += 1;
    }

    if d_lo > 0.0 || d_hi < 0.0 {
        return Ok(golden(c, br, lo, hi, evaluations));
    }

    // Knots: the branch roots plus log-spaced points, each gap then split
    // uniformly. Several local minima can sit between neighbouring roots.
    let mut knots = vec![lo, hi];
    for i in 0..c.len() {
        if c.is_retained(i) {
            let xi = branch_root(c.beta[i], c.zeta[i], c.gamma[i] - c.alpha[i] * c.beta[i]);
            if xi > lo && xi < hi {
                knots.push(xi);
            }
        }
    }
    if lo > 0.0 {
        let ratio = (hi / lo).ln();
        knots.extend((1..SCAN_POINTS).map(|k| lo * (ratio * k as f64 / SCAN_POINTS as f64).exp()));
    }
    knots.sort_by(f64::total_cmp);
    knots.dedup();
    let mut grid = Vec::with_capacity(knots.len() * SCAN_SPLIT);
    for w in knots.windows(2) {
        grid.extend((0..SCAN_SPLIT).map(|k| w[0] + (w[1] - w[0]) * k as f64 / SCAN_SPLIT as f64));
    }
    grid.push(hi);
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let values: Vec<f64> = grid.iter().map(|&m| dphi(m)).collect();

    let mut best: Option<(f64, f64)> = None;
    for k in 0..grid.len() - 1 {
        let (a, b) = (grid[k], grid[k + 1]);
        let (fa, fb) = (values[k], values[k + 1]);
        let root = if fa == 0.0 {
            Some(a)
        } else if fa < 0.0 && fb >= 0.0 {
            let r = brent_root_until(&mut dphi, a, b, xtol, ftol)?;
            Some(r.root)
        } else {
            None
        };
        if let Some(mu) = root {
            let f = phi_of_mu(c, mu);
            if best.is_none_or(|(_, fb)| f < fb) {
                best = Some((mu, f));
            }
        }
    }
    match best {
        Some((mu, f)) if f <= phi_of_mu(c, 0.0) => {
            Ok(LineSearchOutcome { mu, bracket: br, evaluations, kind: StepKind::Root })
        }
        _ => Ok(golden(c, br, lo, hi, evaluations)),
    }
}

fn golden(c: &BranchCoefficients, br: Bracket, lo: f64, hi: f64, evaluations: usize) -> LineSearchOutcome {
    let (mu, evals) = golden_section_min(|m| phi_of_mu(c, m), lo, hi, 1e-14 * (1.0 + hi));
    LineSearchOutcome { mu, bracket: br, evaluations: evaluations + evals, kind: StepKind::Golden }
}
