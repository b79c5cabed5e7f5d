//! Subspace iteration with a fixed polynomial filter, orthonormalization and
//! Rayleigh–Ritz rotation.

use ndarray::Array2;

use super::{start, IterationView, Meter, Observer, SolveResult, SolverConfig};
use crate::dense;
use crate::error::{Error, Result};
use crate::operators::AffineOperator;
use crate::subspace::{self, OrthonormalBasis};

/// Plain subspace iteration with `p_k(t) = (t − c)^k`, where `c` is the
/// midpoint of the unwanted interval when bounds are configured and `0`
/// otherwise.
pub fn subspace_iteration(op: &AffineOperator<'_>, x0: &OrthonormalBasis, cfg: &SolverConfig) -> Result<SolveResult> {
    run(op, x0, cfg, &mut |_| {})
}

pub(super) fn run(
    op: &AffineOperator<'_>,
    x0: &OrthonormalBasis,
    cfg: &SolverConfig,
    observer: &mut Observer<'_>,
) -> Result<SolveResult> {
    let shift = cfg.cheb_bounds.map_or(0.0, |(upper, lower)| 0.5 * (upper + lower));
    iterate(op, x0, cfg, observer, |_, x, ax| {
        let mut y = ax.clone();
        if shift != 0.0 {
            y.scaled_add(-shift, x);
        }
        Ok(y)
    })
}

/// Outer loop shared with the Chebyshev variant. `filter` receives the
/// current `X` and its cached `AX` and returns the filtered block.
pub(super) fn iterate<F>(
    op: &AffineOperator<'_>,
    x0: &OrthonormalBasis,
    cfg: &SolverConfig,
    observer: &mut Observer<'_>,
    mut filter: F,
) -> Result<SolveResult>
where
    F: FnMut(&mut Meter<'_>, &Array2<f64>, &Array2<f64>) -> Result<Array2<f64>>,
{
    let (mut meter, mut rec, mut x, mut eval) = start(op, x0, cfg, observer)?;
    let mut converged = rec.is_converged(&eval);
    let mut k = 0;
    while !converged && k < cfg.max_iters {
        k += 1;
        let y = filter(&mut meter, &x, &eval.ax)?;
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence { iter: k, reason: "filtered block overflowed".into() });
        }
        let (q, r) = dense::householder_qr(&y.view());
        let diag = r.diag();
        let rmax = diag.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if diag.iter().any(|v| !(v.abs() > 1e-14 * rmax)) {
            return Err(Error::Deflation { iter: k });
        }
        let aq = meter.apply(&q.view())?;
        let ritz = subspace::rayleigh_ritz_from(&q.view(), &aq.view())?;
        x = ritz.basis;
        eval = subspace::gradient_from(&x.view(), ritz.a_basis);
        let rec_k = rec.push(k, meter.matvecs, &eval, f64::NAN, false)?;
        observer(&IterationView { record: &rec_k, x: x.view(), ax: eval.ax.view() });
        converged = rec.is_converged(&eval);
    }
    let trace = rec.finish(cfg.method, cfg.p, converged);
    Ok(SolveResult { x: OrthonormalBasis::from_unchecked(x), ax: eval.ax, trace })
}
