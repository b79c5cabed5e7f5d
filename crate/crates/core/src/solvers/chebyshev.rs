//! Chebyshev-filtered subspace iteration.

use ndarray::{Array2, ArrayView2};

use super::{subspace_iteration, Meter, Observer, SolveResult, SolverConfig};
use crate::error::{Error, Result};
use crate::operators::AffineOperator;
use crate::subspace::OrthonormalBasis;

/// `C_d((A − cI)/h) X` by the three-term recurrence. Uses exactly `d` block
/// products.
pub fn chebyshev_filter(
    op: &AffineOperator<'_>,
    x: &ArrayView2<'_, f64>,
    degree: usize,
    center: f64,
    half_width: f64,
) -> Result<Array2<f64>> {
    let ax = op.apply(x)?;
    let mut meter = Meter::new(*op);
    recurrence(&mut meter, x, ax, degree, center, half_width)
}

/// The recurrence with `AX` supplied, consuming `d − 1` further products.
fn recurrence(
    meter: &mut Meter<'_>,
    x: &ArrayView2<'_, f64>,
    ax: Array2<f64>,
    degree: usize,
    center: f64,
    half_width: f64,
) -> Result<Array2<f64>> {
    if !(half_width > 0.0) || !center.is_finite() {
        return Err(Error::arg(format!("filter needs h > 0 and finite c, got h = {half_width}, c = {center}")));
    }
    if degree == 0 {
        return Err(Error::arg("Chebyshev degree must be at least 1"));
    }
    let scale = 1.0 / half_width;
    // T₁ = (A − cI)X / h
    let mut prev = x.to_owned();
    let mut cur = ax;
    cur.scaled_add(-center, x);
    cur *= scale;
    for _ in 1..degree {
        let mut next = meter.apply(&cur.view())?;
        next.scaled_add(-center, &cur);
        next *= 2.0 * scale;
        next -= &prev;
        prev = cur;
        cur = next;
    }
    Ok(cur)
}

/// Subspace iteration with the degree-`d` Chebyshev filter on the unwanted
/// interval `[λ_n, λ_{p+1}]`, normalized once per cycle.
pub fn si_chebyshev(op: &AffineOperator<'_>, x0: &OrthonormalBasis, cfg: &SolverConfig) -> Result<SolveResult> {
    run(op, x0, cfg, &mut |_| {})
}

pub(super) fn run(
    op: &AffineOperator<'_>,
    x0: &OrthonormalBasis,
    cfg: &SolverConfig,
    observer: &mut Observer<'_>,
) -> Result<SolveResult> {
    cfg.validate()?;
    let (upper, lower) = cfg.cheb_bounds.ok_or_else(|| Error::arg("si_cheb needs bounds (λ_{p+1}, λ_n)"))?;
    let center = 0.5 * (upper + lower);
    let half_width = 0.5 * (upper - lower);
    let degree = cfg.cheb_degree;
    subspace_iteration::iterate(op, x0, cfg, observer, |meter, x, ax| {
        recurrence(meter, &x.view(), ax.clone(), degree, center, half_width)
    })
}
