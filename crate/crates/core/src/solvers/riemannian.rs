//! Steepest descent and Polak–Ribière conjugate gradient on the Grassmann
//! manifold, with exact line search along the polar retraction.

use ndarray::Array2;

use super::{start, IterationView, Observer, SolveResult, SolverConfig};
use crate::dense;
use crate::error::{Error, Result};
use crate::linesearch::{get_mu, BranchCoefficients, LineSearchOutcome};
use crate::operators::AffineOperator;
use crate::subspace::{self, OrthonormalBasis};

/// Riemannian steepest descent.
pub fn rsd(op: &AffineOperator<'_>, x0: &OrthonormalBasis, cfg: &SolverConfig) -> Result<SolveResult> {
    run(op, x0, cfg, false, &mut |_| {})
}

/// Riemannian conjugate gradient (Polak–Ribière).
pub fn rcg(op: &AffineOperator<'_>, x0: &OrthonormalBasis, cfg: &SolverConfig) -> Result<SolveResult> {
    run(op, x0, cfg, true, &mut |_| {})
}

/// Per-column drift of `‖XᵀX − I‖_F` tolerated before re-normalizing.
const ORTHO_DRIFT: f64 = 1e-13;

struct Step {
    mu: f64,
    v: Array2<f64>,
    beta: Vec<f64>,
}

/// Line search along `P` with `AP` already known.
fn search(
    c: &Array2<f64>,
    ax: &Array2<f64>,
    p: &Array2<f64>,
    ap: &Array2<f64>,
    is_gradient: bool,
) -> Result<(Step, LineSearchOutcome)> {
    let mut ptp = p.t().dot(p);
    dense::symmetrize(&mut ptp);
    let eig = subspace::sym_eig_small(&ptp.view())?;
    let beta = eig.values.to_vec();
    let mut pap = p.t().dot(ap);
    dense::symmetrize(&mut pap);
    let pax = p.t().dot(ax);
    let coeffs = BranchCoefficients::from_projections(&c.view(), &pap.view(), &pax.view(), &beta, &eig.vectors.view(), is_gradient)?;
    let outcome = get_mu(&coeffs)?;
    Ok((Step { mu: outcome.mu, v: eig.vectors, beta }, outcome))
}

pub(super) fn run(
    op: &AffineOperator<'_>,
    x0: &OrthonormalBasis,
    cfg: &SolverConfig,
    conjugate: bool,
    observer: &mut Observer<'_>,
) -> Result<SolveResult> {
    let (mut meter, mut rec, mut x, mut eval) = start(op, x0, cfg, observer)?;
    let mut converged = rec.is_converged(&eval);
    let mut mu_scale = 0.0f64;
    // previous gradient and direction, for the conjugate update
    let mut history: Option<(Array2<f64>, Array2<f64>)> = None;

    let mut k = 0;
    while !converged && k < cfg.max_iters {
        k += 1;
        let g = eval.gradient.as_array();

        let mut restart = true;
        let mut p = g.clone();
        if conjugate {
            if let Some((g_old, p_old)) = &history {
                let periodic = cfg.k_restart > 0 && k % cfg.k_restart == 0;
                let denom = dense::inner(&g_old.view(), &g_old.view());
                if !periodic && denom > 0.0 {
                    let pr = (dense::inner(&g.view(), &g.view()) - dense::inner(&g_old.view(), &g.view())) / denom;
                    let mut cand = g.clone();
                    cand.scaled_add(pr, p_old);
                    let cand = subspace::project_out(&x.view(), &cand.view());
                    if dense::inner(&g.view(), &cand.view()) > 0.0 {
                        p = cand;
                        restart = false;
                    }
                }
            }
        }

        let mut ap = meter.apply(&p.view())?;
        let (step, _) = match search(&eval.projected, &eval.ax, &p, &ap, restart) {
            Ok(found) => found,
            Err(Error::BracketFailure) if !restart => {
                p = g.clone();
                restart = true;
                ap = meter.apply(&p.view())?;
                search(&eval.projected, &eval.ax, &p, &ap, true)?
            }
            Err(e) => return Err(e),
        };
        if !step.mu.is_finite() {
            return Err(Error::Divergence { iter: k, reason: format!("step length {}", step.mu) });
        }

        let threshold = cfg.matvec_refresh_threshold.unwrap_or(16.0 * f64::EPSILON * (1.0 + mu_scale));
        mu_scale = mu_scale.max(step.mu.abs());
        let mut x_new = subspace::step_and_normalize(&x.view(), &p.view(), step.mu, &step.v.view(), &step.beta);
        let mut ax_new = if step.mu <= threshold {
            meter.apply(&x_new.view())?
        } else {
            subspace::step_and_normalize(&eval.ax.view(), &ap.view(), step.mu, &step.v.view(), &step.beta)
        };
        subspace::restore_orthonormality(&mut x_new, &mut ax_new, ORTHO_DRIFT * cfg.p as f64)?;

        if conjugate {
            history = Some((g.clone(), p));
        }
        x = x_new;
        eval = subspace::gradient_from(&x.view(), ax_new);
        let r = rec.push(k, meter.matvecs, &eval, step.mu, restart && conjugate)?;
        observer(&IterationView { record: &r, x: x.view(), ax: eval.ax.view() });
        converged = rec.is_converged(&eval);
    }

    let trace = rec.finish(cfg.method, cfg.p, converged);
    Ok(SolveResult { x: OrthonormalBasis::from_unchecked(x), ax: eval.ax, trace })
}
