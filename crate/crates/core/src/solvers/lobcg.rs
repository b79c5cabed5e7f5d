//! Locally optimal block conjugate gradient (unpreconditioned LOBPCG).
//!
//! Each iteration runs Rayleigh–Ritz on `span[X_k, W_k, P_k]` where `W_k` is
//! the orthonormalized gradient and `P_k` the implicit conjugate block: the
//! `[W, P]` part of the previous Ritz combination, `P_{k+1} = W Y_w + P Y_p`.
//! This spans the same space as `X_{k−1}` but stays well conditioned. Only
//! `AW` is an explicit product; `AX` and `AP` are carried as linear
//! combinations.
//!
//! The standard variant fills the `XᵀAX` block of the projected matrix with
//! the previous Ritz values; the plus variant computes it explicitly.

use ndarray::{s, Array1, Array2, ArrayView2, Axis};

use super::{start, IterationView, Observer, SolveResult, SolverConfig};
use crate::dense;
use crate::error::{Error, Result};
use crate::operators::AffineOperator;
use crate::subspace::{self, OrthonormalBasis};

/// Minimum Cholesky pivot of the column-normalized Gram matrix.
const PIVOT_TOL: f64 = 1e-12;
/// Consecutive iterations without a usable `P` block before giving up.
const MAX_DROPS: usize = 20;

pub fn lobcg(op: &AffineOperator<'_>, x0: &OrthonormalBasis, cfg: &SolverConfig, plus: bool) -> Result<SolveResult> {
    run(op, x0, cfg, plus, &mut |_| {})
}

/// A block with its image under `A`, transformed in lockstep.
struct Pair {
    m: Array2<f64>,
    am: Array2<f64>,
}

impl Pair {
    /// `M ← (M − B BᵀM)` for each orthonormal `B` in `against`, applied to
    /// `AM` with the matching `AB`.
    fn project_out(&mut self, against: &[(&Array2<f64>, &Array2<f64>)]) {
        for (b, ab) in against {
            let coeff = b.t().dot(&self.m);
            self.m -= &b.dot(&coeff);
            self.am -= &ab.dot(&coeff);
        }
    }

    fn transform(&mut self, t: &Array2<f64>) {
        self.m = self.m.dot(t);
        self.am = self.am.dot(t);
    }
}

/// Column-scale then Cholesky-orthonormalize, returning the right factor.
fn normalize_block(m: &ArrayView2<'_, f64>) -> Option<Array2<f64>> {
    let k = m.ncols();
    let mut scale = Array2::<f64>::zeros((k, k));
    for (j, col) in m.axis_iter(Axis(1)).enumerate() {
        let norm = col.dot(&col).sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return None;
        }
        scale[[j, j]] = 1.0 / norm;
    }
    let scaled = m.dot(&scale);
    let (_, t) = dense::cholesky_orthonormalize(&scaled.view(), PIVOT_TOL)?;
    Some(scale.dot(&t))
}

/// Two passes of projection and Cholesky. `None` when the block is
/// numerically dependent on `against` or on itself.
fn orthonormalize(block: &mut Pair, against: &[(&Array2<f64>, &Array2<f64>)]) -> Option<()> {
    for _ in 0..2 {
        block.project_out(against);
        let t = normalize_block(&block.m.view())?;
        block.transform(&t);
    }
    Some(())
}

pub(super) fn run(
    op: &AffineOperator<'_>,
    x0: &OrthonormalBasis,
    cfg: &SolverConfig,
    plus: bool,
    observer: &mut Observer<'_>,
) -> Result<SolveResult> {
    let (mut meter, mut rec, mut x, mut eval) = start(op, x0, cfg, observer)?;
    let p = cfg.p;
    let mut converged = rec.is_converged(&eval);
    let mut ritz_values: Option<Array1<f64>> = None;
    let mut conj: Option<Pair> = None;
    let mut drops = 0usize;

    let mut k = 0;
    while !converged && k < cfg.max_iters {
        k += 1;
        let ax = &eval.ax;

        // W: gradient orthonormalized against X. Its image is a real product.
        let mut w = eval.gradient.as_array().clone();
        for _ in 0..2 {
            w = subspace::project_out(&x.view(), &w.view());
            let t = normalize_block(&w.view()).ok_or_else(|| Error::Instability {
                iter: k,
                reason: "gradient block is rank deficient".into(),
            })?;
            w = w.dot(&t);
        }
        let aw = meter.apply(&w.view())?;

        let had_history = conj.is_some();
        let conj_block = conj.take().and_then(|mut pair| {
            orthonormalize(&mut pair, &[(&x, ax), (&w, &aw)]).map(|_| pair)
        });
        if had_history && conj_block.is_none() {
            drops += 1;
            if drops > MAX_DROPS {
                return Err(Error::Instability { iter: k, reason: format!("conjugate block dropped {drops} times in a row") });
            }
        } else {
            drops = 0;
        }

        let width = if conj_block.is_some() { 3 * p } else { 2 * p };
        let mut q = Array2::<f64>::zeros((x.nrows(), width));
        let mut aq = Array2::<f64>::zeros((x.nrows(), width));
        q.slice_mut(s![.., 0..p]).assign(&x);
        q.slice_mut(s![.., p..2 * p]).assign(&w);
        aq.slice_mut(s![.., 0..p]).assign(ax);
        aq.slice_mut(s![.., p..2 * p]).assign(&aw);
        if let Some(pair) = &conj_block {
            q.slice_mut(s![.., 2 * p..]).assign(&pair.m);
            aq.slice_mut(s![.., 2 * p..]).assign(&pair.am);
        }

        let mut gram = q.t().dot(&aq);
        dense::symmetrize(&mut gram);
        if !plus {
            if let Some(theta) = &ritz_values {
                let mut block = gram.slice_mut(s![0..p, 0..p]);
                block.fill(0.0);
                block.diag_mut().assign(theta);
            }
        }
        if gram.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence { iter: k, reason: "projected matrix is not finite".into() });
        }
        let eig = subspace::sym_eig_small(&gram.view())?;
        let y = eig.vectors.slice(s![.., 0..p]).to_owned();

        let x_new = q.dot(&y);
        let ax_new = aq.dot(&y);
        let tail = s![p.., ..];
        let y_tail = y.slice(tail);
        conj = Some(Pair {
            m: q.slice(s![.., p..]).dot(&y_tail),
            am: aq.slice(s![.., p..]).dot(&y_tail),
        });
        ritz_values = Some(eig.values.slice(s![0..p]).to_owned());

        x = x_new;
        eval = subspace::gradient_from(&x.view(), ax_new);
        let r = rec.push(k, meter.matvecs, &eval, f64::NAN, had_history && conj_block.is_none())?;
        observer(&IterationView { record: &r, x: x.view(), ax: eval.ax.view() });
        converged = rec.is_converged(&eval);
    }

    let trace = rec.finish(cfg.method, cfg.p, converged);
    Ok(SolveResult { x: OrthonormalBasis::from_unchecked(x), ax: eval.ax, trace })
}
