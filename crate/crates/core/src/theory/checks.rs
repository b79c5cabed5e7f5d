//! Executable forms of the convergence inequalities. Each check returns a
//! [`CheckReport`]; a violation is an implementation bug, not a property of
//! the matrix.

use std::f64::consts::PI;
use std::fmt;

use ndarray::{s, Array2, ArrayView2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use super::oracle::SpectrumInfo;
use crate::dense;
use crate::error::{Error, Result};
use crate::linesearch::{get_mu, BranchCoefficients};
use crate::operators::AffineOperator;
use crate::solvers::{solve_observed, IterationView, Method, SolverConfig, SolverTrace};
use crate::subspace::{self, principal_angles, OrthonormalBasis, TangentBlock};

/// Quadratic-growth constant.
pub const C_Q: f64 = 2.0 / (PI * PI);

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub sample: usize,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub name: String,
    pub samples: usize,
    pub violations: Vec<Violation>,
    /// Smallest `rhs + tolerance − lhs` seen; negative means violated.
    pub worst_slack: f64,
}

/// Machine-readable summary of one report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckSummary {
    pub name: String,
    pub samples: usize,
    pub violations: usize,
    pub worst_slack: f64,
    pub passed: bool,
}

impl CheckReport {
    pub fn new(name: impl Into<String>) -> Self {
        Self { name: name.into(), samples: 0, violations: Vec::new(), worst_slack: f64::INFINITY }
    }

    /// Record one inequality `lhs ≤ rhs + tol`.
    pub fn assert_le(&mut self, sample: usize, lhs: f64, rhs: f64, tol: f64, what: &str) {
        let slack = rhs + tol - lhs;
        self.worst_slack = self.worst_slack.min(slack);
        if !(slack >= 0.0) {
            self.violations.push(Violation { sample, detail: format!("{what}: {lhs:.6e} > {rhs:.6e} (+{tol:.1e})") });
        }
    }

    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    /// Append `other`, keeping sample indices and worst slack.
    pub fn merge(&mut self, other: CheckReport) {
        self.samples += other.samples;
        self.violations.extend(other.violations);
        self.worst_slack = self.worst_slack.min(other.worst_slack);
    }

    pub fn summary(&self) -> CheckSummary {
        CheckSummary {
            name: self.name.clone(),
            samples: self.samples,
            violations: self.violations.len(),
            worst_slack: self.worst_slack,
            passed: self.passed(),
        }
    }
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:<18} {:<4} samples {:>6}  violations {:>4}  worst slack {:.3e}",
            self.name,
            if self.passed() { "PASS" } else { "FAIL" },
            self.samples,
            self.violations.len(),
            self.worst_slack
        )?;
        for v in self.violations.iter().take(5) {
            writeln!(f, "    sample {}: {}", v.sample, v.detail)?;
        }
        if self.violations.len() > 5 {
            writeln!(f, "    ... {} more", self.violations.len() - 5)?;
        }
        Ok(())
    }
}

/// Largest singular value, via the small Gram matrix.
pub fn spectral_norm(m: &ArrayView2<'_, f64>) -> Result<f64> {
    let mut gram = m.t().dot(m);
    dense::symmetrize(&mut gram);
    Ok(subspace::sym_eig_small(&gram.view())?.values[0].max(0.0).sqrt())
}

/// `θ / tan θ`, extended by `1` at `θ = 0`.
pub fn a_factor(theta: f64) -> f64 {
    if theta.abs() < 1e-8 {
        1.0
    } else {
        theta / theta.tan()
    }
}

/// `‖G‖₂ ≤ L/2` at a single point; returns `(‖G‖₂, L/2)`.
pub fn grad_norm_sides(op: &AffineOperator<'_>, x: &OrthonormalBasis, l: f64) -> Result<(f64, f64)> {
    let g = subspace::riemannian_gradient(op, x, None)?.gradient;
    Ok((spectral_norm(&g.view())?, 0.5 * l))
}

/// Gradient bound at `samples` random points.
pub fn check_grad_norm_bound(op: &AffineOperator<'_>, p: usize, l: f64, samples: usize, seed: u64) -> Result<CheckReport> {
    let mut report = CheckReport::new("grad-bound");
    for i in 0..samples {
        let x = subspace::random_orthonormal(op.n(), p, seed.wrapping_add(i as u64))?;
        let (lhs, rhs) = grad_norm_sides(op, &x, l)?;
        report.samples += 1;
        report.assert_le(i, lhs, rhs, 1e-10 * l, "‖G‖₂ ≤ L/2");
    }
    Ok(report)
}

/// `φ_k − φ_{k+1} ≥ (2/5)‖G_k‖_F²/L − 1e-12|φ_k|` along a steepest-descent trace.
pub fn check_sufficient_decrease(trace: &SolverTrace, l: f64) -> CheckReport {
    let mut report = CheckReport::new("decrease");
    for w in trace.records.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        let bound = 0.4 * a.grad_fro * a.grad_fro / l;
        report.samples += 1;
        report.assert_le(a.iter, bound, a.phi - b.phi, 1e-12 * a.phi.abs(), "sufficient decrease");
    }
    report
}

/// The three growth inequalities at `x`, recorded as sample `sample`.
pub fn check_growth_at(
    op: &AffineOperator<'_>,
    spectrum: &SpectrumInfo,
    x: &OrthonormalBasis,
    sample: usize,
    report: &mut CheckReport,
) -> Result<()> {
    let eval = subspace::riemannian_gradient(op, x, None)?;
    let gap = eval.phi() - spectrum.phi_star;
    let angles = principal_angles(x, &spectrum.v_alpha)?;
    let dist2 = angles.dist * angles.dist;
    let a = a_factor(angles.largest());
    let g2 = eval.gradient.frobenius().powi(2);
    let tol = 1e-10 * spectrum.l;
    report.samples += 1;
    report.assert_le(sample, C_Q * spectrum.delta * dist2, gap, tol, "quadratic growth");
    report.assert_le(sample, 4.0 * C_Q * spectrum.delta * a * a * gap, g2, tol, "gradient dominance");
    report.assert_le(sample, gap, 0.5 * spectrum.l * dist2, tol, "smoothness");
    Ok(())
}

/// Growth, dominance and smoothness at random points with `θ_p < π/2`.
/// About half the samples are drawn near `V_α` to exercise the small-angle
/// regime.
pub fn check_growth_and_dominance(
    op: &AffineOperator<'_>,
    spectrum: &SpectrumInfo,
    samples: usize,
    seed: u64,
) -> Result<CheckReport> {
    if !spectrum.has_gap() {
        return Err(Error::arg("growth checks need a positive gap"));
    }
    let mut report = CheckReport::new("growth");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = spectrum.p();
    let n = op.n();
    let mut i = 0;
    let mut attempts = 0;
    while i < samples {
        attempts += 1;
        if attempts > 20 * samples + 100 {
            return Err(Error::Consistency("could not sample points with θ_p < π/2".into()));
        }
        let x = if rand::Rng::random_bool(&mut rng, 0.5) {
            subspace::random_orthonormal(n, p, rand::Rng::random(&mut rng))?
        } else {
            let target = rand::Rng::random_range(&mut rng, 0.0..1.2);
            point_at_distance(&spectrum.v_alpha, target, rand::Rng::random(&mut rng))?
        };
        if principal_angles(&x, &spectrum.v_alpha)?.largest() >= PI / 2.0 - 1e-6 {
            continue;
        }
        check_growth_at(op, spectrum, &x, i, &mut report)?;
        i += 1;
    }
    Ok(report)
}

/// A point whose principal angles to `span(v)` have 2-norm `dist`
/// (`dist < π/2`), along a random normal direction.
pub fn point_at_distance(v: &OrthonormalBasis, dist: f64, seed: u64) -> Result<OrthonormalBasis> {
    let (n, p) = (v.n(), v.p());
    if p >= n {
        return Err(Error::arg("no normal directions when p = n"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = Array2::from_shape_fn((n, p), |_| StandardNormal.sample(&mut rng));
    let w = subspace::project_out(&v.view(), &g.view());
    let mut gram = w.t().dot(&w);
    dense::symmetrize(&mut gram);
    let sigma: Vec<f64> = subspace::sym_eig_small(&gram.view())?.values.iter().map(|s| s.max(0.0).sqrt()).collect();
    // angles of span(V + tW) are atan(t·σ_i)
    let dist_at = |t: f64| sigma.iter().map(|s| (t * s).atan().powi(2)).sum::<f64>().sqrt();
    let (mut lo, mut hi) = (0.0, 1.0);
    while dist_at(hi) < dist {
        hi *= 2.0;
        if hi > 1e12 {
            return Err(Error::arg(format!("distance {dist} is not reachable")));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if dist_at(mid) < dist {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut m = v.as_array().clone();
    m.scaled_add(0.5 * (lo + hi), &w);
    OrthonormalBasis::orthonormalize(&m.view())
}

/// Run steepest descent from `x0` and assert the per-step and cumulative
/// local rates. Gaps below `1e-12·max(1, |φ*|)` are at rounding level and
/// are not compared.
pub fn check_local_rate(
    op: &AffineOperator<'_>,
    spectrum: &SpectrumInfo,
    x0: &OrthonormalBasis,
    max_iters: usize,
) -> Result<CheckReport> {
    if !spectrum.has_gap() {
        return Err(Error::arg("local rate needs a positive gap"));
    }
    let mut cfg = SolverConfig::new(Method::Rsd, spectrum.p());
    cfg.tol = 1e-12;
    cfg.max_iters = max_iters;
    let mut factors = Vec::new();
    let mut failure = None;
    let ratio = spectrum.delta / spectrum.l;
    let out = solve_observed(op, x0, &cfg, &mut |view: &IterationView<'_>| {
        let x = OrthonormalBasis::from_unchecked(view.x.to_owned());
        match principal_angles(&x, &spectrum.v_alpha) {
            Ok(ang) => factors.push(1.0 - 1.6 * C_Q * a_factor(ang.largest()).powi(2) * ratio),
            Err(e) => failure = Some(e),
        }
    })?;
    if let Some(e) = failure {
        return Err(e);
    }
    let floor = 1e-12 * spectrum.phi_star.abs().max(1.0);
    let uniform = 1.0 - 0.4 * C_Q * ratio;
    let gaps: Vec<f64> = out.trace.records.iter().map(|r| r.phi - spectrum.phi_star).collect();
    let mut report = CheckReport::new("local-rate");
    for k in 1..gaps.len() {
        report.samples += 1;
        if gaps[k] > floor {
            let step = factors[k - 1] * gaps[k - 1] * (1.0 + 1e-8);
            report.assert_le(k, gaps[k], step, 0.0, "per-step rate");
            let cumulative = uniform.powi(k as i32) * gaps[0] * (1.0 + 1e-8);
            report.assert_le(k, gaps[k], cumulative, 0.0, "cumulative rate");
        }
    }
    Ok(report)
}

/// `min_{k<K} ‖G_k‖_F ≤ √(5L(φ₀ − φ*)/2) / √K`.
pub fn check_global_sublinear(trace: &SolverTrace, l: f64, phi_star: f64, k: usize) -> Result<CheckReport> {
    if k == 0 {
        return Err(Error::arg("K must be positive"));
    }
    let first = trace.records.first().ok_or_else(|| Error::InsufficientData("empty trace".into()))?;
    if trace.records.len() < k && !trace.converged {
        return Err(Error::InsufficientData(format!("trace has {} records, need {k}", trace.records.len())));
    }
    let min_grad = trace.records.iter().take(k).map(|r| r.grad_fro).fold(f64::INFINITY, f64::min);
    let bound = (2.5 * l * (first.phi - phi_star).max(0.0)).sqrt() / (k as f64).sqrt();
    let mut report = CheckReport::new("sublinear");
    report.samples = 1;
    report.assert_le(0, min_grad, bound, 1e-10, "min gradient bound");
    Ok(report)
}

/// Objective values of one conjugate-gradient step and of the locally
/// optimal step from the same state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DominanceSample {
    pub phi_rcg: f64,
    pub phi_lobcg: f64,
}

/// Build `X_k = R(X_{k−1} − μP_{k−1})`, take one Polak–Ribière step from
/// `(X_k, P_{k−1}, G_{k−1})` and compare with Rayleigh–Ritz on
/// `span[X_k, G_k, X_{k−1}]`.
pub fn lobcg_one_step_dominance(
    op: &AffineOperator<'_>,
    x_prev: &OrthonormalBasis,
    p_prev: &TangentBlock,
    mu: f64,
) -> Result<DominanceSample> {
    let p = x_prev.p();
    let g_prev = subspace::riemannian_gradient(op, x_prev, None)?.gradient;
    let x_k = retract(x_prev, p_prev, mu)?;
    let eval = subspace::riemannian_gradient(op, &x_k, None)?;
    let g = eval.gradient.as_array();

    let denom = dense::inner(&g_prev.view(), &g_prev.view());
    let mut dir = g.clone();
    let mut is_gradient = true;
    if denom > 0.0 && mu > 0.0 {
        let pr = (dense::inner(&g.view(), &g.view()) - dense::inner(&g_prev.view(), &g.view())) / denom;
        let mut cand = g.clone();
        cand.scaled_add(pr, p_prev.as_array());
        let cand = subspace::project_out(&x_k.view(), &cand.view());
        if dense::inner(&g.view(), &cand.view()) > 0.0 {
            dir = cand;
            is_gradient = false;
        }
    }
    let phi_rcg = if dense::frobenius(&dir.view()) == 0.0 {
        eval.phi()
    } else {
        let ap = op.apply(&dir.view())?;
        let mut ptp = dir.t().dot(&dir);
        dense::symmetrize(&mut ptp);
        let eig = subspace::sym_eig_small(&ptp.view())?;
        let beta = eig.values.to_vec();
        let mut pap = dir.t().dot(&ap);
        dense::symmetrize(&mut pap);
        let pax = dir.t().dot(&eval.ax);
        let coeffs = BranchCoefficients::from_projections(
            &eval.projected.view(),
            &pap.view(),
            &pax.view(),
            &beta,
            &eig.vectors.view(),
            is_gradient,
        )?;
        let mu_k = get_mu(&coeffs)?.mu;
        let x_next = subspace::step_and_normalize(&x_k.view(), &dir.view(), mu_k, &eig.vectors.view(), &beta);
        subspace::objective(op, &OrthonormalBasis::from_unchecked(x_next))?
    };

    let n = x_k.n();
    let mut span = Array2::zeros((n, 3 * p));
    span.slice_mut(s![.., 0..p]).assign(x_k.as_array());
    span.slice_mut(s![.., p..2 * p]).assign(g);
    span.slice_mut(s![.., 2 * p..]).assign(x_prev.as_array());
    let q = gram_orthonormalize(&gram_orthonormalize(&span.view())?.view())?;
    let aq = op.apply(&q.view())?;
    let mut proj = q.t().dot(&aq);
    dense::symmetrize(&mut proj);
    let ritz = subspace::sym_eig_small(&proj.view())?.values;
    let phi_lobcg = -0.5 * ritz.iter().take(p).sum::<f64>();
    Ok(DominanceSample { phi_rcg, phi_lobcg })
}

fn retract(x: &OrthonormalBasis, p: &TangentBlock, mu: f64) -> Result<OrthonormalBasis> {
    let mut ptp = p.view().t().dot(&p.view());
    dense::symmetrize(&mut ptp);
    let eig = subspace::sym_eig_small(&ptp.view())?;
    subspace::polar_retraction(x, p, mu, &eig.vectors.view(), eig.values.as_slice().expect("contiguous"))
}

/// Orthonormal basis of `span(S)` from the eigendecomposition of `SᵀS`,
/// dropping directions below `1e-12` of the largest.
fn gram_orthonormalize(s: &ArrayView2<'_, f64>) -> Result<Array2<f64>> {
    let mut gram = s.t().dot(s);
    dense::symmetrize(&mut gram);
    let eig = subspace::sym_eig_small(&gram.view())?;
    let top = eig.values[0];
    let keep: Vec<usize> = (0..eig.values.len()).filter(|&i| eig.values[i] > 1e-12 * top).collect();
    let mut coeff = Array2::zeros((s.ncols(), keep.len()));
    for (j, &i) in keep.iter().enumerate() {
        let mut col = coeff.column_mut(j);
        col.assign(&eig.vectors.column(i));
        col /= eig.values[i].sqrt();
    }
    Ok(s.dot(&coeff))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::SparseSymmetricMatrix;
    use crate::theory::oracle::dense_eig_oracle;
    use ndarray::array;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn diag321() -> SparseSymmetricMatrix {
        SparseSymmetricMatrix::diagonal(&[3.0, 2.0, 1.0]).unwrap()
    }

    fn plane13() -> OrthonormalBasis {
        OrthonormalBasis::new(array![[FRAC_1_SQRT_2], [0.0], [FRAC_1_SQRT_2]]).unwrap()
    }

    #[test]
    fn gradient_bound_is_tight_on_two_by_two() {
        let a = SparseSymmetricMatrix::diagonal(&[3.0, 1.0]).unwrap();
        let x = OrthonormalBasis::new(array![[FRAC_1_SQRT_2], [FRAC_1_SQRT_2]]).unwrap();
        let (lhs, rhs) = grad_norm_sides(&AffineOperator::identity(&a), &x, 2.0).unwrap();
        assert!((lhs - 1.0).abs() < 1e-12 && rhs == 1.0);
    }

    #[test]
    fn gradient_vanishes_at_eigenbasis() {
        let a = diag321();
        let x = OrthonormalBasis::new(array![[1.0], [0.0], [0.0]]).unwrap();
        assert_eq!(grad_norm_sides(&AffineOperator::identity(&a), &x, 2.0).unwrap().0, 0.0);
    }

    #[test]
    fn running_example_growth_values() {
        let a = diag321();
        let op = AffineOperator::identity(&a);
        let spec = dense_eig_oracle(&op, 1).unwrap();
        let x = plane13();
        let eval = subspace::riemannian_gradient(&op, &x, None).unwrap();
        let ang = principal_angles(&x, &spec.v_alpha).unwrap();
        assert!((eval.phi() - spec.phi_star - 0.5).abs() < 1e-15);
        assert!((C_Q * ang.dist.powi(2) - 0.125).abs() < 1e-15);
        assert!((a_factor(ang.largest()) - PI / 4.0).abs() < 1e-15);
        let dominance = 4.0 * C_Q * (PI / 4.0).powi(2) * 0.5;
        assert!((dominance - 0.25).abs() < 1e-15);
        assert!((eval.gradient.frobenius().powi(2) - 1.0).abs() < 1e-15);
        let mut report = CheckReport::new("growth");
        check_growth_at(&op, &spec, &x, 0, &mut report).unwrap();
        check_growth_at(&op, &spec, &spec.v_alpha, 1, &mut report).unwrap();
        assert!(report.passed());
    }

    #[test]
    fn running_example_decrease_and_sublinear() {
        let a = diag321();
        let op = AffineOperator::identity(&a);
        let out = crate::solvers::rsd(&op, &plane13(), &SolverConfig::new(Method::Rsd, 1)).unwrap();
        let report = check_sufficient_decrease(&out.trace, 2.0);
        assert!(report.passed());
        // drop 0.5 against the bound 0.2
        assert!((report.worst_slack - 0.3).abs() < 1e-12);
        let sub = check_global_sublinear(&out.trace, 2.0, -1.5, 1).unwrap();
        assert!(sub.passed());
        assert!((sub.worst_slack - (2.5f64.sqrt() - 1.0 + 1e-10)).abs() < 1e-12);
    }

    #[test]
    fn ball_radius_for_running_example() {
        let radius = (2.0 * C_Q * 1.0 / 2.0f64).sqrt();
        assert!((radius - 2f64.sqrt() / PI).abs() < 1e-15);
        assert!(radius < 0.5);
        let a = diag321();
        let op = AffineOperator::identity(&a);
        let spec = dense_eig_oracle(&op, 1).unwrap();
        let x0 = point_at_distance(&spec.v_alpha, 0.9 * radius, 1).unwrap();
        assert!((principal_angles(&x0, &spec.v_alpha).unwrap().dist - 0.9 * radius).abs() < 1e-12);
        assert!(check_local_rate(&op, &spec, &x0, 100).unwrap().passed());
        assert!(check_local_rate(&op, &spec, &spec.v_alpha, 10).unwrap().passed());
    }

    #[test]
    fn degenerate_momentum_and_optimum() {
        let a = SparseSymmetricMatrix::fd_laplacian_2d(5, 4).unwrap();
        let op = AffineOperator::identity(&a);
        let x = subspace::random_orthonormal(20, 2, 5).unwrap();
        let zero = TangentBlock::new(&x, Array2::zeros((20, 2))).unwrap();
        let s = lobcg_one_step_dominance(&op, &x, &zero, 0.0).unwrap();
        assert!(s.phi_lobcg <= s.phi_rcg + 1e-12);

        let spec = dense_eig_oracle(&op, 2).unwrap();
        let s = lobcg_one_step_dominance(&op, &spec.v_alpha, &zero, 0.0).unwrap();
        assert!((s.phi_lobcg - s.phi_rcg).abs() < 1e-12);
        assert!((s.phi_rcg - spec.phi_star).abs() < 1e-12);
    }

    #[test]
    fn report_bookkeeping() {
        let mut r = CheckReport::new("x");
        r.assert_le(0, 1.0, 2.0, 0.0, "ok");
        r.assert_le(1, 3.0, 2.0, 0.5, "bad");
        assert_eq!(r.violations.len(), 1);
        assert_eq!(r.worst_slack, -0.5);
        let json = serde_json::to_string(&r.summary()).unwrap();
        assert!(json.contains("\"violations\":1"));
        assert!(r.to_string().contains("FAIL"));
    }
}
