//! Randomized validation suites. Samples are independent, run in parallel
//! and merged in sample order, so reports are identical across thread counts.

use std::fmt;
use std::str::FromStr;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use super::checks::{self, CheckReport, C_Q};
use super::oracle::{dense_eig_oracle, random_spd, SpectrumInfo};
use crate::dense;
use crate::error::{Error, Result};
use crate::linesearch::{bracket, dphi_of_mu, get_mu, phi_of_mu, BranchCoefficients};
use crate::operators::{AffineOperator, SparseSymmetricMatrix};
use crate::solvers::{solve_observed, IterationView, Method, SolverConfig};
use crate::subspace::{self, OrthonormalBasis, TangentBlock};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    GradBound,
    Decrease,
    Growth,
    LocalRate,
    Sublinear,
    LobcgDominance,
    LinesearchOracle,
    All,
}

impl Suite {
    pub const EACH: [Suite; 7] = [
        Suite::GradBound,
        Suite::Decrease,
        Suite::Growth,
        Suite::LocalRate,
        Suite::Sublinear,
        Suite::LobcgDominance,
        Suite::LinesearchOracle,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::GradBound => "grad-bound",
            Suite::Decrease => "decrease",
            Suite::Growth => "growth",
            Suite::LocalRate => "local-rate",
            Suite::Sublinear => "sublinear",
            Suite::LobcgDominance => "lobcg-dominance",
            Suite::LinesearchOracle => "linesearch-oracle",
            Suite::All => "all",
        }
    }

    /// Number of random samples the suite draws.
    pub fn samples(self) -> usize {
        match self {
            Suite::GradBound => 1000,
            Suite::Decrease => 50,
            Suite::Growth => 500,
            Suite::LocalRate => 20,
            Suite::Sublinear => 50,
            Suite::LobcgDominance => 100,
            Suite::LinesearchOracle => 200,
            Suite::All => Suite::EACH.iter().map(|s| s.samples()).sum(),
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::EACH
            .into_iter()
            .chain([Suite::All])
            .find(|suite| suite.name() == s)
            .ok_or_else(|| Error::arg(format!("unknown suite {s:?}")))
    }
}

/// Run one suite (or all of them). `All` returns one report per check plus
/// the orthonormality report collected from every solver run.
pub fn run_suite(suite: Suite, seed: u64) -> Result<Vec<CheckReport>> {
    let mut reports = match suite {
        Suite::GradBound => vec![grad_bound(seed)?],
        Suite::Decrease => decrease(seed)?,
        Suite::Growth => vec![growth(seed)?],
        Suite::LocalRate => local_rate(seed)?,
        Suite::Sublinear => sublinear(seed)?,
        Suite::LobcgDominance => vec![lobcg_dominance(seed)?],
        Suite::LinesearchOracle => vec![linesearch_oracle(seed)?],
        Suite::All => {
            let mut all = Vec::new();
            let mut ortho = CheckReport::new("orthonormality");
            for s in Suite::EACH {
                for r in run_suite(s, seed)? {
                    if r.name == ortho.name {
                        ortho.merge(r);
                    } else {
                        all.push(r);
                    }
                }
            }
            all.push(ortho);
            all
        }
    };
    for r in &mut reports {
        r.violations.sort_by_key(|v| v.sample);
    }
    Ok(reports)
}

fn sample_rng(seed: u64, suite: Suite, i: usize) -> ChaCha8Rng {
    let tag = Suite::EACH.iter().position(|&s| s == suite).unwrap_or(7) as u64;
    ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ (tag << 56) ^ i as u64)
}

/// Random SPD test matrix with eigenvalues in `[0.1, 10]` and, when
/// `min_gap > 0`, a gap of at least `min_gap` after the `p`-th eigenvalue.
pub struct Problem {
    pub matrix: SparseSymmetricMatrix,
    pub p: usize,
    pub spectrum: SpectrumInfo,
}

fn random_problem(rng: &mut ChaCha8Rng, n_max: usize, p_max: usize, min_gap: f64) -> Result<Problem> {
    let p = rng.random_range(1..=p_max);
    let n = rng.random_range(p + 2..=n_max);
    let mut lam: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..10.0)).collect();
    lam.sort_by(|a, b| b.total_cmp(a));
    if min_gap > 0.0 {
        let lift = (min_gap - (lam[p - 1] - lam[p])).max(0.0);
        for v in lam.iter_mut().take(p) {
            *v += lift;
        }
    }
    let matrix = random_spd(&lam, rng.random())?;
    let spectrum = dense_eig_oracle(&AffineOperator::identity(&matrix), p)?;
    Ok(Problem { matrix, p, spectrum })
}

fn merge_all(name: &str, parts: Vec<Result<CheckReport>>) -> Result<CheckReport> {
    let mut report = CheckReport::new(name);
    for part in parts {
        report.merge(part?);
    }
    Ok(report)
}

fn merge_pairs(names: [&str; 2], parts: Vec<Result<(CheckReport, CheckReport)>>) -> Result<Vec<CheckReport>> {
    let mut a = CheckReport::new(names[0]);
    let mut b = CheckReport::new(names[1]);
    for part in parts {
        let (x, y) = part?;
        a.merge(x);
        b.merge(y);
    }
    Ok(vec![a, b])
}

/// Steepest descent with an orthonormality check after every retraction.
fn rsd_run(op: &AffineOperator<'_>, x0: &OrthonormalBasis, tol: f64, max_iters: usize) -> Result<(crate::solvers::SolveResult, CheckReport)> {
    let mut cfg = SolverConfig::new(Method::Rsd, x0.p());
    cfg.tol = tol;
    cfg.max_iters = max_iters;
    let mut ortho = CheckReport::new("orthonormality");
    let p = x0.p() as f64;
    let out = solve_observed(op, x0, &cfg, &mut |v: &IterationView<'_>| {
        ortho.samples += 1;
        ortho.assert_le(v.record.iter, dense::orthonormality_error(&v.x), 1e-12 * p, 0.0, "‖XᵀX − I‖_F");
    })?;
    Ok((out, ortho))
}

fn grad_bound(seed: u64) -> Result<CheckReport> {
    let parts = (0..Suite::GradBound.samples())
        .into_par_iter()
        .map(|i| {
            let mut rng = sample_rng(seed, Suite::GradBound, i);
            let prob = random_problem(&mut rng, 30, 5, 0.0)?;
            let op = AffineOperator::identity(&prob.matrix);
            let x = subspace::random_orthonormal(op.n(), prob.p, rng.random())?;
            let (lhs, rhs) = checks::grad_norm_sides(&op, &x, prob.spectrum.l)?;
            let mut r = CheckReport::new("grad-bound");
            r.samples = 1;
            r.assert_le(i, lhs, rhs, 1e-10 * prob.spectrum.l, "‖G‖₂ ≤ L/2");
            Ok(r)
        })
        .collect();
    merge_all("grad-bound", parts)
}

fn decrease(seed: u64) -> Result<Vec<CheckReport>> {
    let parts = (0..Suite::Decrease.samples())
        .into_par_iter()
        .map(|i| {
            let mut rng = sample_rng(seed, Suite::Decrease, i);
            let prob = random_problem(&mut rng, 50, 5, 0.0)?;
            let op = AffineOperator::identity(&prob.matrix);
            let x0 = subspace::random_orthonormal(op.n(), prob.p, rng.random())?;
            let (out, ortho) = rsd_run(&op, &x0, 1e-10, 300)?;
            let mut r = checks::check_sufficient_decrease(&out.trace, prob.spectrum.l);
            relabel(&mut r, i);
            Ok((r, ortho))
        })
        .collect();
    merge_pairs(["decrease", "orthonormality"], parts)
}

/// Collapse a per-run report to one sample tagged with the run index.
fn relabel(r: &mut CheckReport, run: usize) {
    for v in &mut r.violations {
        v.detail = format!("iteration {}: {}", v.sample, v.detail);
        v.sample = run;
    }
    r.samples = 1;
}

fn growth(seed: u64) -> Result<CheckReport> {
    let parts = (0..Suite::Growth.samples())
        .into_par_iter()
        .map(|i| {
            let mut rng = sample_rng(seed, Suite::Growth, i);
            let prob = random_problem(&mut rng, 30, 5, 0.05)?;
            let op = AffineOperator::identity(&prob.matrix);
            let mut r = checks::check_growth_and_dominance(&op, &prob.spectrum, 1, rng.random())?;
            for v in &mut r.violations {
                v.sample = i;
            }
            Ok(r)
        })
        .collect();
    merge_all("growth", parts)
}

fn local_rate(seed: u64) -> Result<Vec<CheckReport>> {
    let parts = (0..Suite::LocalRate.samples())
        .into_par_iter()
        .map(|i| {
            let mut rng = sample_rng(seed, Suite::LocalRate, i);
            let prob = random_problem(&mut rng, 40, 4, 0.5)?;
            let op = AffineOperator::identity(&prob.matrix);
            let s = &prob.spectrum;
            let radius = (2.0 * C_Q * s.delta / s.l).sqrt();
            let x0 = checks::point_at_distance(&s.v_alpha, 0.9 * radius, rng.random())?;
            let mut r = checks::check_local_rate(&op, s, &x0, 500)?;
            relabel(&mut r, i);
            let (_, ortho) = rsd_run(&op, &x0, 1e-12, 500)?;
            Ok((r, ortho))
        })
        .collect();
    merge_pairs(["local-rate", "orthonormality"], parts)
}

fn sublinear(seed: u64) -> Result<Vec<CheckReport>> {
    const K: usize = 100;
    let parts = (0..Suite::Sublinear.samples())
        .into_par_iter()
        .map(|i| {
            let mut rng = sample_rng(seed, Suite::Sublinear, i);
            let prob = random_problem(&mut rng, 50, 5, 0.0)?;
            let op = AffineOperator::identity(&prob.matrix);
            let x0 = subspace::random_orthonormal(op.n(), prob.p, rng.random())?;
            let (out, ortho) = rsd_run(&op, &x0, 1e-14, K)?;
            let mut r = checks::check_global_sublinear(&out.trace, prob.spectrum.l, prob.spectrum.phi_star, K)?;
            relabel(&mut r, i);
            Ok((r, ortho))
        })
        .collect();
    merge_pairs(["sublinear", "orthonormality"], parts)
}

fn random_tangent(x: &OrthonormalBasis, rng: &mut ChaCha8Rng) -> Result<TangentBlock> {
    let g = Array2::from_shape_fn((x.n(), x.p()), |_| StandardNormal.sample(rng));
    let t = subspace::tangent_project(x, &g.view())?;
    let norm = t.frobenius();
    TangentBlock::new(x, t.into_array() / norm)
}

fn lobcg_dominance(seed: u64) -> Result<CheckReport> {
    let parts = (0..Suite::LobcgDominance.samples())
        .into_par_iter()
        .map(|i| {
            let mut rng = sample_rng(seed, Suite::LobcgDominance, i);
            let prob = random_problem(&mut rng, 40, 4, 0.0)?;
            let op = AffineOperator::identity(&prob.matrix);
            let x_prev = subspace::random_orthonormal(op.n(), prob.p, rng.random())?;
            let dir = random_tangent(&x_prev, &mut rng)?;
            let mu = if i % 10 == 0 { 0.0 } else { rng.random_range(0.1..1.0) };
            let s = checks::lobcg_one_step_dominance(&op, &x_prev, &dir, mu)?;
            let mut r = CheckReport::new("lobcg-dominance");
            r.samples = 1;
            r.assert_le(i, s.phi_lobcg, s.phi_rcg, 1e-12 * prob.spectrum.phi_star.abs(), "φ(LOBCG) ≤ φ(RCG)");
            Ok(r)
        })
        .collect();
    merge_all("lobcg-dominance", parts)
}

fn linesearch_oracle(seed: u64) -> Result<CheckReport> {
    let parts = (0..Suite::LinesearchOracle.samples())
        .into_par_iter()
        .map(|i| {
            let mut rng = sample_rng(seed, Suite::LinesearchOracle, i);
            let prob = random_problem(&mut rng, 50, 5, 0.0)?;
            let op = AffineOperator::identity(&prob.matrix);
            let x = subspace::random_orthonormal(op.n(), prob.p, rng.random())?;
            let eval = subspace::riemannian_gradient(&op, &x, None)?;
            let g = eval.gradient.as_array();
            let gradient_case = i % 2 == 0;
            let dir = if gradient_case {
                g.clone()
            } else {
                loop {
                    let r = random_tangent(&x, &mut rng)?;
                    let b = rng.random_range(0.0..2.0) * eval.gradient.frobenius();
                    let mut d = g.clone();
                    d.scaled_add(b, r.as_array());
                    if dense::inner(&g.view(), &d.view()) > 0.0 {
                        break d;
                    }
                }
            };
            let ap = op.apply(&dir.view())?;
            let mut ptp = dir.t().dot(&dir);
            dense::symmetrize(&mut ptp);
            let eig = subspace::sym_eig_small(&ptp.view())?;
            let beta = eig.values.to_vec();
            let mut pap = dir.t().dot(&ap);
            dense::symmetrize(&mut pap);
            let pax = dir.t().dot(&eval.ax);
            let c = BranchCoefficients::from_projections(
                &eval.projected.view(),
                &pap.view(),
                &pax.view(),
                &beta,
                &eig.vectors.view(),
                gradient_case,
            )?;
            let mu = get_mu(&c)?.mu;
            let hi = bracket(&c)?.hi;
            let grid_min = (0..=10_000).map(|k| phi_of_mu(&c, 2.0 * hi * k as f64 / 1e4)).fold(f64::INFINITY, f64::min);
            let phi = phi_of_mu(&c, mu);
            let direct = {
                let xm = subspace::step_and_normalize(&x.view(), &dir.view(), mu, &eig.vectors.view(), &beta);
                subspace::objective(&op, &OrthonormalBasis::from_unchecked(xm))?
            };
            let mut r = CheckReport::new("linesearch-oracle");
            r.samples = 1;
            r.assert_le(i, phi, grid_min, 1e-10, "φ(μ) ≤ grid minimum");
            let beta_sum: f64 = c.beta.iter().sum();
            r.assert_le(i, dphi_of_mu(&c, mu).abs(), 0.0, 1e-12 * (1.0 + beta_sum), "|φ′(μ)|");
            r.assert_le(i, (phi - direct).abs(), 0.0, 1e-12 * (1.0 + phi.abs()), "rational form vs retraction");
            Ok(r)
        })
        .collect();
    merge_all("linesearch-oracle", parts)
}
