//! One test per acceptance criterion. Each prints a single `PASS`/`FAIL`
//! line; run with `--nocapture` (or `--test-threads=1` for ordered output).

use std::time::{Duration, Instant};

use grasseig::subspace::{objective, principal_angles, random_orthonormal, riemannian_gradient, OrthonormalBasis};
use grasseig::theory::{fd_spectrum, fit_rate, run_suite, CheckReport, SpectrumInfo, Suite};
use grasseig::{dense, solve, solve_observed, AffineOperator, FdGrid, IterationView, Method, SolverConfig, SparseSymmetricMatrix, Target};
use ndarray::array;

const SEED: u64 = 20240611;

fn verdict(n: u32, title: &str, ok: bool, detail: &str) {
    println!("criterion {n:>2} {} {title}: {detail}", if ok { "PASS" } else { "FAIL" });
    assert!(ok, "criterion {n} failed: {detail}");
}

fn suite_reports(suite: Suite) -> (Vec<CheckReport>, Duration) {
    let t = Instant::now();
    let reports = run_suite(suite, SEED).expect("suite runs");
    (reports, t.elapsed())
}

fn describe(reports: &[CheckReport], elapsed: Duration) -> (bool, String) {
    let ok = reports.iter().all(|r| r.passed());
    let parts: Vec<String> = reports
        .iter()
        .map(|r| format!("{} {}/{} violations, worst slack {:.2e}", r.name, r.violations.len(), r.samples, r.worst_slack))
        .collect();
    for r in reports.iter().filter(|r| !r.passed()) {
        eprint!("{r}");
    }
    (ok, format!("{} ({:.1}s)", parts.join("; "), elapsed.as_secs_f64()))
}

fn fd2d() -> (FdGrid, SparseSymmetricMatrix, SpectrumInfo) {
    let grid = FdGrid::new(vec![35, 40]).unwrap();
    let a = grid.matrix().unwrap();
    let spectrum = fd_spectrum(&grid, 6, 1.0, 0.0).unwrap();
    (grid, a, spectrum)
}

#[test]
fn c01_hand_example() {
    let a = SparseSymmetricMatrix::diagonal(&[3.0, 2.0, 1.0]).unwrap();
    let op = AffineOperator::identity(&a);
    let s = 0.5f64.sqrt();
    let x0 = OrthonormalBasis::new(array![[s], [0.0], [s]]).unwrap();
    let mut cfg = SolverConfig::new(Method::Rsd, 1);
    cfg.max_iters = 1;
    solve(&op, &x0, &cfg).unwrap();

    let t = Instant::now();
    let out = solve(&op, &x0, &cfg).unwrap();
    let elapsed = t.elapsed();
    let r = out.trace.final_record().unwrap();
    let x1 = out.x.as_array();
    let err_x = (x1[[0, 0]].abs() - 1.0).abs().max(x1[[1, 0]].abs()).max(x1[[2, 0]].abs());
    let err_mu = (r.mu - 1.0).abs();
    let err_phi = (r.phi + 1.5).abs();
    let ok = err_x <= 1e-12 && err_mu <= 1e-12 && err_phi <= 1e-12 && elapsed < Duration::from_millis(1);
    verdict(
        1,
        "hand example",
        ok,
        &format!("|μ−1| {err_mu:.1e}, X₁ vs e₁ {err_x:.1e}, |φ+1.5| {err_phi:.1e}, {} µs", elapsed.as_micros()),
    );
}

#[test]
fn c02_linesearch_oracle() {
    let (reports, elapsed) = suite_reports(Suite::LinesearchOracle);
    let (ok, detail) = describe(&reports, elapsed);
    verdict(2, "line-search oracle", ok && elapsed < Duration::from_secs(30), &detail);
}

#[test]
fn c03_sufficient_decrease() {
    let (reports, elapsed) = suite_reports(Suite::Decrease);
    let (ok, detail) = describe(&reports[..1], elapsed);
    verdict(3, "sufficient decrease", ok && reports[0].samples == 50, &detail);
}

#[test]
fn c04_gradient_bound() {
    let (reports, elapsed) = suite_reports(Suite::GradBound);
    let (ok, detail) = describe(&reports, elapsed);

    let a = SparseSymmetricMatrix::diagonal(&[3.0, 1.0]).unwrap();
    let s = 0.5f64.sqrt();
    let x = OrthonormalBasis::new(array![[s], [s]]).unwrap();
    let g = riemannian_gradient(&AffineOperator::identity(&a), &x, None).unwrap();
    let witness = (grasseig::theory::spectral_norm(&g.gradient.view()).unwrap() - 1.0).abs();
    verdict(
        4,
        "gradient bound",
        ok && reports[0].samples == 1000 && witness <= 1e-12,
        &format!("{detail}; diag(3,1) witness |‖G‖₂ − L/2| {witness:.1e}"),
    );
}

#[test]
fn c05_growth_and_dominance() {
    let (reports, elapsed) = suite_reports(Suite::Growth);
    let (ok, detail) = describe(&reports, elapsed);
    verdict(5, "growth, dominance, smoothness", ok && reports[0].samples == 500, &detail);
}

#[test]
fn c06_local_rate() {
    let (reports, elapsed) = suite_reports(Suite::LocalRate);
    let (ok, detail) = describe(&reports[..1], elapsed);
    verdict(6, "local rate", ok && reports[0].samples == 20, &detail);
}

#[test]
fn c07_global_sublinear() {
    let (reports, elapsed) = suite_reports(Suite::Sublinear);
    let (ok, detail) = describe(&reports[..1], elapsed);
    verdict(7, "global sublinear bound", ok && reports[0].samples == 50, &detail);
}

#[test]
fn c08_fd2d_rates() {
    let t = Instant::now();
    let (_, a, spec) = fd2d();
    let op = AffineOperator::identity(&a);
    let x0 = random_orthonormal(a.n(), 6, SEED).unwrap();

    let mut cfg = SolverConfig::new(Method::Rsd, 6);
    cfg.max_iters = 20_000;
    let rsd = solve(&op, &x0, &cfg).unwrap();
    cfg.method = Method::Rcg;
    let rcg = solve(&op, &x0, &cfg).unwrap();
    let fit_sd = fit_rate(&rsd.trace, spec.phi_star).unwrap().gamma;
    let fit_cg = fit_rate(&rcg.trace, spec.phi_star).unwrap().gamma;
    let (g_sd, g_cg) = (spec.gamma_sd().unwrap(), spec.gamma_cg().unwrap());
    let dev_sd = (fit_sd - g_sd).abs() / g_sd;
    let dev_cg = (fit_cg - g_cg).abs() / g_cg;

    cfg.method = Method::Si;
    cfg.max_iters = 100_000;
    let si = solve(&op, &x0, &cfg).unwrap();
    cfg.method = Method::SiCheb;
    cfg.cheb_degree = 30;
    cfg.cheb_bounds = spec.unwanted_interval();
    let cheb = solve(&op, &x0, &cfg).unwrap();
    let elapsed = t.elapsed();

    let all_converged = rsd.converged() && rcg.converged() && si.converged() && cheb.converged();
    let ok = all_converged
        && dev_sd <= 0.10
        && dev_cg <= 0.20
        && cheb.trace.matvecs() < si.trace.matvecs()
        && elapsed < Duration::from_secs(120);
    verdict(
        8,
        "FD2D 35×40 rates",
        ok,
        &format!(
            "κ {:.2}; RSD γ̂ {fit_sd:.5} vs {g_sd:.5} ({:.1}%); RCG γ̂ {fit_cg:.5} vs {g_cg:.5} ({:.1}%); matvecs SI {} vs Cheb-SI {} ({:.1}s)",
            spec.kappa.unwrap(),
            100.0 * dev_sd,
            100.0 * dev_cg,
            si.trace.matvecs(),
            cheb.trace.matvecs(),
            elapsed.as_secs_f64()
        ),
    );
}

#[test]
fn c09_lobcg_dominance() {
    let (reports, elapsed) = suite_reports(Suite::LobcgDominance);
    let (ok, detail) = describe(&reports, elapsed);
    verdict(9, "LOBCG dominance", ok && reports[0].samples == 100, &detail);
}

#[test]
fn c10_matvec_recursion() {
    let (_, a, _) = fd2d();
    let op = AffineOperator::identity(&a);
    let x0 = random_orthonormal(a.n(), 6, SEED).unwrap();
    let mut worst = 0.0f64;
    let mut checkpoints = 0;
    let mut converged = true;
    for method in [Method::Rsd, Method::Rcg] {
        let mut cfg = SolverConfig::new(method, 6);
        cfg.max_iters = 20_000;
        let out = solve_observed(&op, &x0, &cfg, &mut |v: &IterationView<'_>| {
            if v.record.iter % 100 == 0 {
                let explicit = op.apply(&v.x).unwrap();
                let dev = dense::frobenius(&(&explicit - &v.ax).view()) / dense::frobenius(&explicit.view());
                worst = worst.max(dev);
                checkpoints += 1;
            }
        })
        .unwrap();
        converged &= out.converged();
    }
    verdict(
        10,
        "matvec recursion fidelity",
        converged && worst <= 1e-10,
        &format!("{checkpoints} checkpoints, worst relative deviation {worst:.2e}"),
    );
}

#[test]
fn c11_orthonormality() {
    let (reports, elapsed) = suite_reports(Suite::All);
    let suites = reports.iter().find(|r| r.name == "orthonormality").unwrap().clone();

    let (_, a, _) = fd2d();
    let op = AffineOperator::identity(&a);
    let x0 = random_orthonormal(a.n(), 6, SEED).unwrap();
    let mut fd = CheckReport::new("orthonormality-fd2d");
    for method in [Method::Rsd, Method::Rcg] {
        let mut cfg = SolverConfig::new(method, 6);
        cfg.max_iters = 20_000;
        solve_observed(&op, &x0, &cfg, &mut |v: &IterationView<'_>| {
            fd.samples += 1;
            fd.assert_le(v.record.iter, dense::orthonormality_error(&v.x), 6e-12, 0.0, "‖XᵀX − I‖_F");
        })
        .unwrap();
    }
    let (ok, detail) = describe(&[suites, fd], elapsed);
    verdict(11, "orthonormality", ok, &detail);
}

#[test]
fn c12_shift_and_target_invariance() {
    let grid = FdGrid::new(vec![12, 11]).unwrap();
    let a = grid.matrix().unwrap();
    let n = a.n();
    let x0 = random_orthonormal(n, 4, SEED).unwrap();
    let base = AffineOperator::identity(&a);
    let shifted = base.then(1.0, 5.0);
    let negated = AffineOperator::negated(&a);

    let path = |op: &AffineOperator<'_>, method: Method, target: Target| {
        let mut cfg = SolverConfig::new(method, 4);
        cfg.max_iters = 50;
        cfg.tol = 1e-300;
        cfg.target = target;
        let mut xs = Vec::new();
        solve_observed(op, &x0, &cfg, &mut |v: &IterationView<'_>| xs.push(OrthonormalBasis::new(v.x.to_owned()).unwrap()))
            .unwrap();
        xs
    };
    let worst_distance = |u: &[OrthonormalBasis], v: &[OrthonormalBasis]| {
        assert_eq!(u.len(), v.len());
        u.iter().zip(v).map(|(x, y)| principal_angles(x, y).unwrap().dist).fold(0.0, f64::max)
    };

    let mut worst_shift = 0.0f64;
    let mut worst_target = 0.0f64;
    let mut steps = 0;
    for method in [Method::Rsd, Method::Rcg] {
        let plain = path(&base, method, Target::Max);
        steps = steps.max(plain.len());
        worst_shift = worst_shift.max(worst_distance(&plain, &path(&shifted, method, Target::Max)));
        worst_target = worst_target.max(worst_distance(&path(&base, method, Target::Min), &path(&negated, method, Target::Max)));
    }
    // The minimizing runs must also reach the bottom of the spectrum.
    let mut cfg = SolverConfig::new(Method::Rcg, 4);
    cfg.target = Target::Min;
    let low = solve(&base, &x0, &cfg).unwrap();
    let low_spec = fd_spectrum(&grid, 4, -1.0, 0.0).unwrap();
    let low_gap = (objective(&negated, &low.x).unwrap() - low_spec.phi_star).abs();

    verdict(
        12,
        "shift and target invariance",
        worst_shift <= 1e-6 && worst_target <= 1e-6 && steps == 51 && low_gap <= 1e-8,
        &format!("A vs A+5I {worst_shift:.1e}, min(A) vs max(−A) {worst_target:.1e} over {} iterates; min target gap {low_gap:.1e}", steps),
    );
}

#[test]
#[ignore = "large: FD3D with n = 35000, p = 32"]
fn c13_fd3d_iteration_counts() {
    let t = Instant::now();
    let grid = FdGrid::new(vec![35, 40, 25]).unwrap();
    let a = grid.matrix().unwrap();
    let op = AffineOperator::identity(&a);
    let x0 = random_orthonormal(a.n(), 32, SEED).unwrap();
    let mut cfg = SolverConfig::new(Method::Rcg, 32);
    cfg.max_iters = 5000;
    let rcg = solve(&op, &x0, &cfg).unwrap();
    cfg.method = Method::Lobcg;
    let lobcg = solve(&op, &x0, &cfg).unwrap();
    let (k_cg, k_lo) = (rcg.trace.iterations(), lobcg.trace.iterations());
    let within = |k: usize, reference: f64| (k as f64 - reference).abs() <= 0.25 * reference;
    let ok = rcg.converged() && lobcg.converged() && within(k_cg, 1051.0) && within(k_lo, 552.0);
    verdict(
        13,
        "FD3D 35×40×25 iteration counts",
        ok,
        &format!("RCG {k_cg} (reference 1051), LOBCG {k_lo} (reference 552), {:.0}s", t.elapsed().as_secs_f64()),
    );
}
