//! Safeguarded scalar root finding (Dekker–Brent) and a golden-section
//! minimizer used as the line-search fallback.

use crate::error::{Error, Result};

/// Hard cap on function evaluations for one root solve.
pub const MAX_EVALUATIONS: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootResult {
    pub root: f64,
    pub value: f64,
    pub evaluations: usize,
    /// `false` when the evaluation cap was hit before the tolerance.
    pub converged: bool,
}

/// Root of `f` on `[lo, hi]` to a sign-change width of `tol`.
pub fn brent_root<F: FnMut(f64) -> f64>(f: F, lo: f64, hi: f64, tol: f64) -> Result<RootResult> {
    brent_root_until(f, lo, hi, tol, 0.0)
}

/// As [`brent_root`], additionally stopping once `|f| ≤ ftol`.
pub fn brent_root_until<F: FnMut(f64) -> f64>(
    mut f: F,
    lo: f64,
    hi: f64,
    xtol: f64,
    ftol: f64,
) -> Result<RootResult> {
    if !(lo < hi) {
        return Err(Error::arg(format!("root bracket [{lo}, {hi}] is empty")));
    }
    let (mut a, mut b) = (lo, hi);
    let (mut fa, mut fb) = (f(a), f(b));
    let mut evaluations = 2;
    if fa * fb > 0.0 || fa.is_nan() || fb.is_nan() {
        return Err(Error::arg(format!("no sign change on [{lo}, {hi}]: f = {fa:e}, {fb:e}")));
    }
    if fa == 0.0 {
        return Ok(RootResult { root: a, value: fa, evaluations, converged: true });
    }
    let (mut c, mut fc) = (b, fb);
    let (mut d, mut e) = (b - a, b - a);

    loop {
        if (fb > 0.0 && fc > 0.0) || (fb < 0.0 && fc < 0.0) {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.5 * xtol;
        let xm = 0.5 * (c - b);
        if xm.abs() <= tol1 || fb == 0.0 || fb.abs() <= ftol {
            return Ok(RootResult { root: b, value: fb, evaluations, converged: true });
        }
        if evaluations >= MAX_EVALUATIONS {
            return Ok(RootResult { root: b, value: fb, evaluations, converged: false });
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * xm * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            let min1 = 3.0 * xm * q - (tol1 * q).abs();
            let min2 = (e * q).abs();
            if 2.0 * p < min1.min(min2) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol1 { d } else { tol1.copysign(xm) };
        fb = f(b);
        evaluations += 1;
    }
}

/// Golden-section minimization of a unimodal `f` on `[lo, hi]`.
pub fn golden_section_min<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, tol: f64) -> (f64, usize) {
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (lo, hi);
    let mut x1 = b - ratio * (b - a);
    let mut x2 = a + ratio * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    let mut evaluations = 2;
    while (b - a) > tol && evaluations < 200 {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - ratio * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + ratio * (b - a);
            f2 = f(x2);
        }
        evaluations += 1;
    }
    (if f1 <= f2 { x1 } else { x2 }, evaluations)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sqrt_two() {
        let r = brent_root(|x| x * x - 2.0, 1.0, 2.0, 1e-14).unwrap();
        assert!((r.root - 2f64.sqrt()).abs() < 1e-14);
        assert!(r.evaluations <= MAX_EVALUATIONS);
    }

    #[test]
    fn linear_root_at_zero() {
        let r = brent_root(|x| x, -1.0, 1.0, 1e-15).unwrap();
        assert!(r.root.abs() < 1e-15);
    }

    #[test]
    fn no_sign_change_is_an_error() {
        assert!(brent_root(|x| x * x + 1.0, -1.0, 1.0, 1e-12).is_err());
        assert!(brent_root(|x| x, 1.0, 1.0, 1e-12).is_err());
    }

    #[test]
    fn golden_finds_parabola_vertex() {
        let (x, _) = golden_section_min(|x| (x - 0.3) * (x - 0.3), 0.0, 1.0, 1e-10);
        assert!((x - 0.3).abs() < 1e-9);
    }
}
