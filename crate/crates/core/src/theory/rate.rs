use crate::error::{Error, Result};
use crate::solvers::SolverTrace;

/// Relative-error band used for the fit.
pub const FIT_WINDOW: (f64, f64) = (1e-10, 1e-2);
/// Minimum number of points in the band.
pub const MIN_FIT_POINTS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateFit {
    /// Contraction of `φ − φ*` per `p` matvecs.
    pub gamma: f64,
    /// First and last iteration index inside the band.
    pub window: (usize, usize),
    pub points: usize,
    pub r_squared: f64,
}

/// Least-squares slope of `log₁₀((φ_k − φ*)/|φ*|)` against `matvecs/p`,
/// over the iterations whose relative error lies in [`FIT_WINDOW`].
pub fn fit_rate(trace: &SolverTrace, phi_star: f64) -> Result<RateFit> {
    let scale = phi_star.abs().max(f64::MIN_POSITIVE);
    let rel: Vec<f64> = trace.records.iter().map(|r| (r.phi - phi_star) / scale).collect();
    if !rel.iter().any(|&e| e <= 1e-6) {
        return Err(Error::InsufficientData("trace never reaches relative error 1e-6".into()));
    }
    let p = trace.p.max(1) as f64;
    let pts: Vec<(usize, f64, f64)> = trace
        .records
        .iter()
        .zip(&rel)
        .filter(|(_, &e)| e >= FIT_WINDOW.0 && e <= FIT_WINDOW.1)
        .map(|(r, &e)| (r.iter, r.matvecs as f64 / p, e.log10()))
        .collect();
    fit_points(&pts)
}

/// Fit on `(iteration, abscissa, log₁₀ error)` triples.
pub fn fit_points(pts: &[(usize, f64, f64)]) -> Result<RateFit> {
    if pts.len() < MIN_FIT_POINTS {
        return Err(Error::InsufficientData(format!("{} points in the fit window, need {MIN_FIT_POINTS}", pts.len())));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|t| t.1).sum::<f64>() / n;
    let my = pts.iter().map(|t| t.2).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|t| (t.1 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|t| (t.1 - mx) * (t.2 - my)).sum();
    let syy: f64 = pts.iter().map(|t| (t.2 - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientData("all fit points share one abscissa".into()));
    }
    let slope = sxy / sxx;
    let r_squared = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    Ok(RateFit {
        gamma: 10f64.powf(slope),
        window: (pts[0].0, pts[pts.len() - 1].0),
        points: pts.len(),
        r_squared,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solvers::{IterationRecord, Method};

    fn synthetic(factor: f64, len: usize, p: usize) -> SolverTrace {
        let phi_star = -2.0;
        let records = (0..len)
            .map(|k| IterationRecord {
                iter: k,
                matvecs: (p * (k + 1)) as u64,
                phi: phi_star + 2.0 * factor.powi(k as i32),
                grad_fro: 0.0,
                grad_inf_rel: 0.0,
                mu: f64::NAN,
                restart: false,
                wall_secs: 0.0,
            })
            .collect();
        SolverTrace { method: Method::Rsd, p, records, converged: true }
    }

    #[test]
    fn geometric_sequence() {
        let fit = fit_rate(&synthetic(0.9, 300, 3), -2.0).unwrap();
        assert!((fit.gamma - 0.9).abs() < 1e-6);
        assert!(fit.r_squared > 0.999_999);
    }

    #[test]
    fn short_window_is_rejected() {
        assert!(matches!(fit_rate(&synthetic(0.3, 100, 1), -2.0), Err(Error::InsufficientData(_))));
        assert!(matches!(fit_rate(&synthetic(0.999, 50, 1), -2.0), Err(Error::InsufficientData(_))));
    }
}
