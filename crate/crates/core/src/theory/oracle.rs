use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::{Array1, Array2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::dense;
use crate::error::{Error, Result};
use crate::operators::{AffineOperator, FdGrid, SparseSymmetricMatrix};
use crate::subspace::OrthonormalBasis;

/// Above this size the dense oracle still runs but flags a note.
pub const ORACLE_WARN_N: usize = 5_000;
/// Above this size the dense oracle refuses.
pub const ORACLE_MAX_N: usize = 40_000;

/// Spectral facts about the operator being maximized.
#[derive(Debug, Clone)]
pub struct SpectrumInfo {
    /// All eigenvalues, descending.
    pub eigenvalues: Array1<f64>,
    /// Eigenvectors of the `p` largest eigenvalues.
    pub v_alpha: OrthonormalBasis,
    /// `λ_p − λ_{p+1}`.
    pub delta: f64,
    /// `λ_1 − λ_n`.
    pub l: f64,
    /// `L/δ`, absent without a gap.
    pub kappa: Option<f64>,
    /// `−½ Σ_{i ≤ p} λ_i`.
    pub phi_star: f64,
    pub note: Option<String>,
}

impl SpectrumInfo {
    fn from_parts(eigenvalues: Array1<f64>, v_alpha: OrthonormalBasis, note: Option<String>) -> Self {
        let p = v_alpha.p();
        let n = eigenvalues.len();
        let delta = if p < n { (eigenvalues[p - 1] - eigenvalues[p]).max(0.0) } else { 0.0 };
        let l = eigenvalues[0] - eigenvalues[n - 1];
        let kappa = (delta > 0.0).then(|| l / delta);
        let phi_star = -0.5 * eigenvalues.iter().take(p).sum::<f64>();
        Self { eigenvalues, v_alpha, delta, l, kappa, phi_star, note }
    }

    pub fn p(&self) -> usize {
        self.v_alpha.p()
    }

    pub fn has_gap(&self) -> bool {
        self.delta > 0.0
    }

    /// `λ_{p+1}` and `λ_n`, the unwanted interval.
    pub fn unwanted_interval(&self) -> Option<(f64, f64)> {
        let p = self.p();
        let n = self.eigenvalues.len();
        (p < n).then(|| (self.eigenvalues[p], self.eigenvalues[n - 1]))
    }

    /// `((κ − 1)/(κ + 1))²`.
    pub fn gamma_sd(&self) -> Option<f64> {
        self.kappa.map(|k| ((k - 1.0) / (k + 1.0)).powi(2))
    }

    /// `((√κ − 1)/(√κ + 1))²`.
    pub fn gamma_cg(&self) -> Option<f64> {
        self.kappa.map(|k| ((k.sqrt() - 1.0) / (k.sqrt() + 1.0)).powi(2))
    }
}

/// Full spectrum of `op` by dense symmetric diagonalization.
pub fn dense_eig_oracle(op: &AffineOperator<'_>, p: usize) -> Result<SpectrumInfo> {
    let n = op.n();
    if p == 0 || p > n {
        return Err(Error::arg(format!("oracle needs 1 <= p <= n, got n={n}, p={p}")));
    }
    if n > ORACLE_MAX_N {
        return Err(Error::OracleUnavailable(format!("n = {n} exceeds the dense limit {ORACLE_MAX_N}")));
    }
    let note = (n > ORACLE_WARN_N).then(|| format!("dense oracle on n = {n}; expect long runtime and O(n²) memory"));
    let a = op.to_dense();
    let m = DMatrix::from_fn(n, n, |i, j| a[[i, j]]);
    let eig = SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let values = Array1::from_iter(order.iter().map(|&i| eig.eigenvalues[i]));
    let v = Array2::from_shape_fn((n, p), |(r, c)| eig.eigenvectors[(r, order[c])]);

    let scale = values[0].abs().max(values[n - 1].abs()).max(f64::MIN_POSITIVE);
    let av = a.dot(&v);
    for j in 0..p {
        let res = (&av.column(j) - &(&v.column(j) * values[j])).mapv(|t| t * t).sum().sqrt();
        if res > 1e-10 * scale {
            return Err(Error::Consistency(format!("oracle residual {res:e} for eigenpair {j}")));
        }
    }
    Ok(SpectrumInfo::from_parts(values, OrthonormalBasis::orthonormalize(&v.view())?, note))
}

/// Analytic spectrum of the Laplacian on `grid` under `σA + cI`, at any size.
pub fn fd_spectrum(grid: &FdGrid, p: usize, scale: f64, shift: f64) -> Result<SpectrumInfo> {
    let n = grid.len();
    if p == 0 || p > n {
        return Err(Error::arg(format!("spectrum needs 1 <= p <= n, got n={n}, p={p}")));
    }
    if scale == 0.0 {
        return Err(Error::arg("operator scale must be nonzero"));
    }
    let mut modes = grid.modes_desc();
    if scale < 0.0 {
        modes.reverse();
    }
    let values = Array1::from_iter(modes.iter().map(|m| scale * m.value + shift));
    let mut v = Array2::zeros((n, p));
    for (j, mode) in modes.iter().take(p).enumerate() {
        v.column_mut(j).assign(&grid.mode_vector(&mode.waves));
    }
    Ok(SpectrumInfo::from_parts(values, OrthonormalBasis::orthonormalize(&v.view())?, None))
}

/// `A = Q diag(λ) Qᵀ` with Haar-random `Q`, stored sparse (it is dense).
pub fn random_spd(eigenvalues: &[f64], seed: u64) -> Result<SparseSymmetricMatrix> {
    let n = eigenvalues.len();
    if n == 0 {
        return Err(Error::arg("spectrum is empty"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = Array2::from_shape_fn((n, n), |_| StandardNormal.sample(&mut rng));
    let (q, _) = dense::householder_qr(&g.view());
    let mut scaled = q.clone();
    for (mut col, &lam) in scaled.columns_mut().into_iter().zip(eigenvalues) {
        col *= lam;
    }
    let mut a = scaled.dot(&q.t());
    dense::symmetrize(&mut a);
    SparseSymmetricMatrix::from_dense(&a.view())
}
