//! Grassmann points, tangent blocks, the polar retraction and the small
//! dense eigen-machinery that the solvers share.

use ndarray::{Array1, Array2, ArrayView2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::dense;
use crate::error::{Error, Result};
use crate::operators::AffineOperator;

/// An `n × p` matrix with orthonormal columns representing a point of Gr(n, p).
#[derive(Debug, Clone, PartialEq)]
pub struct OrthonormalBasis {
    x: Array2<f64>,
}

impl OrthonormalBasis {
    /// Wrap `x` after checking `‖XᵀX − I‖_F ≤ 1e-12·p`.
    pub fn new(x: Array2<f64>) -> Result<Self> {
        let (n, p) = x.dim();
        if p == 0 || p > n {
            return Err(Error::arg(format!("basis must satisfy 1 <= p <= n, got n={n}, p={p}")));
        }
        let err = dense::orthonormality_error(&x.view());
        if !(err <= 1e-12 * p as f64) {
            return Err(Error::arg(format!("columns are not orthonormal: ‖XᵀX − I‖_F = {err:e}")));
        }
        Ok(Self { x })
    }

    /// Orthonormalize arbitrary full-rank columns by Householder QR.
    pub fn orthonormalize(m: &ArrayView2<'_, f64>) -> Result<Self> {
        let (n, p) = m.dim();
        if p == 0 || p > n {
            return Err(Error::arg(format!("basis must satisfy 1 <= p <= n, got n={n}, p={p}")));
        }
        let (q, r) = dense::householder_qr(m);
        let rmax = r.diag().iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if r.diag().iter().any(|v| v.abs() <= 1e-13 * rmax) || rmax == 0.0 {
            return Err(Error::arg("columns are rank deficient"));
        }
        Ok(Self { x: q })
    }

    pub(crate) fn from_unchecked(x: Array2<f64>) -> Self {
        Self { x }
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn view(&self) -> ArrayView2<'_, f64> {
        self.x.view()
    }

    pub fn as_array(&self) -> &Array2<f64> {
        &self.x
    }

    pub fn into_array(self) -> Array2<f64> {
        self.x
    }

    pub fn orthonormality_error(&self) -> f64 {
        dense::orthonormality_error(&self.x.view())
    }
}

/// A block `Δ` with `XᵀΔ = 0` for the basis it was built against.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentBlock {
    delta: Array2<f64>,
}

impl TangentBlock {
    /// Accept `delta` as tangent at `x` if `‖XᵀΔ‖_F ≤ 1e-12·‖Δ‖_F`.
    pub fn new(x: &OrthonormalBasis, delta: Array2<f64>) -> Result<Self> {
        if delta.dim() != x.x.dim() {
            return Err(Error::arg("tangent block and basis differ in shape"));
        }
        let normal = dense::frobenius(&x.x.t().dot(&delta).view());
        let size = dense::frobenius(&delta.view());
        if normal > 1e-12 * size {
            return Err(Error::arg(format!("block is not tangent: ‖XᵀΔ‖_F = {normal:e}")));
        }
        Ok(Self { delta })
    }

    pub(crate) fn from_unchecked(delta: Array2<f64>) -> Self {
        Self { delta }
    }

    pub fn view(&self) -> ArrayView2<'_, f64> {
        self.delta.view()
    }

    pub fn as_array(&self) -> &Array2<f64> {
        &self.delta
    }

    pub fn into_array(self) -> Array2<f64> {
        self.delta
    }

    pub fn frobenius(&self) -> f64 {
        dense::frobenius(&self.delta.view())
    }
}

/// `S = V diag(d) Vᵀ` with `d` descending.
#[derive(Debug, Clone, PartialEq)]
pub struct SmallSpectralDecomp {
    pub vectors: Array2<f64>,
    pub values: Array1<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrincipalAngles {
    /// Ascending, in `[0, π/2]`.
    pub angles: Array1<f64>,
    /// `‖θ‖₂`.
    pub dist: f64,
}

impl PrincipalAngles {
    pub fn largest(&self) -> f64 {
        self.angles[self.angles.len() - 1]
    }
}

/// Output of [`riemannian_gradient`].
#[derive(Debug, Clone)]
pub struct GradientEval {
    /// `G = −(AX − XC)`.
    pub gradient: TangentBlock,
    /// `C = XᵀAX`, symmetrized.
    pub projected: Array2<f64>,
    pub ax: Array2<f64>,
}

impl GradientEval {
    /// `φ(X) = −½ Tr(C)`.
    pub fn phi(&self) -> f64 {
        -0.5 * self.projected.diag().sum()
    }
}

#[derive(Debug, Clone)]
pub struct RitzPairs {
    pub values: Array1<f64>,
    pub basis: Array2<f64>,
    pub a_basis: Array2<f64>,
}

/// Q factor of an `n × p` standard Gaussian sample, deterministic in `seed`.
pub fn random_orthonormal(n: usize, p: usize, seed: u64) -> Result<OrthonormalBasis> {
    if p == 0 || p > n {
        return Err(Error::arg(format!("random basis needs 1 <= p <= n, got n={n}, p={p}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = Array2::from_shape_fn((n, p), |_| StandardNormal.sample(&mut rng));
    let (q, _) = dense::householder_qr(&g.view());
    Ok(OrthonormalBasis::from_unchecked(q))
}

/// `φ(X) = −½ Tr(XᵀAX)`; one block product with `op`.
pub fn objective(op: &AffineOperator<'_>, x: &OrthonormalBasis) -> Result<f64> {
    let ax = op.apply(&x.view())?;
    Ok(objective_from(&x.view(), &ax.view()))
}

pub fn objective_from(x: &ArrayView2<'_, f64>, ax: &ArrayView2<'_, f64>) -> f64 {
    -0.5 * dense::inner(x, ax)
}

/// Riemannian gradient of `φ` at `X`. When `ax` is `None` the product
/// `AX` is computed here and costs `p` matvecs.
pub fn riemannian_gradient(
    op: &AffineOperator<'_>,
    x: &OrthonormalBasis,
    ax: Option<Array2<f64>>,
) -> Result<GradientEval> {
    let ax = match ax {
        Some(ax) => {
            if ax.dim() != x.x.dim() {
                return Err(Error::arg("AX and X differ in shape"));
            }
            ax
        }
        None => op.apply(&x.view())?,
    };
    Ok(gradient_from(&x.view(), ax))
}

pub(crate) fn gradient_from(x: &ArrayView2<'_, f64>, ax: Array2<f64>) -> GradientEval {
    let mut c = x.t().dot(&ax);
    dense::symmetrize(&mut c);
    let mut g = x.dot(&c);
    g -= &ax;
    // With XᵀX = I + E the block above has normal part EC; a second
    // projection keeps the retraction from amplifying E.
    let g = project_out(x, &g.view());
    GradientEval { gradient: TangentBlock::from_unchecked(g), projected: c, ax }
}

/// `(I − XXᵀ) M`.
pub fn tangent_project(x: &OrthonormalBasis, m: &ArrayView2<'_, f64>) -> Result<TangentBlock> {
    if m.dim() != x.x.dim() {
        return Err(Error::arg("block and basis differ in shape"));
    }
    Ok(TangentBlock::from_unchecked(project_out(&x.view(), m)))
}

pub(crate) fn project_out(x: &ArrayView2<'_, f64>, m: &ArrayView2<'_, f64>) -> Array2<f64> {
    let coeff = x.t().dot(m);
    let mut out = m.to_owned();
    out -= &x.dot(&coeff);
    out
}

/// `V (I + μ² D_β)^{−1/2} Vᵀ`, the right factor of the polar retraction.
pub fn retraction_factor(mu: f64, v: &ArrayView2<'_, f64>, beta: &[f64]) -> Array2<f64> {
    let mut scaled = v.to_owned();
    for (mut col, b) in scaled.columns_mut().into_iter().zip(beta) {
        let d = 1.0 / (1.0 + mu * mu * b.max(0.0)).sqrt();
        col *= d;
    }
    scaled.dot(&v.t())
}

/// Polar factor of `X − μP` computed from the decomposition `PᵀP = V D_β Vᵀ`.
pub fn polar_retraction(
    x: &OrthonormalBasis,
    p: &TangentBlock,
    mu: f64,
    v: &ArrayView2<'_, f64>,
    beta: &[f64],
) -> Result<OrthonormalBasis> {
    if !mu.is_finite() || mu < 0.0 {
        return Err(Error::arg(format!("step must be finite and non-negative, got {mu}")));
    }
    if p.delta.dim() != x.x.dim() || v.nrows() != x.p() || beta.len() != x.p() {
        return Err(Error::arg("retraction inputs differ in shape"));
    }
    Ok(OrthonormalBasis::from_unchecked(step_and_normalize(&x.view(), &p.view(), mu, v, beta)))
}

/// Map `X ← X (XᵀX)^{−1/2}` and `AX ← AX (XᵀX)^{−1/2}` once `‖XᵀX − I‖_F`
/// exceeds `tol`. Retractions assume exact orthonormality, so rounding
/// drift would otherwise accumulate over thousands of steps. Returns whether
/// a correction was applied.
pub(crate) fn restore_orthonormality(x: &mut Array2<f64>, ax: &mut Array2<f64>, tol: f64) -> Result<bool> {
    let mut gram = x.t().dot(&*x);
    dense::symmetrize(&mut gram);
    let err = dense::frobenius(&(&gram - &Array2::<f64>::eye(gram.nrows())).view());
    if err <= tol {
        return Ok(false);
    }
    let eig = sym_eig_small(&gram.view())?;
    if eig.values.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::Consistency(format!("basis lost rank: ‖XᵀX − I‖_F = {err:e}")));
    }
    let mut scaled = eig.vectors.clone();
    for (mut col, v) in scaled.columns_mut().into_iter().zip(eig.values.iter()) {
        col /= v.sqrt();
    }
    let m = scaled.dot(&eig.vectors.t());
    *x = x.dot(&m);
    *ax = ax.dot(&m);
    Ok(true)
}

/// `(X − μP) V D_μ^{−1} Vᵀ` without shape checks; shared by the retraction
/// and the `AX` recursion.
pub(crate) fn step_and_normalize(
    x: &ArrayView2<'_, f64>,
    p: &ArrayView2<'_, f64>,
    mu: f64,
    v: &ArrayView2<'_, f64>,
    beta: &[f64],
) -> Array2<f64> {
    let mut stepped = x.to_owned();
    if mu != 0.0 {
        stepped.scaled_add(-mu, p);
    }
    stepped.dot(&retraction_factor(mu, v, beta))
}

/// Spectral decomposition of a small symmetric matrix (cyclic Jacobi).
pub fn sym_eig_small(s: &ArrayView2<'_, f64>) -> Result<SmallSpectralDecomp> {
    let (r, c) = s.dim();
    if r != c {
        return Err(Error::arg(format!("matrix is {r}x{c}, not square")));
    }
    let asym = dense::frobenius(&(s.to_owned() - s.t()).view());
    let size = dense::frobenius(s);
    if asym > 1e-10 * size {
        return Err(Error::arg(format!("matrix is not symmetric: ‖S − Sᵀ‖_F = {asym:e}")));
    }
    let mut sym = s.to_owned();
    dense::symmetrize(&mut sym);
    let (values, vectors) = dense::jacobi_eigh(&sym.view());
    Ok(SmallSpectralDecomp { vectors, values })
}

/// Rayleigh–Ritz on `span(Q)`: descending Ritz values with `QU` and `(AQ)U`.
pub fn rayleigh_ritz(
    op: &AffineOperator<'_>,
    q: &OrthonormalBasis,
    aq: Option<Array2<f64>>,
) -> Result<RitzPairs> {
    let aq = match aq {
        Some(aq) => aq,
        None => op.apply(&q.view())?,
    };
    rayleigh_ritz_from(&q.view(), &aq.view())
}

pub(crate) fn rayleigh_ritz_from(q: &ArrayView2<'_, f64>, aq: &ArrayView2<'_, f64>) -> Result<RitzPairs> {
    let mut c = q.t().dot(aq);
    dense::symmetrize(&mut c);
    let eig = sym_eig_small(&c.view())?;
    Ok(RitzPairs {
        basis: q.dot(&eig.vectors),
        a_basis: aq.dot(&eig.vectors),
        values: eig.values,
    })
}

/// Principal angles between `span(X)` and `span(Y)`. Angles below `π/4` come
/// from the sines (singular values of `(I − YYᵀ)X`), larger ones from the
/// cosines (singular values of `YᵀX`), so both ends keep full precision.
pub fn principal_angles(x: &OrthonormalBasis, y: &OrthonormalBasis) -> Result<PrincipalAngles> {
    if x.x.dim() != y.x.dim() {
        return Err(Error::arg("subspaces differ in n or p"));
    }
    let m = y.x.t().dot(&x.x);
    let cos2 = sym_eig_small(&m.t().dot(&m).view())?.values;
    let resid = project_out(&y.view(), &x.view());
    let sin2 = sym_eig_small(&resid.t().dot(&resid).view())?.values;
    let p = x.p();
    // cos² descending and sin² ascending both order the angles ascending
    let angles: Array1<f64> = (0..p)
        .map(|i| {
            let s2 = sin2[p - 1 - i].clamp(0.0, 1.0);
            if s2 < 0.5 {
                s2.sqrt().asin()
            } else {
                cos2[i].clamp(0.0, 1.0).sqrt().acos()
            }
        })
        .collect();
    let dist = angles.iter().map(|t| t * t).sum::<f64>().sqrt();
    Ok(PrincipalAngles { angles, dist })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::SparseSymmetricMatrix;
    use ndarray::array;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4};

    fn diag321() -> SparseSymmetricMatrix {
        SparseSymmetricMatrix::diagonal(&[3.0, 2.0, 1.0]).unwrap()
    }

    fn plane13() -> OrthonormalBasis {
        OrthonormalBasis::new(array![[FRAC_1_SQRT_2], [0.0], [FRAC_1_SQRT_2]]).unwrap()
    }

    fn col(v: [f64; 3]) -> OrthonormalBasis {
        OrthonormalBasis::new(array![[v[0]], [v[1]], [v[2]]]).unwrap()
    }

    fn gaussian(n: usize, p: usize, seed: u64) -> Array2<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Array2::from_shape_fn((n, p), |_| StandardNormal.sample(&mut rng))
    }

    fn random_spd(n: usize, seed: u64) -> SparseSymmetricMatrix {
        let b = gaussian(n, n, seed);
        let mut a = b.t().dot(&b);
        dense::symmetrize(&mut a);
        SparseSymmetricMatrix::from_dense(&a.view()).unwrap()
    }

    #[test]
    fn random_square_basis_is_orthogonal() {
        let q = random_orthonormal(5, 5, 42).unwrap();
        let det = nalgebra::DMatrix::from_fn(5, 5, |i, j| q.as_array()[[i, j]]).determinant();
        assert!((det.abs() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn random_basis_is_deterministic_and_orthonormal() {
        assert_eq!(random_orthonormal(30, 4, 9).unwrap(), random_orthonormal(30, 4, 9).unwrap());
        assert!(random_orthonormal(100, 10, 1).unwrap().orthonormality_error() <= 1e-13);
        assert!(random_orthonormal(3, 4, 1).is_err());
    }

    #[test]
    fn gradient_vanishes_at_eigenvector() {
        let a = diag321();
        let g = riemannian_gradient(&AffineOperator::identity(&a), &col([0.0, 1.0, 0.0]), None).unwrap();
        assert_eq!(g.gradient.frobenius(), 0.0);
    }

    #[test]
    fn gradient_running_example() {
        let a = diag321();
        let g = riemannian_gradient(&AffineOperator::identity(&a), &plane13(), None).unwrap();
        assert!((g.projected[[0, 0]] - 2.0).abs() < 1e-15);
        let expected = array![[-FRAC_1_SQRT_2], [0.0], [FRAC_1_SQRT_2]];
        assert!(dense::frobenius(&(g.gradient.as_array() - &expected).view()) < 1e-15);
        assert!((g.phi() + 1.0).abs() < 1e-15);
    }

    #[test]
    fn gradient_is_shift_invariant() {
        let a = random_spd(12, 4);
        let x = random_orthonormal(12, 3, 5).unwrap();
        let g0 = riemannian_gradient(&AffineOperator::identity(&a), &x, None).unwrap();
        let g1 = riemannian_gradient(&AffineOperator::new(&a, 1.0, 7.5), &x, None).unwrap();
        let diff = dense::frobenius(&(g0.gradient.as_array() - g1.gradient.as_array()).view());
        assert!(diff <= 1e-13 * g0.gradient.frobenius().max(1.0));
    }

    #[test]
    fn zero_step_is_identity() {
        let x = random_orthonormal(10, 3, 2).unwrap();
        let p = tangent_project(&x, &gaussian(10, 3, 3).view()).unwrap();
        let eig = sym_eig_small(&p.as_array().t().dot(p.as_array()).view()).unwrap();
        let y = polar_retraction(&x, &p, 0.0, &eig.vectors.view(), eig.values.as_slice().unwrap()).unwrap();
        assert!(dense::frobenius(&(y.as_array() - x.as_array()).view()) <= 1e-15 * 3.0);
    }

    #[test]
    fn running_example_retraction_lands_on_e1() {
        let x = plane13();
        let g = TangentBlock::new(&x, array![[-FRAC_1_SQRT_2], [0.0], [FRAC_1_SQRT_2]]).unwrap();
        let y = polar_retraction(&x, &g, 1.0, &array![[1.0]].view(), &[1.0]).unwrap();
        assert!(dense::frobenius(&(y.as_array() - &array![[1.0], [0.0], [0.0]]).view()) < 1e-15);
    }

    #[test]
    fn retraction_rejects_non_finite_step() {
        let x = plane13();
        let g = TangentBlock::from_unchecked(Array2::zeros((3, 1)));
        assert!(polar_retraction(&x, &g, f64::NAN, &array![[1.0]].view(), &[0.0]).is_err());
    }

    #[test]
    fn small_eig_examples() {
        let id = sym_eig_small(&Array2::eye(3).view()).unwrap();
        assert_eq!(id.values, array![1.0, 1.0, 1.0]);
        let two = sym_eig_small(&array![[2.0, -1.0], [-1.0, 2.0]].view()).unwrap();
        assert!((two.values[0] - 3.0).abs() < 1e-15 && (two.values[1] - 1.0).abs() < 1e-15);
        let d = sym_eig_small(&array![[1.0, 0.0], [0.0, 5.0]].view()).unwrap();
        assert_eq!(d.values, array![5.0, 1.0]);
        assert_eq!(d.vectors.mapv(f64::abs), array![[0.0, 1.0], [1.0, 0.0]]);
        assert!(sym_eig_small(&array![[1.0, 2.0], [0.0, 1.0]].view()).is_err());
    }

    #[test]
    fn small_eig_reconstruction_invariant() {
        for seed in 0..20 {
            let b = gaussian(9, 9, seed);
            let s = &b + &b.t();
            let e = sym_eig_small(&s.view()).unwrap();
            let rec = e.vectors.dot(&Array2::from_diag(&e.values)).dot(&e.vectors.t());
            assert!(dense::frobenius(&(rec - &s).view()) <= 1e-11 * dense::frobenius(&s.view()));
            assert!(dense::orthonormality_error(&e.vectors.view()) <= 1e-12 * 9.0);
        }
    }

    #[test]
    fn ritz_on_exact_invariant_subspace() {
        let a = diag321();
        let q = OrthonormalBasis::new(array![[FRAC_1_SQRT_2, -FRAC_1_SQRT_2], [FRAC_1_SQRT_2, FRAC_1_SQRT_2], [0.0, 0.0]]).unwrap();
        let rr = rayleigh_ritz(&AffineOperator::identity(&a), &q, None).unwrap();
        assert!((rr.values[0] - 3.0).abs() < 1e-15 && (rr.values[1] - 2.0).abs() < 1e-15);
        let abs = rr.basis.mapv(f64::abs);
        assert!(dense::frobenius(&(abs - array![[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]]).view()) < 1e-15);

        let single = rayleigh_ritz(&AffineOperator::identity(&a), &col([0.0, 1.0, 0.0]), None).unwrap();
        assert_eq!(single.values[0], 2.0);
    }

    #[test]
    fn ritz_values_inside_spectrum() {
        let a = random_spd(15, 8);
        let eig = nalgebra::SymmetricEigen::new(nalgebra::DMatrix::from_fn(15, 15, |i, j| a.to_dense()[[i, j]]));
        let (lo, hi) = eig.eigenvalues.iter().fold((f64::MAX, f64::MIN), |(l, h), v| (l.min(*v), h.max(*v)));
        let q = random_orthonormal(15, 4, 1).unwrap();
        let rr = rayleigh_ritz(&AffineOperator::identity(&a), &q, None).unwrap();
        assert!(rr.values.iter().all(|v| *v >= lo - 1e-12 && *v <= hi + 1e-12));
    }

    #[test]
    fn principal_angle_examples() {
        let x = random_orthonormal(8, 3, 1).unwrap();
        let w = random_orthonormal(3, 3, 2).unwrap();
        let xw = OrthonormalBasis::new(x.as_array().dot(w.as_array())).unwrap();
        let same = principal_angles(&x, &xw).unwrap();
        assert!(same.dist < 1e-7);

        let ortho = principal_angles(&col([1.0, 0.0, 0.0]), &col([0.0, 1.0, 0.0])).unwrap();
        assert!((ortho.angles[0] - FRAC_PI_2).abs() < 1e-15);

        let quarter = principal_angles(&plane13(), &col([1.0, 0.0, 0.0])).unwrap();
        assert!((quarter.angles[0] - FRAC_PI_4).abs() < 1e-12);
        assert!((quarter.dist - 0.785398).abs() < 1e-6);
    }

    #[test]
    fn projection_examples() {
        let x = random_orthonormal(9, 2, 4).unwrap();
        let zero = tangent_project(&x, &x.view()).unwrap();
        assert!(zero.frobenius() < 1e-15);
        let t = tangent_project(&x, &gaussian(9, 2, 5).view()).unwrap();
        let again = tangent_project(&x, &t.view()).unwrap();
        assert!(dense::frobenius(&(again.as_array() - t.as_array()).view()) < 1e-14);
        assert!(TangentBlock::new(&x, t.into_array()).is_ok());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn polar_factor_beats_qr(seed in 0u64..10_000, n in 4usize..20, p in 1usize..4, mu in 0.0f64..3.0) {
            let p = p.min(n);
            let x = random_orthonormal(n, p, seed).unwrap();
            let dir = tangent_project(&x, &gaussian(n, p, seed + 1).view()).unwrap();
            let eig = sym_eig_small(&dir.as_array().t().dot(dir.as_array()).view()).unwrap();
            let y = polar_retraction(&x, &dir, mu, &eig.vectors.view(), eig.values.as_slice().unwrap()).unwrap();
            prop_assert!(y.orthonormality_error() <= 1e-13);
            let stepped = x.as_array() - &(dir.as_array() * mu);
            let (q, _) = dense::householder_qr(&stepped.view());
            let to_polar = dense::frobenius(&(&stepped - y.as_array()).view());
            let to_qr = dense::frobenius(&(&stepped - &q).view());
            prop_assert!(to_polar <= to_qr + 1e-12);
        }

        #[test]
        fn objective_is_rotation_invariant(seed in 0u64..10_000) {
            let a = random_spd(10, seed);
            let op = AffineOperator::identity(&a);
            let x = random_orthonormal(10, 3, seed + 7).unwrap();
            let w = random_orthonormal(3, 3, seed + 8).unwrap();
            let xw = OrthonormalBasis::from_unchecked(x.as_array().dot(w.as_array()));
            let (f1, f2) = (objective(&op, &x).unwrap(), objective(&op, &xw).unwrap());
            prop_assert!((f1 - f2).abs() <= 1e-12 * f1.abs());
        }

        #[test]
        fn angles_are_symmetric(seed in 0u64..10_000) {
            let x = random_orthonormal(12, 3, seed).unwrap();
            let y = random_orthonormal(12, 3, seed + 1).unwrap();
            let (d1, d2) = (principal_angles(&x, &y).unwrap(), principal_angles(&y, &x).unwrap());
            prop_assert!((d1.dist - d2.dist).abs() <= 1e-12);
            prop_assert!(d1.angles.windows(2).into_iter().all(|w| w[0] <= w[1]));
        }

        #[test]
        fn gradient_norm_identity(seed in 0u64..10_000) {
            let a = random_spd(14, seed);
            let x = random_orthonormal(14, 4, seed + 3).unwrap();
            let g = riemannian_gradient(&AffineOperator::identity(&a), &x, None).unwrap();
            let lhs = g.gradient.frobenius().powi(2);
            let pi_ax = project_out(&x.view(), &g.ax.view());
            let rhs = dense::inner(&g.ax.view(), &pi_ax.view());
            prop_assert!((lhs - rhs).abs() <= 1e-11 * rhs.abs());
        }

        #[test]
        fn projection_is_tangent(seed in 0u64..10_000) {
            let x = random_orthonormal(11, 3, seed).unwrap();
            let m = gaussian(11, 3, seed + 2);
            let t = tangent_project(&x, &m.view()).unwrap();
            let normal = dense::frobenius(&x.as_array().t().dot(t.as_array()).view());
            prop_assert!(normal <= 1e-13 * dense::frobenius(&m.view()));
        }
    }
}
