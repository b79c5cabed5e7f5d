//! Small dense kernels: cyclic Jacobi, Householder thin QR, Gram-Cholesky
//! orthonormalization and a few norms. Everything here operates on
//! row-major `ndarray` blocks; the "small" side is at most a few hundred.

use ndarray::{s, Array1, Array2, ArrayView2, Axis};

pub fn frobenius(m: &ArrayView2<'_, f64>) -> f64 {
    m.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Matrix infinity norm (maximum absolute row sum).
pub fn inf_norm(m: &ArrayView2<'_, f64>) -> f64 {
    m.rows()
        .into_iter()
        .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Frobenius inner product `Tr(a^T b)`.
pub fn inner(a: &ArrayView2<'_, f64>, b: &ArrayView2<'_, f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

pub fn symmetrize(m: &mut Array2<f64>) {
    let k = m.nrows();
    for i in 0..k {
        for j in (i + 1)..k {
            let v = 0.5 * (m[[i, j]] + m[[j, i]]);
            m[[i, j]] = v;
            m[[j, i]] = v;
        }
    }
}

/// `‖X^T X − I‖_F`.
pub fn orthonormality_error(x: &ArrayView2<'_, f64>) -> f64 {
    let mut g = x.t().dot(x);
    for i in 0..g.nrows() {
        g[[i, i]] -= 1.0;
    }
    frobenius(&g.view())
}

/// Eigen-decomposition of a small symmetric matrix by cyclic Jacobi.
///
/// Returns eigenvalues in descending order with matching eigenvector columns.
pub fn jacobi_eigh(sym: &ArrayView2<'_, f64>) -> (Array1<f64>, Array2<f64>) {
    let m = sym.nrows();
    let mut a = sym.to_owned();
    let mut v = Array2::<f64>::eye(m);
    let scale = frobenius(sym);
    if m <= 1 || scale == 0.0 {
        return sort_desc(a.diag().to_owned(), v);
    }

    for sweep in 0..64 {
        let mut off = 0.0;
        for i in 0..m {
            for j in (i + 1)..m {
                off += a[[i, j]] * a[[i, j]];
            }
        }
        if off.sqrt() <= 1e-18 * scale {
            break;
        }
        for p in 0..m {
            for q in (p + 1)..m {
                let apq = a[[p, q]];
                if apq == 0.0 {
                    continue;
                }
                let app = a[[p, p]];
                let aqq = a[[q, q]];
                if sweep > 3 && apq.abs() <= 1e-3 * f64::EPSILON * (app.abs() + aqq.abs()) {
                    a[[p, q]] = 0.0;
                    a[[q, p]] = 0.0;
                    continue;
                }
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta.abs() > 1e150 {
                    0.5 / theta
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                // theta == 0 gives signum 1, i.e. a 45 degree rotation
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..m {
                    let akp = a[[k, p]];
                    let akq = a[[k, q]];
                    a[[k, p]] = c * akp - s * akq;
                    a[[k, q]] = s * akp + c * akq;
                }
                for k in 0..m {
                    let apk = a[[p, k]];
                    let aqk = a[[q, k]];
                    a[[p, k]] = c * apk - s * aqk;
                    a[[q, k]] = s * apk + c * aqk;
                }
                a[[p, q]] = 0.0;
                a[[q, p]] = 0.0;
                for k in 0..m {
                    let vkp = v[[k, p]];
                    let vkq = v[[k, q]];
                    v[[k, p]] = c * vkp - s * vkq;
                    v[[k, q]] = s * vkp + c * vkq;
                }
            }
        }
    }
    sort_desc(a.diag().to_owned(), v)
}

fn sort_desc(d: Array1<f64>, v: Array2<f64>) -> (Array1<f64>, Array2<f64>) {
    let mut idx: Vec<usize> = (0..d.len()).collect();
    idx.sort_by(|&i, &j| d[j].total_cmp(&d[i]));
    let d_sorted = idx.iter().map(|&i| d[i]).collect();
    let v_sorted = v.select(Axis(1), &idx);
    (d_sorted, v_sorted)
}

/// Householder thin QR of an `n × m` block (`m ≤ n`).
///
/// `R` is returned with a non-negative diagonal, which makes the
/// factorization unique for full-rank input.
pub fn householder_qr(a: &ArrayView2<'_, f64>) -> (Array2<f64>, Array2<f64>) {
    let (n, m) = a.dim();
    assert!(m <= n, "thin QR needs at least as many rows as columns");
    let mut work = a.to_owned();
    let mut reflectors: Vec<Array1<f64>> = Vec::with_capacity(m);

    for k in 0..m {
        let x = work.slice(s![k.., k]);
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let mut v = x.to_owned();
        if norm == 0.0 {
            reflectors.push(Array1::zeros(n - k));
            continue;
        }
        let alpha = if x[0] >= 0.0 { -norm } else { norm };
        v[0] -= alpha;
        let vnorm = v.iter().map(|t| t * t).sum::<f64>().sqrt();
        if vnorm == 0.0 {
            reflectors.push(Array1::zeros(n - k));
            continue;
        }
        v /= vnorm;
        let mut sub = work.slice_mut(s![k.., k..]);
        let proj = v.dot(&sub);
        for (i, vi) in v.iter().enumerate() {
            if *vi != 0.0 {
                let mut row = sub.row_mut(i);
                row.scaled_add(-2.0 * vi, &proj);
            }
        }
        reflectors.push(v);
    }

    let mut r = work.slice(s![..m, ..]).to_owned();
    for i in 0..m {
        for j in 0..i {
            r[[i, j]] = 0.0;
        }
    }

    let mut q = Array2::<f64>::zeros((n, m));
    for i in 0..m {
        q[[i, i]] = 1.0;
    }
    for k in (0..m).rev() {
        let v = &reflectors[k];
        let mut sub = q.slice_mut(s![k.., ..]);
        let proj = v.dot(&sub);
        for (i, vi) in v.iter().enumerate() {
            if *vi != 0.0 {
                sub.row_mut(i).scaled_add(-2.0 * vi, &proj);
            }
        }
    }

    for i in 0..m {
        if r[[i, i]] < 0.0 {
            r.row_mut(i).mapv_inplace(|t| -t);
            q.column_mut(i).mapv_inplace(|t| -t);
        }
    }
    (q, r)
}

/// Lower Cholesky factor of a small SPD matrix, or `None` when a pivot drops
/// below `rel_tol` times the largest diagonal entry.
pub fn cholesky(m: &ArrayView2<'_, f64>, rel_tol: f64) -> Option<Array2<f64>> {
    let k = m.nrows();
    let dmax = m.diag().iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let mut l = Array2::<f64>::zeros((k, k));
    for j in 0..k {
        let mut d = m[[j, j]];
        for t in 0..j {
            d -= l[[j, t]] * l[[j, t]];
        }
        if !(d > rel_tol * dmax) || !d.is_finite() {
            return None;
        }
        let djj = d.sqrt();
        l[[j, j]] = djj;
        for i in (j + 1)..k {
            let mut s = m[[i, j]];
            for t in 0..j {
                s -= l[[i, t]] * l[[j, t]];
            }
            l[[i, j]] = s / djj;
        }
    }
    Some(l)
}

/// Inverse of a lower-triangular matrix by forward substitution.
pub fn lower_inverse(l: &ArrayView2<'_, f64>) -> Array2<f64> {
    let k = l.nrows();
    let mut inv = Array2::<f64>::zeros((k, k));
    for col in 0..k {
        for i in col..k {
            let mut s = if i == col { 1.0 } else { 0.0 };
            for t in col..i {
                s -= l[[i, t]] * inv[[t, col]];
            }
            inv[[i, col]] = s / l[[i, i]];
        }
    }
    inv
}

/// Orthonormalize the columns of `s` through the Cholesky factor of its
/// Gram matrix. Returns `(Q, T)` with `Q = s · T`, so any block `A s` can be
/// carried along as `A s · T` without another product with `A`.
pub fn cholesky_orthonormalize(
    s: &ArrayView2<'_, f64>,
    rel_tol: f64,
) -> Option<(Array2<f64>, Array2<f64>)> {
    let mut gram = s.t().dot(s);
    symmetrize(&mut gram);
    let l = cholesky(&gram.view(), rel_tol)?;
    let t = lower_inverse(&l.view()).reversed_axes();
    Some((s.dot(&t), t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn jacobi_two_by_two() {
        let (d, v) = jacobi_eigh(&array![[2.0, -1.0], [-1.0, 2.0]].view());
        assert!((d[0] - 3.0).abs() < 1e-14 && (d[1] - 1.0).abs() < 1e-14);
        assert!(orthonormality_error(&v.view()) < 1e-14);
    }

    #[test]
    fn jacobi_reconstructs() {
        let s = array![
            [4.0, 1.0, -2.0, 0.5],
            [1.0, 3.0, 0.0, 1.5],
            [-2.0, 0.0, 1.0, 0.25],
            [0.5, 1.5, 0.25, -2.0]
        ];
        let (d, v) = jacobi_eigh(&s.view());
        let rec = v.dot(&Array2::from_diag(&d)).dot(&v.t());
        assert!(frobenius(&(&rec - &s).view()) < 1e-13 * frobenius(&s.view()));
        assert!(d.windows(2).into_iter().all(|w| w[0] >= w[1]));
    }

    #[test]
    fn qr_reconstructs_with_positive_diagonal() {
        let a = array![[1.0, 2.0], [3.0, 4.0], [5.0, 7.0]];
        let (q, r) = householder_qr(&a.view());
        assert!(frobenius(&(q.dot(&r) - &a).view()) < 1e-14);
        assert!(orthonormality_error(&q.view()) < 1e-15);
        assert!(r[[0, 0]] > 0.0 && r[[1, 1]] > 0.0 && r[[1, 0]] == 0.0);
    }

    #[test]
    fn cholesky_rejects_singular_gram() {
        let s = array![[1.0, 2.0], [1.0, 2.0], [0.0, 0.0]];
        assert!(cholesky_orthonormalize(&s.view(), 1e-12).is_none());
        let t = array![[1.0, 1.0], [0.0, 1.0], [0.0, 0.0]];
        let (q, _) = cholesky_orthonormalize(&t.view(), 1e-12).unwrap();
        assert!(orthonormality_error(&q.view()) < 1e-15);
    }

    #[test]
    fn inf_norm_is_max_row_sum() {
        assert_eq!(inf_norm(&array![[1.0, -2.0], [0.5, 0.5]].view()), 3.0);
    }
}
