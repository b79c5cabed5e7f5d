//! Sparse symmetric matrices, the affine operator `σA + cI`, synthetic
//! generators and Matrix Market ingestion.

mod laplacian;
mod mtx;

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicU64, Ordering};

use ndarray::{Array2, ArrayView2};
use rayon::prelude::*;

use crate::error::{Error, Result};

pub use laplacian::FdGrid;
pub use mtx::load_matrix_market;

/// Rows times columns below which the block product stays on one thread.
const PAR_THRESHOLD: usize = 1 << 14;

/// Symmetric matrix in compressed sparse row form.
///
/// Both triangles are stored; every `(i, j, v)` has a mirror `(j, i, v)` with
/// the identical value. The matvec counter tallies single-vector products:
/// one `n × p` block product adds `p`.
#[derive(Debug)]
pub struct SparseSymmetricMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
    matvecs: AtomicU64,
}

impl Clone for SparseSymmetricMatrix {
    fn clone(&self) -> Self {
        Self {
            n: self.n,
            row_ptr: self.row_ptr.clone(),
            col_idx: self.col_idx.clone(),
            values: self.values.clone(),
            matvecs: AtomicU64::new(self.matvec_count()),
        }
    }
}

impl SparseSymmetricMatrix {
    /// Assemble from `(row, col, value)` triplets (0-based). Duplicates are
    /// summed. Asymmetry beyond `1e-12` relative is rejected; pairs within
    /// tolerance are averaged so the stored matrix is exactly symmetric.
    pub fn from_triplets(n: usize, triplets: impl IntoIterator<Item = (usize, usize, f64)>) -> Result<Self> {
        let mut entries: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for (i, j, v) in triplets {
            if i >= n || j >= n {
                return Err(Error::arg(format!("entry ({i},{j}) outside a {n}x{n} matrix")));
            }
            *entries.entry((i, j)).or_insert(0.0) += v;
        }
        let mut fixed: Vec<((usize, usize), f64)> = Vec::with_capacity(entries.len());
        for (&(i, j), &v) in &entries {
            if i == j {
                fixed.push(((i, j), v));
                continue;
            }
            let mirror = entries.get(&(j, i)).copied().unwrap_or(0.0);
            let scale = v.abs().max(mirror.abs());
            if (v - mirror).abs() > 1e-12 * scale {
                return Err(Error::Asymmetric { row: i, col: j, value: v, mirror });
            }
            fixed.push(((i, j), 0.5 * (v + mirror)));
        }
        Ok(Self::from_sorted(n, fixed))
    }

    fn from_sorted(n: usize, entries: Vec<((usize, usize), f64)>) -> Self {
        let mut row_ptr = vec![0usize; n + 1];
        let mut col_idx = Vec::with_capacity(entries.len());
        let mut values = Vec::with_capacity(entries.len());
        for ((i, j), v) in entries {
            row_ptr[i + 1] += 1;
            col_idx.push(j);
            values.push(v);
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self { n, row_ptr, col_idx, values, matvecs: AtomicU64::new(0) }
    }

    pub fn from_dense(a: &ArrayView2<'_, f64>) -> Result<Self> {
        let (r, c) = a.dim();
        if r != c {
            return Err(Error::arg(format!("dense matrix is {r}x{c}, not square")));
        }
        let trips = a
            .indexed_iter()
            .filter(|(_, v)| **v != 0.0)
            .map(|((i, j), v)| (i, j, *v));
        Self::from_triplets(r, trips)
    }

    pub fn diagonal(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::arg("diagonal matrix needs at least one entry"));
        }
        Self::from_triplets(values.len(), values.iter().enumerate().map(|(i, v)| (i, i, *v)))
    }

    /// 5-point finite-difference Laplacian with zero Dirichlet boundary.
    pub fn fd_laplacian_2d(nx: usize, ny: usize) -> Result<Self> {
        FdGrid::new(vec![nx, ny])?.matrix()
    }

    /// 7-point finite-difference Laplacian with zero Dirichlet boundary.
    pub fn fd_laplacian_3d(nx: usize, ny: usize, nz: usize) -> Result<Self> {
        FdGrid::new(vec![nx, ny, nz])?.matrix()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn matvec_count(&self) -> u64 {
        self.matvecs.load(Ordering::Relaxed)
    }

    pub fn reset_matvec_count(&self) {
        self.matvecs.store(0, Ordering::Relaxed);
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[range.clone()].iter().copied().zip(self.values[range].iter().copied())
    }

    pub fn to_dense(&self) -> Array2<f64> {
        let mut d = Array2::zeros((self.n, self.n));
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                d[[i, j]] = v;
            }
        }
        d
    }

    /// `A X` for an `n × p` block; adds `p` to the matvec counter.
    pub fn apply_block(&self, x: &ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        let (rows, p) = x.dim();
        if rows != self.n {
            return Err(Error::arg(format!("block has {rows} rows, matrix is {}x{}", self.n, self.n)));
        }
        let xs = x.as_standard_layout();
        let xs = xs.as_slice().expect("standard layout");
        let mut out = vec![0.0; self.n * p];
        let row_kernel = |(i, out_row): (usize, &mut [f64])| {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let v = self.values[k];
                let xr = &xs[self.col_idx[k] * p..(self.col_idx[k] + 1) * p];
                for (o, xv) in out_row.iter_mut().zip(xr) {
                    *o += v * xv;
                }
            }
        };
        if p > 0 {
            if self.n * p >= PAR_THRESHOLD {
                out.par_chunks_mut(p).enumerate().for_each(row_kernel);
            } else {
                out.chunks_mut(p).enumerate().for_each(row_kernel);
            }
        }
        self.matvecs.fetch_add(p as u64, Ordering::Relaxed);
        Ok(Array2::from_shape_vec((self.n, p), out).expect("shape matches"))
    }

    /// Extreme eigenvalue bounds by Gershgorin discs.
    pub fn gershgorin_bounds(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..self.n {
            let mut diag = 0.0;
            let mut radius = 0.0;
            for (j, v) in self.row(i) {
                if j == i {
                    diag = v;
                } else {
                    radius += v.abs();
                }
            }
            lo = lo.min(diag - radius);
            hi = hi.max(diag + radius);
        }
        (lo, hi)
    }
}

/// The operator `σA + cI` over a shared base matrix.
#[derive(Debug, Clone, Copy)]
pub struct AffineOperator<'a> {
    base: &'a SparseSymmetricMatrix,
    scale: f64,
    shift: f64,
}

impl<'a> AffineOperator<'a> {
    pub fn new(base: &'a SparseSymmetricMatrix, scale: f64, shift: f64) -> Self {
        Self { base, scale, shift }
    }

    pub fn identity(base: &'a SparseSymmetricMatrix) -> Self {
        Self::new(base, 1.0, 0.0)
    }

    /// `−A`, used for minimal-eigenspace problems.
    pub fn negated(base: &'a SparseSymmetricMatrix) -> Self {
        Self::new(base, -1.0, 0.0)
    }

    /// `(A − cI)/h`, the argument of the Chebyshev filter.
    pub fn chebyshev_argument(base: &'a SparseSymmetricMatrix, center: f64, half_width: f64) -> Self {
        Self::new(base, 1.0 / half_width, -center / half_width)
    }

    /// Compose another affine map on top: `s·(σA + cI) + t·I`.
    pub fn then(&self, scale: f64, shift: f64) -> Self {
        Self::new(self.base, scale * self.scale, scale * self.shift + shift)
    }

    pub fn base(&self) -> &'a SparseSymmetricMatrix {
        self.base
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn shift(&self) -> f64 {
        self.shift
    }

    pub fn n(&self) -> usize {
        self.base.n
    }

    pub fn apply(&self, x: &ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        let mut y = self.base.apply_block(x)?;
        if self.scale == 1.0 && self.shift == 0.0 {
            return Ok(y);
        }
        let (scale, shift) = (self.scale, self.shift);
        ndarray::Zip::from(&mut y).and(x).for_each(|yi, xi| *yi = scale * *yi + shift * xi);
        Ok(y)
    }

    /// Dense `σA + cI`, for oracles only.
    pub fn to_dense(&self) -> Array2<f64> {
        let mut d = self.base.to_dense() * self.scale;
        for i in 0..self.n() {
            d[[i, i]] += self.shift;
        }
        d
    }
}

/// `σAX + cX`; adds `p` to the base matrix's matvec counter.
pub fn block_matvec(op: &AffineOperator<'_>, x: &ArrayView2<'_, f64>) -> Result<Array2<f64>> {
    op.apply(x)
}
