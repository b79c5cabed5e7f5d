use std::f64::consts::PI;

use ndarray::Array1;

use super::SparseSymmetricMatrix;
use crate::error::{Error, Result};

/// A tensor-product grid for the finite-difference Laplacian with zero
/// Dirichlet boundary: diagonal `2·d`, `−1` for each axis neighbour.
///
/// Nodes are numbered with the first axis fastest.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FdGrid {
    dims: Vec<usize>,
}

/// One analytic eigenpair, identified by its 1-based wave numbers.
#[derive(Debug, Clone, PartialEq)]
pub struct FdMode {
    pub value: f64,
    pub waves: Vec<usize>,
}

impl FdGrid {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.is_empty() || dims.iter().any(|&d| d == 0) {
            return Err(Error::arg(format!("grid dimensions must all be >= 1, got {dims:?}")));
        }
        Ok(Self { dims })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn matrix(&self) -> Result<SparseSymmetricMatrix> {
        let n = self.len();
        let diag = 2.0 * self.dims.len() as f64;
        let mut strides = Vec::with_capacity(self.dims.len());
        let mut s = 1;
        for &d in &self.dims {
            strides.push(s);
            s *= d;
        }
        let mut entries = Vec::with_capacity(n * (2 * self.dims.len() + 1));
        for node in 0..n {
            let mut below: Vec<((usize, usize), f64)> = Vec::new();
            let mut above: Vec<((usize, usize), f64)> = Vec::new();
            for (axis, &d) in self.dims.iter().enumerate() {
                let coord = (node / strides[axis]) % d;
                if coord > 0 {
                    below.push(((node, node - strides[axis]), -1.0));
                }
                if coord + 1 < d {
                    above.push(((node, node + strides[axis]), -1.0));
                }
            }
            below.sort_by_key(|e| e.0);
            above.sort_by_key(|e| e.0);
            entries.extend(below);
            entries.push(((node, node), diag));
            entries.extend(above);
        }
        Ok(SparseSymmetricMatrix::from_sorted(n, entries))
    }

    pub fn mode_value(&self, waves: &[usize]) -> f64 {
        self.dims
            .iter()
            .zip(waves)
            .map(|(&d, &k)| 2.0 - 2.0 * (k as f64 * PI / (d as f64 + 1.0)).cos())
            .sum()
    }

    /// All analytic eigenpairs, descending by eigenvalue.
    pub fn modes_desc(&self) -> Vec<FdMode> {
        let n = self.len();
        let mut modes = Vec::with_capacity(n);
        let mut waves = vec![1usize; self.dims.len()];
        for _ in 0..n {
            modes.push(FdMode { value: self.mode_value(&waves), waves: waves.clone() });
            for (axis, w) in waves.iter_mut().enumerate() {
                if *w < self.dims[axis] {
                    *w += 1;
                    break;
                }
                *w = 1;
            }
        }
        modes.sort_by(|a, b| b.value.total_cmp(&a.value));
        modes
    }

    /// Unit-norm eigenvector for the given wave numbers.
    pub fn mode_vector(&self, waves: &[usize]) -> Array1<f64> {
        let n = self.len();
        let norm: f64 = self.dims.iter().map(|&d| (d as f64 + 1.0) / 2.0).product::<f64>().sqrt();
        let mut v = Array1::zeros(n);
        for (node, out) in v.iter_mut().enumerate() {
            let mut rest = node;
            let mut val = 1.0;
            for (&d, &k) in self.dims.iter().zip(waves) {
                let coord = rest % d;
                rest /= d;
                val *= ((coord + 1) as f64 * k as f64 * PI / (d as f64 + 1.0)).sin();
            }
            *out = val / norm;
        }
        v
    }
}
