//! Symmetric sparse matrices stored by their upper triangle.

use std::io::Write;

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Rows at or above this count use a parallel matrix-vector product.
const PARALLEL_ROWS: usize = 8192;

/// Symmetric matrix with coordinate-indexed upper-triangle nonzeros.
///
/// A full (both triangles) CSR copy is kept for products; each output row is
/// accumulated in a fixed order so results do not depend on thread count.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSymMatrix {
    dim: usize,
    /// Sorted by (row, col), row <= col, no zeros, no duplicates.
    upper: Vec<(usize, usize, f64)>,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseSymMatrix {
    /// Builds from upper-triangle triplets. Duplicates are summed in input
    /// order; entries that sum to exactly zero are dropped.
    pub fn from_triplets(dim: usize, mut triplets: Vec<(usize, usize, f64)>) -> Result<Self> {
        for &(i, j, _) in &triplets {
            if i > j || j >= dim {
                return Err(Error::InvalidArgument(format!(
                    "triplet ({i}, {j}) is not in the upper triangle of a {dim}x{dim} matrix"
                )));
            }
        }
        // stable sort keeps the summation order of duplicates deterministic
        triplets.sort_by_key(|&(i, j, _)| (i, j));
        let mut upper: Vec<(usize, usize, f64)> = Vec::with_capacity(triplets.len());
        for (i, j, v) in triplets {
            match upper.last_mut() {
                Some(last) if last.0 == i && last.1 == j => last.2 += v,
                _ => upper.push((i, j, v)),
            }
        }
        upper.retain(|e| e.2 != 0.0);
        Ok(Self::from_upper(dim, upper))
    }

    fn from_upper(dim: usize, upper: Vec<(usize, usize, f64)>) -> Self {
        let mut counts = vec![0usize; dim];
        for &(i, j, _) in &upper {
            counts[i] += 1;
            if i != j {
                counts[j] += 1;
            }
        }
        let mut row_ptr = vec![0usize; dim + 1];
        for i in 0..dim {
            row_ptr[i + 1] = row_ptr[i] + counts[i];
        }
        let nnz = row_ptr[dim];
        let mut col_idx = vec![0usize; nnz];
        let mut values = vec![0.0; nnz];
        let mut next = row_ptr.clone();
        // lower-triangle part of row j comes from entries (i, j) with i < j,
        // visited in increasing i, so every row ends up column-sorted
        for &(i, j, v) in &upper {
            if i != j {
                let p = next[j];
                col_idx[p] = i;
                values[p] = v;
                next[j] += 1;
            }
        }
        for &(i, j, v) in &upper {
            let p = next[i];
            col_idx[p] = j;
            values[p] = v;
            next[i] += 1;
        }
        SparseSymMatrix { dim, upper, row_ptr, col_idx, values }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_upper(dim, (0..dim).map(|i| (i, i, 1.0)).collect())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Upper-triangle nonzeros, sorted by (row, col).
    pub fn entries(&self) -> &[(usize, usize, f64)] {
        &self.upper
    }

    pub fn nnz_upper(&self) -> usize {
        self.upper.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (r, c) = if i <= j { (i, j) } else { (j, i) };
        let row = &self.col_idx[self.row_ptr[r]..self.row_ptr[r + 1]];
        match row.binary_search(&c) {
            Ok(p) => self.values[self.row_ptr[r] + p],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    /// Full CSR view: (row_ptr, col_idx, values), rows column-sorted.
    pub fn csr(&self) -> (&[usize], &[usize], &[f64]) {
        (&self.row_ptr, &self.col_idx, &self.values)
    }

    #[inline]
    fn row_dot(&self, i: usize, x: &[f64]) -> f64 {
        let (lo, hi) = (self.row_ptr[i], self.row_ptr[i + 1]);
        let mut s = 0.0;
        for p in lo..hi {
            s += self.values[p] * x[self.col_idx[p]];
        }
        s
    }

    /// y = A x.
    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.dim);
        assert_eq!(y.len(), self.dim);
        if self.dim >= PARALLEL_ROWS {
            y.par_iter_mut().enumerate().for_each(|(i, yi)| *yi = self.row_dot(i, x));
        } else {
            for (i, yi) in y.iter_mut().enumerate() {
                *yi = self.row_dot(i, x);
            }
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.dim];
        self.mul_vec_into(x, &mut y);
        y
    }

    /// xᵀ A x.
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        let y = self.mul_vec(x);
        x.iter().zip(&y).map(|(a, b)| a * b).sum()
    }

    /// Returns `self + c * other`.
    pub fn add_scaled(&self, c: f64, other: &SparseSymMatrix) -> Result<SparseSymMatrix> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: other.dim });
        }
        let mut t = self.upper.clone();
        t.extend(other.upper.iter().map(|&(i, j, v)| (i, j, c * v)));
        Self::from_triplets(self.dim, t)
    }

    /// Multiplies every entry by `c`.
    pub fn scaled(&self, c: f64) -> SparseSymMatrix {
        Self::from_upper(self.dim, self.upper.iter().map(|&(i, j, v)| (i, j, c * v)).filter(|e| e.2 != 0.0).collect())
    }

    /// Dense row-major copy.
    pub fn to_dense(&self) -> Vec<f64> {
        let n = self.dim;
        let mut d = vec![0.0; n * n];
        for &(i, j, v) in &self.upper {
            d[i * n + j] = v;
            d[j * n + i] = v;
        }
        d
    }

    /// Matrix Market coordinate format, `real symmetric`. The standard stores
    /// the lower triangle with one-based indices.
    pub fn write_matrix_market<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "%%MatrixMarket matrix coordinate real symmetric")?;
        writeln!(out, "{} {} {}", self.dim, self.dim, self.upper.len())?;
        let mut lower: Vec<(usize, usize, f64)> = self.upper.iter().map(|&(i, j, v)| (j, i, v)).collect();
        // column-major order of the lower triangle
        lower.sort_by_key(|&(r, c, _)| (c, r));
        for (r, c, v) in lower {
            writeln!(out, "{} {} {:.16e}", r + 1, c + 1, v)?;
        }
        Ok(())
    }
}
