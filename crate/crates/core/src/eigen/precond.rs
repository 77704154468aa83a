//! Preconditioners for the stiffness operator.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::sparse::SparseSymMatrix;

pub trait Preconditioner: Sync {
    /// `out ≈ A⁻¹ r`.
    fn apply(&self, r: &[f64], out: &mut [f64]);
}

/// Inverse diagonal.
#[derive(Debug, Clone)]
pub struct Jacobi {
    inv_diag: Vec<f64>,
}

impl Jacobi {
    pub fn new(a: &SparseSymMatrix) -> Result<Self> {
        let d = a.diagonal();
        if let Some((i, &v)) = d.iter().enumerate().find(|(_, v)| **v <= 0.0) {
            return Err(Error::NotPositiveDefinite { pivot: i, value: v });
        }
        Ok(Jacobi { inv_diag: d.iter().map(|v| 1.0 / v).collect() })
    }
}

impl Preconditioner for Jacobi {
    fn apply(&self, r: &[f64], out: &mut [f64]) {
        for ((o, x), d) in out.iter_mut().zip(r).zip(&self.inv_diag) {
            *o = x * d;
        }
    }
}

/// Reverse Cuthill–McKee ordering; `perm[new] = old`.
pub fn reverse_cuthill_mckee(a: &SparseSymMatrix) -> Vec<usize> {
    let n = a.dim();
    let (row_ptr, col_idx, _) = a.csr();
    let neighbours = |i: usize| col_idx[row_ptr[i]..row_ptr[i + 1]].iter().copied().filter(move |&j| j != i);
    let degree: Vec<usize> = (0..n).map(|i| neighbours(i).count()).collect();

    // breadth-first levels from `root`, restricted to unvisited nodes
    let bfs = |root: usize, visited: &[bool]| -> Vec<Vec<usize>> {
        let mut seen = visited.to_vec();
        seen[root] = true;
        let mut levels = vec![vec![root]];
        loop {
            let mut next = Vec::new();
            for &u in levels.last().unwrap() {
                for v in neighbours(u) {
                    if !seen[v] {
                        seen[v] = true;
                        next.push(v);
                    }
                }
            }
            if next.is_empty() {
                return levels;
            }
            levels.push(next);
        }
    };

    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    for start in 0..n {
        if visited[start] {
            continue;
        }
        // pseudo-peripheral root: walk to a minimum-degree node of the last level
        let mut root = start;
        let mut depth = bfs(root, &visited).len();
        loop {
            let levels = bfs(root, &visited);
            let cand = *levels.last().unwrap().iter().min_by_key(|&&v| (degree[v], v)).unwrap();
            let d = bfs(cand, &visited).len();
            if d > depth {
                root = cand;
                depth = d;
            } else {
                break;
            }
        }
        let mut queue = VecDeque::from([root]);
        visited[root] = true;
        while let Some(u) = queue.pop_front() {
            order.push(u);
            let mut nb: Vec<usize> = neighbours(u).filter(|&v| !visited[v]).collect();
            nb.sort_by_key(|&v| (degree[v], v));
            for v in nb {
                visited[v] = true;
                queue.push_back(v);
            }
        }
    }
    order.reverse();
    order
}

/// Exact Cholesky factor of A stored by rows within the envelope of a
/// bandwidth-reducing permutation.
#[derive(Debug, Clone)]
pub struct EnvelopeCholesky {
    perm: Vec<usize>,
    first: Vec<usize>,
    offset: Vec<usize>,
    values: Vec<f64>,
}

impl EnvelopeCholesky {
    pub fn new(a: &SparseSymMatrix) -> Result<Self> {
        let n = a.dim();
        let perm = reverse_cuthill_mckee(a);
        let mut inv = vec![0usize; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let mut first: Vec<usize> = (0..n).collect();
        for &(i, j, _) in a.entries() {
            let (r, c) = (inv[i].max(inv[j]), inv[i].min(inv[j]));
            first[r] = first[r].min(c);
        }
        let mut offset = vec![0usize; n + 1];
        for i in 0..n {
            offset[i + 1] = offset[i] + (i - first[i] + 1);
        }
        let mut values = vec![0.0; offset[n]];
        for &(i, j, v) in a.entries() {
            let (r, c) = (inv[i].max(inv[j]), inv[i].min(inv[j]));
            values[offset[r] + c - first[r]] = v;
        }
        for i in 0..n {
            let fi = first[i];
            for j in fi..=i {
                let fj = first[j];
                let lo = fi.max(fj);
                let mut s = values[offset[i] + j - fi];
                let ri = &values[offset[i] + lo - fi..offset[i] + j - fi];
                let rj = &values[offset[j] + lo - fj..offset[j] + j - fj];
                for (x, y) in ri.iter().zip(rj) {
                    s -= x * y;
                }
                if j < i {
                    values[offset[i] + j - fi] = s / values[offset[j] + j - fj];
                } else {
                    if s <= 0.0 || !s.is_finite() {
                        return Err(Error::NotPositiveDefinite { pivot: perm[i], value: s });
                    }
                    values[offset[i] + i - fi] = s.sqrt();
                }
            }
        }
        Ok(EnvelopeCholesky { perm, first, offset, values })
    }

    /// Stored entries of the factor.
    pub fn envelope_size(&self) -> usize {
        self.values.len()
    }

    /// Solves A x = b.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = vec![0.0; b.len()];
        self.apply(b, &mut x);
        x
    }
}

impl Preconditioner for EnvelopeCholesky {
    fn apply(&self, r: &[f64], out: &mut [f64]) {
        let n = self.perm.len();
        let mut y: Vec<f64> = self.perm.iter().map(|&p| r[p]).collect();
        for i in 0..n {
            let fi = self.first[i];
            let row = &self.values[self.offset[i]..self.offset[i + 1]];
            let mut s = y[i];
            for (l, yk) in row[..i - fi].iter().zip(&y[fi..i]) {
                s -= l * yk;
            }
            y[i] = s / row[i - fi];
        }
        for i in (0..n).rev() {
            let fi = self.first[i];
            let row = &self.values[self.offset[i]..self.offset[i + 1]];
            let xi = y[i] / row[i - fi];
            y[i] = xi;
            for (yk, l) in y[fi..i].iter_mut().zip(&row[..i - fi]) {
                *yk -= l * xi;
            }
        }
        for (new, &old) in self.perm.iter().enumerate() {
            out[old] = y[new];
        }
    }
}
