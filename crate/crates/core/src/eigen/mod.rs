//! Smallest eigenpairs of the generalized problem A u = λ M u.

mod block;
mod lobpcg;
mod oracle;
mod precond;

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::assemble::DiscreteProblem;
use crate::error::Result;

pub use oracle::{dense_oracle, DENSE_ORACLE_LIMIT};
pub use precond::{EnvelopeCholesky, Jacobi, Preconditioner};

/// Sorted eigenvalues with M-orthonormal eigenvectors.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    /// One vector per eigenvalue, indexed by unknown.
    pub eigenvectors: Vec<Vec<f64>>,
    /// ‖Au − λMu‖ / (‖Au‖ + |λ|‖Mu‖).
    pub residuals: Vec<f64>,
    pub converged: Vec<bool>,
    /// Number of pairs requested.
    pub k: usize,
    pub iterations: usize,
    /// Relative accuracy estimate per eigenvalue, when a convergence study
    /// has provided one.
    pub accuracy: Option<Vec<f64>>,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn all_converged(&self) -> bool {
        self.converged.iter().all(|c| *c)
    }

    /// Leading run of converged eigenvalues.
    pub fn converged_eigenvalues(&self) -> &[f64] {
        let count = self.converged.iter().take_while(|c| **c).count();
        &self.eigenvalues[..count]
    }

    /// Groups of indices whose eigenvalues agree within `rel_gap`
    /// (relative to the larger value). Used only for reporting.
    pub fn clusters(&self, rel_gap: f64) -> Vec<Vec<usize>> {
        let mut groups: Vec<Vec<usize>> = Vec::new();
        for (i, &lam) in self.eigenvalues.iter().enumerate() {
            match groups.last_mut() {
                Some(g) => {
                    let prev = self.eigenvalues[*g.last().unwrap()];
                    if (lam - prev).abs() <= rel_gap * lam.abs().max(prev.abs()) {
                        g.push(i);
                    } else {
                        groups.push(vec![i]);
                    }
                }
                None => groups.push(vec![i]),
            }
        }
        groups
    }

    /// CSV with columns `index,lambda,residual,converged`; one-based index,
    /// 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "index,lambda,residual,converged")?;
        for i in 0..self.len() {
            writeln!(out, "{},{:.16e},{:.16e},{}", i + 1, self.eigenvalues[i], self.residuals[i], self.converged[i])?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PreconditionerKind {
    /// Inverse diagonal of A.
    Jacobi,
    /// Exact envelope Cholesky factorization of A under reverse Cuthill–McKee ordering.
    Cholesky,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
    pub preconditioner: PreconditionerKind,
    /// Extra block columns; defaults to min(k, 10).
    pub guard: Option<usize>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: 1e-8,
            max_iter: 5000,
            seed: 0x005e_ed0f_1ab0,
            preconditioner: PreconditionerKind::Cholesky,
            guard: None,
        }
    }
}

impl SolverOptions {
    pub fn with_tol(tol: f64) -> Self {
        SolverOptions { tol, ..Default::default() }
    }
}

/// Smallest `k` eigenpairs by block preconditioned conjugate gradient
/// iteration with default options and the given residual tolerance.
pub fn solve_smallest(dp: &DiscreteProblem, k: usize, tol: f64) -> Result<Spectrum> {
    solve_smallest_with(dp, k, &SolverOptions::with_tol(tol))
}

pub fn solve_smallest_with(dp: &DiscreteProblem, k: usize, opts: &SolverOptions) -> Result<Spectrum> {
    lobpcg::lobpcg(&dp.stiffness, &dp.mass, k, opts)
}

/// Relative residual ‖Au − λMu‖ / (‖Au‖ + |λ|‖Mu‖).
pub fn relative_residual(dp: &DiscreteProblem, lambda: f64, u: &[f64]) -> f64 {
    let au = dp.stiffness.mul_vec(u);
    let mu = dp.mass.mul_vec(u);
    let nrm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let r: Vec<f64> = au.iter().zip(&mu).map(|(a, m)| a - lambda * m).collect();
    nrm(&r) / (nrm(&au) + lambda.abs() * nrm(&mu))
}
