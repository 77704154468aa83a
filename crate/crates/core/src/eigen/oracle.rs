use crate::assemble::DiscreteProblem;
use crate::dense::{cholesky, solve_lower, solve_lower_transpose, symmetric_eigen_ql};
use crate::error::{Error, Result};

use super::{relative_residual, Spectrum};

/// Largest dimension accepted by [`dense_oracle`].
pub const DENSE_ORACLE_LIMIT: usize = 600;

/// Smallest `k` eigenpairs by dense reduction: M = L Lᵀ, eigen-decompose
/// L⁻¹ A L⁻ᵀ with Householder + QL, back-transform u = L⁻ᵀ y.
pub fn dense_oracle(dp: &DiscreteProblem, k: usize) -> Result<Spectrum> {
    let n = dp.dim();
    if n > DENSE_ORACLE_LIMIT {
        return Err(Error::TooLarge { dimension: n, limit: DENSE_ORACLE_LIMIT });
    }
    if k == 0 || k > n {
        return Err(Error::TooManyEigenpairs { requested: k, dimension: n });
    }
    let a = dp.stiffness.to_dense();
    let l = cholesky(&dp.mass.to_dense(), n)?;
    // C = L⁻¹ A L⁻ᵀ: columns of L⁻¹A, then rows
    let mut b = vec![0.0; n * n];
    let mut col = vec![0.0; n];
    for j in 0..n {
        for i in 0..n {
            col[i] = a[i * n + j];
        }
        solve_lower(&l, n, &mut col);
        for i in 0..n {
            b[i * n + j] = col[i];
        }
    }
    let mut c = vec![0.0; n * n];
    for i in 0..n {
        col.copy_from_slice(&b[i * n..(i + 1) * n]);
        solve_lower(&l, n, &mut col);
        c[i * n..(i + 1) * n].copy_from_slice(&col);
    }
    for i in 0..n {
        for j in i + 1..n {
            let v = 0.5 * (c[i * n + j] + c[j * n + i]);
            c[i * n + j] = v;
            c[j * n + i] = v;
        }
    }
    let eig = symmetric_eigen_ql(&c, n)?;
    let mut values = Vec::with_capacity(k);
    let mut vectors = Vec::with_capacity(k);
    let mut residuals = Vec::with_capacity(k);
    for j in 0..k {
        let mut u = eig.vector(j);
        solve_lower_transpose(&l, n, &mut u);
        residuals.push(relative_residual(dp, eig.values[j], &u));
        values.push(eig.values[j]);
        vectors.push(u);
    }
    Ok(Spectrum {
        eigenvalues: values,
        eigenvectors: vectors,
        residuals,
        converged: vec![true; k],
        k,
        iterations: 0,
        accuracy: None,
    })
}
