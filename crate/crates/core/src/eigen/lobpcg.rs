//! Locally optimal block preconditioned conjugate gradient.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dense::symmetric_eigen_jacobi;
use crate::error::{Error, Result};
use crate::sparse::SparseSymMatrix;

use super::block::{combine, dot, norm, sym_gram, Block};
use super::precond::{EnvelopeCholesky, Jacobi, Preconditioner};
use super::{PreconditionerKind, SolverOptions, Spectrum};

/// Directions whose scaled Gram eigenvalue falls below this fraction of the
/// largest are treated as linearly dependent and dropped.
const DROP_TOL: f64 = 1e-11;

struct Ritz {
    /// Row-major `width × want` coefficients.
    coeffs: Vec<f64>,
    values: Vec<f64>,
}

/// Rayleigh–Ritz on span(S) with an SVQB-type basis: scale S to unit
/// M-norm columns, eigen-decompose the scaled Gram matrix, keep the
/// well-conditioned directions and solve the projected standard problem.
fn rayleigh_ritz(s: &Block, as_: &Block, ms: &Block, want: usize) -> Result<Option<Ritz>> {
    let p = s.width();
    let gm = sym_gram(s, ms);
    let ga = sym_gram(s, as_);
    let d: Vec<f64> = (0..p)
        .map(|i| {
            let g = gm[i * p + i];
            if g > 0.0 {
                1.0 / g.sqrt()
            } else {
                0.0
            }
        })
        .collect();
    let mut scaled = vec![0.0; p * p];
    for i in 0..p {
        for j in 0..p {
            scaled[i * p + j] = d[i] * gm[i * p + j] * d[j];
        }
    }
    let eig = symmetric_eigen_jacobi(&scaled, p)?;
    let smax = eig.values.iter().cloned().fold(0.0, f64::max);
    let keep: Vec<usize> = (0..p).filter(|&j| eig.values[j] > DROP_TOL * smax).collect();
    let r = keep.len();
    if r < want {
        return Ok(None);
    }
    // Q = D U Σ^{-1/2}, p × r
    let mut q = vec![0.0; p * r];
    for i in 0..p {
        for (c, &j) in keep.iter().enumerate() {
            q[i * r + c] = d[i] * eig.vectors[i * p + j] / eig.values[j].sqrt();
        }
    }
    // H = Qᵀ G_A Q
    let mut gq = vec![0.0; p * r];
    for i in 0..p {
        for c in 0..r {
            let mut acc = 0.0;
            for l in 0..p {
                acc += ga[i * p + l] * q[l * r + c];
            }
            gq[i * r + c] = acc;
        }
    }
    let mut h = vec![0.0; r * r];
    for a in 0..r {
        for b in a..r {
            let mut acc = 0.0;
            for i in 0..p {
                acc += q[i * r + a] * gq[i * r + b];
            }
            h[a * r + b] = acc;
            h[b * r + a] = acc;
        }
    }
    let he = symmetric_eigen_jacobi(&h, r)?;
    let mut coeffs = vec![0.0; p * want];
    for i in 0..p {
        for j in 0..want {
            let mut acc = 0.0;
            for c in 0..r {
                acc += q[i * r + c] * he.vectors[c * r + j];
            }
            coeffs[i * want + j] = acc;
        }
    }
    Ok(Some(Ritz { coeffs, values: he.values[..want].to_vec() }))
}

fn relative_residuals(ax: &Block, mx: &Block, theta: &[f64]) -> (Block, Vec<f64>) {
    let mut r = Block::new(ax.n);
    let mut res = Vec::with_capacity(theta.len());
    for (i, &t) in theta.iter().enumerate() {
        let ri: Vec<f64> = ax.cols[i].iter().zip(&mx.cols[i]).map(|(a, m)| a - t * m).collect();
        let denom = norm(&ax.cols[i]) + t.abs() * norm(&mx.cols[i]);
        res.push(if denom > 0.0 { norm(&ri) / denom } else { 0.0 });
        r.cols.push(ri);
    }
    (r, res)
}

pub(crate) fn lobpcg(a: &SparseSymMatrix, m: &SparseSymMatrix, k: usize, opts: &SolverOptions) -> Result<Spectrum> {
    let n = a.dim();
    if m.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, got: m.dim() });
    }
    if k == 0 || k > n {
        return Err(Error::TooManyEigenpairs { requested: k, dimension: n });
    }
    let bs = (k + opts.guard.unwrap_or(k.min(10))).min(n);
    let precond: Box<dyn Preconditioner> = match opts.preconditioner {
        PreconditionerKind::Jacobi => Box::new(Jacobi::new(a)?),
        PreconditionerKind::Cholesky => Box::new(EnvelopeCholesky::new(a)?),
    };

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut x = Block { n, cols: (0..bs).map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect() };
    let mut p: Option<Block> = None;
    let mut iterations = 0;

    loop {
        // Rayleigh–Ritz on span(X) keeps X M-orthonormal and its products fresh.
        let (ax0, mx0) = (x.apply(a), x.apply(m));
        let ritz = rayleigh_ritz(&x, &ax0, &mx0, bs)?
            .ok_or_else(|| Error::InvalidArgument("iteration block lost rank".into()))?;
        x = combine(&x, &ritz.coeffs, bs);
        let ax = combine(&ax0, &ritz.coeffs, bs);
        let mx = combine(&mx0, &ritz.coeffs, bs);
        let theta = ritz.values;
        let (r, res) = relative_residuals(&ax, &mx, &theta);

        let done = res[..k].iter().all(|&v| v <= opts.tol);
        if done || iterations >= opts.max_iter {
            let spectrum = Spectrum {
                eigenvalues: theta[..k].to_vec(),
                eigenvectors: x.cols[..k].to_vec(),
                residuals: res[..k].to_vec(),
                converged: res[..k].iter().map(|&v| v <= opts.tol).collect(),
                k,
                iterations,
                accuracy: None,
            };
            if done {
                return Ok(spectrum);
            }
            return Err(Error::NotConverged {
                iterations,
                converged: spectrum.converged.iter().filter(|c| **c).count(),
                requested: k,
                partial: Box::new(spectrum),
            });
        }
        iterations += 1;

        let active: Vec<usize> = (0..bs).filter(|&i| res[i] > opts.tol).collect();
        let mut w = Block::new(n);
        for &i in &active {
            let mut wi = vec![0.0; n];
            precond.apply(&r.cols[i], &mut wi);
            // M-orthogonalize against X
            for j in 0..bs {
                let c = dot(&mx.cols[j], &wi);
                for (o, xv) in wi.iter_mut().zip(&x.cols[j]) {
                    *o -= c * xv;
                }
            }
            w.cols.push(wi);
        }

        let mut s = x.clone();
        let mut as_ = ax;
        let mut ms = mx;
        s.extend(&w);
        as_.extend(&w.apply(a));
        ms.extend(&w.apply(m));
        let with_p = p.as_ref().map(|pb| pb.select(&active));
        let base_width = s.width();
        if let Some(pa) = &with_p {
            s.extend(pa);
            as_.extend(&pa.apply(a));
            ms.extend(&pa.apply(m));
        }
        let ritz = match rayleigh_ritz(&s, &as_, &ms, bs)? {
            Some(r) => r,
            None => {
                // drop the search directions once and retry
                s.cols.truncate(base_width);
                as_.cols.truncate(base_width);
                ms.cols.truncate(base_width);
                rayleigh_ritz(&s, &as_, &ms, bs)?
                    .ok_or_else(|| Error::InvalidArgument("search subspace lost rank".into()))?
            }
        };
        let mut c_dir = ritz.coeffs.clone();
        for v in c_dir[..bs * bs].iter_mut() {
            *v = 0.0;
        }
        x = combine(&s, &ritz.coeffs, bs);
        p = Some(combine(&s, &c_dir, bs));
    }
}
