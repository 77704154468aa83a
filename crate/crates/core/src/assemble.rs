//! P1 discretization of the weighted weak form
//!
//! ```text
//! a(u, v) = ∫ ⟨T∇u, ∇v⟩ e^{-η} dΩ,     m(u, v) = ∫ u v e^{-η} dΩ
//! ```
//!
//! with homogeneous Dirichlet conditions imposed by eliminating boundary
//! vertices.

use crate::coeffs::CoefficientField;
use crate::domain::Mesh;
use crate::error::{Error, Result};
use crate::geometry::{dot, Point, Vector};
use crate::sparse::SparseSymMatrix;

const GAUSS_2: f64 = 0.577_350_269_189_625_8; // 1/sqrt(3)

/// Quadrature points and weights of element `e`: two-point Gauss on
/// segments, the edge-midpoint rule (exact for quadratics) on triangles.
pub fn quadrature_points(mesh: &Mesh, e: usize) -> Vec<(Point, f64)> {
    let nodes = mesh.element(e);
    let v = mesh.vertices();
    let vol = mesh.element_volumes()[e];
    if mesh.dim() == 1 {
        let (x0, x1) = (v[nodes[0]][0], v[nodes[1]][0]);
        let mid = 0.5 * (x0 + x1);
        let half = 0.5 * (x1 - x0);
        vec![([mid - GAUSS_2 * half, 0.0], 0.5 * vol), ([mid + GAUSS_2 * half, 0.0], 0.5 * vol)]
    } else {
        let p = |i: usize| v[nodes[i]];
        let m = |a: Point, b: Point| [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])];
        let w = vol / 3.0;
        vec![(m(p(0), p(1)), w), (m(p(1), p(2)), w), (m(p(2), p(0)), w)]
    }
}

/// Barycentric coordinates of the quadrature points, matching the order of
/// [`quadrature_points`].
fn quadrature_shape_values(dim: usize) -> Vec<Vec<f64>> {
    if dim == 1 {
        let a = 0.5 * (1.0 + GAUSS_2);
        let b = 0.5 * (1.0 - GAUSS_2);
        vec![vec![a, b], vec![b, a]]
    } else {
        vec![vec![0.5, 0.5, 0.0], vec![0.0, 0.5, 0.5], vec![0.5, 0.0, 0.5]]
    }
}

/// Constant gradients of the P1 basis on element `e`.
fn shape_gradients(mesh: &Mesh, e: usize) -> Vec<Vector> {
    let nodes = mesh.element(e);
    let v = mesh.vertices();
    if mesh.dim() == 1 {
        let h = v[nodes[1]][0] - v[nodes[0]][0];
        vec![[-1.0 / h, 0.0], [1.0 / h, 0.0]]
    } else {
        let (a, b, c) = (v[nodes[0]], v[nodes[1]], v[nodes[2]]);
        let twice_area = 2.0 * mesh.element_volumes()[e];
        // ∇λ_i = rot90(opposite edge) / 2|K|
        vec![
            [(b[1] - c[1]) / twice_area, (c[0] - b[0]) / twice_area],
            [(c[1] - a[1]) / twice_area, (a[0] - c[0]) / twice_area],
            [(a[1] - b[1]) / twice_area, (b[0] - a[0]) / twice_area],
        ]
    }
}

/// Stiffness and mass matrices on the interior (unknown) vertices.
#[derive(Debug, Clone)]
pub struct DiscreteProblem {
    pub stiffness: SparseSymMatrix,
    pub mass: SparseSymMatrix,
    /// Mesh vertex → unknown index, `None` on the boundary.
    pub vertex_to_unknown: Vec<Option<usize>>,
    /// Unknown index → mesh vertex.
    pub unknown_to_vertex: Vec<usize>,
}

impl DiscreteProblem {
    pub fn dim(&self) -> usize {
        self.stiffness.dim()
    }

    /// Replaces the matrices, keeping the index maps. Used for shifted and
    /// scaled variants of a problem.
    pub fn with_matrices(&self, stiffness: SparseSymMatrix, mass: SparseSymMatrix) -> Result<DiscreteProblem> {
        if stiffness.dim() != self.dim() || mass.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: stiffness.dim() });
        }
        Ok(DiscreteProblem { stiffness, mass, ..self.clone() })
    }

    /// Builds a problem directly from matrices, with unknown i ↔ vertex i.
    pub fn from_matrices(stiffness: SparseSymMatrix, mass: SparseSymMatrix) -> Result<DiscreteProblem> {
        if stiffness.dim() != mass.dim() {
            return Err(Error::DimensionMismatch { expected: stiffness.dim(), got: mass.dim() });
        }
        let n = stiffness.dim();
        Ok(DiscreteProblem {
            stiffness,
            mass,
            vertex_to_unknown: (0..n).map(Some).collect(),
            unknown_to_vertex: (0..n).collect(),
        })
    }

    /// Extends an unknown vector to all mesh vertices with zero boundary values.
    pub fn extend_to_mesh(&self, u: &[f64]) -> Vec<f64> {
        self.vertex_to_unknown.iter().map(|idx| idx.map_or(0.0, |i| u[i])).collect()
    }

    /// Restricts a vertex-indexed vector to the unknowns.
    pub fn restrict(&self, values: &[f64]) -> Vec<f64> {
        self.unknown_to_vertex.iter().map(|&v| values[v]).collect()
    }
}

/// Assembles the weighted stiffness and mass matrices.
pub fn assemble(mesh: &Mesh, coeffs: &CoefficientField) -> Result<DiscreteProblem> {
    if coeffs.dim() != mesh.dim() {
        return Err(Error::DimensionMismatch { expected: mesh.dim(), got: coeffs.dim() });
    }
    let mut vertex_to_unknown = vec![None; mesh.num_vertices()];
    let mut unknown_to_vertex = Vec::with_capacity(mesh.num_interior());
    for (v, slot) in vertex_to_unknown.iter_mut().enumerate() {
        if !mesh.is_boundary(v) {
            *slot = Some(unknown_to_vertex.len());
            unknown_to_vertex.push(v);
        }
    }
    let dim = mesh.dim();
    let npe = mesh.nodes_per_element();
    let shape = quadrature_shape_values(dim);
    let mut a_trip = Vec::with_capacity(mesh.num_elements() * npe * (npe + 1) / 2);
    let mut m_trip = Vec::with_capacity(a_trip.capacity());
    let mut ke = vec![0.0; npe * npe];
    let mut me = vec![0.0; npe * npe];

    for e in 0..mesh.num_elements() {
        let grads = shape_gradients(mesh, e);
        ke.iter_mut().for_each(|x| *x = 0.0);
        me.iter_mut().for_each(|x| *x = 0.0);
        for (q, (xq, wq)) in quadrature_points(mesh, e).into_iter().enumerate() {
            let t = coeffs.tensor(&xq);
            let (lo, _) = t.eigen_bounds(dim);
            if lo <= 0.0 || lo.is_nan() {
                return Err(Error::NotSpd { point: xq, min_eigenvalue: lo });
            }
            let w = wq * (-coeffs.eta(&xq)).exp();
            for a in 0..npe {
                let tg = t.apply(&grads[a]);
                for b in a..npe {
                    ke[a * npe + b] += w * dot(&tg, &grads[b]);
                    me[a * npe + b] += w * shape[q][a] * shape[q][b];
                }
            }
        }
        let nodes = mesh.element(e);
        for a in 0..npe {
            let Some(ia) = vertex_to_unknown[nodes[a]] else { continue };
            for b in a..npe {
                let Some(ib) = vertex_to_unknown[nodes[b]] else { continue };
                let (r, c) = if ia <= ib { (ia, ib) } else { (ib, ia) };
                a_trip.push((r, c, ke[a * npe + b]));
                m_trip.push((r, c, me[a * npe + b]));
            }
        }
    }
    let n = unknown_to_vertex.len();
    Ok(DiscreteProblem {
        stiffness: SparseSymMatrix::from_triplets(n, a_trip)?,
        mass: SparseSymMatrix::from_triplets(n, m_trip)?,
        vertex_to_unknown,
        unknown_to_vertex,
    })
}

/// (vᵀAv)/(vᵀMv).
pub fn rayleigh_quotient(dp: &DiscreteProblem, v: &[f64]) -> Result<f64> {
    if v.len() != dp.dim() {
        return Err(Error::DimensionMismatch { expected: dp.dim(), got: v.len() });
    }
    let denom = dp.mass.quadratic_form(v);
    if denom <= 0.0 || denom.is_nan() {
        return Err(Error::ZeroVector("mass"));
    }
    Ok(dp.stiffness.quadratic_form(v) / denom)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffs::Preset;
    use crate::domain::{build_mesh, refine, DomainSpec};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn interval() -> DomainSpec {
        DomainSpec::Interval { a: 0.0, b: PI }
    }

    fn problem(preset: Preset, spec: DomainSpec, res: usize) -> DiscreteProblem {
        let mesh = build_mesh(&spec, res).unwrap();
        let coeffs = CoefficientField::preset(&preset, &spec).unwrap();
        assemble(&mesh, &coeffs).unwrap()
    }

    #[test]
    fn textbook_interval_matrices() {
        let dp = problem(Preset::Laplacian, interval(), 3);
        let h = PI / 3.0;
        assert_eq!(dp.dim(), 2);
        let close = |a: f64, b: f64| (a - b).abs() < 1e-14 * b.abs().max(1.0);
        assert!(close(dp.stiffness.get(0, 0), 2.0 / h));
        assert!(close(dp.stiffness.get(0, 1), -1.0 / h));
        assert!(close(dp.stiffness.get(1, 1), 2.0 / h));
        assert!(close(dp.mass.get(0, 0), 2.0 * h / 3.0));
        assert!(close(dp.mass.get(0, 1), h / 6.0));
    }

    #[test]
    fn const_tensor_scales_stiffness_only() {
        let base = problem(Preset::Laplacian, interval(), 3);
        let four = problem(Preset::ConstT { matrix: vec![vec![4.0]] }, interval(), 3);
        for (&(i, j, v), &(i4, j4, v4)) in base.stiffness.entries().iter().zip(four.stiffness.entries()) {
            assert_eq!((i, j), (i4, j4));
            assert_eq!(v4, 4.0 * v);
        }
        assert_eq!(base.mass, four.mass);
    }

    /// Independent oracles for the weighted entry A_00 = ∫ φ₀'² e^{-x} on
    /// a 3-element mesh of (0, π).
    #[test]
    fn drifted_entry_against_quadrature() {
        let dp = problem(Preset::DriftedLinear { c: 1.0 }, interval(), 3);
        let h = PI / 3.0;
        let g = 1.0 / 3f64.sqrt();
        // two-point Gauss by hand on [0, h] and [h, 2h]
        let gauss = |lo: f64| {
            let (m, r) = (lo + 0.5 * h, 0.5 * h);
            0.5 * h * ((-(m - g * r)).exp() + (-(m + g * r)).exp())
        };
        let by_hand = (gauss(0.0) + gauss(h)) / (h * h);
        let a00 = dp.stiffness.get(0, 0);
        assert!((a00 - by_hand).abs() <= 1e-14 * by_hand, "{a00} vs {by_hand}");

        // 1000-point composite Simpson of the exact integrand
        let n = 1000;
        let step = 2.0 * h / n as f64;
        let f = |x: f64| (-x).exp() / (h * h);
        let mut simpson = f(0.0) + f(2.0 * h);
        for i in 1..n {
            simpson += if i % 2 == 1 { 4.0 } else { 2.0 } * f(i as f64 * step);
        }
        simpson *= step / 3.0;
        let exact = (1.0 - (-2.0 * h).exp()) / (h * h);
        assert!((simpson - exact).abs() <= 1e-10 * exact);
        // two-point Gauss error on each element is h^5/4320 · max|f''''|
        let bound = 2.0 * h.powi(5) / 4320.0 / (h * h);
        assert!((a00 - exact).abs() <= bound, "{} > {bound}", (a00 - exact).abs());
    }

    #[test]
    fn symmetric_positive_definite() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let cases = [
            problem(Preset::GaussianSoliton, DomainSpec::Annulus { r_inner: 8f64.sqrt(), r_outer: 4.0 }, 4),
            problem(Preset::ScalarT { constant: 1.0, linear: 0.0, quadratic: 1.0 }, interval(), 16),
            problem(
                Preset::ConstT { matrix: vec![vec![2.0, 0.5], vec![0.5, 1.0]] },
                DomainSpec::Rectangle { ax: 0.0, bx: 1.0, ay: 0.0, by: 2.0 },
                6,
            ),
        ];
        for dp in cases {
            let (a, m) = (dp.stiffness.to_dense(), dp.mass.to_dense());
            let n = dp.dim();
            for i in 0..n {
                for j in 0..n {
                    assert_eq!(a[i * n + j].to_bits(), a[j * n + i].to_bits());
                    assert_eq!(m[i * n + j].to_bits(), m[j * n + i].to_bits());
                }
            }
            for _ in 0..100 {
                let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
                assert!(dp.mass.quadratic_form(&v) > 0.0);
                assert!(dp.stiffness.quadratic_form(&v) > 0.0);
            }
        }
    }

    #[test]
    fn weight_shift_scales_both_matrices() {
        let spec = interval();
        let mesh = build_mesh(&spec, 8).unwrap();
        let base = CoefficientField::custom(1, |x| x[0], |_| crate::geometry::SymTensor::IDENTITY);
        let shifted = CoefficientField::custom(1, |x| x[0] + 0.7, |_| crate::geometry::SymTensor::IDENTITY);
        let d0 = assemble(&mesh, &base).unwrap();
        let d1 = assemble(&mesh, &shifted).unwrap();
        let s = (-0.7f64).exp();
        for (e0, e1) in d0.stiffness.entries().iter().zip(d1.stiffness.entries()) {
            assert!((e1.2 - s * e0.2).abs() <= 1e-14 * e0.2.abs());
        }
        for (e0, e1) in d0.mass.entries().iter().zip(d1.mass.entries()) {
            assert!((e1.2 - s * e0.2).abs() <= 1e-14 * e0.2.abs());
        }
    }

    #[test]
    fn rayleigh_of_sine_interpolant() {
        let spec = interval();
        let mut mesh = build_mesh(&spec, 8).unwrap();
        let coeffs = CoefficientField::preset(&Preset::Laplacian, &spec).unwrap();
        let mut prev = f64::INFINITY;
        for _ in 0..5 {
            let dp = assemble(&mesh, &coeffs).unwrap();
            let nodal: Vec<f64> = mesh.vertices().iter().map(|p| p[0].sin()).collect();
            let rq = rayleigh_quotient(&dp, &dp.restrict(&nodal)).unwrap();
            assert!(rq >= 1.0 && rq < prev);
            prev = rq;
            mesh = refine(&mesh);
        }
        assert!(prev - 1.0 < 1e-4);
        let dp = problem(Preset::Laplacian, spec, 4);
        assert!(matches!(rayleigh_quotient(&dp, &[0.0; 3]), Err(Error::ZeroVector(_))));
        assert!(rayleigh_quotient(&dp, &[1.0; 2]).is_err());
    }

    #[test]
    fn square_stiffness_row_sums() {
        // Laplacian on a structured grid: rows of interior vertices away from
        // the boundary sum to zero before elimination, and the matrix is
        // independent of the diagonal orientation in the five-point sense.
        let dp = problem(Preset::Laplacian, DomainSpec::Rectangle { ax: 0.0, bx: 1.0, ay: 0.0, by: 1.0 }, 4);
        assert_eq!(dp.dim(), 9);
        let centre = 4;
        let row_sum: f64 = (0..9).map(|j| dp.stiffness.get(centre, j)).sum();
        assert!(row_sum.abs() < 1e-14);
        assert!((dp.stiffness.get(centre, centre) - 4.0).abs() < 1e-14);
    }
}
