//! Dirichlet eigenvalues of weighted divergence-form operators
//! `Lf = div(T∇f) − ⟨∇η, T∇f⟩` on intervals, rectangles, annuli and circle
//! arcs, with checks of universal inequalities between eigenvalues.

pub mod assemble;
pub mod bounds;
pub mod coeffs;
pub mod convergence;
pub mod dense;
pub mod domain;
pub mod eigen;
pub mod error;
pub mod geometry;
pub mod sparse;

pub use assemble::{assemble, DiscreteProblem};
pub use bounds::{run_all, BoundId, BoundInput, BoundReport, Status};
pub use coeffs::{compute_constants, CoefficientField, GeometricConstants, Preset};
pub use convergence::ConvergenceStudy;
pub use domain::{build_mesh, immersion_data, refine, DomainSpec, ImmersionData, Mesh};
pub use eigen::{dense_oracle, solve_smallest, solve_smallest_with, PreconditionerKind, SolverOptions, Spectrum};
pub use error::{Error, Result};
pub use geometry::{Point, SymTensor, Vector};
pub use sparse::SparseSymMatrix;
