//! Drifting function η, tensor T and the geometric constants derived from them.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::assemble::quadrature_points;
use crate::domain::{DomainSpec, ImmersionData, Mesh};
use crate::error::{Error, Result};
use crate::geometry::{norm, norm_sq, Point, SymTensor, Vector};

/// Named coefficient families, addressable from experiment configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "snake_case")]
pub enum Preset {
    /// η = 0, T = I.
    Laplacian,
    /// η = c·x₁, T = I.
    DriftedLinear { c: f64 },
    /// η = |x|²/4, T = I.
    GaussianSoliton,
    /// η = 0, T = t(x)·I with t(x) = constant + linear·x₁ + quadratic·x₁².
    #[serde(rename = "scalar_T")]
    ScalarT {
        #[serde(default)]
        constant: f64,
        #[serde(default)]
        linear: f64,
        #[serde(default)]
        quadratic: f64,
    },
    /// η = 0, T a constant symmetric positive-definite matrix (row-major; 1×1 or 2×2).
    #[serde(rename = "const_T")]
    ConstT { matrix: Vec<Vec<f64>> },
}

impl Preset {
    pub const NAMES: [&'static str; 5] = ["laplacian", "drifted_linear", "gaussian_soliton", "scalar_T", "const_T"];

    pub fn name(&self) -> &'static str {
        match self {
            Preset::Laplacian => "laplacian",
            Preset::DriftedLinear { .. } => "drifted_linear",
            Preset::GaussianSoliton => "gaussian_soliton",
            Preset::ScalarT { .. } => "scalar_T",
            Preset::ConstT { .. } => "const_T",
        }
    }
}

/// Where derivative closures come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DerivativeSource {
    Analytic,
    /// Central differences of user closures; lower accuracy.
    Numerical,
}

type ScalarFn = Arc<dyn Fn(&Point) -> f64 + Send + Sync>;
type TensorFn = Arc<dyn Fn(&Point) -> SymTensor + Send + Sync>;

#[derive(Clone)]
enum Field {
    Laplacian,
    DriftedLinear { c: f64 },
    GaussianSoliton,
    ScalarT { poly: [f64; 3] },
    ConstT { t: SymTensor },
    Custom { eta: ScalarFn, tensor: TensorFn },
}

/// The pair (η, T) together with the derivative data the operator and the
/// constants need: ∇η, tr(∇T) and div(T²∇η).
#[derive(Clone)]
pub struct CoefficientField {
    dim: usize,
    field: Field,
}

impl fmt::Debug for CoefficientField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CoefficientField").field("dim", &self.dim).field("kind", &self.name()).finish()
    }
}

const FD_STEP: f64 = 1e-5;
const FD_STEP_SECOND: f64 = 1e-4;

impl CoefficientField {
    /// Instantiates a preset on `spec`, validating it against the domain.
    pub fn preset(preset: &Preset, spec: &DomainSpec) -> Result<Self> {
        spec.validate()?;
        let dim = spec.intrinsic_dim();
        let field = match preset {
            Preset::Laplacian => Field::Laplacian,
            Preset::DriftedLinear { c } => {
                if !c.is_finite() {
                    return Err(Error::InvalidCoefficients(format!("drift coefficient must be finite, got {c}")));
                }
                Field::DriftedLinear { c: *c }
            }
            Preset::GaussianSoliton => Field::GaussianSoliton,
            Preset::ScalarT { constant, linear, quadratic } => {
                let poly = [*constant, *linear, *quadratic];
                let (lo, hi) = spec.first_coordinate_range();
                let min = quadratic_min(poly, lo, hi);
                if min <= 0.0 || min.is_nan() {
                    return Err(Error::InvalidCoefficients(format!(
                        "scalar_T requires t(x) > 0 on the domain; min over x1 in [{lo}, {hi}] is {min}"
                    )));
                }
                Field::ScalarT { poly }
            }
            Preset::ConstT { matrix } => Field::ConstT { t: const_tensor(matrix, dim)? },
        };
        Ok(CoefficientField { dim, field })
    }

    /// A user-defined field. Derivatives are taken by central differences,
    /// which is markedly less accurate than the analytic presets.
    pub fn custom<E, T>(dim: usize, eta: E, tensor: T) -> Self
    where
        E: Fn(&Point) -> f64 + Send + Sync + 'static,
        T: Fn(&Point) -> SymTensor + Send + Sync + 'static,
    {
        CoefficientField { dim, field: Field::Custom { eta: Arc::new(eta), tensor: Arc::new(tensor) } }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn name(&self) -> &'static str {
        match self.field {
            Field::Laplacian => "laplacian",
            Field::DriftedLinear { .. } => "drifted_linear",
            Field::GaussianSoliton => "gaussian_soliton",
            Field::ScalarT { .. } => "scalar_T",
            Field::ConstT { .. } => "const_T",
            Field::Custom { .. } => "custom",
        }
    }

    pub fn derivative_source(&self) -> DerivativeSource {
        match self.field {
            Field::Custom { .. } => DerivativeSource::Numerical,
            _ => DerivativeSource::Analytic,
        }
    }

    /// True when T ≡ I (drifted Laplacian).
    pub fn is_identity_tensor(&self) -> bool {
        matches!(self.field, Field::Laplacian | Field::DriftedLinear { .. } | Field::GaussianSoliton)
    }

    pub fn is_gaussian_soliton(&self) -> bool {
        matches!(self.field, Field::GaussianSoliton)
    }

    /// True when every derivative quantity entering the constants is
    /// independent of position, so sampled suprema are exact.
    pub fn has_constant_derivative_data(&self) -> bool {
        matches!(self.field, Field::Laplacian | Field::DriftedLinear { .. } | Field::ConstT { .. })
    }

    fn mask(&self, v: Vector) -> Vector {
        if self.dim == 1 {
            [v[0], 0.0]
        } else {
            v
        }
    }

    pub fn eta(&self, x: &Point) -> f64 {
        match &self.field {
            Field::Laplacian | Field::ScalarT { .. } | Field::ConstT { .. } => 0.0,
            Field::DriftedLinear { c } => c * x[0],
            Field::GaussianSoliton => 0.25 * norm_sq(&self.mask(*x)),
            Field::Custom { eta, .. } => eta(x),
        }
    }

    pub fn grad_eta(&self, x: &Point) -> Vector {
        match &self.field {
            Field::Laplacian | Field::ScalarT { .. } | Field::ConstT { .. } => [0.0, 0.0],
            Field::DriftedLinear { c } => [*c, 0.0],
            Field::GaussianSoliton => self.mask([0.5 * x[0], 0.5 * x[1]]),
            Field::Custom { eta, .. } => self.numeric_gradient(|p| eta(p), x),
        }
    }

    pub fn tensor(&self, x: &Point) -> SymTensor {
        let t = match &self.field {
            Field::Laplacian | Field::DriftedLinear { .. } | Field::GaussianSoliton => SymTensor::IDENTITY,
            Field::ScalarT { poly } => SymTensor::scalar(eval_quadratic(*poly, x[0])),
            Field::ConstT { t } => *t,
            Field::Custom { tensor, .. } => tensor(x),
        };
        if self.dim == 1 {
            SymTensor::new(t.xx, 0.0, 0.0)
        } else {
            t
        }
    }

    /// tr(∇T) = Σᵢ (∇_{eᵢ}T)(eᵢ).
    pub fn trace_nabla_t(&self, x: &Point) -> Vector {
        match &self.field {
            Field::Laplacian | Field::DriftedLinear { .. } | Field::GaussianSoliton | Field::ConstT { .. } => {
                [0.0, 0.0]
            }
            Field::ScalarT { poly } => [poly[1] + 2.0 * poly[2] * x[0], 0.0],
            Field::Custom { tensor, .. } => {
                let h = FD_STEP;
                let d = |axis: usize| {
                    let mut xp = *x;
                    let mut xm = *x;
                    xp[axis] += h;
                    xm[axis] -= h;
                    let (tp, tm) = (tensor(&xp), tensor(&xm));
                    SymTensor::new(
                        (tp.xx - tm.xx) / (2.0 * h),
                        (tp.xy - tm.xy) / (2.0 * h),
                        (tp.yy - tm.yy) / (2.0 * h),
                    )
                };
                if self.dim == 1 {
                    [d(0).xx, 0.0]
                } else {
                    let (d0, d1) = (d(0), d(1));
                    // (∇_{e1}T)e1 + (∇_{e2}T)e2
                    [d0.xx + d1.xy, d0.xy + d1.yy]
                }
            }
        }
    }

    /// div(T²∇η).
    pub fn div_t2_grad_eta(&self, x: &Point) -> f64 {
        match &self.field {
            Field::Laplacian | Field::DriftedLinear { .. } | Field::ScalarT { .. } | Field::ConstT { .. } => 0.0,
            Field::GaussianSoliton => 0.5 * self.dim as f64,
            Field::Custom { .. } => {
                let h = FD_STEP_SECOND;
                let flux = |p: &Point| {
                    let t = self.tensor(p);
                    t.apply(&t.apply(&self.grad_eta(p)))
                };
                let mut div = 0.0;
                for axis in 0..self.dim {
                    let mut xp = *x;
                    let mut xm = *x;
                    xp[axis] += h;
                    xm[axis] -= h;
                    div += (flux(&xp)[axis] - flux(&xm)[axis]) / (2.0 * h);
                }
                div
            }
        }
    }

    /// |T∇η|².
    pub fn t_grad_eta_norm_sq(&self, x: &Point) -> f64 {
        norm_sq(&self.tensor(x).apply(&self.grad_eta(x)))
    }

    /// ½div(T²∇η) − ¼|T∇η|², the quantity whose supremum is C₀.
    pub fn c0_density(&self, x: &Point) -> f64 {
        0.5 * self.div_t2_grad_eta(x) - 0.25 * self.t_grad_eta_norm_sq(x)
    }

    fn numeric_gradient(&self, f: impl Fn(&Point) -> f64, x: &Point) -> Vector {
        let h = FD_STEP;
        let mut g = [0.0, 0.0];
        for (axis, gi) in g.iter_mut().enumerate().take(self.dim) {
            let mut xp = *x;
            let mut xm = *x;
            xp[axis] += h;
            xm[axis] -= h;
            *gi = (f(&xp) - f(&xm)) / (2.0 * h);
        }
        g
    }
}

fn eval_quadratic(poly: [f64; 3], x: f64) -> f64 {
    poly[0] + x * (poly[1] + x * poly[2])
}

fn quadratic_min(poly: [f64; 3], lo: f64, hi: f64) -> f64 {
    let mut min = eval_quadratic(poly, lo).min(eval_quadratic(poly, hi));
    if poly[2] != 0.0 {
        let vertex = -poly[1] / (2.0 * poly[2]);
        if vertex > lo && vertex < hi {
            min = min.min(eval_quadratic(poly, vertex));
        }
    }
    min
}

fn const_tensor(matrix: &[Vec<f64>], dim: usize) -> Result<SymTensor> {
    let bad = |msg: String| Error::InvalidCoefficients(msg);
    if matrix.len() != dim || matrix.iter().any(|row| row.len() != dim) {
        return Err(bad(format!("const_T matrix must be {dim}x{dim}")));
    }
    let t = if dim == 1 {
        SymTensor::new(matrix[0][0], 0.0, 0.0)
    } else {
        if matrix[0][1] != matrix[1][0] {
            return Err(bad(format!("const_T matrix is not symmetric: {:?}", matrix)));
        }
        SymTensor::new(matrix[0][0], matrix[0][1], matrix[1][1])
    };
    let (min, _) = t.eigen_bounds(dim);
    if min <= 0.0 || min.is_nan() {
        return Err(bad(format!("const_T matrix is not positive definite (smallest eigenvalue {min})")));
    }
    Ok(t)
}

/// How the suprema in [`GeometricConstants`] were obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SupMethod {
    /// The sampled quantities are position-independent; sampling is exact.
    Analytic,
    /// Suprema over mesh vertices and quadrature points.
    GridSup,
}

/// ε, δ, T₀, η₀, H₀ and C₀.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeometricConstants {
    pub epsilon: f64,
    pub delta: f64,
    #[serde(rename = "T0")]
    pub t0: f64,
    pub eta0: f64,
    #[serde(rename = "H0")]
    pub h0: f64,
    #[serde(rename = "C0")]
    pub c0: f64,
    pub sample_count: usize,
    pub method: SupMethod,
    pub derivatives: DerivativeSource,
}

impl GeometricConstants {
    /// Constants of the plain Laplacian on a flat domain.
    pub fn laplacian() -> Self {
        GeometricConstants {
            epsilon: 1.0,
            delta: 1.0,
            t0: 0.0,
            eta0: 0.0,
            h0: 0.0,
            c0: 0.0,
            sample_count: 0,
            method: SupMethod::Analytic,
            derivatives: DerivativeSource::Analytic,
        }
    }
}

/// All sample points: mesh vertices followed by element quadrature points.
///
/// On an annulus, quadrature points of elements with a chord on a boundary
/// circle can fall just outside the true domain; they are moved radially
/// onto the nearest circle.
pub fn sample_points(mesh: &Mesh) -> Vec<Point> {
    let mut pts = mesh.vertices().to_vec();
    for e in 0..mesh.num_elements() {
        pts.extend(quadrature_points(mesh, e).iter().map(|(p, _)| *p));
    }
    if let DomainSpec::Annulus { r_inner, r_outer } = *mesh.spec() {
        for p in pts.iter_mut() {
            let r = p[0].hypot(p[1]);
            if r > 0.0 && (r < r_inner || r > r_outer) {
                let target = r.clamp(r_inner, r_outer);
                *p = [p[0] * target / r, p[1] * target / r];
            }
        }
    }
    pts
}

#[derive(Clone, Copy)]
struct Extremes {
    eps: f64,
    eps_at: Point,
    delta: f64,
    t0: f64,
    eta0: f64,
    h0: f64,
    c0: f64,
}

impl Extremes {
    const EMPTY: Extremes = Extremes {
        eps: f64::INFINITY,
        eps_at: [0.0, 0.0],
        delta: f64::NEG_INFINITY,
        t0: 0.0,
        eta0: 0.0,
        h0: 0.0,
        c0: f64::NEG_INFINITY,
    };

    fn merge(self, o: Extremes) -> Extremes {
        let (eps, eps_at) = if o.eps < self.eps || (o.eps == self.eps && lex_less(&o.eps_at, &self.eps_at)) {
            (o.eps, o.eps_at)
        } else {
            (self.eps, self.eps_at)
        };
        Extremes {
            eps,
            eps_at,
            delta: self.delta.max(o.delta),
            t0: self.t0.max(o.t0),
            eta0: self.eta0.max(o.eta0),
            h0: self.h0.max(o.h0),
            c0: self.c0.max(o.c0),
        }
    }
}

fn lex_less(a: &Point, b: &Point) -> bool {
    a[0] < b[0] || (a[0] == b[0] && a[1] < b[1])
}

/// Suprema and infima over an explicit sample set.
pub fn constants_from_samples(
    coeffs: &CoefficientField,
    imm: &ImmersionData,
    samples: &[Point],
) -> Result<GeometricConstants> {
    let dim = coeffs.dim();
    let ext = samples
        .par_iter()
        .map(|x| {
            let (lo, hi) = coeffs.tensor(x).eigen_bounds(dim);
            Extremes {
                eps: lo,
                eps_at: *x,
                delta: hi,
                t0: norm(&coeffs.trace_nabla_t(x)),
                eta0: norm(&coeffs.grad_eta(x)),
                h0: imm.mean_curvature_norm(x),
                c0: coeffs.c0_density(x),
            }
        })
        .reduce(|| Extremes::EMPTY, Extremes::merge);
    if samples.is_empty() {
        return Err(Error::InvalidArgument("no sample points".into()));
    }
    if ext.eps <= 0.0 || ext.eps.is_nan() {
        return Err(Error::NotSpd { point: ext.eps_at, min_eigenvalue: ext.eps });
    }
    let method =
        if coeffs.has_constant_derivative_data() && imm.is_flat() { SupMethod::Analytic } else { SupMethod::GridSup };
    Ok(GeometricConstants {
        epsilon: ext.eps,
        delta: ext.delta,
        t0: ext.t0,
        eta0: ext.eta0,
        h0: ext.h0,
        c0: ext.c0,
        sample_count: samples.len(),
        method,
        derivatives: coeffs.derivative_source(),
    })
}

/// Geometric constants sampled on the closed domain: every mesh vertex and
/// every element quadrature point.
pub fn compute_constants(
    spec: &DomainSpec,
    mesh: &Mesh,
    coeffs: &CoefficientField,
    imm: &ImmersionData,
) -> Result<GeometricConstants> {
    if mesh.spec() != spec {
        return Err(Error::InvalidArgument("mesh was not built from this domain".into()));
    }
    if coeffs.dim() != spec.intrinsic_dim() {
        return Err(Error::DimensionMismatch { expected: spec.intrinsic_dim(), got: coeffs.dim() });
    }
    constants_from_samples(coeffs, imm, &sample_points(mesh))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{build_mesh, immersion_data, refine};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn interval() -> DomainSpec {
        DomainSpec::Interval { a: 0.0, b: PI }
    }
    fn annulus() -> DomainSpec {
        DomainSpec::Annulus { r_inner: 8f64.sqrt(), r_outer: 4.0 }
    }
    fn setup(preset: &Preset, spec: &DomainSpec, res: usize) -> GeometricConstants {
        let coeffs = CoefficientField::preset(preset, spec).unwrap();
        let mesh = build_mesh(spec, res).unwrap();
        let imm = immersion_data(spec, &coeffs);
        compute_constants(spec, &mesh, &coeffs, &imm).unwrap()
    }
    fn scalar_t() -> Preset {
        Preset::ScalarT { constant: 1.0, linear: 0.0, quadratic: 1.0 }
    }

    #[test]
    fn gaussian_closures() {
        let spec = DomainSpec::Rectangle { ax: -1.0, bx: 2.0, ay: -3.0, by: 1.0 };
        let f = CoefficientField::preset(&Preset::GaussianSoliton, &spec).unwrap();
        for x in [[0.3, -0.7], [1.9, 0.9], [0.0, 0.0]] {
            assert_eq!(f.div_t2_grad_eta(&x), 1.0);
            let r2 = x[0] * x[0] + x[1] * x[1];
            assert!((f.t_grad_eta_norm_sq(&x) - r2 / 4.0).abs() < 1e-15);
        }
    }

    #[test]
    fn laplacian_closures_vanish() {
        let f = CoefficientField::preset(&Preset::Laplacian, &annulus()).unwrap();
        let x = [3.0, 0.5];
        assert_eq!(f.tensor(&x), SymTensor::IDENTITY);
        assert_eq!(f.eta(&x), 0.0);
        assert_eq!(f.grad_eta(&x), [0.0, 0.0]);
        assert_eq!(f.trace_nabla_t(&x), [0.0, 0.0]);
        assert_eq!(f.div_t2_grad_eta(&x), 0.0);
    }

    #[test]
    fn scalar_t_gradient_matches_differences() {
        let f = CoefficientField::preset(&scalar_t(), &interval()).unwrap();
        let h = 1e-5;
        for i in 0..10 {
            let x = 0.1 + (PI - 0.2) * i as f64 / 9.0;
            let fd = (f.tensor(&[x + h, 0.0]).xx - f.tensor(&[x - h, 0.0]).xx) / (2.0 * h);
            let analytic = f.trace_nabla_t(&[x, 0.0])[0];
            assert!((analytic - 2.0 * x).abs() < 1e-14);
            assert!((fd - analytic).abs() < 1e-8, "x = {x}: {fd} vs {analytic}");
        }
    }

    /// Every analytic closure against central differences of its base closure.
    #[test]
    fn presets_match_finite_differences() {
        let cases: Vec<(Preset, DomainSpec)> = vec![
            (Preset::Laplacian, interval()),
            (Preset::DriftedLinear { c: 1.0 }, interval()),
            (Preset::DriftedLinear { c: -2.5 }, DomainSpec::Rectangle { ax: 0.0, bx: PI, ay: 0.0, by: 1.0 }),
            (Preset::GaussianSoliton, annulus()),
            (Preset::GaussianSoliton, DomainSpec::Interval { a: -1.0, b: 3.0 }),
            (scalar_t(), interval()),
            (
                Preset::ScalarT { constant: 2.0, linear: 0.5, quadratic: 0.25 },
                DomainSpec::Rectangle { ax: 0.0, bx: 1.0, ay: 0.0, by: 1.0 },
            ),
            (
                Preset::ConstT { matrix: vec![vec![2.0, 0.5], vec![0.5, 1.0]] },
                DomainSpec::Rectangle { ax: 0.0, bx: 1.0, ay: 0.0, by: 1.0 },
            ),
        ];
        let h = 1e-5;
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for (preset, spec) in cases {
            let f = CoefficientField::preset(&preset, &spec).unwrap();
            let n = spec.intrinsic_dim();
            let mesh = build_mesh(&spec, 8).unwrap();
            let interior: Vec<Point> =
                mesh.vertices().iter().zip(mesh.boundary_mask()).filter(|(_, b)| !**b).map(|(p, _)| *p).collect();
            for _ in 0..100 {
                // random point near a random interior vertex
                let base = interior[rng.gen_range(0..interior.len())];
                let mut x = base;
                for xi in x.iter_mut().take(n) {
                    *xi += rng.gen_range(-0.01..0.01);
                }
                let shift = |axis: usize, s: f64| {
                    let mut p = x;
                    p[axis] += s;
                    p
                };
                let mut div_flux = 0.0;
                let mut tr = [0.0, 0.0];
                for axis in 0..n {
                    let (xp, xm) = (shift(axis, h), shift(axis, -h));
                    let d_eta = (f.eta(&xp) - f.eta(&xm)) / (2.0 * h);
                    assert!((d_eta - f.grad_eta(&x)[axis]).abs() < 1e-7, "{preset:?} grad eta");
                    let flux = |p: &Point| {
                        let t = f.tensor(p);
                        t.apply(&t.apply(&f.grad_eta(p)))
                    };
                    div_flux += (flux(&xp)[axis] - flux(&xm)[axis]) / (2.0 * h);
                    let (tp, tm) = (f.tensor(&xp), f.tensor(&xm));
                    let dt = SymTensor::new(
                        (tp.xx - tm.xx) / (2.0 * h),
                        (tp.xy - tm.xy) / (2.0 * h),
                        (tp.yy - tm.yy) / (2.0 * h),
                    );
                    let e = if axis == 0 { [1.0, 0.0] } else { [0.0, 1.0] };
                    let col = dt.apply(&e);
                    tr[0] += col[0];
                    tr[1] += col[1];
                }
                assert!((div_flux - f.div_t2_grad_eta(&x)).abs() < 1e-7, "{preset:?} div");
                let a = f.trace_nabla_t(&x);
                assert!((tr[0] - a[0]).abs() < 1e-7 && (tr[1] - a[1]).abs() < 1e-7, "{preset:?} tr");
            }
        }
    }

    #[test]
    fn custom_field_numeric_derivatives() {
        let f = CoefficientField::custom(2, |x| 0.25 * (x[0] * x[0] + x[1] * x[1]), |_| SymTensor::IDENTITY);
        assert_eq!(f.derivative_source(), DerivativeSource::Numerical);
        let x = [3.0, 0.5];
        assert!((f.div_t2_grad_eta(&x) - 1.0).abs() < 1e-6);
        let g = f.grad_eta(&x);
        assert!((g[0] - 1.5).abs() < 1e-8 && (g[1] - 0.25).abs() < 1e-8);
        let t = CoefficientField::custom(2, |_| 0.0, |x| SymTensor::new(1.0 + x[0] * x[0], x[1], 2.0));
        let tr = t.trace_nabla_t(&[0.5, 0.0]);
        // (∂₁T)e₁ + (∂₂T)e₂ = (2x, 0) + (1, 0)
        assert!((tr[0] - 2.0).abs() < 1e-8 && tr[1].abs() < 1e-8);
    }

    #[test]
    fn validation_errors() {
        let sq = DomainSpec::Rectangle { ax: 0.0, bx: 1.0, ay: 0.0, by: 1.0 };
        let not_spd = Preset::ConstT { matrix: vec![vec![1.0, 2.0], vec![2.0, 1.0]] };
        assert!(matches!(CoefficientField::preset(&not_spd, &sq), Err(Error::InvalidCoefficients(_))));
        let not_sym = Preset::ConstT { matrix: vec![vec![1.0, 0.1], vec![0.2, 1.0]] };
        assert!(CoefficientField::preset(&not_sym, &sq).is_err());
        let wrong_dim = Preset::ConstT { matrix: vec![vec![1.0]] };
        assert!(CoefficientField::preset(&wrong_dim, &sq).is_err());
        // t(x) = 1 - x² vanishes at x = 1 inside (0, π)
        let neg = Preset::ScalarT { constant: 1.0, linear: 0.0, quadratic: -1.0 };
        assert!(CoefficientField::preset(&neg, &interval()).is_err());
        // t(x) = (x - 1)² + 0 has its minimum 0 at the interior vertex
        let touch = Preset::ScalarT { constant: 1.0, linear: -2.0, quadratic: 1.0 };
        assert!(CoefficientField::preset(&touch, &interval()).is_err());
    }

    #[test]
    fn gaussian_annulus_constants() {
        let c = setup(&Preset::GaussianSoliton, &annulus(), 8);
        assert_eq!(c.epsilon, 1.0);
        assert_eq!(c.delta, 1.0);
        assert_eq!(c.t0, 0.0);
        assert_eq!(c.h0, 0.0);
        assert!(c.c0.abs() < 1e-12, "C0 = {}", c.c0);
        assert!((c.eta0 - 2.0).abs() < 1e-12, "eta0 = {}", c.eta0);
        assert_eq!(c.method, SupMethod::GridSup);
    }

    #[test]
    fn laplacian_constants() {
        for spec in [interval(), annulus(), DomainSpec::Rectangle { ax: 0.0, bx: PI, ay: 0.0, by: PI }] {
            let c = setup(&Preset::Laplacian, &spec, 4);
            assert_eq!((c.epsilon, c.delta, c.t0, c.eta0, c.h0, c.c0), (1.0, 1.0, 0.0, 0.0, 0.0, 0.0));
            assert_eq!(c.method, SupMethod::Analytic);
        }
        let arc = DomainSpec::CircleArc { radius: 1.0, length: PI };
        let c = setup(&Preset::Laplacian, &arc, 4);
        assert_eq!(c.h0, 1.0);
    }

    #[test]
    fn drifted_linear_constants_not_clamped() {
        let c = setup(&Preset::DriftedLinear { c: 1.0 }, &interval(), 16);
        assert_eq!(c.eta0, 1.0);
        assert_eq!(c.c0, -0.25);
    }

    #[test]
    fn scalar_t_constants_converge() {
        let spec = interval();
        let coeffs = CoefficientField::preset(&scalar_t(), &spec).unwrap();
        let imm = immersion_data(&spec, &coeffs);
        let mut mesh = build_mesh(&spec, 4).unwrap();
        let mut prev: Option<GeometricConstants> = None;
        for _ in 0..4 {
            let c = compute_constants(&spec, &mesh, &coeffs, &imm).unwrap();
            // t is monotone on [0, π]: extremes sit on the boundary vertices
            assert_eq!(c.epsilon, 1.0);
            assert!((c.delta - (1.0 + PI * PI)).abs() < 1e-12);
            assert!((c.t0 - 2.0 * PI).abs() < 1e-12);
            if let Some(p) = prev {
                assert!(c.delta >= p.delta && c.t0 >= p.t0 && c.epsilon <= p.epsilon);
                assert!(c.sample_count > p.sample_count);
            }
            prev = Some(c);
            mesh = refine(&mesh);
        }
    }

    #[test]
    fn sampling_is_monotone_in_samples() {
        let spec = annulus();
        let coeffs = CoefficientField::preset(&Preset::GaussianSoliton, &spec).unwrap();
        let imm = immersion_data(&spec, &coeffs);
        let mesh = build_mesh(&spec, 4).unwrap();
        let mut samples = sample_points(&mesh);
        let coarse = constants_from_samples(&coeffs, &imm, &samples[..samples.len() / 3]).unwrap();
        let fine_mesh = refine(&mesh);
        samples.extend(sample_points(&fine_mesh));
        let fine = constants_from_samples(&coeffs, &imm, &samples).unwrap();
        assert!(fine.eta0 >= coarse.eta0 && fine.c0 >= coarse.c0 && fine.delta >= coarse.delta);
        assert!(fine.epsilon <= coarse.epsilon);
        // refinement keeps coarse vertices and edge midpoints, so 2D sups cannot drop
        let direct = compute_constants(&spec, &fine_mesh, &coeffs, &imm).unwrap();
        let base = compute_constants(&spec, &mesh, &coeffs, &imm).unwrap();
        assert!(direct.eta0 >= base.eta0 - 1e-14 && direct.c0 >= base.c0 - 1e-14);
    }

    #[test]
    fn divergence_free_presets_have_zero_t0() {
        let sq = DomainSpec::Rectangle { ax: 0.0, bx: 1.0, ay: 0.0, by: 1.0 };
        let presets = [
            Preset::ConstT { matrix: vec![vec![3.0, 1.0], vec![1.0, 2.0]] },
            Preset::Laplacian,
            Preset::GaussianSoliton,
        ];
        for p in presets {
            assert_eq!(setup(&p, &sq, 4).t0, 0.0);
        }
        let c = setup(&Preset::ConstT { matrix: vec![vec![3.0, 1.0], vec![1.0, 2.0]] }, &sq, 4);
        let disc = (0.25f64 + 1.0).sqrt();
        assert!((c.epsilon - (2.5 - disc)).abs() < 1e-14);
        assert!((c.delta - (2.5 + disc)).abs() < 1e-14);
    }

    #[test]
    fn preset_serde_names() {
        let p: Preset = serde_json::from_str(r#"{"preset":"scalar_T","constant":1,"quadratic":1}"#).unwrap();
        assert_eq!(p, scalar_t());
        let p: Preset = serde_json::from_str(r#"{"preset":"drifted_linear","c":1}"#).unwrap();
        assert_eq!(p, Preset::DriftedLinear { c: 1.0 });
    }
}
