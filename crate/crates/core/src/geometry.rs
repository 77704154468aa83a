//! Small fixed-size geometry shared by meshes and coefficient fields.
//!
//! Points and vectors always carry two components; in one intrinsic dimension
//! the second component is zero and ignored.

use serde::{Deserialize, Serialize};

pub type Point = [f64; 2];
pub type Vector = [f64; 2];

#[inline]
pub fn dot(a: &Vector, b: &Vector) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

#[inline]
pub fn norm(a: &Vector) -> f64 {
    a[0].hypot(a[1])
}

#[inline]
pub fn norm_sq(a: &Vector) -> f64 {
    dot(a, a)
}

/// Symmetric tensor in an orthonormal intrinsic frame.
///
/// For one-dimensional domains only `xx` is meaningful; `xy` and `yy` are zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SymTensor {
    pub xx: f64,
    pub xy: f64,
    pub yy: f64,
}

impl SymTensor {
    pub const IDENTITY: SymTensor = SymTensor { xx: 1.0, xy: 0.0, yy: 1.0 };

    pub fn new(xx: f64, xy: f64, yy: f64) -> Self {
        SymTensor { xx, xy, yy }
    }

    pub fn scalar(t: f64) -> Self {
        SymTensor { xx: t, xy: 0.0, yy: t }
    }

    #[inline]
    pub fn apply(&self, v: &Vector) -> Vector {
        [self.xx * v[0] + self.xy * v[1], self.xy * v[0] + self.yy * v[1]]
    }

    pub fn scale(&self, c: f64) -> Self {
        SymTensor { xx: c * self.xx, xy: c * self.xy, yy: c * self.yy }
    }

    /// Extreme eigenvalues `(min, max)` of the tensor restricted to `dim`
    /// intrinsic dimensions, by the trace/determinant closed form.
    pub fn eigen_bounds(&self, dim: usize) -> (f64, f64) {
        if dim == 1 {
            return (self.xx, self.xx);
        }
        let mean = 0.5 * (self.xx + self.yy);
        let half_diff = 0.5 * (self.xx - self.yy);
        let radius = half_diff.hypot(self.xy);
        (mean - radius, mean + radius)
    }
}
