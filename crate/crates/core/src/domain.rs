//! Bounded domains, their simplicial meshes and immersion data.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::coeffs::CoefficientField;
use crate::error::{Error, Result};
use crate::geometry::Point;

/// A supported bounded domain.
///
/// `CircleArc` is a curve of radius `radius` and arc length `length` immersed
/// in the plane; it is described by its arc-length chart `[0, length]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DomainSpec {
    Interval { a: f64, b: f64 },
    Rectangle { ax: f64, bx: f64, ay: f64, by: f64 },
    Annulus { r_inner: f64, r_outer: f64 },
    CircleArc { radius: f64, length: f64 },
}

impl DomainSpec {
    pub fn validate(&self) -> Result<()> {
        let finite = |vals: &[f64]| vals.iter().all(|v| v.is_finite());
        let bad = |msg: String| Err(Error::InvalidDomain(msg));
        match *self {
            DomainSpec::Interval { a, b } => {
                if !finite(&[a, b]) || b <= a {
                    return bad(format!("interval requires b > a, got a = {a}, b = {b}"));
                }
            }
            DomainSpec::Rectangle { ax, bx, ay, by } => {
                if !finite(&[ax, bx, ay, by]) || bx <= ax || by <= ay {
                    return bad(format!("rectangle requires bx > ax and by > ay, got [{ax}, {bx}] x [{ay}, {by}]"));
                }
            }
            DomainSpec::Annulus { r_inner, r_outer } => {
                if !finite(&[r_inner, r_outer]) || r_inner <= 0.0 || r_outer <= r_inner {
                    return bad(format!(
                        "annulus requires 0 < r_inner < r_outer, got r_inner = {r_inner}, r_outer = {r_outer}"
                    ));
                }
            }
            DomainSpec::CircleArc { radius, length } => {
                if !finite(&[radius, length]) || radius <= 0.0 {
                    return bad(format!("circle arc requires radius > 0, got {radius}"));
                }
                if length <= 0.0 || length >= 2.0 * PI * radius {
                    return bad(format!(
                        "circle arc requires 0 < length < 2*pi*radius, got length = {length}, radius = {radius}"
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn name(&self) -> &'static str {
        match self {
            DomainSpec::Interval { .. } => "interval",
            DomainSpec::Rectangle { .. } => "rectangle",
            DomainSpec::Annulus { .. } => "annulus",
            DomainSpec::CircleArc { .. } => "circle_arc",
        }
    }

    /// Intrinsic dimension n.
    pub fn intrinsic_dim(&self) -> usize {
        match self {
            DomainSpec::Interval { .. } | DomainSpec::CircleArc { .. } => 1,
            DomainSpec::Rectangle { .. } | DomainSpec::Annulus { .. } => 2,
        }
    }

    /// Dimension m of the Euclidean space the domain is immersed in.
    pub fn ambient_dim(&self) -> usize {
        match self {
            DomainSpec::Interval { .. } => 1,
            _ => 2,
        }
    }

    /// Unweighted intrinsic measure |Ω|.
    pub fn volume(&self) -> f64 {
        match *self {
            DomainSpec::Interval { a, b } => b - a,
            DomainSpec::Rectangle { ax, bx, ay, by } => (bx - ax) * (by - ay),
            DomainSpec::Annulus { r_inner, r_outer } => PI * (r_outer * r_outer - r_inner * r_inner),
            DomainSpec::CircleArc { length, .. } => length,
        }
    }

    pub fn is_flat(&self) -> bool {
        !matches!(self, DomainSpec::CircleArc { .. })
    }

    /// inf over the closed domain of |x|², for flat domains.
    pub fn inf_norm_sq(&self) -> Option<f64> {
        let dist = |lo: f64, hi: f64| {
            if lo > 0.0 {
                lo
            } else if hi < 0.0 {
                -hi
            } else {
                0.0
            }
        };
        match *self {
            DomainSpec::Interval { a, b } => Some(dist(a, b).powi(2)),
            DomainSpec::Rectangle { ax, bx, ay, by } => Some(dist(ax, bx).powi(2) + dist(ay, by).powi(2)),
            DomainSpec::Annulus { r_inner, .. } => Some(r_inner * r_inner),
            DomainSpec::CircleArc { .. } => None,
        }
    }

    /// Range of the first chart coordinate over the closed domain.
    pub fn first_coordinate_range(&self) -> (f64, f64) {
        match *self {
            DomainSpec::Interval { a, b } => (a, b),
            DomainSpec::Rectangle { ax, bx, .. } => (ax, bx),
            DomainSpec::Annulus { r_outer, .. } => (-r_outer, r_outer),
            DomainSpec::CircleArc { length, .. } => (0.0, length),
        }
    }
}

/// Volume of the unit ball in ℝⁿ.
pub fn unit_ball_volume(n: usize) -> f64 {
    match n {
        1 => 2.0,
        2 => PI,
        3 => 4.0 * PI / 3.0,
        _ => {
            // ω_n = 2π/n · ω_{n-2}
            2.0 * PI / n as f64 * unit_ball_volume(n - 2)
        }
    }
}

/// Conforming simplicial mesh in chart coordinates.
///
/// Elements are segments (two vertex indices) in 1D and counterclockwise
/// triangles in 2D, stored flat.
#[derive(Debug, Clone)]
pub struct Mesh {
    spec: DomainSpec,
    dim: usize,
    vertices: Vec<Point>,
    cells: Vec<usize>,
    boundary: Vec<bool>,
    volumes: Vec<f64>,
}

impl Mesh {
    fn from_parts(spec: DomainSpec, vertices: Vec<Point>, cells: Vec<usize>, boundary: Vec<bool>) -> Mesh {
        let dim = spec.intrinsic_dim();
        let mut mesh = Mesh { spec, dim, vertices, cells, boundary, volumes: Vec::new() };
        mesh.volumes = (0..mesh.num_elements()).map(|e| mesh.signed_volume(e)).collect();
        mesh
    }

    pub fn spec(&self) -> &DomainSpec {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nodes_per_element(&self) -> usize {
        self.dim + 1
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_elements(&self) -> usize {
        self.cells.len() / self.nodes_per_element()
    }

    pub fn element(&self, e: usize) -> &[usize] {
        let npe = self.nodes_per_element();
        &self.cells[e * npe..(e + 1) * npe]
    }

    pub fn elements(&self) -> impl Iterator<Item = &[usize]> {
        self.cells.chunks_exact(self.nodes_per_element())
    }

    pub fn boundary_mask(&self) -> &[bool] {
        &self.boundary
    }

    pub fn is_boundary(&self, v: usize) -> bool {
        self.boundary[v]
    }

    pub fn num_interior(&self) -> usize {
        self.boundary.iter().filter(|b| !**b).count()
    }

    pub fn element_volumes(&self) -> &[f64] {
        &self.volumes
    }

    pub fn total_volume(&self) -> f64 {
        self.volumes.iter().sum()
    }

    fn signed_volume(&self, e: usize) -> f64 {
        let nodes = self.element(e);
        let p = |i: usize| self.vertices[nodes[i]];
        if self.dim == 1 {
            p(1)[0] - p(0)[0]
        } else {
            let (a, b, c) = (p(0), p(1), p(2));
            0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
        }
    }

    /// Longest element edge, the mesh size h.
    pub fn max_edge_length(&self) -> f64 {
        let mut h: f64 = 0.0;
        for nodes in self.elements() {
            for i in 0..nodes.len() {
                for j in i + 1..nodes.len() {
                    let a = self.vertices[nodes[i]];
                    let b = self.vertices[nodes[j]];
                    h = h.max((a[0] - b[0]).hypot(a[1] - b[1]));
                }
            }
        }
        h
    }

    /// Largest ratio of longest to shortest edge over all triangles.
    pub fn max_aspect_ratio(&self) -> f64 {
        let mut worst: f64 = 1.0;
        if self.dim == 1 {
            return worst;
        }
        for nodes in self.elements() {
            let mut lo = f64::INFINITY;
            let mut hi: f64 = 0.0;
            for (i, j) in [(0, 1), (1, 2), (2, 0)] {
                let a = self.vertices[nodes[i]];
                let b = self.vertices[nodes[j]];
                let len = (a[0] - b[0]).hypot(a[1] - b[1]);
                lo = lo.min(len);
                hi = hi.max(len);
            }
            worst = worst.max(hi / lo);
        }
        worst
    }

    /// Writes the plain-text debugging format: `v x [y]` per vertex,
    /// `e i j [k]` per element and one `b i ...` line listing boundary
    /// vertices. Indices are zero-based.
    pub fn write_text<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for v in &self.vertices {
            if self.dim == 1 {
                writeln!(out, "v {:.17e}", v[0])?;
            } else {
                writeln!(out, "v {:.17e} {:.17e}", v[0], v[1])?;
            }
        }
        for nodes in self.elements() {
            let idx: Vec<String> = nodes.iter().map(|i| i.to_string()).collect();
            writeln!(out, "e {}", idx.join(" "))?;
        }
        let bnd: Vec<String> =
            self.boundary.iter().enumerate().filter(|(_, b)| **b).map(|(i, _)| i.to_string()).collect();
        writeln!(out, "b {}", bnd.join(" "))?;
        Ok(())
    }
}

/// Builds a uniform mesh of `spec`.
///
/// `resolution` is the number of segments (1D), the number of cells along x
/// (rectangle) or the number of radial layers (annulus). The annulus angular
/// count is chosen so cells are near-square at the geometric-mean radius.
pub fn build_mesh(spec: &DomainSpec, resolution: usize) -> Result<Mesh> {
    spec.validate()?;
    if resolution < 2 {
        return Err(Error::InvalidArgument(format!("resolution must be at least 2, got {resolution}")));
    }
    let mesh = match *spec {
        DomainSpec::Interval { a, b } => segment_mesh(*spec, a, b, resolution),
        DomainSpec::CircleArc { length, .. } => segment_mesh(*spec, 0.0, length, resolution),
        DomainSpec::Rectangle { ax, bx, ay, by } => {
            let nx = resolution;
            let ny = ((resolution as f64 * (by - ay) / (bx - ax)).round() as usize).max(2);
            rectangle_mesh(*spec, [ax, bx, ay, by], nx, ny)
        }
        DomainSpec::Annulus { r_inner, r_outer } => annulus_mesh(*spec, r_inner, r_outer, resolution),
    };
    Ok(mesh)
}

fn lerp(lo: f64, hi: f64, i: usize, n: usize) -> f64 {
    if i == n {
        hi
    } else {
        lo + (hi - lo) * (i as f64 / n as f64)
    }
}

fn segment_mesh(spec: DomainSpec, lo: f64, hi: f64, n: usize) -> Mesh {
    let vertices = (0..=n).map(|i| [lerp(lo, hi, i, n), 0.0]).collect();
    let cells = (0..n).flat_map(|i| [i, i + 1]).collect();
    let mut boundary = vec![false; n + 1];
    boundary[0] = true;
    boundary[n] = true;
    Mesh::from_parts(spec, vertices, cells, boundary)
}

/// Splits cell (i, j) of a structured grid into two counterclockwise
/// triangles, alternating the diagonal with the parity of i + j.
fn split_cell(cells: &mut Vec<usize>, v00: usize, v10: usize, v01: usize, v11: usize, even: bool) {
    if even {
        cells.extend_from_slice(&[v00, v10, v11, v00, v11, v01]);
    } else {
        cells.extend_from_slice(&[v00, v10, v01, v10, v11, v01]);
    }
}

fn rectangle_mesh(spec: DomainSpec, bbox: [f64; 4], nx: usize, ny: usize) -> Mesh {
    let [ax, bx, ay, by] = bbox;
    let id = |i: usize, j: usize| j * (nx + 1) + i;
    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
    let mut boundary = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            vertices.push([lerp(ax, bx, i, nx), lerp(ay, by, j, ny)]);
            boundary.push(i == 0 || i == nx || j == 0 || j == ny);
        }
    }
    let mut cells = Vec::with_capacity(6 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            split_cell(&mut cells, id(i, j), id(i + 1, j), id(i, j + 1), id(i + 1, j + 1), (i + j) % 2 == 0);
        }
    }
    Mesh::from_parts(spec, vertices, cells, boundary)
}

/// Angular layer count for an annulus with `nr` radial layers.
pub fn annulus_angular_count(r_inner: f64, r_outer: f64, nr: usize) -> usize {
    let dr = (r_outer - r_inner) / nr as f64;
    let n = (2.0 * PI * (r_inner * r_outer).sqrt() / dr).ceil() as usize;
    let n = n.max(6);
    n + n % 2
}

fn annulus_mesh(spec: DomainSpec, r_inner: f64, r_outer: f64, nr: usize) -> Mesh {
    let nt = annulus_angular_count(r_inner, r_outer, nr);
    let id = |i: usize, j: usize| i * nt + (j % nt);
    let mut vertices = Vec::with_capacity((nr + 1) * nt);
    let mut boundary = Vec::with_capacity((nr + 1) * nt);
    for i in 0..=nr {
        let r = lerp(r_inner, r_outer, i, nr);
        for j in 0..nt {
            let theta = 2.0 * PI * j as f64 / nt as f64;
            vertices.push([r * theta.cos(), r * theta.sin()]);
            boundary.push(i == 0 || i == nr);
        }
    }
    let mut cells = Vec::with_capacity(6 * nr * nt);
    for i in 0..nr {
        for j in 0..nt {
            split_cell(&mut cells, id(i, j), id(i + 1, j), id(i, j + 1), id(i + 1, j + 1), (i + j) % 2 == 0);
        }
    }
    Mesh::from_parts(spec, vertices, cells, boundary)
}

/// Uniform refinement: segments are bisected, triangles split into four.
///
/// Midpoints of boundary edges are flagged as boundary; on an annulus they
/// are moved onto the circle their edge belongs to.
pub fn refine(mesh: &Mesh) -> Mesh {
    let spec = mesh.spec;
    let mut vertices = mesh.vertices.clone();
    let mut boundary = mesh.boundary.clone();
    let mut cells = Vec::with_capacity(mesh.cells.len() * 4);

    if mesh.dim == 1 {
        for nodes in mesh.elements() {
            let (a, b) = (nodes[0], nodes[1]);
            let mid = vertices.len();
            vertices.push([0.5 * (mesh.vertices[a][0] + mesh.vertices[b][0]), 0.0]);
            boundary.push(false);
            cells.extend_from_slice(&[a, mid, mid, b]);
        }
        return Mesh::from_parts(spec, vertices, cells, boundary);
    }

    let key = |a: usize, b: usize| if a < b { (a, b) } else { (b, a) };
    let mut edge_count: HashMap<(usize, usize), u8> = HashMap::new();
    for nodes in mesh.elements() {
        for (i, j) in [(0, 1), (1, 2), (2, 0)] {
            *edge_count.entry(key(nodes[i], nodes[j])).or_insert(0) += 1;
        }
    }
    let mut midpoint: HashMap<(usize, usize), usize> = HashMap::new();
    let mut mid = |a: usize, b: usize, vertices: &mut Vec<Point>, boundary: &mut Vec<bool>| -> usize {
        let k = key(a, b);
        if let Some(&m) = midpoint.get(&k) {
            return m;
        }
        let (pa, pb) = (mesh.vertices[a], mesh.vertices[b]);
        let mut p = [0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])];
        let on_boundary = edge_count[&k] == 1;
        if on_boundary {
            if let DomainSpec::Annulus { r_inner, r_outer } = spec {
                let r = p[0].hypot(p[1]);
                let target = if (r - r_inner).abs() < (r - r_outer).abs() { r_inner } else { r_outer };
                p = [p[0] * target / r, p[1] * target / r];
            }
        }
        let m = vertices.len();
        vertices.push(p);
        boundary.push(on_boundary);
        midpoint.insert(k, m);
        m
    };
    for nodes in mesh.elements() {
        let (a, b, c) = (nodes[0], nodes[1], nodes[2]);
        let ab = mid(a, b, &mut vertices, &mut boundary);
        let bc = mid(b, c, &mut vertices, &mut boundary);
        let ca = mid(c, a, &mut vertices, &mut boundary);
        cells.extend_from_slice(&[a, ab, ca, ab, b, bc, ca, bc, c, ab, bc, ca]);
    }
    Mesh::from_parts(spec, vertices, cells, boundary)
}

#[derive(Debug, Clone)]
enum Curvature {
    Flat,
    /// Unit-speed planar circle of the given radius; |H_T| = t(s) / R.
    Circle {
        radius: f64,
        coeffs: CoefficientField,
    },
}

/// Immersion data: ambient dimension, generalized mean curvature and volumes.
#[derive(Debug, Clone)]
pub struct ImmersionData {
    pub ambient_dim: usize,
    pub intrinsic_dim: usize,
    /// Unweighted |Ω|.
    pub volume: f64,
    /// ω_n.
    pub unit_ball_volume: f64,
    curvature: Curvature,
}

impl ImmersionData {
    /// |H_T| at a chart point.
    pub fn mean_curvature_norm(&self, x: &Point) -> f64 {
        match &self.curvature {
            Curvature::Flat => 0.0,
            Curvature::Circle { radius, coeffs } => {
                // n = 1: |H_T| = |tr(α∘T)| = t |α(e, e)| = t / R
                coeffs.tensor(x).xx.abs() / radius
            }
        }
    }

    pub fn is_flat(&self) -> bool {
        matches!(self.curvature, Curvature::Flat)
    }
}

pub fn immersion_data(spec: &DomainSpec, coeffs: &CoefficientField) -> ImmersionData {
    let curvature = match *spec {
        DomainSpec::CircleArc { radius, .. } => Curvature::Circle { radius, coeffs: coeffs.clone() },
        _ => Curvature::Flat,
    };
    let n = spec.intrinsic_dim();
    ImmersionData {
        ambient_dim: spec.ambient_dim(),
        intrinsic_dim: n,
        volume: spec.volume(),
        unit_ball_volume: unit_ball_volume(n),
        curvature,
    }
}
