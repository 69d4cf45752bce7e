//! Reference cells and nodal Lagrange bases.
//!
//! Simplices carry the complete space P^k (barycentric product formula);
//! quadrilaterals and hexahedra carry the tensor space Q^k. Nodes are
//! equispaced and numbered vertices first, so a degree-1 element doubles as
//! the geometric map.
//!
//! Reference cells: triangle (0,0),(1,0),(0,1); quadrilateral [-1,1]^2;
//! tetrahedron (0,0,0),(1,0,0),(0,1,0),(0,0,1); hexahedron [-1,1]^3;
//! line [-1,1] (faces of 2D cells).

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{HdgError, Result};
use crate::Point;

/// Highest polynomial degree a reference element can be built for. The solver
/// itself accepts k <= 4; the post-process needs k + 1.
pub const MAX_DEGREE: usize = 5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ElementType {
    Line,
    Triangle,
    Quadrilateral,
    Tetrahedron,
    Hexahedron,
}

// Local faces as lists of local vertex ids (vertex numbering of the degree-1 element).
const LINE_FACES: &[&[usize]] = &[&[0], &[1]];
const TRI_FACES: &[&[usize]] = &[&[1, 2], &[2, 0], &[0, 1]];
const QUAD_FACES: &[&[usize]] = &[&[0, 1], &[1, 3], &[3, 2], &[2, 0]];
const TET_FACES: &[&[usize]] = &[&[1, 2, 3], &[0, 3, 2], &[0, 1, 3], &[0, 2, 1]];
const HEX_FACES: &[&[usize]] =
    &[&[0, 1, 2, 3], &[4, 5, 6, 7], &[0, 1, 4, 5], &[2, 3, 6, 7], &[0, 2, 4, 6], &[1, 3, 5, 7]];

impl ElementType {
    pub fn dim(self) -> usize {
        match self {
            ElementType::Line => 1,
            ElementType::Triangle | ElementType::Quadrilateral => 2,
            ElementType::Tetrahedron | ElementType::Hexahedron => 3,
        }
    }

    pub fn is_simplex(self) -> bool {
        matches!(self, ElementType::Triangle | ElementType::Tetrahedron)
    }

    pub fn n_vertices(self) -> usize {
        match self {
            ElementType::Line => 2,
            ElementType::Triangle => 3,
            ElementType::Quadrilateral => 4,
            ElementType::Tetrahedron => 4,
            ElementType::Hexahedron => 8,
        }
    }

    pub fn reference_measure(self) -> f64 {
        match self {
            ElementType::Line => 2.0,
            ElementType::Triangle => 0.5,
            ElementType::Quadrilateral => 4.0,
            ElementType::Tetrahedron => 1.0 / 6.0,
            ElementType::Hexahedron => 8.0,
        }
    }

    pub fn face_type(self) -> Option<ElementType> {
        match self {
            ElementType::Line => None,
            ElementType::Triangle | ElementType::Quadrilateral => Some(ElementType::Line),
            ElementType::Tetrahedron => Some(ElementType::Triangle),
            ElementType::Hexahedron => Some(ElementType::Quadrilateral),
        }
    }

    pub fn local_faces(self) -> &'static [&'static [usize]] {
        match self {
            ElementType::Line => LINE_FACES,
            ElementType::Triangle => TRI_FACES,
            ElementType::Quadrilateral => QUAD_FACES,
            ElementType::Tetrahedron => TET_FACES,
            ElementType::Hexahedron => HEX_FACES,
        }
    }

    pub fn vertex_coordinates(self) -> Vec<Point> {
        match self {
            ElementType::Line => vec![[-1.0, 0.0, 0.0], [1.0, 0.0, 0.0]],
            ElementType::Triangle => vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]],
            ElementType::Tetrahedron => vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
            ElementType::Quadrilateral | ElementType::Hexahedron => (0..self.n_vertices())
                .map(|v| {
                    let mut p = [0.0; 3];
                    for (d, c) in p.iter_mut().enumerate().take(self.dim()) {
                        *c = if (v >> d) & 1 == 1 { 1.0 } else { -1.0 };
                    }
                    p
                })
                .collect(),
        }
    }

    /// Dimension of the local polynomial space of degree `k`.
    pub fn space_dimension(self, k: usize) -> usize {
        match self {
            ElementType::Line => k + 1,
            ElementType::Quadrilateral => (k + 1).pow(2),
            ElementType::Hexahedron => (k + 1).pow(3),
            ElementType::Triangle => (k + 1) * (k + 2) / 2,
            ElementType::Tetrahedron => (k + 1) * (k + 2) * (k + 3) / 6,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ElementType::Line => "line",
            ElementType::Triangle => "triangle",
            ElementType::Quadrilateral => "quadrilateral",
            ElementType::Tetrahedron => "tetrahedron",
            ElementType::Hexahedron => "hexahedron",
        }
    }
}

#[derive(Clone, Debug)]
enum Basis {
    /// Barycentric multi-indices (length dim + 1, summing to k).
    Simplex { indices: Vec<[usize; 4]> },
    /// Per-axis grid indices into the 1D equispaced grid.
    Tensor { indices: Vec<[usize; 3]>, grid: Vec<f64> },
}

/// Basis values and reference gradients at a set of points.
#[derive(Clone, Debug)]
pub struct Tabulation {
    /// `values[(q, i)]` is basis function `i` at point `q`.
    pub values: DMatrix<f64>,
    /// One matrix per reference direction, same layout as `values`.
    pub grads: Vec<DMatrix<f64>>,
}

#[derive(Clone, Debug)]
pub struct ReferenceElement {
    element: ElementType,
    degree: usize,
    nodes: Vec<Point>,
    basis: Basis,
    face_nodes: Vec<Vec<usize>>,
}

impl ReferenceElement {
    pub fn new(element: ElementType, degree: usize) -> Result<Self> {
        if degree == 0 || degree > MAX_DEGREE {
            return Err(HdgError::UnsupportedElement { element, degree });
        }
        let dim = element.dim();
        let k = degree;
        let (nodes, basis) = if element.is_simplex() {
            let mut indices: Vec<[usize; 4]> = Vec::new();
            for v in 0..=dim {
                let mut a = [0; 4];
                a[v] = k;
                indices.push(a);
            }
            for a3 in 0..=k {
                for a2 in 0..=k {
                    for a1 in 0..=k {
                        let s = a1 + a2 + a3;
                        if s > k || (dim == 2 && a3 > 0) {
                            continue;
                        }
                        let a = [k - s, a1, a2, a3];
                        if !indices.contains(&a) {
                            indices.push(a);
                        }
                    }
                }
            }
            let nodes = indices
                .iter()
                .map(|a| {
                    let mut p = [0.0; 3];
                    for d in 0..dim {
                        p[d] = a[d + 1] as f64 / k as f64;
                    }
                    p
                })
                .collect();
            (nodes, Basis::Simplex { indices })
        } else {
            let grid: Vec<f64> = (0..=k).map(|i| -1.0 + 2.0 * i as f64 / k as f64).collect();
            let mut indices: Vec<[usize; 3]> = Vec::new();
            for v in 0..element.n_vertices() {
                let mut a = [0; 3];
                for (d, ad) in a.iter_mut().enumerate().take(dim) {
                    *ad = if (v >> d) & 1 == 1 { k } else { 0 };
                }
                indices.push(a);
            }
            let kk = |d: usize| if d < dim { k } else { 0 };
            for i2 in 0..=kk(2) {
                for i1 in 0..=kk(1) {
                    for i0 in 0..=k {
                        let a = [i0, i1, i2];
                        if !indices.contains(&a) {
                            indices.push(a);
                        }
                    }
                }
            }
            let nodes = indices
                .iter()
                .map(|a| {
                    let mut p = [0.0; 3];
                    for d in 0..dim {
                        p[d] = grid[a[d]];
                    }
                    p
                })
                .collect();
            (nodes, Basis::Tensor { indices, grid })
        };

        let mut re = Self { element, degree, nodes, basis, face_nodes: Vec::new() };
        re.face_nodes = (0..element.local_faces().len()).map(|f| re.nodes_on_face(f)).collect();
        Ok(re)
    }

    fn nodes_on_face(&self, face: usize) -> Vec<usize> {
        let verts = self.element.vertex_coordinates();
        let fv = self.element.local_faces()[face];
        let dim = self.element.dim();
        let p0 = verts[fv[0]];
        // hyperplane normal through the face vertices
        let normal = match dim {
            1 => [1.0, 0.0, 0.0],
            2 => {
                let t = sub(&verts[fv[1]], &p0);
                [t[1], -t[0], 0.0]
            }
            _ => cross(&sub(&verts[fv[1]], &p0), &sub(&verts[fv[2]], &p0)),
        };
        self.nodes
            .iter()
            .enumerate()
            .filter(|(_, x)| dot(&normal, &sub(x, &p0)).abs() < 1e-12)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn element(&self) -> ElementType {
        self.element
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn dim(&self) -> usize {
        self.element.dim()
    }

    pub fn n_basis(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[Point] {
        &self.nodes
    }

    /// Nodes lying on local face `face`.
    pub fn face_nodes(&self, face: usize) -> &[usize] {
        &self.face_nodes[face]
    }

    /// Basis values and reference gradients at `xi`.
    pub fn eval(&self, xi: &Point, values: &mut [f64], grads: &mut [[f64; 3]]) {
        let k = self.degree;
        let dim = self.dim();
        match &self.basis {
            Basis::Simplex { indices } => {
                let mut lam = [0.0; 4];
                lam[0] = 1.0 - (0..dim).map(|d| xi[d]).sum::<f64>();
                lam[1..=dim].copy_from_slice(&xi[..dim]);
                // p[i][m] = prod_{j<m} (k lam_i - j)/(j+1), dp its derivative in lam_i
                let mut p = [[0.0; MAX_DEGREE + 1]; 4];
                let mut dp = [[0.0; MAX_DEGREE + 1]; 4];
                for i in 0..=dim {
                    let (v, d) = silvester(k, lam[i]);
                    p[i] = v;
                    dp[i] = d;
                }
                for (n, a) in indices.iter().enumerate() {
                    let mut val = 1.0;
                    for i in 0..=dim {
                        val *= p[i][a[i]];
                    }
                    values[n] = val;
                    let mut dlam = [0.0; 4];
                    for i in 0..=dim {
                        let mut g = dp[i][a[i]];
                        for j in 0..=dim {
                            if j != i {
                                g *= p[j][a[j]];
                            }
                        }
                        dlam[i] = g;
                    }
                    let mut g = [0.0; 3];
                    for d in 0..dim {
                        g[d] = dlam[d + 1] - dlam[0];
                    }
                    grads[n] = g;
                }
            }
            Basis::Tensor { indices, grid } => {
                let mut l = [[0.0; MAX_DEGREE + 1]; 3];
                let mut dl = [[0.0; MAX_DEGREE + 1]; 3];
                for d in 0..dim {
                    for i in 0..=k {
                        let (v, dv) = lagrange_1d(grid, i, xi[d]);
                        l[d][i] = v;
                        dl[d][i] = dv;
                    }
                }
                for (n, a) in indices.iter().enumerate() {
                    let mut val = 1.0;
                    for d in 0..dim {
                        val *= l[d][a[d]];
                    }
                    values[n] = val;
                    let mut g = [0.0; 3];
                    for d in 0..dim {
                        let mut gd = dl[d][a[d]];
                        for e in 0..dim {
                            if e != d {
                                gd *= l[e][a[e]];
                            }
                        }
                        g[d] = gd;
                    }
                    grads[n] = g;
                }
            }
        }
    }

    pub fn values_at(&self, xi: &Point) -> Vec<f64> {
        let n = self.n_basis();
        let mut v = vec![0.0; n];
        let mut g = vec![[0.0; 3]; n];
        self.eval(xi, &mut v, &mut g);
        v
    }

    pub fn tabulate(&self, points: &[Point]) -> Tabulation {
        let n = self.n_basis();
        let nq = points.len();
        let mut values = DMatrix::<f64>::zeros(nq, n);
        let mut grads = vec![DMatrix::<f64>::zeros(nq, n); self.dim()];
        let mut v = vec![0.0; n];
        let mut g = vec![[0.0; 3]; n];
        for (q, xi) in points.iter().enumerate() {
            self.eval(xi, &mut v, &mut g);
            for i in 0..n {
                values[(q, i)] = v[i];
                for (d, gm) in grads.iter_mut().enumerate() {
                    gm[(q, i)] = g[i][d];
                }
            }
        }
        Tabulation { values, grads }
    }

    /// Nodal interpolation of a function given in reference coordinates.
    pub fn interpolate(&self, f: impl Fn(&Point) -> f64) -> Vec<f64> {
        self.nodes.iter().map(f).collect()
    }
}

/// Silvester's univariate factors and their derivatives for m = 0..=k.
fn silvester(k: usize, lam: f64) -> ([f64; MAX_DEGREE + 1], [f64; MAX_DEGREE + 1]) {
    let mut v = [0.0; MAX_DEGREE + 1];
    let mut d = [0.0; MAX_DEGREE + 1];
    v[0] = 1.0;
    let kf = k as f64;
    for m in 1..=k {
        let j = (m - 1) as f64;
        let factor = (kf * lam - j) / (j + 1.0);
        d[m] = d[m - 1] * factor + v[m - 1] * kf / (j + 1.0);
        v[m] = v[m - 1] * factor;
    }
    (v, d)
}

fn lagrange_1d(grid: &[f64], i: usize, x: f64) -> (f64, f64) {
    let mut val = 1.0;
    let mut der = 0.0;
    for (j, xj) in grid.iter().enumerate() {
        if j == i {
            continue;
        }
        let denom = grid[i] - xj;
        der = der * (x - xj) / denom + val / denom;
        val *= (x - xj) / denom;
    }
    (val, der)
}

pub(crate) fn sub(a: &Point, b: &Point) -> Point {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub(crate) fn dot(a: &Point, b: &Point) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn cross(a: &Point, b: &Point) -> Point {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

pub(crate) fn norm(a: &Point) -> f64 {
    dot(a, a).sqrt()
}
