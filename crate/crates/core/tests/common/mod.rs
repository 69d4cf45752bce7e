#![allow(dead_code)]

use hdg_core::analysis::ManufacturedSolution;
use hdg_core::local::{CondensedElement, Discretization};
use hdg_core::problem::StokesData;
use hdg_core::{ElementType, FaceKind, Mesh, Point, ReferenceElement};
use nalgebra::{DMatrix, DVector};

pub fn single_element(et: ElementType, vertices: Vec<Point>) -> Mesh {
    let cell = (0..vertices.len()).collect();
    Mesh::from_elements(et, vertices, vec![cell], 1.0).unwrap()
}

pub fn reference_vertices(et: ElementType) -> Vec<Point> {
    et.vertex_coordinates()
}

/// Physical position of reference point `xi` on element `e`.
pub fn map_point(mesh: &Mesh, e: usize, xi: &Point) -> Point {
    let geo = ReferenceElement::new(mesh.element_type, 1).unwrap();
    let verts = mesh.element_vertices(e);
    let w = geo.values_at(xi);
    let mut x = [0.0; 3];
    for (v, wv) in verts.iter().zip(w) {
        for r in 0..3 {
            x[r] += wv * v[r];
        }
    }
    x
}

/// Nodal coefficients `(components x n)` of `f` on element `e`.
pub fn interpolate(
    mesh: &Mesh,
    e: usize,
    basis: &ReferenceElement,
    comps: usize,
    f: impl Fn(&Point) -> Vec<f64>,
) -> DMatrix<f64> {
    let mut c = DMatrix::<f64>::zeros(comps, basis.n_basis());
    for (m, xi) in basis.nodes().iter().enumerate() {
        let v = f(&map_point(mesh, e, xi));
        for i in 0..comps {
            c[(i, m)] = v[i];
        }
    }
    c
}

/// Trace coefficients of `g` on face `f`, component-major.
pub fn trace_interpolant(mesh: &Mesh, disc: &Discretization, f: usize, g: impl Fn(&Point) -> [f64; 3]) -> Vec<f64> {
    let face_type = mesh.element_type.face_type().unwrap();
    let geo = ReferenceElement::new(face_type, 1).unwrap();
    let nodes = &mesh.faces[f].nodes;
    let nf = disc.n_face();
    let nsd = disc.nsd();
    let mut y = vec![0.0; nsd * nf];
    for (l, eta) in disc.trace.nodes().iter().enumerate() {
        let w = geo.values_at(eta);
        let mut x = [0.0; 3];
        for (&n, wv) in nodes.iter().zip(w) {
            for r in 0..3 {
                x[r] += wv * mesh.nodes[n][r];
            }
        }
        let v = g(&x);
        for i in 0..nsd {
            y[i * nf + l] = v[i];
        }
    }
    y
}

/// Trace columns of one element from a velocity function and a mean pressure.
pub fn element_columns(
    mesh: &Mesh,
    disc: &Discretization,
    ce: &CondensedElement,
    g: impl Fn(&Point) -> [f64; 3],
    rho: f64,
) -> Vec<f64> {
    let mut y = vec![0.0; ce.columns.n_cols];
    for (lf, off) in ce.columns.face_offset.iter().enumerate() {
        if let Some(o) = off {
            let f = mesh.elements[ce.element].faces[lf];
            let t = trace_interpolant(mesh, disc, f, &g);
            y[*o..*o + t.len()].copy_from_slice(&t);
        }
    }
    y[ce.columns.rho()] = rho;
    y
}

/// Boundary mean of the exact pressure of element `e`.
pub fn exact_boundary_mean(mesh: &Mesh, disc: &Discretization, e: usize, exact: &dyn ManufacturedSolution) -> f64 {
    let eq = hdg_core::local::element_quadrature(mesh, e, &disc.basis, &disc.cell_tables, &disc.face_tables).unwrap();
    let (mut s, mut m) = (0.0, 0.0);
    for fq in &eq.faces {
        for q in 0..fq.len() {
            s += fq.weights[q] * exact.pressure(&fq.points[q]);
            m += fq.weights[q];
        }
    }
    s / m
}

pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.amax()
}

pub fn vmax(v: &DVector<f64>) -> f64 {
    v.amax()
}

pub fn all_neumann(mesh: Mesh) -> Mesh {
    mesh.classify_boundary(|_| true)
}

pub fn count(mesh: &Mesh, kind: FaceKind) -> usize {
    mesh.faces.iter().filter(|f| f.kind == kind).count()
}

/// Data scaled by `c`: viscosity, body force and traction times `c`.
pub struct Scaled<'a> {
    pub inner: &'a dyn StokesData,
    pub c: f64,
}

impl StokesData for Scaled<'_> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn viscosity(&self) -> f64 {
        self.c * self.inner.viscosity()
    }
    fn source(&self, x: &Point) -> [f64; 3] {
        self.inner.source(x).map(|v| v * self.c)
    }
    fn dirichlet(&self, x: &Point) -> [f64; 3] {
        self.inner.dirichlet(x)
    }
    fn traction(&self, x: &Point, n: &Point) -> [f64; 3] {
        self.inner.traction(x, n).map(|v| v * self.c)
    }
}
