//! Physical mappings and per-element quadrature data.

use nalgebra::DMatrix;

use crate::error::{HdgError, Result};
use crate::quadrature::QuadratureRule;
use crate::reference::{cross, dot, norm, sub, ElementType, ReferenceElement, Tabulation};
use crate::Point;

pub type Mat3 = [[f64; 3]; 3];

/// Affine/multilinear map from reference to physical coordinates at one point.
#[derive(Clone, Debug)]
pub struct Mapping {
    pub x: Point,
    /// `jacobian[r][c] = dx_r / dxi_c`
    pub jacobian: Mat3,
    pub det: f64,
    pub inverse_transpose: Mat3,
}

impl Mapping {
    /// Physical gradient `J^{-T} g` of a reference gradient.
    pub fn physical_gradient(&self, g: &[f64; 3]) -> [f64; 3] {
        apply(&self.inverse_transpose, g)
    }
}

pub(crate) fn apply(m: &Mat3, v: &[f64; 3]) -> [f64; 3] {
    [
        m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
        m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
        m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
    ]
}

fn build_mapping(dim: usize, x: Point, mut jac: Mat3) -> Result<Mapping> {
    if dim == 2 {
        jac[2] = [0.0, 0.0, 1.0];
        jac[0][2] = 0.0;
        jac[1][2] = 0.0;
    }
    let det = jac[0][0] * (jac[1][1] * jac[2][2] - jac[1][2] * jac[2][1])
        - jac[0][1] * (jac[1][0] * jac[2][2] - jac[1][2] * jac[2][0])
        + jac[0][2] * (jac[1][0] * jac[2][1] - jac[1][1] * jac[2][0]);
    if !(det > 0.0) {
        return Err(HdgError::InvertedElement { element: None, det_j: det });
    }
    // inverse transpose = cofactor / det
    let mut it = [[0.0; 3]; 3];
    for r in 0..3 {
        for c in 0..3 {
            let (r1, r2) = ((r + 1) % 3, (r + 2) % 3);
            let (c1, c2) = ((c + 1) % 3, (c + 2) % 3);
            it[r][c] = (jac[r1][c1] * jac[r2][c2] - jac[r1][c2] * jac[r2][c1]) / det;
        }
    }
    Ok(Mapping { x, jacobian: jac, det, inverse_transpose: it })
}

/// Map reference point `xi` of a straight-sided element with the given vertices.
/// `geometry` must be the degree-1 reference element of the cell type.
pub fn map_physical(vertices: &[Point], geometry: &ReferenceElement, xi: &Point) -> Result<Mapping> {
    let n = geometry.n_basis();
    let mut v = vec![0.0; n];
    let mut g = vec![[0.0; 3]; n];
    geometry.eval(xi, &mut v, &mut g);
    let mut x = [0.0; 3];
    let mut jac = [[0.0; 3]; 3];
    for (i, vert) in vertices.iter().enumerate().take(n) {
        for r in 0..3 {
            x[r] += v[i] * vert[r];
            for c in 0..geometry.dim() {
                jac[r][c] += vert[r] * g[i][c];
            }
        }
    }
    build_mapping(geometry.dim(), x, jac)
}

/// Reference data shared by every element of one type: a rule and the
/// geometric and solution bases tabulated at its points.
#[derive(Clone, Debug)]
pub struct CellTables {
    pub rule: QuadratureRule,
    pub geometry: Tabulation,
    pub basis: Tabulation,
}

impl CellTables {
    pub fn new(geometry: &ReferenceElement, basis: &ReferenceElement, rule: QuadratureRule) -> Self {
        Self { geometry: geometry.tabulate(&rule.points), basis: basis.tabulate(&rule.points), rule }
    }
}

#[derive(Clone, Debug)]
pub struct CellQuadrature {
    /// Reference weight times detJ.
    pub weights: Vec<f64>,
    pub points: Vec<Point>,
    /// `values[(q, i)]`
    pub values: DMatrix<f64>,
    /// Physical gradients, one matrix per direction.
    pub grads: Vec<DMatrix<f64>>,
}

impl CellQuadrature {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn measure(&self) -> f64 {
        self.weights.iter().sum()
    }
}

pub fn cell_quadrature(vertices: &[Point], dim: usize, tables: &CellTables) -> Result<CellQuadrature> {
    let nq = tables.rule.len();
    let n = tables.basis.values.ncols();
    let ng = tables.geometry.values.ncols();
    let mut weights = Vec::with_capacity(nq);
    let mut points = Vec::with_capacity(nq);
    let mut grads = vec![DMatrix::<f64>::zeros(nq, n); dim];
    for q in 0..nq {
        let mut x = [0.0; 3];
        let mut jac = [[0.0; 3]; 3];
        for (i, vert) in vertices.iter().enumerate().take(ng) {
            let s = tables.geometry.values[(q, i)];
            for r in 0..3 {
                x[r] += s * vert[r];
                for c in 0..dim {
                    jac[r][c] += vert[r] * tables.geometry.grads[c][(q, i)];
                }
            }
        }
        let map = build_mapping(dim, x, jac)?;
        weights.push(tables.rule.weights[q] * map.det);
        points.push(x);
        for i in 0..n {
            let mut g = [0.0; 3];
            for (c, gc) in g.iter_mut().enumerate().take(dim) {
                *gc = tables.basis.grads[c][(q, i)];
            }
            let pg = map.physical_gradient(&g);
            for (d, gm) in grads.iter_mut().enumerate() {
                gm[(q, i)] = pg[d];
            }
        }
    }
    Ok(CellQuadrature { weights, points, values: tables.basis.values.clone(), grads })
}

/// Quadrature on one face of one element, parametrized by the face's
/// canonical vertex order so both neighbours see identical points.
#[derive(Clone, Debug)]
pub struct FaceQuadrature {
    pub weights: Vec<f64>,
    pub points: Vec<Point>,
    /// Outward unit normal with respect to the element.
    pub normals: Vec<Point>,
    /// Element basis at the face points, `values[(q, i)]`.
    pub values: DMatrix<f64>,
}

impl FaceQuadrature {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn measure(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// Face-side reference data: the face rule and the degree-1 face element
/// tabulated at its points.
#[derive(Clone, Debug)]
pub struct FaceTables {
    pub rule: QuadratureRule,
    pub geometry: Tabulation,
}

impl FaceTables {
    pub fn new(face_geometry: &ReferenceElement, rule: QuadratureRule) -> Self {
        Self { geometry: face_geometry.tabulate(&rule.points), rule }
    }
}

/// `canonical_vertices` lists the element-local vertex ids of the face in the
/// face's canonical order.
pub fn face_quadrature(
    element: ElementType,
    vertices: &[Point],
    canonical_vertices: &[usize],
    basis: &ReferenceElement,
    tables: &FaceTables,
) -> FaceQuadrature {
    let dim = element.dim();
    let ref_verts = element.vertex_coordinates();
    let nv = vertices.len().min(element.n_vertices());
    let mut centroid = [0.0; 3];
    for v in &vertices[..nv] {
        for r in 0..3 {
            centroid[r] += v[r] / nv as f64;
        }
    }
    let nq = tables.rule.len();
    let n = basis.n_basis();
    let mut weights = Vec::with_capacity(nq);
    let mut points = Vec::with_capacity(nq);
    let mut normals = Vec::with_capacity(nq);
    let mut values = DMatrix::<f64>::zeros(nq, n);
    let mut phi = vec![0.0; n];
    let mut dphi = vec![[0.0; 3]; n];
    for q in 0..nq {
        let mut xi = [0.0; 3];
        let mut x = [0.0; 3];
        let mut t = [[0.0; 3]; 2];
        for (i, &lv) in canonical_vertices.iter().enumerate() {
            let s = tables.geometry.values[(q, i)];
            for r in 0..3 {
                xi[r] += s * ref_verts[lv][r];
                x[r] += s * vertices[lv][r];
                for (c, tc) in t.iter_mut().enumerate().take(dim - 1) {
                    tc[r] += tables.geometry.grads[c][(q, i)] * vertices[lv][r];
                }
            }
        }
        let mut normal = if dim == 2 { [t[0][1], -t[0][0], 0.0] } else { cross(&t[0], &t[1]) };
        let jac = norm(&normal);
        for c in normal.iter_mut() {
            *c /= jac;
        }
        if dot(&normal, &sub(&x, &centroid)) < 0.0 {
            for c in normal.iter_mut() {
                *c = -*c;
            }
        }
        weights.push(tables.rule.weights[q] * jac);
        points.push(x);
        normals.push(normal);
        basis.eval(&xi, &mut phi, &mut dphi);
        for i in 0..n {
            values[(q, i)] = phi[i];
        }
    }
    FaceQuadrature { weights, points, normals, values }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::build_quadrature;

    #[test]
    fn identity_triangle() {
        let geo = ReferenceElement::new(ElementType::Triangle, 1).unwrap();
        let verts = ElementType::Triangle.vertex_coordinates();
        let m = map_physical(&verts, &geo, &[0.2, 0.3, 0.0]).unwrap();
        assert!((m.det - 1.0).abs() < 1e-15);
        for r in 0..2 {
            for c in 0..2 {
                let want = if r == c { 1.0 } else { 0.0 };
                assert!((m.jacobian[r][c] - want).abs() < 1e-15);
            }
        }
        assert!((m.x[0] - 0.2).abs() < 1e-15 && (m.x[1] - 0.3).abs() < 1e-15);
    }

    #[test]
    fn scaled_quad_determinant() {
        let h = 0.25;
        let geo = ReferenceElement::new(ElementType::Quadrilateral, 1).unwrap();
        let verts = vec![[0.0, 0.0, 0.0], [h, 0.0, 0.0], [0.0, h, 0.0], [h, h, 0.0]];
        let m = map_physical(&verts, &geo, &[0.1, -0.7, 0.0]).unwrap();
        assert!((m.det - h * h / 4.0).abs() < 1e-15);
    }

    #[test]
    fn inverted_element_is_rejected() {
        let geo = ReferenceElement::new(ElementType::Triangle, 1).unwrap();
        let verts = vec![[0.0, 0.0, 0.0], [0.0, 1.0, 0.0], [1.0, 0.0, 0.0]];
        assert!(matches!(map_physical(&verts, &geo, &[0.1, 0.1, 0.0]), Err(HdgError::InvertedElement { .. })));
    }

    #[test]
    fn linear_field_gradient_under_affine_map() {
        // u(x) = 1.5 x - 0.5 y + 2 z; the physical gradient must be (1.5, -0.5, 2)
        let geo = ReferenceElement::new(ElementType::Tetrahedron, 1).unwrap();
        let verts = vec![[0.1, 0.2, -0.3], [1.3, 0.1, 0.2], [0.4, 1.1, -0.1], [0.2, 0.3, 0.9]];
        let basis = ReferenceElement::new(ElementType::Tetrahedron, 2).unwrap();
        let f = |x: &Point| 1.5 * x[0] - 0.5 * x[1] + 2.0 * x[2];
        let coeffs: Vec<f64> = basis.nodes().iter().map(|xi| f(&map_physical(&verts, &geo, xi).unwrap().x)).collect();
        let tables = CellTables::new(&geo, &basis, build_quadrature(ElementType::Tetrahedron, 3).unwrap());
        let cq = cell_quadrature(&verts, 3, &tables).unwrap();
        for q in 0..cq.len() {
            for (d, want) in [1.5, -0.5, 2.0].iter().enumerate() {
                let g: f64 = (0..basis.n_basis()).map(|i| coeffs[i] * cq.grads[d][(q, i)]).sum();
                assert!((g - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn face_measure_and_normals() {
        let geo1 = ReferenceElement::new(ElementType::Triangle, 1).unwrap();
        let basis = ReferenceElement::new(ElementType::Tetrahedron, 1).unwrap();
        let tables = FaceTables::new(&geo1, build_quadrature(ElementType::Triangle, 4).unwrap());
        let verts = ElementType::Tetrahedron.vertex_coordinates();
        let mut total = [0.0; 3];
        for f in ElementType::Tetrahedron.local_faces() {
            let fq = face_quadrature(ElementType::Tetrahedron, &verts, f, &basis, &tables);
            for q in 0..fq.len() {
                assert!((norm(&fq.normals[q]) - 1.0).abs() < 1e-12);
                for r in 0..3 {
                    total[r] += fq.weights[q] * fq.normals[q][r];
                }
            }
        }
        // closed surface
        assert!(norm(&total) < 1e-12);
        // slanted face of the unit tetrahedron has area sqrt(3)/2
        let fq = face_quadrature(ElementType::Tetrahedron, &verts, &[1, 2, 3], &basis, &tables);
        assert!((fq.measure() - 3f64.sqrt() / 2.0).abs() < 1e-12);
    }
}
