//! Voigt-notation kernel.
//!
//! Symmetric tensors are stored as vectors of length `msd` in the order
//! (11, 22, 12) in 2D and (11, 22, 33, 12, 13, 23) in 3D. Strain-type vectors
//! carry the off-diagonal entries un-halved (`e_12 = du1/dx2 + du2/dx1`);
//! stress-type vectors carry the tensor entries.

use nalgebra::{DMatrix, DVector};

use crate::error::{HdgError, Result};
use crate::geometry::{cell_quadrature, face_quadrature, map_physical, CellTables, FaceTables};
use crate::polynomial::Polynomial;
use crate::quadrature::build_quadrature;
use crate::reference::{ElementType, ReferenceElement};
use crate::Point;

/// Nonzero pattern of the symmetric gradient: `(row a, velocity component i,
/// direction d)` meaning `(grad_S u)_a += d u_i / dx_d`. The normal matrix N
/// shares it with `n_d` in place of the derivative.
const SYM_2D: &[(usize, usize, usize)] = &[(0, 0, 0), (1, 1, 1), (2, 0, 1), (2, 1, 0)];
const SYM_3D: &[(usize, usize, usize)] =
    &[(0, 0, 0), (1, 1, 1), (2, 2, 2), (3, 0, 1), (3, 1, 0), (4, 0, 2), (4, 2, 0), (5, 1, 2), (5, 2, 1)];

/// Pattern of the rotation operator: `(row r, component i, direction d, sign)`.
const ROT_2D: &[(usize, usize, usize, f64)] = &[(0, 0, 1, -1.0), (0, 1, 0, 1.0)];
const ROT_3D: &[(usize, usize, usize, f64)] =
    &[(0, 1, 2, -1.0), (0, 2, 1, 1.0), (1, 0, 2, 1.0), (1, 2, 0, -1.0), (2, 0, 1, -1.0), (2, 1, 0, 1.0)];

pub fn msd(nsd: usize) -> usize {
    nsd * (nsd + 1) / 2
}

pub fn nrr(nsd: usize) -> usize {
    nsd * (nsd - 1) / 2
}

pub fn sym_pattern(nsd: usize) -> &'static [(usize, usize, usize)] {
    if nsd == 2 {
        SYM_2D
    } else {
        SYM_3D
    }
}

pub fn rot_pattern(nsd: usize) -> &'static [(usize, usize, usize, f64)] {
    if nsd == 2 {
        ROT_2D
    } else {
        ROT_3D
    }
}

/// Constitutive data in Voigt form for a fluid of viscosity `nu`.
#[derive(Clone, Debug)]
pub struct VoigtOps {
    pub nsd: usize,
    pub msd: usize,
    pub nrr: usize,
    pub nu: f64,
    /// Trace vector E.
    pub e: Vec<f64>,
    /// Diagonal of D.
    pub d: Vec<f64>,
    /// Diagonal of D^{1/2}; D is diagonal so the principal root is elementwise.
    pub d_sqrt: Vec<f64>,
}

impl VoigtOps {
    pub fn new(nsd: usize, nu: f64) -> Result<Self> {
        if !(nsd == 2 || nsd == 3) {
            return Err(HdgError::Config(format!("Voigt kernel supports nsd = 2 or 3, got {nsd}")));
        }
        if !(nu > 0.0) {
            return Err(HdgError::Config(format!("viscosity must be positive, got {nu}")));
        }
        let msd = msd(nsd);
        let e: Vec<f64> = (0..msd).map(|a| if a < nsd { 1.0 } else { 0.0 }).collect();
        let d: Vec<f64> = (0..msd).map(|a| if a < nsd { 2.0 * nu } else { nu }).collect();
        let d_sqrt = d.iter().map(|x| x.sqrt()).collect();
        Ok(Self { nsd, msd, nrr: nrr(nsd), nu, e, d, d_sqrt })
    }

    pub fn d_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_vec(self.d.clone()))
    }

    pub fn d_sqrt_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_vec(self.d_sqrt.clone()))
    }

    /// Voigt stress `-E p + D e_V`.
    pub fn stress(&self, p: f64, strain: &[f64]) -> Vec<f64> {
        (0..self.msd).map(|a| -self.e[a] * p + self.d[a] * strain[a]).collect()
    }
}

/// msd x nsd block of the symmetric gradient for one scalar basis function
/// with physical gradient `grad`.
pub fn strain_rows(nsd: usize, grad: &[f64]) -> DMatrix<f64> {
    let mut b = DMatrix::<f64>::zeros(msd(nsd), nsd);
    for &(a, i, d) in sym_pattern(nsd) {
        b[(a, i)] = grad[d];
    }
    b
}

/// nrr x nsd block of the rotation operator for one scalar basis function.
pub fn rotation_rows(nsd: usize, grad: &[f64]) -> DMatrix<f64> {
    let mut w = DMatrix::<f64>::zeros(nrr(nsd), nsd);
    for &(r, i, d, s) in rot_pattern(nsd) {
        w[(r, i)] = s * grad[d];
    }
    w
}

/// Strain-type Voigt vector to the symmetric tensor (off-diagonals halved).
pub fn voigt_to_tensor(nsd: usize, v: &[f64]) -> Result<DMatrix<f64>> {
    let m = msd(nsd);
    if v.len() != m {
        return Err(HdgError::VoigtLength { expected: m, found: v.len() });
    }
    let mut t = DMatrix::<f64>::zeros(nsd, nsd);
    for &(a, i, d) in sym_pattern(nsd) {
        t[(i, d)] = if i == d { v[a] } else { 0.5 * v[a] };
    }
    Ok(t)
}

/// Inverse of [`voigt_to_tensor`]; only the symmetric part of `t` is kept.
pub fn tensor_to_voigt(t: &DMatrix<f64>) -> Vec<f64> {
    let nsd = t.nrows();
    let mut v = vec![0.0; msd(nsd)];
    for &(a, i, d) in sym_pattern(nsd) {
        if i == d {
            v[a] = t[(i, i)];
        } else if i < d {
            v[a] = t[(i, d)] + t[(d, i)];
        }
    }
    v
}

fn check_unit(n: &[f64]) -> Result<()> {
    let len = n.iter().map(|c| c * c).sum::<f64>().sqrt();
    if (len - 1.0).abs() > 1e-12 {
        return Err(HdgError::NonUnitNormal(len));
    }
    Ok(())
}

/// msd x nsd matrix N with `N^T sigma_V = sigma n`.
pub fn normal_matrix(n: &[f64]) -> Result<DMatrix<f64>> {
    check_unit(n)?;
    let nsd = n.len();
    let mut m = DMatrix::<f64>::zeros(msd(nsd), nsd);
    for &(a, i, d) in sym_pattern(nsd) {
        m[(a, i)] = n[d];
    }
    Ok(m)
}

/// nsd x nrr matrix T; `u^T T` is the tangential part of `u` on a face with
/// normal `n`. In 2D `T = [n2, -n1]^T`; in 3D `T x = n x x`.
pub fn tangent_matrix(n: &[f64]) -> Result<DMatrix<f64>> {
    check_unit(n)?;
    Ok(tangent_matrix_unchecked(n))
}

pub(crate) fn tangent_matrix_unchecked(n: &[f64]) -> DMatrix<f64> {
    if n.len() == 2 {
        DMatrix::from_column_slice(2, 1, &[n[1], -n[0]])
    } else {
        DMatrix::from_row_slice(3, 3, &[0.0, -n[2], n[1], n[2], 0.0, -n[0], -n[1], n[0], 0.0])
    }
}

/// `-T^T v`: the boundary integrand whose integral equals the volume integral
/// of `grad_W v`.
pub fn circulation_density(n: &[f64], v: &[f64]) -> Vec<f64> {
    let t = tangent_matrix_unchecked(n);
    (0..t.ncols()).map(|r| -(0..n.len()).map(|i| t[(i, r)] * v[i]).sum::<f64>()).collect()
}

struct InterpolatedElement {
    cell: crate::geometry::CellQuadrature,
    faces: Vec<crate::geometry::FaceQuadrature>,
}

fn element_quadrature(element: ElementType, vertices: &[Point], degree: usize) -> Result<InterpolatedElement> {
    let geo = ReferenceElement::new(element, 1)?;
    let basis = ReferenceElement::new(element, degree)?;
    let order = 2 * degree + 2;
    let tables = CellTables::new(&geo, &basis, build_quadrature(element, order)?);
    let cell = cell_quadrature(vertices, element.dim(), &tables)?;
    let face_type = element.face_type().expect("cell element");
    let face_geo = ReferenceElement::new(face_type, 1)?;
    let ftables = FaceTables::new(&face_geo, build_quadrature(face_type, order)?);
    let faces = element.local_faces().iter().map(|f| face_quadrature(element, vertices, f, &basis, &ftables)).collect();
    Ok(InterpolatedElement { cell, faces })
}

fn interpolate_physical(element: ElementType, vertices: &[Point], degree: usize, p: &Polynomial) -> Result<Vec<f64>> {
    let geo = ReferenceElement::new(element, 1)?;
    let basis = ReferenceElement::new(element, degree)?;
    basis.nodes().iter().map(|xi| map_physical(vertices, &geo, xi).map(|m| p.eval(&m.x))).collect()
}

/// Residual of the generalized Gauss identity
/// `oint (N^T s_V) . v = int s_V . grad_S v + int (grad_S^T s_V) . v`
/// for polynomial fields of degree `<= degree`, evaluated through the nodal
/// basis and the assembly kernels.
pub fn check_generalized_gauss(
    element: ElementType,
    vertices: &[Point],
    degree: usize,
    sigma: &[Polynomial],
    v: &[Polynomial],
) -> Result<f64> {
    let nsd = element.dim();
    if sigma.len() != msd(nsd) {
        return Err(HdgError::VoigtLength { expected: msd(nsd), found: sigma.len() });
    }
    let eq = element_quadrature(element, vertices, degree)?;
    let sc: Vec<Vec<f64>> =
        sigma.iter().map(|p| interpolate_physical(element, vertices, degree, p)).collect::<Result<_>>()?;
    let vc: Vec<Vec<f64>> =
        v.iter().map(|p| interpolate_physical(element, vertices, degree, p)).collect::<Result<_>>()?;
    let n = sc[0].len();
    let m = msd(nsd);

    let mut volume = 0.0;
    for q in 0..eq.cell.len() {
        let w = eq.cell.weights[q];
        let mut s = vec![0.0; m];
        let mut div_s = vec![0.0; nsd];
        let mut vv = vec![0.0; nsd];
        let mut sym_v = vec![0.0; m];
        for j in 0..n {
            let phi = eq.cell.values[(q, j)];
            let grad: Vec<f64> = (0..nsd).map(|d| eq.cell.grads[d][(q, j)]).collect();
            let b = strain_rows(nsd, &grad);
            for a in 0..m {
                s[a] += sc[a][j] * phi;
                for i in 0..nsd {
                    // grad_S^T s: transpose of the strain block
                    div_s[i] += b[(a, i)] * sc[a][j];
                    sym_v[a] += b[(a, i)] * vc[i][j];
                }
            }
            for i in 0..nsd {
                vv[i] += vc[i][j] * phi;
            }
        }
        let s_dot: f64 = (0..m).map(|a| s[a] * sym_v[a]).sum();
        let d_dot: f64 = (0..nsd).map(|i| div_s[i] * vv[i]).sum();
        volume += w * (s_dot + d_dot);
    }

    let mut boundary = 0.0;
    for fq in &eq.faces {
        for q in 0..fq.len() {
            let nm = normal_matrix(&fq.normals[q][..nsd])?;
            let mut s = vec![0.0; m];
            let mut vv = vec![0.0; nsd];
            for j in 0..n {
                let phi = fq.values[(q, j)];
                for a in 0..m {
                    s[a] += sc[a][j] * phi;
                }
                for i in 0..nsd {
                    vv[i] += vc[i][j] * phi;
                }
            }
            let traction = nm.transpose() * DVector::from_vec(s);
            boundary += fq.weights[q] * (0..nsd).map(|i| traction[i] * vv[i]).sum::<f64>();
        }
    }
    Ok((boundary - volume).abs())
}

/// Both sides of the generalized Stokes identity
/// `int grad_W v = -oint T^T v` for a polynomial field of degree `<= degree`.
/// Returns `(volume, circulation)`.
pub fn check_generalized_stokes(
    element: ElementType,
    vertices: &[Point],
    degree: usize,
    v: &[Polynomial],
) -> Result<(Vec<f64>, Vec<f64>)> {
    let nsd = element.dim();
    let eq = element_quadrature(element, vertices, degree)?;
    let vc: Vec<Vec<f64>> =
        v.iter().map(|p| interpolate_physical(element, vertices, degree, p)).collect::<Result<_>>()?;
    let n = vc[0].len();
    let nr = nrr(nsd);
    let mut volume = vec![0.0; nr];
    for q in 0..eq.cell.len() {
        for j in 0..n {
            let grad: Vec<f64> = (0..nsd).map(|d| eq.cell.grads[d][(q, j)]).collect();
            let wrows = rotation_rows(nsd, &grad);
            for r in 0..nr {
                for i in 0..nsd {
                    volume[r] += eq.cell.weights[q] * wrows[(r, i)] * vc[i][j];
                }
            }
        }
    }
    let mut circulation = vec![0.0; nr];
    for fq in &eq.faces {
        for q in 0..fq.len() {
            let vv: Vec<f64> = (0..nsd).map(|i| (0..n).map(|j| vc[i][j] * fq.values[(q, j)]).sum()).collect();
            let c = circulation_density(&fq.normals[q][..nsd], &vv);
            for r in 0..nr {
                circulation[r] += fq.weights[q] * c[r];
            }
        }
    }
    Ok((volume, circulation))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn unit_square() -> Vec<Point> {
        vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [1.0, 1.0, 0.0]]
    }

    #[test]
    fn constitutive_matrices() {
        let v2 = VoigtOps::new(2, 1.5).unwrap();
        assert_eq!(v2.e, vec![1.0, 1.0, 0.0]);
        assert_eq!(v2.d, vec![3.0, 3.0, 1.5]);
        let v3 = VoigtOps::new(3, 1.0).unwrap();
        assert_eq!(v3.e, vec![1.0, 1.0, 1.0, 0.0, 0.0, 0.0]);
        assert_eq!(v3.d, vec![2.0, 2.0, 2.0, 1.0, 1.0, 1.0]);
        for v in [v2, v3] {
            let ds = v.d_sqrt_matrix();
            let err = (&ds * &ds - v.d_matrix()).abs().max();
            assert!(err < 1e-14);
        }
        assert!(VoigtOps::new(2, 0.0).is_err());
    }

    #[test]
    fn strain_of_simple_fields() {
        // u = (x1, 0): grad u1 = (1, 0), grad u2 = 0
        let e = strain_rows(2, &[1.0, 0.0]).column(0).into_owned();
        assert_eq!(e.as_slice(), &[1.0, 0.0, 0.0]);
        // u = (x2, x1): e_V = B(grad x2)[:,0] + B(grad x1)[:,1]
        let e = strain_rows(2, &[0.0, 1.0]).column(0) + strain_rows(2, &[1.0, 0.0]).column(1);
        assert_eq!(e.as_slice(), &[0.0, 0.0, 2.0]);
    }

    #[test]
    fn strain_matches_dense_tensor_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            // random linear 3D field u = G x, grad u = G
            let g = DMatrix::from_fn(3, 3, |_, _| rng.random_range(-1.0..1.0));
            let mut e = DVector::<f64>::zeros(6);
            for i in 0..3 {
                e += strain_rows(3, &[g[(i, 0)], g[(i, 1)], g[(i, 2)]]).column(i);
            }
            let eps = 0.5 * (&g + g.transpose());
            let want = tensor_to_voigt(&eps);
            // tensor_to_voigt doubles the off-diagonals of the symmetric tensor
            for a in 0..6 {
                assert!((e[a] - want[a]).abs() < 1e-14);
            }
            let back = voigt_to_tensor(3, e.as_slice()).unwrap();
            assert!((back - eps).abs().max() < 1e-14);
        }
    }

    #[test]
    fn voigt_tensor_conversions() {
        let id = voigt_to_tensor(2, &[1.0, 1.0, 0.0]).unwrap();
        assert_eq!(id, DMatrix::identity(2, 2));
        let t = voigt_to_tensor(2, &[0.0, 0.0, 2.0]).unwrap();
        assert_eq!(t, DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]));
        assert!(matches!(voigt_to_tensor(3, &[1.0, 2.0]), Err(HdgError::VoigtLength { expected: 6, found: 2 })));
    }

    #[test]
    fn normal_and_tangent_matrices() {
        let n = normal_matrix(&[1.0, 0.0]).unwrap();
        assert_eq!(n, DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 0.0, 0.0, 1.0]));
        let t = tangent_matrix(&[1.0, 0.0]).unwrap();
        assert_eq!(t.as_slice(), &[0.0, -1.0]);
        assert!(matches!(normal_matrix(&[1.0, 1.0]), Err(HdgError::NonUnitNormal(_))));

        // isotropic stress: N^T sigma_V = -p n
        let p = 2.5;
        let nn = [0.6, 0.8];
        let sigma = DVector::from_vec(vec![-p, -p, 0.0]);
        let tr = normal_matrix(&nn).unwrap().transpose() * sigma;
        assert!((tr[0] + p * nn[0]).abs() < 1e-15 && (tr[1] + p * nn[1]).abs() < 1e-15);
    }

    #[test]
    fn tangent_matrix_3d_is_cross_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let mut n: [f64; 3] =
                [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
            let len = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
            n.iter_mut().for_each(|c| *c /= len);
            let x = DVector::from_fn(3, |_, _| rng.random_range(-1.0..1.0));
            let tx = tangent_matrix(&n).unwrap() * &x;
            let c = crate::reference::cross(&n, &[x[0], x[1], x[2]]);
            for r in 0..3 {
                assert!((tx[r] - c[r]).abs() < 1e-14);
            }
        }
        let n2 = [0.6, -0.8];
        let t2 = tangent_matrix(&n2).unwrap();
        assert!((t2[(0, 0)] * n2[0] + t2[(1, 0)] * n2[1]).abs() == 0.0);
        assert!((t2.norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rigid_rotation_vorticity() {
        // u = (-x2, x1): grad u1 = (0, -1), grad u2 = (1, 0)
        let w = rotation_rows(2, &[0.0, -1.0]).column(0) + rotation_rows(2, &[1.0, 0.0]).column(1);
        assert_eq!(w[0], 2.0);
    }

    #[test]
    fn trace_identity_gives_divergence() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for nsd in [2, 3] {
            let ops = VoigtOps::new(nsd, 1.0).unwrap();
            let g = DMatrix::from_fn(nsd, nsd, |_, _| rng.random_range(-1.0..1.0));
            let mut e = DVector::<f64>::zeros(ops.msd);
            for i in 0..nsd {
                let row: Vec<f64> = (0..nsd).map(|d| g[(i, d)]).collect();
                e += strain_rows(nsd, &row).column(i);
            }
            let div: f64 = e.iter().zip(&ops.e).map(|(a, b)| a * b).sum();
            assert!((div - g.trace()).abs() < 1e-14);
        }
    }

    #[test]
    fn normal_flux_matches_dense_stress() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for nsd in [2, 3] {
            let nu = 0.7;
            let ops = VoigtOps::new(nsd, nu).unwrap();
            let g = DMatrix::from_fn(nsd, nsd, |_, _| rng.random_range(-1.0..1.0));
            let mut n: Vec<f64> = (0..nsd).map(|_| rng.random_range(-1.0..1.0)).collect();
            let len = n.iter().map(|c| c * c).sum::<f64>().sqrt();
            n.iter_mut().for_each(|c| *c /= len);
            let mut e = DVector::<f64>::zeros(ops.msd);
            for i in 0..nsd {
                let row: Vec<f64> = (0..nsd).map(|d| g[(i, d)]).collect();
                e += strain_rows(nsd, &row).column(i);
            }
            let flux = normal_matrix(&n).unwrap().transpose() * ops.d_sqrt_matrix() * ops.d_sqrt_matrix() * e;
            let sigma = (&g + g.transpose()) * nu;
            let want = sigma * DVector::from_vec(n.clone());
            assert!((flux - want).abs().max() < 1e-14);
        }
    }

    #[test]
    fn gauss_identity_constant_fields() {
        let sigma: Vec<Polynomial> = [1.0, -2.0, 0.5].iter().map(|c| Polynomial::constant(*c)).collect();
        let v = vec![Polynomial::constant(0.3), Polynomial::constant(-1.1)];
        let verts = vec![[0.0, 0.0, 0.0], [2.0, 0.1, 0.0], [0.3, 1.2, 0.0]];
        let r = check_generalized_gauss(ElementType::Triangle, &verts, 1, &sigma, &v).unwrap();
        assert!(r < 1e-14);
    }

    #[test]
    fn gauss_identity_quadratic_fields_on_triangle() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let verts = vec![[0.1, 0.0, 0.0], [1.3, 0.2, 0.0], [0.4, 0.9, 0.0]];
        let sigma: Vec<Polynomial> = (0..3).map(|_| Polynomial::random(2, 2, &mut rng)).collect();
        let v: Vec<Polynomial> = (0..2).map(|_| Polynomial::random(2, 2, &mut rng)).collect();
        let r = check_generalized_gauss(ElementType::Triangle, &verts, 2, &sigma, &v).unwrap();
        assert!(r < 1e-12, "residual {r}");
    }

    #[test]
    fn stokes_identity_rigid_rotation_unit_square() {
        let v = vec![-Polynomial::coordinate(1), Polynomial::coordinate(0)];
        let (vol, circ) = check_generalized_stokes(ElementType::Quadrilateral, &unit_square(), 1, &v).unwrap();
        assert!((vol[0] - 2.0).abs() < 1e-13);
        assert!((circ[0] - 2.0).abs() < 1e-13);
    }
}
