//! Element-local HDG problem: assembly, static condensation onto the face
//! trace and the element mean pressure, and recovery of the local fields.
//!
//! Local unknowns are ordered `[L (msd blocks) | u (nsd blocks) | p | zeta]`,
//! each block holding the `n_k` nodal coefficients. `zeta` multiplies the
//! boundary-mean pressure constraint. Trace columns follow the element's
//! local faces (non-Dirichlet faces only), component-major within a face,
//! with the element mean pressure as the last column.

use nalgebra::{DMatrix, DVector};

use crate::error::{HdgError, Result};
use crate::geometry::{cell_quadrature, face_quadrature, CellQuadrature, CellTables, FaceQuadrature, FaceTables};
use crate::mesh::{FaceKind, Mesh};
use crate::problem::StokesData;
use crate::quadrature::build_quadrature;
use crate::reference::{ElementType, ReferenceElement, Tabulation};
use crate::voigt::{sym_pattern, VoigtOps};
use crate::Point;

/// Highest solver degree; the post-process uses one more.
pub const MAX_SOLVER_DEGREE: usize = 4;

/// Reference data shared by every element of a discretization.
#[derive(Clone, Debug)]
pub struct Discretization {
    pub element_type: ElementType,
    pub k: usize,
    pub tau: f64,
    pub voigt: VoigtOps,
    pub geometry: ReferenceElement,
    pub basis: ReferenceElement,
    pub trace: ReferenceElement,
    pub post: ReferenceElement,
    pub cell_tables: CellTables,
    pub face_tables: FaceTables,
    /// Trace basis at the face rule points, `(q, l)`.
    pub trace_values: DMatrix<f64>,
    pub post_cell_tables: CellTables,
    /// Degree-k basis at the post-process cell points.
    pub post_low: Tabulation,
    pub post_face_tables: FaceTables,
    pub post_trace_values: DMatrix<f64>,
}

impl Discretization {
    /// Default cell/face quadrature order `2k + 2`.
    pub fn new(element_type: ElementType, k: usize, tau: f64, nu: f64) -> Result<Self> {
        Self::with_order(element_type, k, tau, nu, 2 * k + 2)
    }

    pub fn with_order(element_type: ElementType, k: usize, tau: f64, nu: f64, order: usize) -> Result<Self> {
        if k == 0 || k > MAX_SOLVER_DEGREE {
            return Err(HdgError::UnsupportedElement { element: element_type, degree: k });
        }
        if !(tau > 0.0) || !tau.is_finite() {
            return Err(HdgError::Config(format!("stabilization must be positive, got {tau}")));
        }
        let face_type = element_type
            .face_type()
            .filter(|_| element_type.dim() >= 2)
            .ok_or(HdgError::UnsupportedElement { element: element_type, degree: k })?;
        let voigt = VoigtOps::new(element_type.dim(), nu)?;
        let geometry = ReferenceElement::new(element_type, 1)?;
        let basis = ReferenceElement::new(element_type, k)?;
        let trace = ReferenceElement::new(face_type, k)?;
        let post = ReferenceElement::new(element_type, k + 1)?;
        let face_geometry = ReferenceElement::new(face_type, 1)?;

        let cell_tables = CellTables::new(&geometry, &basis, build_quadrature(element_type, order)?);
        let face_tables = FaceTables::new(&face_geometry, build_quadrature(face_type, order)?);
        let trace_values = trace.tabulate(&face_tables.rule.points).values;

        let post_order = 2 * (k + 1) + 2;
        let post_cell_tables = CellTables::new(&geometry, &post, build_quadrature(element_type, post_order)?);
        let post_low = basis.tabulate(&post_cell_tables.rule.points);
        let post_face_tables = FaceTables::new(&face_geometry, build_quadrature(face_type, post_order)?);
        let post_trace_values = trace.tabulate(&post_face_tables.rule.points).values;
        Ok(Self {
            element_type,
            k,
            tau,
            voigt,
            geometry,
            basis,
            trace,
            post,
            cell_tables,
            face_tables,
            trace_values,
            post_cell_tables,
            post_low,
            post_face_tables,
            post_trace_values,
        })
    }

    pub fn nsd(&self) -> usize {
        self.voigt.nsd
    }

    pub fn msd(&self) -> usize {
        self.voigt.msd
    }

    /// Basis functions per scalar field on an element.
    pub fn n_k(&self) -> usize {
        self.basis.n_basis()
    }

    /// Trace basis functions per scalar field on a face.
    pub fn n_face(&self) -> usize {
        self.trace.n_basis()
    }

    /// Size of the (L, u, p, zeta) system.
    pub fn n_local(&self) -> usize {
        (self.msd() + self.nsd() + 1) * self.n_k() + 1
    }

    pub fn l_index(&self, a: usize, m: usize) -> usize {
        a * self.n_k() + m
    }

    pub fn u_index(&self, i: usize, m: usize) -> usize {
        (self.msd() + i) * self.n_k() + m
    }

    pub fn p_index(&self, m: usize) -> usize {
        (self.msd() + self.nsd()) * self.n_k() + m
    }

    pub fn zeta_index(&self) -> usize {
        self.n_local() - 1
    }
}

/// Element geometry at the quadrature points of a set of tables.
#[derive(Clone, Debug)]
pub struct ElementQuadrature {
    pub cell: CellQuadrature,
    /// One entry per local face, parametrized in canonical face order.
    pub faces: Vec<FaceQuadrature>,
}

pub fn element_quadrature(
    mesh: &Mesh,
    e: usize,
    basis: &ReferenceElement,
    cell_tables: &CellTables,
    face_tables: &FaceTables,
) -> Result<ElementQuadrature> {
    let verts = mesh.element_vertices(e);
    let cell = cell_quadrature(&verts, mesh.dim, cell_tables).map_err(|err| match err {
        HdgError::InvertedElement { det_j, .. } => HdgError::InvertedElement { element: Some(e), det_j },
        other => other,
    })?;
    let faces = mesh.elements[e]
        .faces
        .iter()
        .map(|&f| {
            let side = mesh.faces[f]
                .sides
                .iter()
                .find(|s| s.element == e)
                .ok_or_else(|| HdgError::DofMap(format!("face {f} does not list element {e}")))?;
            Ok(face_quadrature(mesh.element_type, &verts, &side.local_vertices, basis, face_tables))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ElementQuadrature { cell, faces })
}

/// Map from local faces to trace columns of one element.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceColumns {
    /// First column of each local face, `None` on Dirichlet faces.
    pub face_offset: Vec<Option<usize>>,
    /// Total number of columns including the mean-pressure column.
    pub n_cols: usize,
}

impl TraceColumns {
    pub fn new(mesh: &Mesh, e: usize, block: usize) -> Self {
        let mut next = 0;
        let face_offset = mesh.elements[e]
            .faces
            .iter()
            .map(|&f| {
                if mesh.faces[f].kind == FaceKind::Dirichlet {
                    None
                } else {
                    next += block;
                    Some(next - block)
                }
            })
            .collect();
        Self { face_offset, n_cols: next + 1 }
    }

    pub fn rho(&self) -> usize {
        self.n_cols - 1
    }
}

/// The assembled local problem `A X = f + H y`, with `y` the element's trace
/// and mean-pressure values.
#[derive(Clone, Debug)]
pub struct LocalSystem {
    pub element: usize,
    pub tau: f64,
    pub a: DMatrix<f64>,
    pub h: DMatrix<f64>,
    pub f: DVector<f64>,
    pub columns: TraceColumns,
    /// `tau <w_hat, u_hat>` over the non-Dirichlet faces (zero on the rho column).
    pub trace_mass: DMatrix<f64>,
    /// `<w_hat, t>` over Neumann faces.
    pub traction_load: DVector<f64>,
    /// `int_F phi_m` summed over the element's boundary Dirichlet faces.
    pub boundary_pressure_weights: DVector<f64>,
    pub boundary_measure: f64,
    pub perimeter: f64,
}

/// Assemble the local problem of element `e`.
pub fn assemble_local(disc: &Discretization, mesh: &Mesh, e: usize, data: &dyn StokesData) -> Result<LocalSystem> {
    let eq = element_quadrature(mesh, e, &disc.basis, &disc.cell_tables, &disc.face_tables)?;
    assemble_local_with(disc, mesh, e, data, &eq)
}

pub(crate) fn assemble_local_with(
    disc: &Discretization,
    mesh: &Mesh,
    e: usize,
    data: &dyn StokesData,
    eq: &ElementQuadrature,
) -> Result<LocalSystem> {
    let nsd = disc.nsd();
    let msd = disc.msd();
    let nk = disc.n_k();
    let nf = disc.n_face();
    let tau = disc.tau;
    let ds = &disc.voigt.d_sqrt;
    let pattern = sym_pattern(nsd);
    let n = disc.n_local();
    let columns = TraceColumns::new(mesh, e, nsd * nf);
    let nc = columns.n_cols;

    let mut a = DMatrix::<f64>::zeros(n, n);
    let mut h = DMatrix::<f64>::zeros(n, nc);
    let mut f = DVector::<f64>::zeros(n);
    let mut trace_mass = DMatrix::<f64>::zeros(nc, nc);
    let mut traction_load = DVector::<f64>::zeros(nc);
    let mut boundary_pressure_weights = DVector::<f64>::zeros(nk);
    let mut boundary_measure = 0.0;

    // volume terms
    let cell = &eq.cell;
    let mut mass = DMatrix::<f64>::zeros(nk, nk);
    let mut mixed = vec![DMatrix::<f64>::zeros(nk, nk); nsd]; // (m, n') = int d_d phi_m phi_n'
    for q in 0..cell.len() {
        let w = cell.weights[q];
        let s = data.source(&cell.points[q]);
        for m in 0..nk {
            let pm = cell.values[(q, m)];
            for i in 0..nsd {
                f[disc.u_index(i, m)] += w * pm * s[i];
            }
            for np in 0..nk {
                let pn = cell.values[(q, np)];
                mass[(m, np)] += w * pm * pn;
                for d in 0..nsd {
                    mixed[d][(m, np)] += w * cell.grads[d][(q, m)] * pn;
                }
            }
        }
    }
    for aa in 0..msd {
        for m in 0..nk {
            for np in 0..nk {
                a[(disc.l_index(aa, m), disc.l_index(aa, np))] = -mass[(m, np)];
            }
        }
    }
    for &(aa, i, d) in pattern {
        for m in 0..nk {
            for np in 0..nk {
                let v = ds[aa] * mixed[d][(m, np)];
                a[(disc.l_index(aa, m), disc.u_index(i, np))] += v;
                a[(disc.u_index(i, np), disc.l_index(aa, m))] += v;
            }
        }
    }
    for i in 0..nsd {
        for m in 0..nk {
            for np in 0..nk {
                let v = mixed[i][(m, np)];
                a[(disc.u_index(i, np), disc.p_index(m))] += v;
                a[(disc.p_index(m), disc.u_index(i, np))] += v;
            }
        }
    }

    // face terms
    let mut perimeter = 0.0;
    let mut pressure_mean = DVector::<f64>::zeros(nk);
    let mut boundary_mass = DMatrix::<f64>::zeros(nk, nk);
    for (lf, fq) in eq.faces.iter().enumerate() {
        let face = &mesh.faces[mesh.elements[e].faces[lf]];
        let offset = columns.face_offset[lf];
        for q in 0..fq.len() {
            let w = fq.weights[q];
            let nrm = &fq.normals[q];
            perimeter += w;
            for m in 0..nk {
                let pm = fq.values[(q, m)];
                pressure_mean[m] += w * pm;
                for np in 0..nk {
                    boundary_mass[(m, np)] += w * pm * fq.values[(q, np)];
                }
            }
            match offset {
                Some(o) => {
                    for l in 0..nf {
                        let psi = disc.trace_values[(q, l)];
                        for m in 0..nk {
                            let wpp = w * fq.values[(q, m)] * psi;
                            for &(aa, i, d) in pattern {
                                h[(disc.l_index(aa, m), o + i * nf + l)] += ds[aa] * nrm[d] * wpp;
                            }
                            for i in 0..nsd {
                                h[(disc.u_index(i, m), o + i * nf + l)] += tau * wpp;
                                h[(disc.p_index(m), o + i * nf + l)] += nrm[i] * wpp;
                            }
                        }
                        for lp in 0..nf {
                            let v = tau * w * psi * disc.trace_values[(q, lp)];
                            for i in 0..nsd {
                                trace_mass[(o + i * nf + l, o + i * nf + lp)] += v;
                            }
                        }
                    }
                    if face.kind == FaceKind::Neumann {
                        let t = data.traction(&fq.points[q], nrm);
                        for l in 0..nf {
                            for i in 0..nsd {
                                traction_load[o + i * nf + l] += w * disc.trace_values[(q, l)] * t[i];
                            }
                        }
                    }
                }
                None => {
                    let ud = data.dirichlet(&fq.points[q]);
                    for m in 0..nk {
                        let wp = w * fq.values[(q, m)];
                        for &(aa, i, d) in pattern {
                            f[disc.l_index(aa, m)] += ds[aa] * nrm[d] * wp * ud[i];
                        }
                        for i in 0..nsd {
                            f[disc.u_index(i, m)] += tau * wp * ud[i];
                            f[disc.p_index(m)] += nrm[i] * wp * ud[i];
                        }
                    }
                }
            }
            if face.is_boundary() && face.kind == FaceKind::Dirichlet {
                boundary_measure += w;
                for m in 0..nk {
                    boundary_pressure_weights[m] += w * fq.values[(q, m)];
                }
            }
        }
    }
    for i in 0..nsd {
        for m in 0..nk {
            for np in 0..nk {
                a[(disc.u_index(i, m), disc.u_index(i, np))] += tau * boundary_mass[(m, np)];
            }
        }
    }
    let z = disc.zeta_index();
    for m in 0..nk {
        let c = pressure_mean[m] / perimeter;
        a[(disc.p_index(m), z)] = c;
        a[(z, disc.p_index(m))] = c;
    }
    h[(z, columns.rho())] = 1.0;

    Ok(LocalSystem {
        element: e,
        tau,
        a,
        h,
        f,
        columns,
        trace_mass,
        traction_load,
        boundary_pressure_weights,
        boundary_measure,
        perimeter,
    })
}

/// Dense LU with a relative pivot test; nalgebra only reports exact zeros.
pub(crate) fn factorize(
    a: &DMatrix<f64>,
) -> std::result::Result<nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>, String> {
    let scale = a.amax();
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(format!("matrix norm is {scale}"));
    }
    let lu = a.clone().lu();
    let u = lu.u();
    let min_pivot = (0..u.nrows()).map(|i| u[(i, i)].abs()).fold(f64::INFINITY, f64::min);
    if !(min_pivot > 1e-13 * scale) {
        return Err(format!("pivot {min_pivot:e} is negligible relative to {scale:e}"));
    }
    Ok(lu)
}

/// Schur complement of one element onto its trace columns, together with
/// the operators that recover the local unknowns.
#[derive(Clone, Debug)]
pub struct CondensedElement {
    pub element: usize,
    pub columns: TraceColumns,
    /// `trace_mass - H^T A^{-1} H`.
    pub stiffness: DMatrix<f64>,
    /// `H^T A^{-1} f + traction`.
    pub load: DVector<f64>,
    /// `X = recovery * y + recovery0`.
    pub recovery: DMatrix<f64>,
    pub recovery0: DVector<f64>,
    /// Boundary pressure integral `bp(y) = pressure_row . y + pressure0` over
    /// the element's Dirichlet boundary faces.
    pub pressure_row: DVector<f64>,
    pub pressure0: f64,
    pub boundary_measure: f64,
    /// `c_m` with `c . p = <p, 1> / |boundary of e|`.
    pub mean_weights: DVector<f64>,
}

impl CondensedElement {
    pub fn stiffness_trace_block(&self) -> DMatrix<f64> {
        let nt = self.columns.rho();
        self.stiffness.view((0, 0), (nt, nt)).into_owned()
    }
}

pub fn condense(disc: &Discretization, sys: &LocalSystem) -> Result<CondensedElement> {
    let lu = factorize(&sys.a).map_err(|reason| HdgError::LocalFactorization { element: sys.element, reason })?;
    let recovery = lu
        .solve(&sys.h)
        .ok_or(HdgError::LocalFactorization { element: sys.element, reason: "singular after factorization".into() })?;
    let recovery0 = lu
        .solve(&sys.f)
        .ok_or(HdgError::LocalFactorization { element: sys.element, reason: "singular after factorization".into() })?;
    let stiffness = &sys.trace_mass - sys.h.transpose() * &recovery;
    let load = sys.h.transpose() * &recovery0 + &sys.traction_load;
    let nk = disc.n_k();
    let p0 = disc.p_index(0);
    let rp = recovery.rows(p0, nk);
    let pressure_row = rp.transpose() * &sys.boundary_pressure_weights;
    let pressure0 = recovery0.rows(p0, nk).dot(&sys.boundary_pressure_weights);
    let mean_weights = sys.a.view((p0, disc.zeta_index()), (nk, 1)).column(0).into_owned();
    Ok(CondensedElement {
        element: sys.element,
        columns: sys.columns.clone(),
        stiffness,
        load,
        recovery,
        recovery0,
        pressure_row,
        pressure0,
        boundary_measure: sys.boundary_measure,
        mean_weights,
    })
}

/// Nodal coefficients of the local fields of one element.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalFields {
    /// `msd x n_k`
    pub l: DMatrix<f64>,
    /// `nsd x n_k`
    pub u: DMatrix<f64>,
    pub p: DVector<f64>,
    pub zeta: f64,
}

impl LocalFields {
    pub fn from_vector(disc: &Discretization, x: &DVector<f64>) -> Self {
        let nk = disc.n_k();
        let l = DMatrix::from_fn(disc.msd(), nk, |a, m| x[disc.l_index(a, m)]);
        let u = DMatrix::from_fn(disc.nsd(), nk, |i, m| x[disc.u_index(i, m)]);
        let p = DVector::from_fn(nk, |m, _| x[disc.p_index(m)]);
        Self { l, u, p, zeta: x[disc.zeta_index()] }
    }

    pub fn to_vector(&self, disc: &Discretization) -> DVector<f64> {
        let mut x = DVector::<f64>::zeros(disc.n_local());
        for m in 0..disc.n_k() {
            for a in 0..disc.msd() {
                x[disc.l_index(a, m)] = self.l[(a, m)];
            }
            for i in 0..disc.nsd() {
                x[disc.u_index(i, m)] = self.u[(i, m)];
            }
            x[disc.p_index(m)] = self.p[m];
        }
        x[disc.zeta_index()] = self.zeta;
        x
    }
}

/// Local fields from the element's trace columns `y` (last entry is rho).
pub fn reconstruct(disc: &Discretization, ce: &CondensedElement, y: &[f64]) -> Result<LocalFields> {
    if y.len() != ce.columns.n_cols {
        let face = ce.columns.face_offset.iter().position(|o| o.is_some_and(|o| o >= y.len())).unwrap_or(0);
        return Err(HdgError::MissingTrace { element: ce.element, face });
    }
    let x = &ce.recovery * DVector::from_column_slice(y) + &ce.recovery0;
    Ok(LocalFields::from_vector(disc, &x))
}

/// Evaluate nodal coefficients `(components x n)` against a tabulation row.
pub fn eval_row(coeffs: &DMatrix<f64>, values: &DMatrix<f64>, q: usize) -> Vec<f64> {
    (0..coeffs.nrows()).map(|c| (0..coeffs.ncols()).map(|m| coeffs[(c, m)] * values[(q, m)]).sum()).collect()
}

/// Trace values `y_face` (component-major) evaluated at face point `q`.
pub fn eval_trace(nsd: usize, nf: usize, y_face: &[f64], trace_values: &DMatrix<f64>, q: usize) -> Point {
    let mut v = [0.0; 3];
    for i in 0..nsd {
        v[i] = (0..nf).map(|l| y_face[i * nf + l] * trace_values[(q, l)]).sum();
    }
    v
}
