//! Element-by-element superconvergent velocity `u*` of degree k + 1.
//!
//! Weak form: `(grad_S w, D^{1/2} grad_S u*) = -(grad_S w, L)` for all `w`
//! of degree k + 1, bordered with `nsd` mean constraints
//! `int u* = int u_h` and `nrr` rotation constraints
//! `int grad_W u* = -oint T^T u_hat`.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{HdgError, Result};
use crate::global::SolutionFields;
use crate::local::{element_quadrature, eval_row, eval_trace, factorize, Discretization, ElementQuadrature};
use crate::mesh::Mesh;
use crate::problem::StokesData;
use crate::voigt::{circulation_density, rot_pattern, sym_pattern};
use crate::Point;

/// Post-processed velocity of every element, `nsd x n_{k+1}` coefficients.
#[derive(Clone, Debug)]
pub struct PostprocessedField {
    pub degree: usize,
    pub elements: Vec<DMatrix<f64>>,
    /// Largest `|int u* - int u_h|` over elements and components.
    pub max_mean_error: f64,
    /// Largest `|int grad_W u* + oint T^T u_hat|`.
    pub max_circulation_error: f64,
}

#[derive(Clone, Debug)]
pub struct PostElement {
    pub coefficients: DMatrix<f64>,
    pub mean_error: f64,
    pub circulation_error: f64,
}

/// Stiffness `(grad_S w, D^{1/2} grad_S v)` on the degree-(k+1) space,
/// unknowns ordered `(i, m) -> i * n + m`.
pub fn post_stiffness(disc: &Discretization, eq: &ElementQuadrature) -> DMatrix<f64> {
    let nsd = disc.nsd();
    let n = disc.post.n_basis();
    let ds = &disc.voigt.d_sqrt;
    let cell = &eq.cell;
    let mut s = DMatrix::<f64>::zeros(nsd * n, nsd * n);
    for q in 0..cell.len() {
        let w = cell.weights[q];
        for &(a, i, d) in sym_pattern(nsd) {
            for &(b, j, e) in sym_pattern(nsd) {
                if a != b {
                    continue;
                }
                let c = w * ds[a];
                for m in 0..n {
                    let gm = cell.grads[d][(q, m)] * c;
                    for mm in 0..n {
                        s[(i * n + m, j * n + mm)] += gm * cell.grads[e][(q, mm)];
                    }
                }
            }
        }
    }
    s
}

/// Solve the bordered problem on one element. `trace[lf][q]` is the velocity
/// trace at point `q` of the post-process face rule on local face `lf`.
pub fn postprocess_element(
    disc: &Discretization,
    eq: &ElementQuadrature,
    l: &DMatrix<f64>,
    u: &DMatrix<f64>,
    trace: &[Vec<Point>],
    element: usize,
) -> Result<PostElement> {
    let nsd = disc.nsd();
    let nrr = disc.voigt.nrr;
    let n = disc.post.n_basis();
    let nu = nsd * n;
    let nc = nsd + nrr;
    let cell = &eq.cell;
    let low = &disc.post_low.values;
    let volume = cell.measure();

    let mut sys = DMatrix::<f64>::zeros(nu + nc, nu + nc);
    sys.view_mut((0, 0), (nu, nu)).copy_from(&post_stiffness(disc, eq));
    let mut rhs = DVector::<f64>::zeros(nu + nc);
    let mut mean_uh = vec![0.0; nsd];
    for q in 0..cell.len() {
        let w = cell.weights[q];
        let lq = eval_row(l, low, q);
        let uq = eval_row(u, low, q);
        for i in 0..nsd {
            mean_uh[i] += w * uq[i];
        }
        for &(a, i, d) in sym_pattern(nsd) {
            for m in 0..n {
                rhs[i * n + m] -= w * cell.grads[d][(q, m)] * lq[a];
            }
        }
        for m in 0..n {
            let wv = w * cell.values[(q, m)] / volume;
            for i in 0..nsd {
                sys[(nu + i, i * n + m)] += wv;
                sys[(i * n + m, nu + i)] += wv;
            }
            for &(r, i, d, sign) in rot_pattern(nsd) {
                let v = sign * w * cell.grads[d][(q, m)] / volume;
                sys[(nu + nsd + r, i * n + m)] += v;
                sys[(i * n + m, nu + nsd + r)] += v;
            }
        }
    }
    let mut circulation = vec![0.0; nrr];
    for (fq, values) in eq.faces.iter().zip(trace) {
        for q in 0..fq.len() {
            let c = circulation_density(&fq.normals[q][..nsd], &values[q][..nsd]);
            for r in 0..nrr {
                circulation[r] += fq.weights[q] * c[r];
            }
        }
    }
    for i in 0..nsd {
        rhs[nu + i] = mean_uh[i] / volume;
    }
    for r in 0..nrr {
        rhs[nu + nsd + r] = circulation[r] / volume;
    }

    let lu = factorize(&sys).map_err(|_| HdgError::PostprocessSingular { element })?;
    let x = lu.solve(&rhs).ok_or(HdgError::PostprocessSingular { element })?;
    let coefficients = DMatrix::from_fn(nsd, n, |i, m| x[i * n + m]);

    // constraint residuals in absolute (unscaled) form
    let cons = sys.view((nu, 0), (nc, nu)) * x.rows(0, nu);
    let mean_error = (0..nsd).map(|i| ((cons[i] - rhs[nu + i]) * volume).abs()).fold(0.0, f64::max);
    let circulation_error = (0..nrr).map(|r| ((cons[nsd + r] - rhs[nu + nsd + r]) * volume).abs()).fold(0.0, f64::max);
    Ok(PostElement { coefficients, mean_error, circulation_error })
}

/// Velocity trace of element `e` at the post-process face points; Dirichlet
/// faces use the boundary datum.
pub fn element_trace_values(
    disc: &Discretization,
    mesh: &Mesh,
    e: usize,
    eq: &ElementQuadrature,
    fields: &SolutionFields,
    data: &dyn StokesData,
) -> Vec<Vec<Point>> {
    let nsd = disc.nsd();
    let nf = disc.n_face();
    eq.faces
        .iter()
        .enumerate()
        .map(|(lf, fq)| {
            let f = mesh.elements[e].faces[lf];
            (0..fq.len())
                .map(|q| match &fields.trace[f] {
                    Some(y) => eval_trace(nsd, nf, y, &disc.post_trace_values, q),
                    None => data.dirichlet(&fq.points[q]),
                })
                .collect()
        })
        .collect()
}

pub fn postprocess_all(
    disc: &Discretization,
    mesh: &Mesh,
    fields: &SolutionFields,
    data: &dyn StokesData,
) -> Result<PostprocessedField> {
    let results = (0..mesh.n_elements())
        .into_par_iter()
        .map(|e| {
            let eq = element_quadrature(mesh, e, &disc.post, &disc.post_cell_tables, &disc.post_face_tables)?;
            let trace = element_trace_values(disc, mesh, e, &eq, fields, data);
            let local = &fields.elements[e];
            postprocess_element(disc, &eq, &local.l, &local.u, &trace, e)
        })
        .collect::<Result<Vec<_>>>()?;
    let max_mean_error = results.iter().map(|r| r.mean_error).fold(0.0, f64::max);
    let max_circulation_error = results.iter().map(|r| r.circulation_error).fold(0.0, f64::max);
    Ok(PostprocessedField {
        degree: disc.k + 1,
        elements: results.into_iter().map(|r| r.coefficients).collect(),
        max_mean_error,
        max_circulation_error,
    })
}
