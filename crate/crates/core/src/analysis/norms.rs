//! L2 errors of discrete fields against closed-form references.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::analysis::manufactured::ManufacturedSolution;
use crate::error::{HdgError, Result};
use crate::geometry::{cell_quadrature, map_physical, CellTables};
use crate::local::{eval_row, Discretization};
use crate::mesh::Mesh;
use crate::reference::{ReferenceElement, Tabulation};
use crate::solver::HdgSolution;
use crate::voigt::sym_pattern;
use crate::Point;

/// `sqrt(sum_e int |f_h - f|^2)` for element-wise nodal coefficients
/// (`components x n_basis`). `tables` supplies the rule and geometry, and
/// `values` the field basis at the same rule points.
pub fn l2_error(
    mesh: &Mesh,
    coefficients: &[DMatrix<f64>],
    tables: &CellTables,
    values: &Tabulation,
    exact: impl Fn(&Point) -> Vec<f64> + Sync,
) -> Result<f64> {
    if coefficients.len() != mesh.n_elements() {
        return Err(HdgError::Config(format!(
            "{} coefficient blocks for {} elements",
            coefficients.len(),
            mesh.n_elements()
        )));
    }
    let mut total = 0.0;
    for (e, c) in coefficients.iter().enumerate() {
        let cq = cell_quadrature(&mesh.element_vertices(e), mesh.dim, tables)?;
        for q in 0..cq.len() {
            let fh = eval_row(c, &values.values, q);
            let f = exact(&cq.points[q]);
            total += cq.weights[q] * fh.iter().zip(&f).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
        }
    }
    Ok(total.sqrt())
}

/// Nodal interpolant of `f` on every element.
pub fn interpolate_on_mesh(
    mesh: &Mesh,
    basis: &ReferenceElement,
    components: usize,
    f: impl Fn(&Point) -> Vec<f64>,
) -> Result<Vec<DMatrix<f64>>> {
    let geo = ReferenceElement::new(mesh.element_type, 1)?;
    (0..mesh.n_elements())
        .map(|e| {
            let verts = mesh.element_vertices(e);
            let mut c = DMatrix::<f64>::zeros(components, basis.n_basis());
            for (m, xi) in basis.nodes().iter().enumerate() {
                let x = map_physical(&verts, &geo, xi)?.x;
                for (i, v) in f(&x).into_iter().enumerate().take(components) {
                    c[(i, m)] = v;
                }
            }
            Ok(c)
        })
        .collect()
}

/// Exact mixed variable `L = -D^{1/2} grad_S u`.
pub fn exact_mixed(disc: &Discretization, exact: &dyn ManufacturedSolution, x: &Point) -> Vec<f64> {
    let g = exact.velocity_gradient(x);
    let mut l = vec![0.0; disc.msd()];
    for &(a, i, d) in sym_pattern(disc.nsd()) {
        l[a] -= disc.voigt.d_sqrt[a] * g[i][d];
    }
    l
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SolutionErrors {
    pub u: f64,
    pub p: f64,
    pub l: f64,
    pub ustar: f64,
}

/// L2 errors of u, p, L and u* with a rule of order `2(k+1) + 2`.
pub fn solution_errors(
    mesh: &Mesh,
    disc: &Discretization,
    sol: &HdgSolution,
    exact: &dyn ManufacturedSolution,
) -> Result<SolutionErrors> {
    let nsd = disc.nsd();
    let tables = &disc.post_cell_tables;
    let low = &disc.post_low;
    let u: Vec<DMatrix<f64>> = sol.fields.elements.iter().map(|f| f.u.clone()).collect();
    let p: Vec<DMatrix<f64>> =
        sol.fields.elements.iter().map(|f| DMatrix::from_row_slice(1, f.p.len(), f.p.as_slice())).collect();
    let l: Vec<DMatrix<f64>> = sol.fields.elements.iter().map(|f| f.l.clone()).collect();
    let velocity = |x: &Point| exact.velocity(x)[..nsd].to_vec();
    Ok(SolutionErrors {
        u: l2_error(mesh, &u, tables, low, velocity)?,
        p: l2_error(mesh, &p, tables, low, |x| vec![exact.pressure(x)])?,
        l: l2_error(mesh, &l, tables, low, |x| exact_mixed(disc, exact, x))?,
        ustar: l2_error(mesh, &sol.post.elements, tables, &tables.basis, velocity)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_cartesian_mesh, MeshFamily};
    use crate::quadrature::build_quadrature;

    fn tables(mesh: &Mesh, k: usize) -> (CellTables, ReferenceElement) {
        let geo = ReferenceElement::new(mesh.element_type, 1).unwrap();
        let basis = ReferenceElement::new(mesh.element_type, k).unwrap();
        let t = CellTables::new(&geo, &basis, build_quadrature(mesh.element_type, 2 * k + 4).unwrap());
        (t, basis)
    }

    #[test]
    fn constant_one_against_zero_is_one() {
        let mesh = generate_cartesian_mesh(MeshFamily::Quad, 3).unwrap();
        let (t, basis) = tables(&mesh, 1);
        let ones = interpolate_on_mesh(&mesh, &basis, 1, |_| vec![1.0]).unwrap();
        let e = l2_error(&mesh, &ones, &t, &t.basis, |_| vec![0.0]).unwrap();
        assert!((e - 1.0).abs() < 1e-13);
    }

    #[test]
    fn polynomials_in_the_space_have_zero_error() {
        for family in [MeshFamily::Tri1, MeshFamily::Quad, MeshFamily::Tet] {
            let mesh = generate_cartesian_mesh(family, 2).unwrap();
            let (t, basis) = tables(&mesh, 2);
            let f = |x: &Point| vec![1.0 + x[0] * x[1] - 2.0 * x[1] * x[1] + x[2] * x[0]];
            let c = interpolate_on_mesh(&mesh, &basis, 1, f).unwrap();
            assert!(l2_error(&mesh, &c, &t, &t.basis, f).unwrap() < 1e-12, "{family}");
        }
    }

    #[test]
    fn interpolation_error_converges_at_k_plus_one() {
        let f = |x: &Point| vec![(3.0 * x[0]).sin() * (2.0 * x[1]).exp()];
        for k in 1..=3 {
            let mut errs = Vec::new();
            for n in [4, 8, 16] {
                let mesh = generate_cartesian_mesh(MeshFamily::Tri2, n).unwrap();
                let (t, basis) = tables(&mesh, k);
                let c = interpolate_on_mesh(&mesh, &basis, 1, f).unwrap();
                errs.push(l2_error(&mesh, &c, &t, &t.basis, f).unwrap());
            }
            let slope = (errs[1] / errs[2]).log2();
            assert!(slope > k as f64 + 0.9, "k = {k}: slope {slope}");
        }
    }
}
