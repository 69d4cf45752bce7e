//! Global trace system in the face velocities and element mean pressures.
//!
//! Sign convention: the assembled operator is `sum_e (M_tau - H^T A^{-1} H)`,
//! the negated transmission condition, so its trace block is positive
//! semidefinite.

use std::time::Instant;

use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::solvers::Solve;
use faer::perm::PermRef;
use faer::sparse::linalg::amd;
use faer::sparse::linalg::cholesky::{
    factorize_symbolic_cholesky, IntranodeLbltRef, SymbolicCholesky, SymmetricOrdering,
};
use faer::sparse::{SparseColMat, SparseColMatRef, SymbolicSparseColMatRef, Triplet};
use faer::Side;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{HdgError, Result};
use crate::local::{reconstruct, CondensedElement, Discretization, LocalFields};
use crate::mesh::{FaceKind, Mesh};

/// Numbering of the global unknowns: trace blocks of the non-Dirichlet faces
/// first, then one mean pressure per element, then the optional multiplier of
/// the pure-Dirichlet constraint.
#[derive(Clone, Debug, PartialEq)]
pub struct DofMap {
    pub nsd: usize,
    pub n_face: usize,
    /// First dof of each face, `None` on Dirichlet faces.
    pub face_offset: Vec<Option<usize>>,
    pub n_trace: usize,
    pub n_elements: usize,
    pub multiplier: Option<usize>,
}

impl DofMap {
    pub fn new(mesh: &Mesh, disc: &Discretization) -> Self {
        let block = disc.nsd() * disc.n_face();
        let mut next = 0;
        let face_offset = mesh
            .faces
            .iter()
            .map(|f| {
                if f.kind == FaceKind::Dirichlet {
                    None
                } else {
                    next += block;
                    Some(next - block)
                }
            })
            .collect();
        Self {
            nsd: disc.nsd(),
            n_face: disc.n_face(),
            face_offset,
            n_trace: next,
            n_elements: mesh.n_elements(),
            multiplier: None,
        }
    }

    pub fn block(&self) -> usize {
        self.nsd * self.n_face
    }

    pub fn rho(&self, e: usize) -> usize {
        self.n_trace + e
    }

    pub fn total(&self) -> usize {
        self.n_trace + self.n_elements + usize::from(self.multiplier.is_some())
    }

    /// Global dof of every trace column of element `e`.
    pub fn element_dofs(&self, mesh: &Mesh, ce: &CondensedElement) -> Result<Vec<usize>> {
        let e = ce.element;
        let mut dofs = vec![usize::MAX; ce.columns.n_cols];
        for (lf, off) in ce.columns.face_offset.iter().enumerate() {
            let f = mesh.elements[e].faces[lf];
            match (off, self.face_offset[f]) {
                (Some(lo), Some(go)) => {
                    for j in 0..self.block() {
                        dofs[lo + j] = go + j;
                    }
                }
                (None, None) => {}
                _ => return Err(HdgError::DofMap(format!("face {f} of element {e} is a trace face on one side only"))),
            }
        }
        dofs[ce.columns.rho()] = self.rho(e);
        if dofs.contains(&usize::MAX) {
            return Err(HdgError::DofMap(format!("element {e} has unmapped trace columns")));
        }
        Ok(dofs)
    }
}

/// Compressed sparse row matrix with sorted, unique column indices.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub values: Vec<f64>,
}

impl SparseMatrix {
    /// Duplicate entries are summed in input order, so the result does not
    /// depend on the thread count.
    pub fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        triplets.par_sort_by_key(|t| (t.0, t.1));
        let mut row_ptr = vec![0; n + 1];
        let mut col_idx = Vec::with_capacity(triplets.len() / 2);
        let mut values: Vec<f64> = Vec::with_capacity(triplets.len() / 2);
        let mut last = None;
        for (r, c, v) in triplets {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(c);
                values.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..n {
            row_ptr[r + 1] += row_ptr[r];
        }
        Self { n, row_ptr, col_idx, values }
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let cols = &self.col_idx[self.row_ptr[r]..self.row_ptr[r + 1]];
        cols.binary_search(&c).map(|k| self.values[self.row_ptr[r] + k]).unwrap_or(0.0)
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|r| (self.row_ptr[r]..self.row_ptr[r + 1]).map(|k| self.values[k] * x[self.col_idx[k]]).sum())
            .collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `max |a_ij - a_ji| / max |a_ij|`.
    pub fn symmetry_error(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for r in 0..self.n {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                worst = worst.max((self.values[k] - self.get(self.col_idx[k], r)).abs());
            }
        }
        let scale = self.max_abs();
        if scale > 0.0 {
            worst / scale
        } else {
            0.0
        }
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |r| {
            (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |k| (r, self.col_idx[k], self.values[k]))
        })
    }

    /// Append one symmetric border row/column (zero diagonal).
    pub fn bordered(&self, row: &[(usize, f64)]) -> Self {
        let m = self.n;
        let mut t: Vec<(usize, usize, f64)> = self.triplets().collect();
        for &(c, v) in row {
            t.push((m, c, v));
            t.push((c, m, v));
        }
        Self::from_triplets(m + 1, t)
    }

    fn to_faer(&self) -> Result<SparseColMat<usize, f64>> {
        let entries: Vec<Triplet<usize, usize, f64>> = self.triplets().map(|(r, c, v)| Triplet::new(r, c, v)).collect();
        SparseColMat::try_new_from_triplets(self.n, self.n, &entries).map_err(|e| HdgError::GlobalFactorization {
            dofs: self.n,
            nnz: self.nnz(),
            reason: format!("{e:?}"),
        })
    }
}

/// Boundary-mean pressure functional `(row . y + constant) / measure`.
#[derive(Clone, Debug, PartialEq)]
pub struct PressureFunctional {
    pub row: Vec<(usize, f64)>,
    pub constant: f64,
    pub measure: f64,
}

#[derive(Clone, Debug)]
pub struct TraceSystem {
    pub dofs: DofMap,
    pub matrix: SparseMatrix,
    pub rhs: Vec<f64>,
    pub has_neumann: bool,
    pub boundary_pressure: PressureFunctional,
}

impl TraceSystem {
    pub fn is_constrained(&self) -> bool {
        self.dofs.multiplier.is_some()
    }
}

/// Sum the condensed element contributions. Neumann tractions are already
/// part of the element loads.
pub fn assemble_global(mesh: &Mesh, disc: &Discretization, condensed: &[CondensedElement]) -> Result<TraceSystem> {
    let dofs = DofMap::new(mesh, disc);
    let n = dofs.total();
    let maps: Vec<Vec<usize>> = condensed.iter().map(|ce| dofs.element_dofs(mesh, ce)).collect::<Result<_>>()?;
    let triplets: Vec<(usize, usize, f64)> = condensed
        .par_iter()
        .zip(maps.par_iter())
        .flat_map_iter(|(ce, map)| {
            let k = &ce.stiffness;
            (0..map.len()).flat_map(move |r| (0..map.len()).map(move |c| (map[r], map[c], k[(r, c)])))
        })
        .collect();
    let matrix = SparseMatrix::from_triplets(n, triplets);
    let mut rhs = vec![0.0; n];
    let mut row = vec![0.0; n];
    let mut constant = 0.0;
    let mut measure = 0.0;
    for (ce, map) in condensed.iter().zip(&maps) {
        for (j, &g) in map.iter().enumerate() {
            rhs[g] += ce.load[j];
            row[g] += ce.pressure_row[j];
        }
        constant += ce.pressure0;
        measure += ce.boundary_measure;
    }
    let row = row.into_iter().enumerate().filter(|(_, v)| *v != 0.0).collect();
    Ok(TraceSystem {
        dofs,
        matrix,
        rhs,
        has_neumann: mesh.has_neumann(),
        boundary_pressure: PressureFunctional { row, constant, measure },
    })
}

/// Border the system with the zero boundary-mean pressure constraint.
pub fn enforce_pure_dirichlet(mut sys: TraceSystem) -> Result<TraceSystem> {
    if sys.has_neumann {
        return Err(HdgError::PureDirichlet("the mesh has Neumann faces; the pressure is already determined".into()));
    }
    if sys.is_constrained() {
        return Err(HdgError::PureDirichlet("constraint already applied".into()));
    }
    let bp = &sys.boundary_pressure;
    if !(bp.measure > 0.0) {
        return Err(HdgError::PureDirichlet("no Dirichlet boundary faces".into()));
    }
    let row: Vec<(usize, f64)> = bp.row.iter().map(|&(c, v)| (c, v / bp.measure)).collect();
    sys.matrix = sys.matrix.bordered(&row);
    sys.rhs.push(-bp.constant / bp.measure);
    sys.dofs.multiplier = Some(sys.dofs.total());
    Ok(sys)
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SolverStats {
    pub dofs: usize,
    pub nnz: usize,
    pub elements: usize,
    pub local_seconds: f64,
    pub assembly_seconds: f64,
    pub factorization_seconds: f64,
    pub solve_seconds: f64,
    pub factorization: Factorization,
    /// `|K y - b| / max(|b|, |K| |y|)` in the max norm.
    pub relative_residual: f64,
}

fn residual(matrix: &SparseMatrix, x: &[f64], b: &[f64]) -> (Vec<f64>, f64) {
    let kx = matrix.matvec(x);
    let r: Vec<f64> = b.iter().zip(&kx).map(|(b, k)| b - k).collect();
    let rn = r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let bn = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let xn = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let scale = bn.max(matrix.max_abs() * xn);
    (r, if scale > 0.0 { rn / scale } else { 0.0 })
}

/// Which sparse factorization produced the solution.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Factorization {
    /// Supernodal LBL^T with Bunch-Kaufman pivoting inside supernodes.
    #[default]
    SymmetricIndefinite,
    /// General sparse LU, used when the symmetric path fails.
    Lu,
}

/// Symmetric indefinite factor of the trace system.
///
/// The trace block is eliminated first in AMD order; the zero-diagonal rows
/// (element mean pressures and the optional multiplier) go last, where they
/// end up in the trailing dense supernode and are pivoted there.
struct SymmetricFactor {
    symbolic: SymbolicCholesky<usize>,
    values: Vec<f64>,
    subdiag: Vec<f64>,
    fwd: Vec<usize>,
    inv: Vec<usize>,
}

impl SymmetricFactor {
    fn new(matrix: &SparseMatrix, n_trace: usize) -> std::result::Result<Self, String> {
        let n = matrix.n;
        // CSR rows of a symmetric matrix read as CSC columns; keep row <= col.
        let mut col_ptr = Vec::with_capacity(n + 1);
        let mut row_idx = Vec::new();
        let mut vals = Vec::new();
        col_ptr.push(0);
        for r in 0..n {
            for k in matrix.row_ptr[r]..matrix.row_ptr[r + 1] {
                let c = matrix.col_idx[k];
                if c <= r {
                    row_idx.push(c);
                    vals.push(matrix.values[k]);
                }
            }
            col_ptr.push(row_idx.len());
        }

        let (fwd, inv) = ordering(&col_ptr, &row_idx, n_trace, n)?;
        let upper = SymbolicSparseColMatRef::new_checked(n, n, &col_ptr, None, &row_idx);
        let perm = PermRef::new_checked(&fwd, &inv, n);
        let symbolic =
            factorize_symbolic_cholesky(upper, Side::Upper, SymmetricOrdering::Custom(perm), Default::default())
                .map_err(|e| format!("{e:?}"))?;

        let par = faer::get_global_parallelism();
        let mut values = vec![0.0; symbolic.len_val()];
        let mut subdiag = vec![0.0; n];
        let mut pf = vec![0usize; n];
        let mut pi = vec![0usize; n];
        let a = SparseColMatRef::new(upper, &vals);
        let mut mem =
            MemBuffer::try_new(symbolic.factorize_numeric_intranode_lblt_scratch::<f64>(par, Default::default()))
                .map_err(|_| "out of memory for factorization workspace".to_string())?;
        symbolic.factorize_numeric_intranode_lblt(
            &mut values,
            &mut subdiag,
            &mut pf,
            &mut pi,
            a,
            Side::Upper,
            par,
            MemStack::new(&mut mem),
            Default::default(),
        );
        Ok(Self { symbolic, values, subdiag, fwd: pf, inv: pi })
    }

    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = b.len();
        let par = faer::get_global_parallelism();
        let lblt = IntranodeLbltRef::new(
            &self.symbolic,
            &self.values,
            &self.subdiag,
            PermRef::new_checked(&self.fwd, &self.inv, n),
        );
        let mut x = faer::Mat::from_fn(n, 1, |i, _| b[i]);
        let mut mem = MemBuffer::new(lblt.solve_in_place_scratch::<f64>(1, par));
        lblt.solve_in_place_with_conj(faer::Conj::No, x.as_mut(), par, MemStack::new(&mut mem));
        (0..n).map(|i| x[(i, 0)]).collect()
    }
}

/// AMD on the trace block, followed by the remaining rows in natural order.
fn ordering(
    col_ptr: &[usize],
    row_idx: &[usize],
    n_trace: usize,
    n: usize,
) -> std::result::Result<(Vec<usize>, Vec<usize>), String> {
    let mut cp = Vec::with_capacity(n_trace + 1);
    let mut ri = Vec::new();
    cp.push(0);
    for c in 0..n_trace {
        ri.extend(row_idx[col_ptr[c]..col_ptr[c + 1]].iter().filter(|&&r| r < n_trace));
        cp.push(ri.len());
    }
    let mut fwd = vec![0usize; n];
    let mut inv = vec![0usize; n];
    if n_trace > 0 {
        let block = SymbolicSparseColMatRef::new_checked(n_trace, n_trace, &cp, None, &ri);
        let mut mem = MemBuffer::try_new(amd::order_maybe_unsorted_scratch::<usize>(n_trace, ri.len()))
            .map_err(|_| "out of memory for ordering workspace".to_string())?;
        amd::order_maybe_unsorted(
            &mut fwd[..n_trace],
            &mut inv[..n_trace],
            block,
            Default::default(),
            MemStack::new(&mut mem),
        )
        .map_err(|e| format!("{e:?}"))?;
    }
    for i in n_trace..n {
        fwd[i] = i;
        inv[i] = i;
    }
    Ok((fwd, inv))
}

/// Solve with one step of iterative refinement; returns the relative residual.
fn refine(matrix: &SparseMatrix, rhs: &[f64], solve: impl Fn(&[f64]) -> Vec<f64>) -> (Vec<f64>, f64) {
    let mut y = solve(rhs);
    let (r, _) = residual(matrix, &y, rhs);
    let dx = solve(&r);
    for (yi, d) in y.iter_mut().zip(dx) {
        *yi += d;
    }
    let (_, rel) = residual(matrix, &y, rhs);
    (y, rel)
}

const RESIDUAL_TOLERANCE: f64 = 1e-10;

/// Direct sparse solve with one step of iterative refinement.
///
/// Tries the symmetric indefinite factorization first (half the storage of
/// LU) and falls back to sparse LU if it breaks down or is inaccurate.
pub fn solve(sys: &TraceSystem) -> Result<(Vec<f64>, SolverStats)> {
    let n = sys.matrix.n;
    let nnz = sys.matrix.nnz();
    let fail = |reason: String| HdgError::GlobalFactorization { dofs: n, nnz, reason };
    if !sys.has_neumann && !sys.is_constrained() {
        return Err(fail("pure-Dirichlet system without the mean-pressure constraint is singular".into()));
    }
    let stats = |factorization, factorization_seconds, solve_seconds, relative_residual| SolverStats {
        dofs: n,
        nnz,
        factorization,
        factorization_seconds,
        solve_seconds,
        relative_residual,
        ..Default::default()
    };

    let t0 = Instant::now();
    let symmetric = SymmetricFactor::new(&sys.matrix, sys.dofs.n_trace);
    let fs = t0.elapsed().as_secs_f64();
    let mut reason = String::new();
    match symmetric {
        Ok(f) => {
            let t1 = Instant::now();
            let (y, rel) = refine(&sys.matrix, &sys.rhs, |b| f.solve(b));
            if rel.is_finite() && rel <= RESIDUAL_TOLERANCE {
                return Ok((y, stats(Factorization::SymmetricIndefinite, fs, t1.elapsed().as_secs_f64(), rel)));
            }
            reason = format!("symmetric factorization residual {rel:e}");
        }
        Err(e) => reason.push_str(&e),
    }

    let a = sys.matrix.to_faer()?;
    let t0 = Instant::now();
    let lu = a.sp_lu().map_err(|e| fail(format!("{reason}; LU: {e:?}")))?;
    drop(a);
    let fs = t0.elapsed().as_secs_f64();
    let t1 = Instant::now();
    let (y, rel) = refine(&sys.matrix, &sys.rhs, |b| {
        let x = lu.solve(faer::Mat::from_fn(n, 1, |i, _| b[i]));
        (0..n).map(|i| x[(i, 0)]).collect()
    });
    if !rel.is_finite() || rel > RESIDUAL_TOLERANCE {
        return Err(fail(format!("{reason}; LU relative residual {rel:e} after solve")));
    }
    Ok((y, stats(Factorization::Lu, fs, t1.elapsed().as_secs_f64(), rel)))
}

/// Discrete fields after the global solve.
#[derive(Clone, Debug)]
pub struct SolutionFields {
    pub k: usize,
    pub elements: Vec<LocalFields>,
    /// Trace coefficients per face (component-major), `None` on Dirichlet faces.
    pub trace: Vec<Option<Vec<f64>>>,
    pub rho: Vec<f64>,
    /// Trace columns of each element as used in reconstruction.
    pub element_trace: Vec<Vec<f64>>,
}

pub fn reconstruct_all(
    mesh: &Mesh,
    disc: &Discretization,
    condensed: &[CondensedElement],
    dofs: &DofMap,
    y: &[f64],
) -> Result<SolutionFields> {
    let element_trace: Vec<Vec<f64>> = condensed
        .iter()
        .map(|ce| dofs.element_dofs(mesh, ce).map(|map| map.iter().map(|&g| y[g]).collect()))
        .collect::<Result<_>>()?;
    let elements = condensed
        .par_iter()
        .zip(element_trace.par_iter())
        .map(|(ce, yl)| reconstruct(disc, ce, yl))
        .collect::<Result<Vec<_>>>()?;
    let trace = dofs.face_offset.iter().map(|o| o.map(|o| y[o..o + dofs.block()].to_vec())).collect();
    let rho = (0..mesh.n_elements()).map(|e| y[dofs.rho(e)]).collect();
    Ok(SolutionFields { k: disc.k, elements, trace, rho, element_trace })
}
