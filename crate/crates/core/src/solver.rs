//! End-to-end solve: local condensation, global trace system, recovery and
//! post-process.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::global::{
    assemble_global, enforce_pure_dirichlet, reconstruct_all, solve, DofMap, SolutionFields, SolverStats,
};
use crate::local::{assemble_local, condense, CondensedElement, Discretization};
use crate::mesh::Mesh;
use crate::postprocess::{postprocess_all, PostprocessedField};
use crate::problem::StokesData;

/// Assemble and condense every element in parallel.
pub fn condense_all(disc: &Discretization, mesh: &Mesh, data: &dyn StokesData) -> Result<Vec<CondensedElement>> {
    (0..mesh.n_elements())
        .into_par_iter()
        .map(|e| assemble_local(disc, mesh, e, data).and_then(|sys| condense(disc, &sys)))
        .collect()
}

/// Residuals of the structural constraints after a solve.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Relative symmetry defect of the global matrix.
    pub symmetry: f64,
    /// Largest element net normal flux of the velocity trace.
    pub compatibility: f64,
    /// Largest `|<p_e, 1> / |boundary| - rho_e|`.
    pub mean_pressure: f64,
    /// Boundary mean of the pressure (pure-Dirichlet runs only).
    pub boundary_pressure_mean: Option<f64>,
    pub post_mean: f64,
    pub post_circulation: f64,
}

#[derive(Clone, Debug)]
pub struct HdgSolution {
    pub dofs: DofMap,
    pub fields: SolutionFields,
    pub post: PostprocessedField,
    pub stats: SolverStats,
    pub diagnostics: Diagnostics,
}

pub fn solve_stokes(mesh: &Mesh, disc: &Discretization, data: &dyn StokesData) -> Result<HdgSolution> {
    let t0 = Instant::now();
    let condensed = condense_all(disc, mesh, data)?;
    let local_seconds = t0.elapsed().as_secs_f64();

    let t1 = Instant::now();
    let mut system = assemble_global(mesh, disc, &condensed)?;
    if !system.has_neumann {
        system = enforce_pure_dirichlet(system)?;
    }
    let assembly_seconds = t1.elapsed().as_secs_f64();
    let (y, mut stats) = solve(&system)?;
    stats.local_seconds = local_seconds;
    stats.assembly_seconds = assembly_seconds;
    stats.elements = mesh.n_elements();

    let fields = reconstruct_all(mesh, disc, &condensed, &system.dofs, &y)?;
    let post = postprocess_all(disc, mesh, &fields, data)?;

    let compatibility = fields.elements.iter().map(|f| f.zeta.abs()).fold(0.0, f64::max);
    let mean_pressure = condensed
        .iter()
        .zip(&fields.elements)
        .map(|(ce, f)| (ce.mean_weights.dot(&f.p) - fields.rho[ce.element]).abs())
        .fold(0.0, f64::max);
    let boundary_pressure_mean = (!system.has_neumann).then(|| {
        let bp = &system.boundary_pressure;
        (bp.row.iter().map(|&(c, v)| v * y[c]).sum::<f64>() + bp.constant) / bp.measure
    });
    let diagnostics = Diagnostics {
        symmetry: system.matrix.symmetry_error(),
        compatibility,
        mean_pressure,
        boundary_pressure_mean,
        post_mean: post.max_mean_error,
        post_circulation: post.max_circulation_error,
    };
    Ok(HdgSolution { dofs: system.dofs, fields, post, stats, diagnostics })
}
