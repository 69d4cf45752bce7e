//! Thresholds applied in `--assert` mode. Each check returns the list of
//! violations; an empty list passes.

use hdg_core::analysis::identities::IdentityCheck;
use hdg_core::analysis::study::{ConvergenceReport, ProblemId, ReportRow, TauSweepReport};
use hdg_core::global::SolverStats;
use hdg_core::solver::Diagnostics;

pub const IDENTITY_TOL: f64 = 1e-11;
pub const EXACTNESS_TOL: f64 = 1e-8;
pub const SYMMETRY_TOL: f64 = 1e-10;
pub const COMPATIBILITY_TOL: f64 = 1e-9;
pub const MEAN_PRESSURE_TOL: f64 = 1e-10;
pub const POST_TOL: f64 = 1e-10;
pub const RESIDUAL_TOL: f64 = 1e-10;

/// Rate slack below the optimal orders k+1 and k+2.
fn rate_slack(dim: usize) -> (f64, f64) {
    if dim == 2 {
        (0.9, 1.8)
    } else {
        (0.85, 1.7)
    }
}

fn check(out: &mut Vec<String>, ok: bool, msg: impl FnOnce() -> String) {
    if !ok {
        out.push(msg());
    }
}

pub fn diagnostics(d: &Diagnostics, stats: &SolverStats) -> Vec<String> {
    let mut v = Vec::new();
    check(&mut v, d.symmetry <= SYMMETRY_TOL, || format!("matrix symmetry {:e} > {SYMMETRY_TOL:e}", d.symmetry));
    check(&mut v, d.compatibility <= COMPATIBILITY_TOL, || {
        format!("compatibility {:e} > {COMPATIBILITY_TOL:e}", d.compatibility)
    });
    check(&mut v, d.mean_pressure <= MEAN_PRESSURE_TOL, || {
        format!("mean pressure {:e} > {MEAN_PRESSURE_TOL:e}", d.mean_pressure)
    });
    if let Some(m) = d.boundary_pressure_mean {
        check(&mut v, m.abs() <= MEAN_PRESSURE_TOL, || format!("boundary pressure mean {m:e} > {MEAN_PRESSURE_TOL:e}"));
    }
    check(&mut v, d.post_mean <= POST_TOL, || format!("post-process mean {:e} > {POST_TOL:e}", d.post_mean));
    check(&mut v, d.post_circulation <= POST_TOL, || {
        format!("post-process circulation {:e} > {POST_TOL:e}", d.post_circulation)
    });
    check(&mut v, stats.relative_residual <= RESIDUAL_TOL, || {
        format!("global residual {:e} > {RESIDUAL_TOL:e}", stats.relative_residual)
    });
    v
}

/// Polynomial problems must be reproduced to round-off.
pub fn exactness(row: &ReportRow) -> Vec<String> {
    let mut v = Vec::new();
    for (name, e) in [("u", row.err_u), ("p", row.err_p), ("L", row.err_l)] {
        check(&mut v, e <= EXACTNESS_TOL, || {
            format!("{} k={} level {}: err({name}) {e:e} > {EXACTNESS_TOL:e}", row.family, row.k, row.level)
        });
    }
    v
}

pub fn convergence(problem: ProblemId, report: &ConvergenceReport) -> Vec<String> {
    let mut v = Vec::new();
    if problem == ProblemId::Polynomial {
        report.rows().for_each(|r| v.extend(exactness(r)));
    }
    for s in &report.series {
        let tag = format!("{} k={}", s.family, s.k);
        if let Some(f) = &s.failure {
            v.push(format!("{tag}: {f}"));
            continue;
        }
        if problem == ProblemId::Polynomial {
            continue;
        }
        let (primal, post) = rate_slack(s.family.dim());
        let k = s.k as f64;
        let Some(sl) = s.slopes_last3 else {
            v.push(format!("{tag}: too few levels for a rate"));
            continue;
        };
        for (name, got, want) in
            [("u", sl.u, k + primal), ("p", sl.p, k + primal), ("L", sl.l, k + primal), ("u*", sl.ustar, k + post)]
        {
            check(&mut v, got >= want, || format!("{tag}: slope({name}) {got:.3} < {want:.2}"));
        }
        if let Some(last) = s.rows.last() {
            check(&mut v, last.err_ustar < last.err_u, || {
                format!("{tag}: err(u*) {:e} not below err(u) {:e} at level {}", last.err_ustar, last.err_u, last.level)
            });
        }
    }
    v
}

/// err(u) minimal at an interior tau, and err(L) at the largest tau above
/// its value at tau = 4 when that value is part of the sweep.
pub fn tau_sweep(report: &TauSweepReport) -> Vec<String> {
    let mut v = Vec::new();
    for e in &report.entries {
        if let Some(f) = &e.failure {
            v.push(format!("tau {}: {f}", e.tau));
        }
    }
    let n = report.entries.len();
    match report.argmin(|r| r.err_u) {
        Some(i) if i > 0 && i + 1 < n => {}
        Some(i) => v.push(format!("err(u) is minimal at the endpoint tau = {}", report.entries[i].tau)),
        None => v.push("no successful entries".into()),
    }
    let err_l = |tau: f64| report.entries.iter().find(|e| e.tau == tau).and_then(|e| e.row.as_ref()).map(|r| r.err_l);
    let largest = report.entries.iter().map(|e| e.tau).fold(f64::NEG_INFINITY, f64::max);
    if let (Some(at4), Some(top)) = (err_l(4.0), err_l(largest)) {
        if largest > 4.0 {
            check(&mut v, top > at4, || {
                format!("err(L) at tau = {largest} ({top:e}) does not exceed its value at tau = 4 ({at4:e})")
            });
        }
    }
    v
}

pub fn identities(checks: &[IdentityCheck]) -> Vec<String> {
    checks
        .iter()
        .filter(|c| c.gauss_residual.max(c.stokes_residual) > IDENTITY_TOL)
        .map(|c| {
            format!(
                "{} degree {}: residual {:e} > {IDENTITY_TOL:e}",
                c.element.name(),
                c.degree,
                c.gauss_residual.max(c.stokes_residual)
            )
        })
        .collect()
}
