//! Acceptance suite. Runs every criterion at its pinned tolerance, prints one
//! PASS/FAIL line per criterion and exits nonzero if any criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use hdg_core::analysis::{
    check_identities, convergence_study, solution_errors, tau_sweep, ExpFlow3d, ManufacturedSolution, NeumannSide,
    PolynomialSolution, WangFlow,
};
use hdg_core::global::{assemble_global, solve};
use hdg_core::local::{assemble_local, condense, element_quadrature, eval_trace, reconstruct, Discretization};
use hdg_core::{generate_cartesian_mesh, solve_stokes, ElementType, Mesh, MeshFamily};
use nalgebra::{DMatrix, DVector};

const IDENTITY_TOL: f64 = 1e-11;
const IDENTITY_MAX_DEGREE: usize = 4;
const EXACTNESS_TOL: f64 = 1e-8;
const SYMMETRY_TOL: f64 = 1e-10;
const COMPATIBILITY_TOL: f64 = 1e-9;
const MEAN_PRESSURE_TOL: f64 = 1e-10;
const POST_TOL: f64 = 1e-10;
const MONOLITHIC_TOL: f64 = 1e-10;
const TAUS: [f64; 7] = [0.1, 1.0, 4.0, 10.0, 1e2, 1e3, 1e4];

struct Outcome {
    passed: bool,
    summary: String,
    details: Vec<String>,
}

impl Outcome {
    fn new() -> Self {
        Self { passed: true, summary: String::new(), details: Vec::new() }
    }

    fn check(&mut self, ok: bool, what: String) {
        if !ok {
            self.passed = false;
        }
        self.details.push(format!("{} {what}", if ok { "ok  " } else { "FAIL" }));
    }
}

fn identities() -> Outcome {
    let mut out = Outcome::new();
    let mut worst: f64 = 0.0;
    match check_identities(2024, IDENTITY_MAX_DEGREE, 3) {
        Ok(checks) => {
            for c in checks {
                let r = c.gauss_residual.max(c.stokes_residual);
                worst = worst.max(r);
                out.check(
                    r <= IDENTITY_TOL,
                    format!(
                        "{:?} degree {}: gauss {:.2e} stokes {:.2e}",
                        c.element, c.degree, c.gauss_residual, c.stokes_residual
                    ),
                );
            }
        }
        Err(e) => out.check(false, format!("error: {e}")),
    }
    out.summary = format!("max residual {worst:.2e} (tol {IDENTITY_TOL:.0e})");
    out
}

fn polynomial_exactness() -> Outcome {
    let mut out = Outcome::new();
    let mut worst: f64 = 0.0;
    for family in MeshFamily::ALL {
        let dim = family.dim();
        for k in 1..=3 {
            let exact = PolynomialSolution::random(dim, k, 1.0, 100 + k as u64, NeumannSide::Lower(dim - 1));
            let mesh = generate_cartesian_mesh(family, 2).unwrap().classify_boundary(|x| exact.is_neumann(x));
            let res = Discretization::new(family.element_type(), k, family.default_tau(), 1.0).and_then(|disc| {
                solve_stokes(&mesh, &disc, &exact).and_then(|sol| solution_errors(&mesh, &disc, &sol, &exact))
            });
            match res {
                Ok(e) => {
                    let m = e.u.max(e.p).max(e.l);
                    worst = worst.max(m);
                    out.check(m <= EXACTNESS_TOL, format!("{family} k={k}: u {:.1e} p {:.1e} L {:.1e}", e.u, e.p, e.l));
                }
                Err(e) => out.check(false, format!("{family} k={k}: {e}")),
            }
        }
    }
    out.summary = format!("max L2 error {worst:.2e} (tol {EXACTNESS_TOL:.0e})");
    out
}

/// Required slopes are `k + primal` for u, p, L and `k + post` for u*;
/// `gain` also asks for err(u*) < err(u) on the finest level.
struct RateBounds {
    primal: f64,
    post: f64,
    gain: bool,
}

/// Least-squares slopes over the last three levels against `bounds`.
fn rates(
    problem: &dyn ManufacturedSolution,
    families: &[MeshFamily],
    ks: &[usize],
    levels: &[u32],
    tau: impl Fn(MeshFamily) -> f64,
    bounds: RateBounds,
) -> Outcome {
    let RateBounds { primal: rate_slack, post: post_slack, gain: check_gain } = bounds;
    let mut out = Outcome::new();
    let mut failed = 0;
    for &family in families {
        let report = match convergence_study(problem, family, ks, tau(family), levels) {
            Ok(r) => r,
            Err(e) => {
                out.check(false, format!("{family}: {e}"));
                continue;
            }
        };
        for s in &report.series {
            let Some(sl) = &s.slopes_last3 else {
                out.check(false, format!("{family} k={}: {}", s.k, s.failure.as_deref().unwrap_or("no slopes")));
                failed += 1;
                continue;
            };
            let k = s.k as f64;
            let ok = sl.u >= k + rate_slack
                && sl.p >= k + rate_slack
                && sl.l >= k + rate_slack
                && sl.ustar >= k + post_slack;
            let finest = s.rows.last().unwrap();
            let gain = finest.err_ustar < finest.err_u;
            failed += usize::from(!ok || (check_gain && !gain));
            out.check(
                ok && (!check_gain || gain),
                format!(
                    "{family} k={} tau={}: slopes u {:.3} p {:.3} L {:.3} u* {:.3} (need {:.2}/{:.2}); finest err u {:.2e} u* {:.2e}",
                    s.k, s.tau, sl.u, sl.p, sl.l, sl.ustar, k + rate_slack, k + post_slack, finest.err_u, finest.err_ustar
                ),
            );
        }
    }
    out.summary = if failed == 0 {
        "all series meet the rate thresholds".into()
    } else {
        format!("{failed} series below threshold")
    };
    out
}

fn wang_convergence() -> Outcome {
    let fams = [MeshFamily::Quad, MeshFamily::Tri1, MeshFamily::Tri2];
    rates(
        &WangFlow::default(),
        &fams,
        &[1, 2, 3],
        &[1, 2, 3, 4],
        |f| f.default_tau(),
        RateBounds { primal: 0.9, post: 1.8, gain: true },
    )
}

fn exp_convergence() -> Outcome {
    rates(
        &ExpFlow3d::default(),
        &[MeshFamily::Tet, MeshFamily::Hex],
        &[1, 2],
        &[1, 2, 3],
        |_| 4.0,
        RateBounds { primal: 0.85, post: 1.7, gain: false },
    )
}

fn stabilization_sweep() -> Outcome {
    let mut out = Outcome::new();
    let report = match tau_sweep(&WangFlow::default(), MeshFamily::Quad, 2, 4, &TAUS) {
        Ok(r) => r,
        Err(e) => {
            out.check(false, format!("{e}"));
            return out;
        }
    };
    for e in &report.entries {
        match &e.row {
            Some(r) => out.details.push(format!(
                "     tau {:>8}: u {:.3e} p {:.3e} L {:.3e} u* {:.3e}",
                e.tau, r.err_u, r.err_p, r.err_l, r.err_ustar
            )),
            None => out.check(false, format!("tau {}: {}", e.tau, e.failure.as_deref().unwrap_or("failed"))),
        }
    }
    let idx = report.argmin(|r| r.err_u);
    let interior = matches!(idx, Some(i) if i > 0 && i + 1 < TAUS.len());
    let at = idx.map_or("none".to_string(), |i| TAUS[i].to_string());
    out.check(interior, format!("err(u) minimized at tau = {at}"));
    let l_at = |tau: f64| report.entries.iter().find(|e| e.tau == tau).and_then(|e| e.row.as_ref()).map(|r| r.err_l);
    let (l4, lmax) = (l_at(4.0), l_at(1e4));
    let grows = matches!((l4, lmax), (Some(a), Some(b)) if b > a);
    let fmt = |v: Option<f64>| v.map_or("failed".to_string(), |v| format!("{v:.2e}"));
    out.check(grows, format!("err(L) at tau=1e4 {} vs tau=4 {}", fmt(lmax), fmt(l4)));
    out.summary = format!("argmin err(u) at tau = {at}, err(L) {} at tau=1e4 vs {} at tau=4", fmt(lmax), fmt(l4));
    out
}

fn net_flux(mesh: &Mesh, disc: &Discretization, sol: &hdg_core::HdgSolution, data: &dyn ManufacturedSolution) -> f64 {
    let (nsd, nf) = (disc.nsd(), disc.n_face());
    let mut worst: f64 = 0.0;
    for e in 0..mesh.n_elements() {
        let eq = element_quadrature(mesh, e, &disc.basis, &disc.cell_tables, &disc.face_tables).unwrap();
        let mut flux = 0.0;
        for (lf, fq) in eq.faces.iter().enumerate() {
            let f = mesh.elements[e].faces[lf];
            for q in 0..fq.len() {
                let v = match &sol.fields.trace[f] {
                    Some(y) => eval_trace(nsd, nf, y, &disc.trace_values, q),
                    None => hdg_core::StokesData::dirichlet(data, &fq.points[q]),
                };
                flux += fq.weights[q] * (0..nsd).map(|i| v[i] * fq.normals[q][i]).sum::<f64>();
            }
        }
        worst = worst.max(flux.abs());
    }
    worst
}

/// Condensed solve of one element against the uncondensed block system.
fn monolithic_gap(et: ElementType) -> f64 {
    let verts: Vec<_> = et
        .vertex_coordinates()
        .iter()
        .map(|x| [0.3 + 1.1 * x[0] + 0.2 * x[1], -0.1 + 0.9 * x[1] + 0.1 * x[2], 0.2 + 1.05 * x[2] - 0.1 * x[0]])
        .collect();
    let cell = (0..verts.len()).collect();
    let mesh = Mesh::from_elements(et, verts, vec![cell], 1.0).unwrap();
    let cx = mesh.nodes.iter().map(|v| v[0]).sum::<f64>() / mesh.nodes.len() as f64;
    let mesh = mesh.classify_boundary(|x| x[0] < cx);
    let exact = PolynomialSolution::random(et.dim(), 3, 1.0, 5, NeumannSide::None);
    let disc = Discretization::new(et, 2, 4.0, 1.0).unwrap();
    let sys = assemble_local(&disc, &mesh, 0, &exact).unwrap();
    let ce = condense(&disc, &sys).unwrap();
    let global = assemble_global(&mesh, &disc, std::slice::from_ref(&ce)).unwrap();
    let (yg, _) = solve(&global).unwrap();
    let y: Vec<f64> = global.dofs.element_dofs(&mesh, &ce).unwrap().iter().map(|&g| yg[g]).collect();
    let x = reconstruct(&disc, &ce, &y).unwrap().to_vector(&disc);
    let (n, m) = (sys.a.nrows(), sys.h.ncols());
    let mut big = DMatrix::<f64>::zeros(n + m, n + m);
    big.view_mut((0, 0), (n, n)).copy_from(&sys.a);
    big.view_mut((0, n), (n, m)).copy_from(&(-&sys.h));
    big.view_mut((n, 0), (m, n)).copy_from(&(-sys.h.transpose()));
    big.view_mut((n, n), (m, m)).copy_from(&sys.trace_mass);
    let mut rhs = DVector::<f64>::zeros(n + m);
    rhs.rows_mut(0, n).copy_from(&sys.f);
    rhs.rows_mut(n, m).copy_from(&sys.traction_load);
    let sol = big.lu().solve(&rhs).unwrap();
    let dx = (sol.rows(0, n) - &x).amax() / x.amax();
    let dy = (sol.rows(n, m) - DVector::from_column_slice(&y)).amax() / sol.amax();
    dx.max(dy)
}

fn structural() -> Outcome {
    let mut out = Outcome::new();
    let wang = WangFlow::default();
    let exp = ExpFlow3d::default();
    let mut cases: Vec<(MeshFamily, usize, bool, &dyn ManufacturedSolution)> = Vec::new();
    for family in [MeshFamily::Quad, MeshFamily::Tri1, MeshFamily::Tri2] {
        cases.push((family, 3, true, &wang));
        cases.push((family, 2, false, &wang));
    }
    for family in [MeshFamily::Hex, MeshFamily::Tet] {
        cases.push((family, 2, true, &exp));
        cases.push((family, 1, false, &exp));
    }
    let (mut sym, mut comp, mut mean, mut post): (f64, f64, f64, f64) = (0.0, 0.0, 0.0, 0.0);
    for (family, k, neumann, data) in cases {
        let mesh = generate_cartesian_mesh(family, 3).unwrap().classify_boundary(|x| neumann && data.is_neumann(x));
        let disc = Discretization::new(family.element_type(), k, family.default_tau(), data.viscosity()).unwrap();
        match solve_stokes(&mesh, &disc, data) {
            Ok(sol) => {
                let d = &sol.diagnostics;
                let flux = net_flux(&mesh, &disc, &sol, data).max(d.compatibility);
                let bmean = d.boundary_pressure_mean.map_or(0.0, f64::abs);
                sym = sym.max(d.symmetry);
                comp = comp.max(flux);
                mean = mean.max(d.mean_pressure).max(bmean);
                post = post.max(d.post_mean).max(d.post_circulation);
                let ok = d.symmetry <= SYMMETRY_TOL
                    && flux <= COMPATIBILITY_TOL
                    && d.mean_pressure <= MEAN_PRESSURE_TOL
                    && bmean <= MEAN_PRESSURE_TOL
                    && d.post_mean <= POST_TOL
                    && d.post_circulation <= POST_TOL;
                out.check(
                    ok,
                    format!(
                        "{family} k={k} {}: symmetry {:.1e} flux {:.1e} mean p {:.1e} post {:.1e}/{:.1e}",
                        if neumann { "mixed bc" } else { "dirichlet" },
                        d.symmetry,
                        flux,
                        d.mean_pressure.max(bmean),
                        d.post_mean,
                        d.post_circulation
                    ),
                );
            }
            Err(e) => out.check(false, format!("{family} k={k}: {e}")),
        }
    }
    let mut mono: f64 = 0.0;
    for et in [ElementType::Triangle, ElementType::Quadrilateral, ElementType::Tetrahedron, ElementType::Hexahedron] {
        let gap = monolithic_gap(et);
        mono = mono.max(gap);
        out.check(gap <= MONOLITHIC_TOL, format!("{et:?} condensed vs monolithic {gap:.1e}"));
    }
    out.summary = format!(
        "symmetry {sym:.1e}, compatibility {comp:.1e}, mean pressure {mean:.1e}, post {post:.1e}, monolithic {mono:.1e}"
    );
    out
}

type Criterion = (&'static str, Duration, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 6] = [
        ("generalized Gauss/Stokes identities", Duration::from_secs(10), identities),
        ("polynomial exactness", Duration::from_secs(60), polynomial_exactness),
        ("2D Wang flow convergence", Duration::from_secs(600), wang_convergence),
        ("3D exponential flow convergence", Duration::from_secs(1800), exp_convergence),
        ("stabilization sweep", Duration::from_secs(300), stabilization_sweep),
        ("structural invariants", Duration::from_secs(60), structural),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut lines = Vec::new();
    for (i, (name, limit, run)) in criteria.iter().enumerate() {
        let id = i + 1;
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str()) || *f == id.to_string()) {
            continue;
        }
        let t = Instant::now();
        let mut out = run();
        let elapsed = t.elapsed();
        out.check(elapsed <= *limit, format!("runtime {:.1} s (limit {} s)", elapsed.as_secs_f64(), limit.as_secs()));
        for d in &out.details {
            println!("    [{id}] {d}");
        }
        let line = format!(
            "criterion {id} ({name}): {} - {} [{:.1} s]",
            if out.passed { "PASS" } else { "FAIL" },
            out.summary,
            elapsed.as_secs_f64()
        );
        println!("{line}");
        lines.push((out.passed, line));
    }
    println!("\nacceptance summary");
    for (_, l) in &lines {
        println!("{l}");
    }
    if lines.iter().all(|(ok, _)| *ok) {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
