use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde_json::json;

use hdg_core::analysis::identities::check_identities;
use hdg_core::analysis::norms::solution_errors;
use hdg_core::analysis::study::{convergence_study, tau_sweep, ProblemId, ReportRow, Slopes};
use hdg_core::export::{fields_to_json, fmt_f64, rows_to_csv, solution_to_vtk, sweep_to_csv, to_json, write_string};
use hdg_core::local::Discretization;
use hdg_core::mesh::generate_cartesian_mesh;
use hdg_core::{solve_stokes, Result};

use crate::checks;
use crate::config::RunConfig;

/// Files written by a command and the `--assert` violations found.
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub violations: Vec<String>,
}

fn write(files: &mut Vec<PathBuf>, path: PathBuf, contents: &str) -> Result<()> {
    write_string(&path, contents)?;
    files.push(path);
    Ok(())
}

fn case_dir(cfg: &RunConfig, kind: &str) -> PathBuf {
    let mut name = format!("{kind}_{}_{}", cfg.problem, cfg.family);
    if cfg.ks.len() == 1 {
        name += &format!("_k{}", cfg.k());
    }
    if cfg.levels.len() == 1 {
        name += &format!("_level{}", cfg.level());
    }
    cfg.out.join(name)
}

pub fn solve(cfg: &RunConfig) -> Result<Outcome> {
    let problem = cfg.problem.build(cfg.family, cfg.k(), cfg.seed)?;
    let mesh = generate_cartesian_mesh(cfg.family, 1 << cfg.level())?.classify_boundary(|x| problem.is_neumann(x));
    let disc = Discretization::new(cfg.family.element_type(), cfg.k(), cfg.tau(), problem.viscosity())?;
    let sol = solve_stokes(&mesh, &disc, problem.as_ref())?;
    let errors = solution_errors(&mesh, &disc, &sol, problem.as_ref())?;

    let summary = json!({
        "problem": cfg.problem.name(),
        "family": cfg.family.name(),
        "k": cfg.k(),
        "tau": cfg.tau(),
        "level": cfg.level(),
        "seed": cfg.seed,
        "h": mesh.h,
        "elements": mesh.n_elements(),
        "dofs": sol.stats.dofs,
        "errors": { "u": errors.u, "p": errors.p, "L": errors.l, "ustar": errors.ustar },
        "diagnostics": sol.diagnostics,
    });
    let summary = to_json(&summary, true)?;
    print!("{summary}");

    let dir = case_dir(cfg, "solve");
    let mut files = Vec::new();
    write(&mut files, dir.join("summary.json"), &summary)?;
    write(&mut files, dir.join("solver_stats.json"), &to_json(&sol.stats, true)?)?;
    if cfg.export_fields {
        write(&mut files, dir.join("fields.json"), &fields_to_json(&mesh, &disc, &sol)?)?;
        let path = dir.join("solution.vtk");
        let mut out = BufWriter::new(File::create(&path)?);
        solution_to_vtk(&mut out, &mesh, &disc, &sol)?;
        out.flush()?;
        files.push(path);
    }

    let mut violations = checks::diagnostics(&sol.diagnostics, &sol.stats);
    if cfg.problem == ProblemId::Polynomial {
        let row = ReportRow {
            family: cfg.family,
            k: cfg.k(),
            tau: cfg.tau(),
            level: cfg.level(),
            h: mesh.h,
            dofs: sol.stats.dofs,
            err_u: errors.u,
            err_p: errors.p,
            err_l: errors.l,
            err_ustar: errors.ustar,
        };
        violations.extend(checks::exactness(&row));
    }
    Ok(Outcome { files, violations })
}

fn slope_line(s: &Slopes) -> String {
    format!("u {:.3}  p {:.3}  L {:.3}  u* {:.3}", s.u, s.p, s.l, s.ustar)
}

pub fn convergence(cfg: &RunConfig) -> Result<Outcome> {
    let problem = cfg.problem.build(cfg.family, *cfg.ks.iter().max().unwrap(), cfg.seed)?;
    let report = convergence_study(problem.as_ref(), cfg.family, &cfg.ks, cfg.tau(), &cfg.levels)?;
    let csv = rows_to_csv(report.rows());
    print!("{csv}");
    for s in &report.series {
        match (&s.failure, &s.slopes_last3) {
            (Some(f), _) => println!("{} k={}: failed at {f}", s.family, s.k),
            (None, Some(sl)) => println!("{} k={} slopes (last 3 levels): {}", s.family, s.k, slope_line(sl)),
            (None, None) => {}
        }
    }

    let dir = case_dir(cfg, "convergence");
    let mut files = Vec::new();
    write(&mut files, dir.join("convergence.csv"), &csv)?;
    write(&mut files, dir.join("slopes.json"), &to_json(&report, true)?)?;
    write(&mut files, dir.join("solver_stats.json"), &to_json(&report.stats, true)?)?;
    Ok(Outcome { files, violations: checks::convergence(cfg.problem, &report) })
}

pub fn sweep(cfg: &RunConfig) -> Result<Outcome> {
    let problem = cfg.problem.build(cfg.family, cfg.k(), cfg.seed)?;
    let report = tau_sweep(problem.as_ref(), cfg.family, cfg.k(), cfg.level(), &cfg.taus)?;
    let csv = sweep_to_csv(&report);
    print!("{csv}");
    if let Some(i) = report.argmin(|r| r.err_u) {
        println!("err(u) is smallest at tau = {}", fmt_f64(report.entries[i].tau));
    }

    let dir = case_dir(cfg, "tau_sweep");
    let mut files = Vec::new();
    write(&mut files, dir.join("tau_sweep.csv"), &csv)?;
    write(&mut files, dir.join("tau_sweep.json"), &to_json(&report, true)?)?;
    Ok(Outcome { files, violations: checks::tau_sweep(&report) })
}

pub fn identities(out: &Path, seed: u64, max_degree: usize, trials: usize) -> Result<Outcome> {
    let results = check_identities(seed, max_degree, trials)?;
    let mut max: f64 = 0.0;
    for c in &results {
        println!(
            "{:<14} degree {}  gauss {}  stokes {}",
            c.element.name(),
            c.degree,
            fmt_f64(c.gauss_residual),
            fmt_f64(c.stokes_residual)
        );
        max = max.max(c.gauss_residual).max(c.stokes_residual);
    }
    println!("max residual: {}", fmt_f64(max));

    let doc =
        json!({ "seed": seed, "max_degree": max_degree, "trials": trials, "max_residual": max, "checks": results });
    let mut files = Vec::new();
    write(&mut files, out.join("identities.json"), &to_json(&doc, true)?)?;
    Ok(Outcome { files, violations: checks::identities(&results) })
}
