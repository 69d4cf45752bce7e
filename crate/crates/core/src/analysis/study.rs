//! Convergence studies, stabilization sweeps and rate estimation.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::analysis::manufactured::{ExpFlow3d, ManufacturedSolution, NeumannSide, PolynomialSolution, WangFlow};
use crate::analysis::norms::{solution_errors, SolutionErrors};
use crate::error::{HdgError, Result};
use crate::global::SolverStats;
use crate::local::Discretization;
use crate::mesh::{generate_cartesian_mesh, MeshFamily};
use crate::solver::{solve_stokes, Diagnostics};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProblemId {
    Wang2d,
    Exp3d,
    Polynomial,
}

impl ProblemId {
    pub fn name(self) -> &'static str {
        match self {
            ProblemId::Wang2d => "wang2d",
            ProblemId::Exp3d => "exp3d",
            ProblemId::Polynomial => "polynomial",
        }
    }

    /// Spatial dimension, `None` when the problem exists in both.
    pub fn dim(self) -> Option<usize> {
        match self {
            ProblemId::Wang2d => Some(2),
            ProblemId::Exp3d => Some(3),
            ProblemId::Polynomial => None,
        }
    }

    /// Concrete problem for a mesh family and degree. Polynomial solutions
    /// have velocity degree `k`, coefficients drawn from `seed`, and traction
    /// data on the face `x_nsd = 0`.
    pub fn build(self, family: MeshFamily, k: usize, seed: u64) -> Result<Box<dyn ManufacturedSolution>> {
        let dim = family.dim();
        if let Some(d) = self.dim() {
            if d != dim {
                return Err(HdgError::Config(format!(
                    "problem {} is {d}-dimensional but family {family} is {dim}-dimensional",
                    self.name()
                )));
            }
        }
        Ok(match self {
            ProblemId::Wang2d => Box::new(WangFlow::default()),
            ProblemId::Exp3d => Box::new(ExpFlow3d::default()),
            ProblemId::Polynomial => {
                Box::new(PolynomialSolution::random(dim, k, 1.0, seed, NeumannSide::Lower(dim - 1)))
            }
        })
    }
}

impl fmt::Display for ProblemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ProblemId {
    type Err = HdgError;

    fn from_str(s: &str) -> Result<Self> {
        [ProblemId::Wang2d, ProblemId::Exp3d, ProblemId::Polynomial]
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| HdgError::Config(format!("unknown problem '{s}' (expected wang2d, exp3d or polynomial)")))
    }
}

/// One line of a report: family, k, tau, level, h, dofs and the four errors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub family: MeshFamily,
    pub k: usize,
    pub tau: f64,
    pub level: u32,
    pub h: f64,
    pub dofs: usize,
    pub err_u: f64,
    pub err_p: f64,
    #[serde(rename = "err_L")]
    pub err_l: f64,
    pub err_ustar: f64,
}

impl ReportRow {
    pub fn errors(&self) -> SolutionErrors {
        SolutionErrors { u: self.err_u, p: self.err_p, l: self.err_l, ustar: self.err_ustar }
    }
}

#[derive(Clone, Debug)]
pub struct CaseResult {
    pub row: ReportRow,
    pub diagnostics: Diagnostics,
    pub stats: SolverStats,
}

/// Solve one problem on the level-`level` mesh (n = 2^level) of a family.
pub fn run_case(
    problem: &dyn ManufacturedSolution,
    family: MeshFamily,
    k: usize,
    tau: f64,
    level: u32,
) -> Result<CaseResult> {
    if problem.dim() != family.dim() {
        return Err(HdgError::Config(format!("problem {} does not match family {family}", problem.name())));
    }
    let n = 1usize << level;
    let mesh = generate_cartesian_mesh(family, n)?.classify_boundary(|x| problem.is_neumann(x));
    let disc = Discretization::new(family.element_type(), k, tau, problem.viscosity())?;
    let sol = solve_stokes(&mesh, &disc, problem)?;
    let errors = solution_errors(&mesh, &disc, &sol, problem)?;
    Ok(CaseResult {
        row: ReportRow {
            family,
            k,
            tau,
            level,
            h: mesh.h,
            dofs: sol.stats.dofs,
            err_u: errors.u,
            err_p: errors.p,
            err_l: errors.l,
            err_ustar: errors.ustar,
        },
        diagnostics: sol.diagnostics,
        stats: sol.stats,
    })
}

/// Least-squares slope of `log(err)` against `log(h)`.
pub fn least_squares_slope(h: &[f64], err: &[f64]) -> f64 {
    let n = h.len() as f64;
    let xs: Vec<f64> = h.iter().map(|v| v.ln()).collect();
    let ys: Vec<f64> = err.iter().map(|v| v.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

/// Slopes between consecutive levels.
pub fn pairwise_slopes(h: &[f64], err: &[f64]) -> Vec<f64> {
    h.windows(2).zip(err.windows(2)).map(|(h, e)| (e[1] / e[0]).ln() / (h[1] / h[0]).ln()).collect()
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Slopes {
    pub u: f64,
    pub p: f64,
    #[serde(rename = "L")]
    pub l: f64,
    pub ustar: f64,
}

impl Slopes {
    fn map(rows: &[ReportRow], f: impl Fn(&[f64], &[f64]) -> f64) -> Self {
        let h: Vec<f64> = rows.iter().map(|r| r.h).collect();
        let col = |g: fn(&ReportRow) -> f64| rows.iter().map(g).collect::<Vec<f64>>();
        Self {
            u: f(&h, &col(|r| r.err_u)),
            p: f(&h, &col(|r| r.err_p)),
            l: f(&h, &col(|r| r.err_l)),
            ustar: f(&h, &col(|r| r.err_ustar)),
        }
    }

    /// Least-squares slopes over the last `count` rows.
    pub fn least_squares(rows: &[ReportRow], count: usize) -> Self {
        let start = rows.len().saturating_sub(count);
        Self::map(&rows[start..], least_squares_slope)
    }
}

/// One (family, k, tau) series of a convergence study.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceSeries {
    pub family: MeshFamily,
    pub k: usize,
    pub tau: f64,
    pub rows: Vec<ReportRow>,
    /// Least-squares slopes over all levels.
    pub slopes_all: Option<Slopes>,
    /// Least-squares slopes over the last three levels.
    pub slopes_last3: Option<Slopes>,
    pub pairwise: Vec<Slopes>,
    pub failure: Option<String>,
}

impl ConvergenceSeries {
    fn from_rows(family: MeshFamily, k: usize, tau: f64, rows: Vec<ReportRow>, failure: Option<String>) -> Self {
        let enough = rows.len() >= 2 && failure.is_none();
        let pairwise = if rows.len() >= 2 {
            (0..rows.len() - 1).map(|i| Slopes::map(&rows[i..i + 2], least_squares_slope)).collect()
        } else {
            Vec::new()
        };
        Self {
            family,
            k,
            tau,
            slopes_all: enough.then(|| Slopes::least_squares(&rows, rows.len())),
            slopes_last3: enough.then(|| Slopes::least_squares(&rows, 3)),
            pairwise,
            rows,
            failure,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub problem: String,
    pub series: Vec<ConvergenceSeries>,
    /// Timing data, kept out of the serialized report so it stays reproducible.
    #[serde(skip)]
    pub stats: Vec<SolverStats>,
    #[serde(skip)]
    pub diagnostics: Vec<Diagnostics>,
}

impl ConvergenceReport {
    pub fn rows(&self) -> impl Iterator<Item = &ReportRow> {
        self.series.iter().flat_map(|s| s.rows.iter())
    }
}

/// h-convergence of one problem for each degree in `ks` over `levels`.
/// A failing level ends its series and is recorded; other series continue.
pub fn convergence_study(
    problem: &dyn ManufacturedSolution,
    family: MeshFamily,
    ks: &[usize],
    tau: f64,
    levels: &[u32],
) -> Result<ConvergenceReport> {
    if levels.len() < 3 {
        return Err(HdgError::Config(format!("a convergence study needs at least 3 levels, got {}", levels.len())));
    }
    let mut report = ConvergenceReport {
        problem: problem.name().to_string(),
        series: Vec::new(),
        stats: Vec::new(),
        diagnostics: Vec::new(),
    };
    for &k in ks {
        let mut rows = Vec::new();
        let mut failure = None;
        for &level in levels {
            match run_case(problem, family, k, tau, level) {
                Ok(case) => {
                    rows.push(case.row);
                    report.stats.push(case.stats);
                    report.diagnostics.push(case.diagnostics);
                }
                Err(e) => {
                    failure = Some(format!("level {level}: {e}"));
                    break;
                }
            }
        }
        report.series.push(ConvergenceSeries::from_rows(family, k, tau, rows, failure));
    }
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TauEntry {
    pub tau: f64,
    pub row: Option<ReportRow>,
    pub failure: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TauSweepReport {
    pub problem: String,
    pub family: MeshFamily,
    pub k: usize,
    pub level: u32,
    pub entries: Vec<TauEntry>,
}

impl TauSweepReport {
    /// Index of the smallest value of `metric` among successful entries.
    pub fn argmin(&self, metric: impl Fn(&ReportRow) -> f64) -> Option<usize> {
        self.entries
            .iter()
            .enumerate()
            .filter_map(|(i, e)| e.row.as_ref().map(|r| (i, metric(r))))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(i, _)| i)
    }
}

/// Errors as a function of the stabilization on one mesh. Non-positive
/// values are rejected up front; solver failures are recorded per entry.
pub fn tau_sweep(
    problem: &dyn ManufacturedSolution,
    family: MeshFamily,
    k: usize,
    level: u32,
    taus: &[f64],
) -> Result<TauSweepReport> {
    if let Some(bad) = taus.iter().find(|t| !(**t > 0.0) || !t.is_finite()) {
        return Err(HdgError::Config(format!("stabilization values must be positive, got {bad}")));
    }
    let entries = taus
        .iter()
        .map(|&tau| match run_case(problem, family, k, tau, level) {
            Ok(case) => TauEntry { tau, row: Some(case.row), failure: None },
            Err(e) => TauEntry { tau, row: None, failure: Some(e.to_string()) },
        })
        .collect();
    Ok(TauSweepReport { problem: problem.name().to_string(), family, k, level, entries })
}
