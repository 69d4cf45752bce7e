//! `stokes-hdg`: single solves, convergence studies, stabilization sweeps and
//! identity checks for the HDG Stokes solver.
//!
//! Exit codes: 0 success, 1 solver or I/O failure, 2 usage or validation
//! error, 3 a threshold violated under `--assert`.

mod checks;
mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use hdg_core::analysis::study::ProblemId;
use hdg_core::MeshFamily;

use crate::config::{parse_list, parse_taus, ConfigError, RunConfig};

const SWEEP_TAUS: &str = "0.1,1,4,10,100,1000,10000";

#[derive(Parser)]
#[command(name = "stokes-hdg", version, about = "HDG solver for the Stokes equations in Cauchy-stress form")]
struct Cli {
    /// Worker threads for element-level work (0 uses every core).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    /// Directory for reports and field exports.
    #[arg(long, global = true, env = "HDG_OUTPUT_DIR", default_value = "hdg-output")]
    out: PathBuf,

    /// Exit with status 3 when a result misses its acceptance threshold.
    #[arg(long, global = true)]
    assert: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one problem on one mesh and report the L2 errors.
    Solve(SolveArgs),
    /// Errors and observed rates over a range of refinement levels.
    Convergence(ConvergenceArgs),
    /// Errors on one mesh for a list of stabilization values.
    TauSweep(SweepArgs),
    /// Residuals of the generalized Gauss and Stokes identities.
    CheckIdentities(IdentityArgs),
}

#[derive(Args)]
struct SolveArgs {
    /// wang2d, exp3d or polynomial.
    #[arg(long)]
    problem: ProblemId,
    /// quad, tri1, tri2, hex or tet.
    #[arg(long)]
    family: MeshFamily,
    #[arg(long, default_value_t = 2)]
    k: usize,
    /// Mesh level; the mesh has 2^level cells per direction.
    #[arg(long, default_value_t = 3)]
    level: u32,
    /// Stabilization (default: 40 on tri2, 4 otherwise).
    #[arg(long)]
    tau: Option<f64>,
    /// Seed for the random polynomial problem.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Skip the field JSON and VTK exports.
    #[arg(long)]
    no_fields: bool,
}

#[derive(Args)]
struct ConvergenceArgs {
    #[arg(long)]
    problem: ProblemId,
    #[arg(long)]
    family: MeshFamily,
    /// Degrees, e.g. `1..3` or `1,2`.
    #[arg(long, default_value = "1..3", value_parser = parse_list::<usize>)]
    k: std::vec::Vec<usize>,
    /// Levels, e.g. `1..4`; at least three.
    #[arg(long, default_value = "1..4", value_parser = parse_list::<u32>)]
    levels: std::vec::Vec<u32>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long, default_value = "wang2d")]
    problem: ProblemId,
    #[arg(long, default_value = "quad")]
    family: MeshFamily,
    #[arg(long, default_value_t = 2)]
    k: usize,
    #[arg(long, default_value_t = 3)]
    level: u32,
    /// Comma-separated stabilization values.
    #[arg(long, default_value = SWEEP_TAUS, value_parser = parse_taus)]
    tau: std::vec::Vec<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct IdentityArgs {
    /// Highest polynomial degree of the random fields.
    #[arg(long, default_value_t = 4)]
    max_degree: usize,
    /// Random fields per cell type and degree.
    #[arg(long, default_value_t = 3)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

enum Failure {
    Usage(String),
    Run(hdg_core::HdgError),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Usage(e.0)
    }
}

impl From<hdg_core::HdgError> for Failure {
    fn from(e: hdg_core::HdgError) -> Self {
        Failure::Run(e)
    }
}

fn run(cli: Cli) -> Result<commands::Outcome, Failure> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads)
        .build_global()
        .map_err(|e| Failure::Usage(format!("cannot start {} threads: {e}", cli.threads)))?;
    let out = cli.out;
    match cli.command {
        Command::Solve(a) => {
            let cfg = RunConfig {
                problem: a.problem,
                family: a.family,
                ks: vec![a.k],
                levels: vec![a.level],
                taus: vec![a.tau.unwrap_or(a.family.default_tau())],
                seed: a.seed,
                out,
                export_fields: !a.no_fields,
            }
            .validate()?;
            Ok(commands::solve(&cfg)?)
        }
        Command::Convergence(a) => {
            if a.levels.len() < 3 {
                return Err(Failure::Usage(format!(
                    "a convergence study needs at least 3 levels, got {}",
                    a.levels.len()
                )));
            }
            let cfg = RunConfig {
                problem: a.problem,
                family: a.family,
                ks: a.k,
                levels: a.levels,
                taus: vec![a.tau.unwrap_or(a.family.default_tau())],
                seed: a.seed,
                out,
                export_fields: false,
            }
            .validate()?;
            Ok(commands::convergence(&cfg)?)
        }
        Command::TauSweep(a) => {
            let cfg = RunConfig {
                problem: a.problem,
                family: a.family,
                ks: vec![a.k],
                levels: vec![a.level],
                taus: a.tau,
                seed: a.seed,
                out,
                export_fields: false,
            }
            .validate()?;
            Ok(commands::sweep(&cfg)?)
        }
        Command::CheckIdentities(a) => {
            if a.max_degree == 0 || a.max_degree > hdg_core::reference::MAX_DEGREE || a.trials == 0 {
                return Err(Failure::Usage(format!(
                    "need 1 <= max-degree <= {} and at least one trial",
                    hdg_core::reference::MAX_DEGREE
                )));
            }
            Ok(commands::identities(&out, a.seed, a.max_degree, a.trials)?)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let assert = cli.assert;
    match run(cli) {
        Ok(outcome) => {
            for f in &outcome.files {
                eprintln!("wrote {}", f.display());
            }
            if assert && !outcome.violations.is_empty() {
                for v in &outcome.violations {
                    eprintln!("threshold violated: {v}");
                }
                return ExitCode::from(3);
            }
            ExitCode::SUCCESS
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Run(e)) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
