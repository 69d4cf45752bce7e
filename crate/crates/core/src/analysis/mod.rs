//! Manufactured solutions, error norms and convergence studies.

pub mod identities;
pub mod manufactured;
pub mod norms;
pub mod study;

pub use identities::{check_identities, IdentityCheck};
pub use manufactured::{ExpFlow3d, ManufacturedSolution, NeumannSide, PolynomialSolution, WangFlow};
pub use norms::{l2_error, solution_errors, SolutionErrors};
pub use study::{
    convergence_study, least_squares_slope, pairwise_slopes, run_case, tau_sweep, CaseResult, ConvergenceReport,
    ConvergenceSeries, ProblemId, ReportRow, Slopes, TauSweepReport,
};
