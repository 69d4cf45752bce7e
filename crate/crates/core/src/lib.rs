//! Hybridizable discontinuous Galerkin solver for Stokes flow written in
//! Cauchy-stress form, with the stress kept symmetric through Voigt storage.
//!
//! Pipeline: [`mesh`] builds the broken domain, [`local`] assembles and
//! condenses the element problems, [`global`] solves for the face velocity
//! trace and element mean pressures, [`postprocess`] builds the
//! superconvergent velocity and [`analysis`] measures errors and rates.
//!
//! ```
//! use hdg_core::analysis::{solution_errors, ManufacturedSolution, WangFlow};
//! use hdg_core::{generate_cartesian_mesh, solve_stokes, Discretization, MeshFamily, StokesData};
//!
//! # fn main() -> hdg_core::Result<()> {
//! let flow = WangFlow::default();
//! let mesh = generate_cartesian_mesh(MeshFamily::Quad, 4)?.classify_boundary(|x| flow.is_neumann(x));
//! let disc = Discretization::new(mesh.element_type, 2, 4.0, flow.viscosity())?;
//! let sol = solve_stokes(&mesh, &disc, &flow)?;
//! let err = solution_errors(&mesh, &disc, &sol, &flow)?;
//! assert!(err.ustar < err.u);
//! # Ok(())
//! # }
//! ```

pub mod analysis;
pub mod error;
pub mod export;
pub mod geometry;
pub mod global;
pub mod local;
pub mod mesh;
pub mod polynomial;
pub mod postprocess;
pub mod problem;
pub mod quadrature;
pub mod reference;
pub mod solver;
pub mod voigt;

/// Physical or reference coordinates; unused trailing entries are zero.
pub type Point = [f64; 3];

pub use error::{HdgError, Result};
pub use global::{SolutionFields, SolverStats, TraceSystem};
pub use local::{CondensedElement, Discretization, LocalSystem};
pub use mesh::{generate_box_mesh, generate_cartesian_mesh, BoxDomain, Face, FaceKind, FaceSide, Mesh, MeshFamily};
pub use postprocess::PostprocessedField;
pub use problem::StokesData;
pub use quadrature::{build_quadrature, QuadratureRule};
pub use reference::{ElementType, ReferenceElement};
pub use solver::{solve_stokes, HdgSolution};
pub use voigt::VoigtOps;
