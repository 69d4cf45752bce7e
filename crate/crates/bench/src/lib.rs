//! Shared fixtures for the solver benchmarks.

use hdg_core::analysis::manufactured::ManufacturedSolution;
use hdg_core::analysis::study::ProblemId;
use hdg_core::local::Discretization;
use hdg_core::mesh::generate_cartesian_mesh;
use hdg_core::{Mesh, MeshFamily};

/// Manufactured flow on a classified mesh with its discretization.
pub struct Fixture {
    pub mesh: Mesh,
    pub disc: Discretization,
    pub problem: Box<dyn ManufacturedSolution>,
}

impl Fixture {
    /// Wang flow on 2D families, the exponential flow on 3D ones, with the
    /// family's default stabilization.
    pub fn new(family: MeshFamily, k: usize, level: u32) -> Self {
        let id = if family.dim() == 2 { ProblemId::Wang2d } else { ProblemId::Exp3d };
        let problem = id.build(family, k, 0).expect("problem matches family");
        let mesh =
            generate_cartesian_mesh(family, 1 << level).expect("mesh").classify_boundary(|x| problem.is_neumann(x));
        let disc =
            Discretization::new(family.element_type(), k, family.default_tau(), problem.viscosity()).expect("disc");
        Self { mesh, disc, problem }
    }

    pub fn label(&self) -> String {
        format!("{}/k{}/{}el", self.mesh.element_type.name(), self.disc.k, self.mesh.n_elements())
    }
}
