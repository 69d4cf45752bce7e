//! Data of a Stokes boundary value problem as seen by the solver.

use crate::Point;

/// Viscosity, body force and boundary data. Vectors are padded to length 3.
pub trait StokesData: Sync {
    fn dim(&self) -> usize;

    fn viscosity(&self) -> f64;

    /// Body force `s`.
    fn source(&self, x: &Point) -> [f64; 3];

    /// Dirichlet velocity `u_D`.
    fn dirichlet(&self, x: &Point) -> [f64; 3];

    /// Traction `t = sigma n` on Neumann faces, `n` the outward normal.
    fn traction(&self, x: &Point, n: &Point) -> [f64; 3];
}

/// Homogeneous data: zero force, no-slip walls and traction-free outlets.
#[derive(Clone, Copy, Debug)]
pub struct ZeroData {
    pub dim: usize,
    pub nu: f64,
}

impl StokesData for ZeroData {
    fn dim(&self) -> usize {
        self.dim
    }

    fn viscosity(&self) -> f64 {
        self.nu
    }

    fn source(&self, _: &Point) -> [f64; 3] {
        [0.0; 3]
    }

    fn dirichlet(&self, _: &Point) -> [f64; 3] {
        [0.0; 3]
    }

    fn traction(&self, _: &Point, _: &Point) -> [f64; 3] {
        [0.0; 3]
    }
}
