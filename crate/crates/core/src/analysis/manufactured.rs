//! Closed-form Stokes solutions used as boundary data and error references.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::polynomial::Polynomial;
use crate::problem::StokesData;
use crate::Point;

/// `grad[i][d] = d u_i / d x_d`.
pub type Gradient = [[f64; 3]; 3];

/// Exact solution of a Stokes problem together with the part of the boundary
/// carrying traction data.
pub trait ManufacturedSolution: StokesData {
    fn name(&self) -> &str;

    fn velocity(&self, x: &Point) -> [f64; 3];

    fn pressure(&self, x: &Point) -> f64;

    fn velocity_gradient(&self, x: &Point) -> Gradient;

    /// Whether a boundary point lies on the Neumann part.
    fn is_neumann(&self, x: &Point) -> bool;
}

/// `sigma n` with `sigma = -p I + nu (grad u + grad u^T)`.
pub fn traction_of<M: ManufacturedSolution + ?Sized>(m: &M, x: &Point, n: &Point) -> [f64; 3] {
    let g = m.velocity_gradient(x);
    let p = m.pressure(x);
    let nu = m.viscosity();
    let dim = m.dim();
    let mut t = [0.0; 3];
    for i in 0..dim {
        t[i] = -p * n[i];
        for j in 0..dim {
            t[i] += nu * (g[i][j] + g[j][i]) * n[j];
        }
    }
    t
}

/// Divergence of the exact velocity.
pub fn divergence_of<M: ManufacturedSolution + ?Sized>(m: &M, x: &Point) -> f64 {
    let g = m.velocity_gradient(x);
    (0..m.dim()).map(|i| g[i][i]).sum()
}

macro_rules! stokes_data_from_exact {
    ($ty:ty) => {
        impl StokesData for $ty {
            fn dim(&self) -> usize {
                self.dim_value()
            }

            fn viscosity(&self) -> f64 {
                self.nu
            }

            fn source(&self, x: &Point) -> [f64; 3] {
                self.source_value(x)
            }

            fn dirichlet(&self, x: &Point) -> [f64; 3] {
                ManufacturedSolution::velocity(self, x)
            }

            fn traction(&self, x: &Point, n: &Point) -> [f64; 3] {
                traction_of(self, x, n)
            }
        }
    };
}

/// Two-dimensional Wang flow; the pressure vanishes and the velocity is
/// harmonic, so there is no body force. Neumann data on `x2 = 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WangFlow {
    pub a: f64,
    pub b: f64,
    pub lambda: f64,
    pub nu: f64,
}

impl Default for WangFlow {
    fn default() -> Self {
        Self { a: 1.0, b: 1.0, lambda: 1.0, nu: 1.0 }
    }
}

impl WangFlow {
    fn dim_value(&self) -> usize {
        2
    }

    fn source_value(&self, _: &Point) -> [f64; 3] {
        [0.0; 3]
    }
}

stokes_data_from_exact!(WangFlow);

impl ManufacturedSolution for WangFlow {
    fn name(&self) -> &str {
        "wang2d"
    }

    fn velocity(&self, x: &Point) -> [f64; 3] {
        let (a, b, l) = (self.a, self.b, self.lambda);
        let e = (-l * x[1]).exp();
        [2.0 * a * x[1] - b * l * (l * x[0]).cos() * e, b * l * (l * x[0]).sin() * e, 0.0]
    }

    fn pressure(&self, _: &Point) -> f64 {
        0.0
    }

    fn velocity_gradient(&self, x: &Point) -> Gradient {
        let (a, b, l) = (self.a, self.b, self.lambda);
        let e = (-l * x[1]).exp();
        let (s, c) = (l * x[0]).sin_cos();
        let bl2 = b * l * l;
        [[bl2 * s * e, 2.0 * a + bl2 * c * e, 0.0], [bl2 * c * e, -bl2 * s * e, 0.0], [0.0; 3]]
    }

    fn is_neumann(&self, x: &Point) -> bool {
        x[1].abs() < 1e-10
    }
}

/// Three-dimensional exponential flow with pressure `x1 (1 - x1)` and
/// Neumann data on `x3 = 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExpFlow3d {
    pub a: f64,
    pub b: f64,
    pub nu: f64,
}

impl Default for ExpFlow3d {
    fn default() -> Self {
        Self { a: 1.0, b: 0.5, nu: 1.0 }
    }
}

impl ExpFlow3d {
    fn dim_value(&self) -> usize {
        3
    }

    /// The three exponentials and their (constant) logarithmic gradients.
    fn factors(&self, x: &Point) -> [(f64, [f64; 3]); 3] {
        let (a, b) = (self.a, self.b);
        [
            ((a * (x[0] - x[2]) + b * (x[1] - x[2])).exp(), [a, b, -a - b]),
            ((a * (x[2] - x[1]) + b * (x[0] - x[1])).exp(), [b, -a - b, a]),
            ((a * (x[1] - x[0]) + b * (x[2] - x[0])).exp(), [-a - b, a, b]),
        ]
    }

    /// `Delta f_j = c f_j` for every factor.
    fn laplace_factor(&self) -> f64 {
        let (a, b) = (self.a, self.b);
        a * a + b * b + (a + b) * (a + b)
    }

    fn source_value(&self, x: &Point) -> [f64; 3] {
        let u = ManufacturedSolution::velocity(self, x);
        let c = self.nu * self.laplace_factor();
        [1.0 - 2.0 * x[0] - c * u[0], -c * u[1], -c * u[2]]
    }
}

// u_i = b f_{p(i)} - a f_{q(i)}
const EXP_TERMS: [(usize, usize); 3] = [(0, 1), (2, 0), (1, 2)];

stokes_data_from_exact!(ExpFlow3d);

impl ManufacturedSolution for ExpFlow3d {
    fn name(&self) -> &str {
        "exp3d"
    }

    fn velocity(&self, x: &Point) -> [f64; 3] {
        let f = self.factors(x);
        let mut u = [0.0; 3];
        for (i, &(p, q)) in EXP_TERMS.iter().enumerate() {
            u[i] = self.b * f[p].0 - self.a * f[q].0;
        }
        u
    }

    fn pressure(&self, x: &Point) -> f64 {
        x[0] * (1.0 - x[0])
    }

    fn velocity_gradient(&self, x: &Point) -> Gradient {
        let f = self.factors(x);
        let mut g = [[0.0; 3]; 3];
        for (i, &(p, q)) in EXP_TERMS.iter().enumerate() {
            for d in 0..3 {
                g[i][d] = self.b * f[p].0 * f[p].1[d] - self.a * f[q].0 * f[q].1[d];
            }
        }
        g
    }

    fn is_neumann(&self, x: &Point) -> bool {
        x[2].abs() < 1e-10
    }
}

/// Which boundary faces carry traction data for [`PolynomialSolution`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NeumannSide {
    None,
    /// The face `x_d = 0`.
    Lower(usize),
}

/// Divergence-free polynomial velocity of degree `k` (curl of a random
/// stream function or vector potential of degree `k + 1`) with a random
/// pressure of degree `k`.
#[derive(Clone, Debug)]
pub struct PolynomialSolution {
    pub dim: usize,
    pub nu: f64,
    pub velocity: Vec<Polynomial>,
    pub pressure: Polynomial,
    pub gradient: Vec<Vec<Polynomial>>,
    pub source: Vec<Polynomial>,
    pub neumann: NeumannSide,
}

impl PolynomialSolution {
    pub fn new(dim: usize, velocity: Vec<Polynomial>, pressure: Polynomial, nu: f64, neumann: NeumannSide) -> Self {
        let gradient: Vec<Vec<Polynomial>> =
            velocity.iter().map(|u| (0..dim).map(|d| u.derivative(d)).collect()).collect();
        let source = (0..dim).map(|i| pressure.derivative(i) - velocity[i].laplacian(dim) * nu).collect();
        Self { dim, nu, velocity, pressure, gradient, source, neumann }
    }

    /// Random solution of velocity degree `k` drawn from `seed`.
    pub fn random(dim: usize, k: usize, nu: f64, seed: u64, neumann: NeumannSide) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let deg = k as u32;
        let velocity = if dim == 2 {
            let psi = Polynomial::random(2, deg + 1, &mut rng);
            vec![psi.derivative(1), -psi.derivative(0)]
        } else {
            let a: Vec<Polynomial> = (0..3).map(|_| Polynomial::random(3, deg + 1, &mut rng)).collect();
            vec![
                a[2].derivative(1) - a[1].derivative(2),
                a[0].derivative(2) - a[2].derivative(0),
                a[1].derivative(0) - a[0].derivative(1),
            ]
        };
        let pressure = Polynomial::random(dim, deg, &mut rng);
        Self::new(dim, velocity, pressure, nu, neumann)
    }

    fn dim_value(&self) -> usize {
        self.dim
    }

    fn source_value(&self, x: &Point) -> [f64; 3] {
        let mut s = [0.0; 3];
        for (i, p) in self.source.iter().enumerate() {
            s[i] = p.eval(x);
        }
        s
    }
}

stokes_data_from_exact!(PolynomialSolution);

impl ManufacturedSolution for PolynomialSolution {
    fn name(&self) -> &str {
        "polynomial"
    }

    fn velocity(&self, x: &Point) -> [f64; 3] {
        let mut u = [0.0; 3];
        for (i, p) in self.velocity.iter().enumerate() {
            u[i] = p.eval(x);
        }
        u
    }

    fn pressure(&self, x: &Point) -> f64 {
        self.pressure.eval(x)
    }

    fn velocity_gradient(&self, x: &Point) -> Gradient {
        let mut g = [[0.0; 3]; 3];
        for (i, row) in self.gradient.iter().enumerate() {
            for (d, p) in row.iter().enumerate() {
                g[i][d] = p.eval(x);
            }
        }
        g
    }

    fn is_neumann(&self, x: &Point) -> bool {
        match self.neumann {
            NeumannSide::None => false,
            NeumannSide::Lower(d) => x[d].abs() < 1e-10,
        }
    }
}
