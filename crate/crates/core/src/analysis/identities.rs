//! Randomized checks of the generalized Gauss and Stokes identities on every
//! element type.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::polynomial::Polynomial;
use crate::reference::ElementType;
use crate::voigt::{check_generalized_gauss, check_generalized_stokes, msd};
use crate::Point;

pub const CELL_TYPES: [ElementType; 4] =
    [ElementType::Triangle, ElementType::Quadrilateral, ElementType::Tetrahedron, ElementType::Hexahedron];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityCheck {
    pub element: ElementType,
    pub degree: usize,
    pub trials: usize,
    pub gauss_residual: f64,
    pub stokes_residual: f64,
}

/// Vertices of a random affine image of the reference cell, kept well shaped.
pub fn random_affine_element<R: Rng>(element: ElementType, rng: &mut R) -> Vec<Point> {
    let dim = element.dim();
    let mut m = [[0.0; 3]; 3];
    let mut shift = [0.0; 3];
    for r in 0..dim {
        shift[r] = rng.random_range(-1.0..1.0);
        for c in 0..dim {
            m[r][c] = if r == c { 1.0 } else { 0.0 } + rng.random_range(-0.25..0.25);
        }
    }
    element
        .vertex_coordinates()
        .iter()
        .map(|xi| {
            let mut x = shift;
            for r in 0..dim {
                for c in 0..dim {
                    x[r] += m[r][c] * xi[c];
                }
            }
            x
        })
        .collect()
}

/// Largest identity residuals over `trials` random fields of each degree
/// `1..=max_degree` on each cell type.
pub fn check_identities(seed: u64, max_degree: usize, trials: usize) -> Result<Vec<IdentityCheck>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for element in CELL_TYPES {
        let dim = element.dim();
        for degree in 1..=max_degree {
            let mut gauss: f64 = 0.0;
            let mut stokes: f64 = 0.0;
            for _ in 0..trials {
                let verts = random_affine_element(element, &mut rng);
                let deg = degree as u32;
                let sigma: Vec<Polynomial> = (0..msd(dim)).map(|_| Polynomial::random(dim, deg, &mut rng)).collect();
                let v: Vec<Polynomial> = (0..dim).map(|_| Polynomial::random(dim, deg, &mut rng)).collect();
                gauss = gauss.max(check_generalized_gauss(element, &verts, degree, &sigma, &v)?);
                let (vol, circ) = check_generalized_stokes(element, &verts, degree, &v)?;
                let r = vol.iter().zip(&circ).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                stokes = stokes.max(r);
            }
            if !(gauss.is_finite() && stokes.is_finite()) {
                gauss = f64::INFINITY;
            }
            out.push(IdentityCheck { element, degree, trials, gauss_residual: gauss, stokes_residual: stokes });
        }
    }
    Ok(out)
}
