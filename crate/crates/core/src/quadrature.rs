//! Quadrature rules on the reference cells.
//!
//! Tensor cells use Gauss-Legendre products; simplices use collapsed
//! (Duffy) products of Gauss-Legendre rules, which keeps every weight positive.

use crate::error::{HdgError, Result};
use crate::reference::ElementType;
use crate::Point;

/// Highest polynomial order any rule is built for.
pub const MAX_ORDER: usize = 40;

#[derive(Clone, Debug)]
pub struct QuadratureRule {
    pub element: ElementType,
    pub order: usize,
    pub points: Vec<Point>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(&Point) -> f64) -> f64 {
        self.points.iter().zip(&self.weights).map(|(p, w)| w * f(p)).sum()
    }
}

/// Gauss-Legendre nodes and weights on [-1, 1], exact for degree `2n - 1`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        dp = if d != 0.0 { d } else { dp };
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// Gauss-Legendre rule mapped to [0, 1].
fn gauss_legendre_unit(n: usize) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(n);
    (x.iter().map(|t| 0.5 * (t + 1.0)).collect(), w.iter().map(|w| 0.5 * w).collect())
}

pub fn build_quadrature(element: ElementType, order: usize) -> Result<QuadratureRule> {
    if order == 0 || order > MAX_ORDER {
        return Err(HdgError::QuadratureOrder { order, max: MAX_ORDER });
    }
    let mut points = Vec::new();
    let mut weights = Vec::new();
    match element {
        ElementType::Line => {
            let (x, w) = gauss_legendre((order + 2) / 2);
            for (xi, wi) in x.iter().zip(&w) {
                points.push([*xi, 0.0, 0.0]);
                weights.push(*wi);
            }
        }
        ElementType::Quadrilateral => {
            let (x, w) = gauss_legendre((order + 2) / 2);
            for (xj, wj) in x.iter().zip(&w) {
                for (xi, wi) in x.iter().zip(&w) {
                    points.push([*xi, *xj, 0.0]);
                    weights.push(wi * wj);
                }
            }
        }
        ElementType::Hexahedron => {
            let (x, w) = gauss_legendre((order + 2) / 2);
            for (xk, wk) in x.iter().zip(&w) {
                for (xj, wj) in x.iter().zip(&w) {
                    for (xi, wi) in x.iter().zip(&w) {
                        points.push([*xi, *xj, *xk]);
                        weights.push(wi * wj * wk);
                    }
                }
            }
        }
        ElementType::Triangle => {
            // x = a, y = b (1 - a); Jacobian (1 - a) adds one degree in a.
            let (t, w) = gauss_legendre_unit((order + 3) / 2);
            for (a, wa) in t.iter().zip(&w) {
                for (b, wb) in t.iter().zip(&w) {
                    points.push([*a, b * (1.0 - a), 0.0]);
                    weights.push(wa * wb * (1.0 - a));
                }
            }
        }
        ElementType::Tetrahedron => {
            // Jacobian (1 - a)^2 (1 - b) adds two degrees in a, one in b.
            let (t, w) = gauss_legendre_unit((order + 4) / 2);
            for (a, wa) in t.iter().zip(&w) {
                for (b, wb) in t.iter().zip(&w) {
                    for (c, wc) in t.iter().zip(&w) {
                        points.push([*a, b * (1.0 - a), c * (1.0 - a) * (1.0 - b)]);
                        weights.push(wa * wb * wc * (1.0 - a) * (1.0 - a) * (1.0 - b));
                    }
                }
            }
        }
    }
    Ok(QuadratureRule { element, order, points, weights })
}
