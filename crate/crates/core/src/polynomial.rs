//! Sparse multivariate polynomials in up to three variables.
//!
//! Used for manufactured polynomial solutions and for the exact-arithmetic
//! oracles in the identity checks: evaluation and differentiation are exact.

use std::ops::{Add, Mul, Neg, Sub};

use rand::Rng;

use crate::Point;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Polynomial {
    terms: Vec<([u32; 3], f64)>,
}

impl Polynomial {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        Self::monomial([0, 0, 0], c)
    }

    pub fn monomial(exponents: [u32; 3], coefficient: f64) -> Self {
        let mut p = Self::zero();
        p.add_term(exponents, coefficient);
        p
    }

    /// The coordinate function `x_d`.
    pub fn coordinate(d: usize) -> Self {
        let mut e = [0; 3];
        e[d] = 1;
        Self::monomial(e, 1.0)
    }

    fn add_term(&mut self, exponents: [u32; 3], coefficient: f64) {
        if coefficient == 0.0 {
            return;
        }
        match self.terms.iter_mut().find(|(e, _)| *e == exponents) {
            Some((_, c)) => *c += coefficient,
            None => self.terms.push((exponents, coefficient)),
        }
        self.terms.retain(|(_, c)| *c != 0.0);
    }

    pub fn terms(&self) -> &[([u32; 3], f64)] {
        &self.terms
    }

    pub fn degree(&self) -> u32 {
        self.terms.iter().map(|(e, _)| e.iter().sum()).max().unwrap_or(0)
    }

    pub fn eval(&self, x: &Point) -> f64 {
        self.terms
            .iter()
            .map(|(e, c)| c * x[0].powi(e[0] as i32) * x[1].powi(e[1] as i32) * x[2].powi(e[2] as i32))
            .sum()
    }

    pub fn derivative(&self, d: usize) -> Self {
        let mut out = Self::zero();
        for (e, c) in &self.terms {
            if e[d] > 0 {
                let mut e2 = *e;
                e2[d] -= 1;
                out.add_term(e2, c * e[d] as f64);
            }
        }
        out
    }

    pub fn laplacian(&self, dim: usize) -> Self {
        (0..dim).fold(Self::zero(), |acc, d| acc + self.derivative(d).derivative(d))
    }

    /// Random polynomial of total degree at most `degree` in `dim` variables,
    /// coefficients uniform in [-1, 1].
    pub fn random<R: Rng>(dim: usize, degree: u32, rng: &mut R) -> Self {
        let mut p = Self::zero();
        for e in exponents_up_to(dim, degree) {
            p.add_term(e, rng.random_range(-1.0..1.0));
        }
        p
    }
}

/// All exponent triples in `dim` variables with total degree `<= degree`.
pub fn exponents_up_to(dim: usize, degree: u32) -> Vec<[u32; 3]> {
    let mut out = Vec::new();
    let max = |d: usize| if d < dim { degree } else { 0 };
    for a in 0..=max(0) {
        for b in 0..=max(1) {
            for c in 0..=max(2) {
                if a + b + c <= degree {
                    out.push([a, b, c]);
                }
            }
        }
    }
    out
}

impl Add for Polynomial {
    type Output = Polynomial;
    fn add(mut self, rhs: Polynomial) -> Polynomial {
        for (e, c) in rhs.terms {
            self.add_term(e, c);
        }
        self
    }
}

impl Sub for Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: Polynomial) -> Polynomial {
        self + (-rhs)
    }
}

impl Neg for Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        self * -1.0
    }
}

impl Mul<f64> for Polynomial {
    type Output = Polynomial;
    fn mul(mut self, rhs: f64) -> Polynomial {
        for (_, c) in &mut self.terms {
            *c *= rhs;
        }
        self.terms.retain(|(_, c)| *c != 0.0);
        self
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        let mut out = Polynomial::zero();
        for (ea, ca) in &self.terms {
            for (eb, cb) in &rhs.terms {
                out.add_term([ea[0] + eb[0], ea[1] + eb[1], ea[2] + eb[2]], ca * cb);
            }
        }
        out
    }
}
