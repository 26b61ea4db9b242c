//! Dense univariate polynomials with complex coefficients, plus a small
//! real bivariate type used for the perturbation factor.

use num_complex::Complex64;
use std::ops::{Add, Mul, Neg, Sub};

/// Coefficients stored lowest power first.
#[derive(Clone, Debug, PartialEq)]
pub struct Poly {
    pub coeffs: Vec<Complex64>,
}

impl Poly {
    pub fn new(mut coeffs: Vec<Complex64>) -> Self {
        while coeffs.len() > 1 && coeffs.last().map_or(false, |c| *c == Complex64::new(0.0, 0.0)) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(Complex64::new(0.0, 0.0));
        }
        Poly { coeffs }
    }

    pub fn from_real(c: &[f64]) -> Self {
        Poly::new(c.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    pub fn constant(c: Complex64) -> Self {
        Poly::new(vec![c])
    }

    pub fn zero() -> Self {
        Poly::constant(Complex64::new(0.0, 0.0))
    }

    pub fn one() -> Self {
        Poly::constant(Complex64::new(1.0, 0.0))
    }

    /// The monic linear factor `x - a`.
    pub fn linear(a: Complex64) -> Self {
        Poly::new(vec![-a, Complex64::new(1.0, 0.0)])
    }

    /// Product of `(x - r)` over the given roots, scaled by `lead`.
    pub fn from_roots(roots: &[Complex64], lead: Complex64) -> Self {
        let mut p = Poly::constant(lead);
        for &r in roots {
            p = &p * &Poly::linear(r);
        }
        p
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| *c == Complex64::new(0.0, 0.0))
    }

    pub fn lead(&self) -> Complex64 {
        *self.coeffs.last().unwrap()
    }

    pub fn eval(&self, x: Complex64) -> Complex64 {
        self.coeffs.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * x + c)
    }

    /// Value and first derivative by a single Horner pass.
    pub fn eval_with_deriv(&self, x: Complex64) -> (Complex64, Complex64) {
        let mut p = Complex64::new(0.0, 0.0);
        let mut dp = Complex64::new(0.0, 0.0);
        for &c in self.coeffs.iter().rev() {
            dp = dp * x + p;
            p = p * x + c;
        }
        (p, dp)
    }

    pub fn deriv(&self) -> Poly {
        if self.coeffs.len() <= 1 {
            return Poly::zero();
        }
        Poly::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, &c)| c * k as f64)
                .collect(),
        )
    }

    pub fn pow(&self, k: u32) -> Poly {
        let mut out = Poly::one();
        for _ in 0..k {
            out = &out * self;
        }
        out
    }

    pub fn scale(&self, s: Complex64) -> Poly {
        Poly::new(self.coeffs.iter().map(|&c| c * s).collect())
    }

    /// Re-expand in the variable `y = x - shift`, i.e. return `p(y + shift)`.
    pub fn shift(&self, shift: Complex64) -> Poly {
        let mut out = Poly::zero();
        let lin = Poly::new(vec![shift, Complex64::new(1.0, 0.0)]);
        for &c in self.coeffs.iter().rev() {
            out = &(&out * &lin) + &Poly::constant(c);
        }
        out
    }

    /// Euclidean norm of the coefficient vector.
    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs_diff(&self, other: &Poly) -> f64 {
        let n = self.coeffs.len().max(other.coeffs.len());
        (0..n)
            .map(|k| {
                let a = self.coeffs.get(k).copied().unwrap_or_default();
                let b = other.coeffs.get(k).copied().unwrap_or_default();
                (a - b).norm()
            })
            .fold(0.0, f64::max)
    }
}

impl<'a> Add<&'a Poly> for &'a Poly {
    type Output = Poly;
    fn add(self, rhs: &Poly) -> Poly {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        Poly::new(
            (0..n)
                .map(|k| {
                    self.coeffs.get(k).copied().unwrap_or_default()
                        + rhs.coeffs.get(k).copied().unwrap_or_default()
                })
                .collect(),
        )
    }
}

impl<'a> Sub<&'a Poly> for &'a Poly {
    type Output = Poly;
    fn sub(self, rhs: &Poly) -> Poly {
        self + &(-rhs)
    }
}

impl<'a> Neg for &'a Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        Poly::new(self.coeffs.iter().map(|&c| -c).collect())
    }
}

impl<'a> Mul<&'a Poly> for &'a Poly {
    type Output = Poly;
    fn mul(self, rhs: &Poly) -> Poly {
        let mut out = vec![Complex64::new(0.0, 0.0); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in rhs.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly::new(out)
    }
}

/// Real bivariate polynomial `sum c[a][b] p^a q^b`, kept sparse.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct BiPoly {
    pub terms: Vec<(u32, u32, f64)>,
}

impl BiPoly {
    pub fn constant(c: f64) -> Self {
        BiPoly { terms: vec![(0, 0, c)] }
    }

    pub fn eval(&self, p: Complex64, q: Complex64) -> Complex64 {
        self.terms
            .iter()
            .map(|&(a, b, c)| p.powu(a) * q.powu(b) * c)
            .sum()
    }

    /// Partial derivatives with respect to the first and second variable.
    pub fn partials(&self) -> (BiPoly, BiPoly) {
        let dp = self
            .terms
            .iter()
            .filter(|t| t.0 > 0)
            .map(|&(a, b, c)| (a - 1, b, c * a as f64))
            .collect();
        let dq = self
            .terms
            .iter()
            .filter(|t| t.1 > 0)
            .map(|&(a, b, c)| (a, b - 1, c * b as f64))
            .collect();
        (BiPoly { terms: dp }, BiPoly { terms: dq })
    }

    pub fn total_degree(&self) -> u32 {
        self.terms.iter().filter(|t| t.2 != 0.0).map(|t| t.0 + t.1).max().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.iter().all(|t| t.2 == 0.0)
    }

    /// Substitute `p = x + p0`, `q = q0` and expand in `x`.
    pub fn restrict(&self, p0: Complex64, q0: Complex64) -> Poly {
        let lin = Poly::new(vec![p0, Complex64::new(1.0, 0.0)]);
        let mut out = Poly::zero();
        for &(a, b, c) in &self.terms {
            let term = lin.pow(a).scale(q0.powu(b) * c);
            out = &out + &term;
        }
        out
    }
}
