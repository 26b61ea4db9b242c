//! Newton principal parts of `Q`, the asymptotic discriminant locus near the
//! origin and leading-order root formulas.

use crate::error::{Error, Result};
use crate::poly::Poly;
use crate::resonance::{build_q, Chart, ResonantSystem};
use crate::roots::{all_roots_poly, nearest_assignment};
use num_complex::Complex64;
use std::collections::BTreeMap;
use std::f64::consts::PI;

/// Real polynomial in `(x, j, h)`, keyed by exponents.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct TriPoly {
    pub terms: BTreeMap<(u32, u32, u32), f64>,
}

impl TriPoly {
    pub fn monomial(a: u32, b: u32, c: u32, coeff: f64) -> Self {
        let mut t = TriPoly::default();
        t.add_term((a, b, c), coeff);
        t
    }

    fn add_term(&mut self, e: (u32, u32, u32), c: f64) {
        let v = self.terms.entry(e).or_insert(0.0);
        *v += c;
        if *v == 0.0 {
            self.terms.remove(&e);
        }
    }

    pub fn add(&self, o: &TriPoly) -> TriPoly {
        let mut out = self.clone();
        for (&e, &c) in &o.terms {
            out.add_term(e, c);
        }
        out
    }

    pub fn scale(&self, s: f64) -> TriPoly {
        TriPoly { terms: self.terms.iter().map(|(&e, &c)| (e, c * s)).filter(|t| t.1 != 0.0).collect() }
    }

    pub fn mul(&self, o: &TriPoly) -> TriPoly {
        let mut out = TriPoly::default();
        for (&(a, b, c), &u) in &self.terms {
            for (&(d, e, f), &v) in &o.terms {
                out.add_term((a + d, b + e, c + f), u * v);
            }
        }
        out
    }

    pub fn pow(&self, k: u32) -> TriPoly {
        let mut out = TriPoly::monomial(0, 0, 0, 1.0);
        for _ in 0..k {
            out = out.mul(self);
        }
        out
    }

    pub fn eval(&self, x: Complex64, j: Complex64, h: Complex64) -> Complex64 {
        self.terms.iter().map(|(&(a, b, c), &k)| x.powu(a) * j.powu(b) * h.powu(c) * k).sum()
    }

    /// Univariate polynomial in `x` at fixed `(h, j)`.
    pub fn to_poly(&self, h: Complex64, j: Complex64) -> Poly {
        let deg = self.terms.keys().map(|e| e.0).max().unwrap_or(0) as usize;
        let mut c = vec![Complex64::new(0.0, 0.0); deg + 1];
        for (&(a, b, e), &k) in &self.terms {
            c[a as usize] += j.powu(b) * h.powu(e) * k;
        }
        Poly::new(c)
    }

    pub fn weighted_degree(e: (u32, u32, u32), w: (u32, u32, u32)) -> u32 {
        e.0 * w.0 + e.1 * w.1 + e.2 * w.2
    }
}

/// Full expansion of `Q` in `(x, j, h)` in the chart `x = pi1 + j`.
pub fn expand_q(s: &ResonantSystem) -> TriPoly {
    let x = TriPoly::monomial(1, 0, 0, 1.0);
    let jv = TriPoly::monomial(0, 1, 0, 1.0);
    let h = TriPoly::monomial(0, 0, 1, 1.0);
    let xp = x.add(&jv.scale(-2.0));
    let pi1 = x.add(&jv.scale(-1.0));
    let mut rt = TriPoly::default();
    for &(a, b, c) in &s.r.tilde_r.terms {
        rt = rt.add(&pi1.pow(a).mul(&jv.pow(b)).scale(c));
    }
    let r = x.pow(s.r.n_prime).mul(&xp.pow(s.r.m_prime)).mul(&rt);
    let hr = h.add(&r.scale(-1.0));
    x.pow(s.n).mul(&xp.pow(s.m)).add(&hr.mul(&hr).scale(-1.0))
}

/// Weights of `(x, j, h)` under which the principal part is quasi-homogeneous.
pub fn principal_weights(s: &ResonantSystem) -> (u32, u32, u32) {
    (2, 2, s.m + s.n)
}

/// Principal part `Q_N`: the monomials of minimal weighted degree.
pub fn principal_part(s: &ResonantSystem) -> TriPoly {
    let q = expand_q(s);
    let w = principal_weights(s);
    let dmin = q.terms.keys().map(|&e| TriPoly::weighted_degree(e, w)).min().unwrap_or(0);
    TriPoly {
        terms: q
            .terms
            .iter()
            .filter(|(&e, _)| TriPoly::weighted_degree(e, w) == dmin)
            .map(|(&e, &c)| (e, c))
            .collect(),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DiscriminantLocus {
    pub m: u32,
    pub n: u32,
    pub validity: &'static str,
}

impl DiscriminantLocus {
    /// `h^2` on the non-trivial branches.
    pub fn h_squared(&self, j: Complex64) -> Complex64 {
        let (m, n) = (self.m as i32, self.n as i32);
        let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
        let k = sign * 2f64.powi(m + n) * (m as f64).powi(m) * (n as f64).powi(n) / ((m + n) as f64).powi(m + n);
        j.powi(m + n) * k
    }

    /// The three branches `h = 0`, `h = +sqrt(..)`, `h = -sqrt(..)` at `j`.
    pub fn branches(&self, j: Complex64) -> [Complex64; 3] {
        let r = self.h_squared(j).sqrt();
        [Complex64::new(0.0, 0.0), r, -r]
    }

    /// Magnitude of the non-trivial branch value.
    pub fn branch_magnitude(&self, j: Complex64) -> f64 {
        self.h_squared(j).norm().sqrt()
    }
}

pub fn discriminant_locus(s: &ResonantSystem) -> DiscriminantLocus {
    DiscriminantLocus { m: s.m, n: s.n, validity: "asymptotic near origin" }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AsymptoticRoots {
    pub small_roots: Vec<Complex64>,
    /// Numeric roots of the full `Q` not matched to a small root.
    pub large_roots: Vec<Complex64>,
    pub chart: Chart,
}

/// Leading terms of the roots that collapse as `h -> 0`, principal branches.
pub fn small_root_leading_terms(s: &ResonantSystem, h: Complex64, j: Complex64) -> (Vec<Complex64>, Chart) {
    let (m, n) = (s.m as f64, s.n as f64);
    if j.re > 0.0 {
        let base = (h * h).powf(1.0 / m) / (j * 2.0).powf(n / m);
        let v = (0..s.m).map(|k| base * Complex64::from_polar(1.0, 2.0 * PI * k as f64 / m)).collect();
        (v, Chart::AtTwoJ)
    } else {
        let base = (h * h).powf(1.0 / n) / (-j * 2.0).powf(m / n);
        let v = (0..s.n).map(|k| base * Complex64::from_polar(1.0, 2.0 * PI * k as f64 / n)).collect();
        (v, Chart::AtZero)
    }
}

pub const ASYMPTOTIC_GUARD: f64 = 0.1;

pub fn asymptotic_roots(s: &ResonantSystem, h: Complex64, j: Complex64) -> Result<AsymptoticRoots> {
    if j.norm() == 0.0 {
        return Err(Error::InvalidInput("asymptotic roots need j != 0".into()));
    }
    let loc = discriminant_locus(s);
    if h.norm() >= ASYMPTOTIC_GUARD * loc.branch_magnitude(j) {
        return Err(Error::InvalidInput(format!(
            "|h| = {} is outside the asymptotic regime (limit {})",
            h.norm(),
            ASYMPTOTIC_GUARD * loc.branch_magnitude(j)
        )));
    }
    let (small, chart) = small_root_leading_terms(s, h, j);
    if h.norm() == 0.0 {
        return Ok(AsymptoticRoots { small_roots: small, large_roots: Vec::new(), chart });
    }
    let q = build_q(s, h, j, chart)?;
    let all = all_roots_poly(&q.poly)?;
    let (_, large) = split_small(&all, &small);
    Ok(AsymptoticRoots { small_roots: small, large_roots: large, chart })
}

/// Partition numeric roots into those nearest the given small leading terms and the rest.
pub fn split_small(all: &[Complex64], small: &[Complex64]) -> (Vec<Complex64>, Vec<Complex64>) {
    let mut idx: Vec<usize> = (0..all.len()).collect();
    idx.sort_by(|&a, &b| all[a].norm().total_cmp(&all[b].norm()));
    let k = small.len();
    let pool: Vec<Complex64> = idx[..k].iter().map(|&i| all[i]).collect();
    let matched = match nearest_assignment(small, &pool, 1.0) {
        Some(a) => a.iter().map(|&i| pool[i]).collect(),
        None => pool.clone(),
    };
    let large = idx[k..].iter().map(|&i| all[i]).collect();
    (matched, large)
}

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
#[serde(rename_all = "camelCase")]
pub struct RootProductResiduals {
    pub all: f64,
    pub small: f64,
    pub large: f64,
}

fn rel(a: Complex64, b: Complex64) -> f64 {
    let s = a.norm().max(b.norm());
    if s == 0.0 {
        0.0
    } else {
        (a - b).norm() / s
    }
}

/// Relative residuals of the coefficient identities for the products of roots
/// of `Q` in chart `AtZero`, `j < 0`.
///
/// `prod all = (-1)^(N+1) h^2 / c_N` is exact. The small-root product
/// `(-1)^(n-1) h^2 / (-2j)^m` holds to leading order, and the large product is
/// the quotient.
pub fn root_product_check(roots: &[Complex64], s: &ResonantSystem, h: Complex64, j: Complex64) -> Result<RootProductResiduals> {
    let q = build_q(s, h, j, Chart::AtZero)?;
    let nn = q.degree();
    if roots.len() != nn {
        return Err(Error::InvalidInput(format!("expected {} roots, got {}", nn, roots.len())));
    }
    let n = s.n as usize;
    if n > nn {
        return Err(Error::InvalidInput("partition larger than root count".into()));
    }
    let mut sorted = roots.to_vec();
    sorted.sort_by(|a, b| a.norm().total_cmp(&b.norm()));
    let prod = |v: &[Complex64]| v.iter().fold(Complex64::new(1.0, 0.0), |a, &b| a * b);
    let sgn = |k: usize| if k % 2 == 0 { 1.0 } else { -1.0 };
    let q0 = q.poly.coeffs[0];
    let all_pred = q0 * sgn(nn) / q.poly.lead();
    let small_pred = h * h * sgn(n - 1) / (-j * 2.0).powu(s.m);
    let p_small = prod(&sorted[..n]);
    let p_large = prod(&sorted[n..]);
    let large_pred = if small_pred.norm() == 0.0 { p_large } else { all_pred / small_pred };
    Ok(RootProductResiduals {
        all: rel(prod(&sorted), all_pred),
        small: rel(p_small, small_pred),
        large: rel(p_large, large_pred),
    })
}
