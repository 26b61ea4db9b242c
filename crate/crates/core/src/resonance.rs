//! m:-n resonant systems: invariant polynomials, admissibility of the
//! perturbation `R`, and the family polynomial `Q(x; h, j)`.
//!
//! The energy-momentum map is `F = (J, H)` with `H = pi3 + R(pi1, J)` and
//! `R = (pi1 + J)^n' (pi1 - J)^m' Rt(pi1, J)`.

use crate::error::{Error, Result};
use crate::poly::{BiPoly, Poly};
use num_complex::Complex64;
use num_integer::Integer;

/// Position of the origin of the chart variable.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Chart {
    /// `x = pi1 + j`
    AtZero,
    /// `x' = pi1 - j`
    AtTwoJ,
}

impl Chart {
    /// Chart natural for a real momentum value.
    pub fn for_j(j: f64) -> Chart {
        if j > 0.0 {
            Chart::AtTwoJ
        } else {
            Chart::AtZero
        }
    }

    /// Offset `s` with `x_canonical = x_chart + s`.
    pub fn offset(self, j: Complex64) -> Complex64 {
        match self {
            Chart::AtZero => Complex64::new(0.0, 0.0),
            Chart::AtTwoJ => j * 2.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RSpec {
    pub n_prime: u32,
    pub m_prime: u32,
    /// `Rt(pi1, J)` with terms `(power of pi1, power of J, coefficient)`.
    pub tilde_r: BiPoly,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResonantSystem {
    pub m: u32,
    pub n: u32,
    pub r: RSpec,
    /// Set for the 1:-2 form `H = pi3 + 2 eps (q1^2+p1^2)(q2^2+p2^2)`.
    pub legacy_epsilon: Option<f64>,
    /// Admit systems violating the strict exponent inequalities.
    pub small_coefficient: bool,
}

pub const DEFAULT_EPSILON: f64 = 0.05;

impl ResonantSystem {
    pub fn new(m: u32, n: u32, n_prime: u32, m_prime: u32, tilde_r: BiPoly) -> Self {
        ResonantSystem {
            m,
            n,
            r: RSpec { n_prime, m_prime, tilde_r },
            legacy_epsilon: None,
            small_coefficient: false,
        }
    }

    /// The 1:-2 system with `R = eps (pi1^2 - J^2)`.
    pub fn legacy_one_two(eps: f64) -> Self {
        let mut s = ResonantSystem::new(1, 2, 1, 1, BiPoly::constant(eps));
        s.legacy_epsilon = Some(eps);
        s.small_coefficient = true;
        s
    }

    /// 1:-3 with `R = -(pi1 - J)(pi1 + J)^4`.
    pub fn one_three() -> Self {
        ResonantSystem::new(1, 3, 4, 1, BiPoly::constant(-1.0))
    }

    /// 1:-4 with `R = -(pi1 - J)(pi1 + J)^3`.
    pub fn one_four() -> Self {
        ResonantSystem::new(1, 4, 3, 1, BiPoly::constant(-1.0))
    }

    /// 2:-3 with `R = (pi1 + J)(pi1 - J)`; inadmissible, behind the escape flag.
    pub fn two_three_quadratic() -> Self {
        let mut s = ResonantSystem::new(2, 3, 1, 1, BiPoly::constant(1.0));
        s.small_coefficient = true;
        s
    }

    /// 2:-3 with `R = (pi1 + J)^2 (pi1 - J)^2`.
    pub fn two_three() -> Self {
        ResonantSystem::new(2, 3, 2, 2, BiPoly::constant(1.0))
    }

    /// Total degree of `Q` in the chart variable.
    pub fn degree(&self) -> usize {
        let base = (self.m + self.n) as usize;
        if self.r.tilde_r.is_zero() {
            return base;
        }
        let rdeg = (self.r.n_prime + self.r.m_prime + self.r.tilde_r.total_degree()) as usize;
        base.max(2 * rdeg)
    }

    /// `R` restricted to the momentum level `j`, as a polynomial in the chart variable.
    pub fn r_poly(&self, j: Complex64, chart: Chart) -> Poly {
        let x = Poly::new(vec![Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)]);
        let xp = Poly::linear(j * 2.0);
        let rt = self.r.tilde_r.restrict(-j, j);
        let r = &(&x.pow(self.r.n_prime) * &xp.pow(self.r.m_prime)) * &rt;
        match chart {
            Chart::AtZero => r,
            Chart::AtTwoJ => r.shift(j * 2.0),
        }
    }

    /// `R`, `R/x`, `R/x'` and the partials `R_pi1`, `R_J` at canonical `x = pi1 + j`.
    pub fn r_terms(&self, x: Complex64, j: Complex64) -> RTerms {
        let xp = x - j * 2.0;
        let pi1 = x - j;
        let np = self.r.n_prime as i32;
        let mp = self.r.m_prime as i32;
        let rt = self.r.tilde_r.eval(pi1, j);
        let (rtp, rtq) = self.r.tilde_r.partials();
        let rt_p = rtp.eval(pi1, j);
        let rt_q = rtq.eval(pi1, j);
        let pw = |b: Complex64, e: i32| if e <= 0 { Complex64::new(1.0, 0.0) } else { b.powi(e) };
        let r = pw(x, np) * pw(xp, mp) * rt;
        let r_over_x = if np >= 1 { pw(x, np - 1) * pw(xp, mp) * rt } else { r / x };
        let r_over_xp = if mp >= 1 { pw(x, np) * pw(xp, mp - 1) * rt } else { r / xp };
        // d/dpi1 and d/dJ of x^n' x'^m' with x = pi1 + J, x' = pi1 - J
        let dx_fact = if np >= 1 { pw(x, np - 1) * pw(xp, mp) * np as f64 } else { Complex64::new(0.0, 0.0) };
        let dxp_fact = if mp >= 1 { pw(x, np) * pw(xp, mp - 1) * mp as f64 } else { Complex64::new(0.0, 0.0) };
        let base = pw(x, np) * pw(xp, mp);
        let r_pi = (dx_fact + dxp_fact) * rt + base * rt_p;
        let r_j = (dx_fact - dxp_fact) * rt + base * rt_q;
        RTerms { r, r_over_x, r_over_xp, r_pi, r_j }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct RTerms {
    pub r: Complex64,
    pub r_over_x: Complex64,
    pub r_over_xp: Complex64,
    pub r_pi: Complex64,
    pub r_j: Complex64,
}

/// `Q(x; h, j)` in a chosen chart.
#[derive(Clone, Debug, PartialEq)]
pub struct FamilyPolynomial {
    pub poly: Poly,
    pub chart: Chart,
    pub h: Complex64,
    pub j: Complex64,
}

impl FamilyPolynomial {
    pub fn degree(&self) -> usize {
        self.poly.degree()
    }

    pub fn eval(&self, x: Complex64) -> Complex64 {
        self.poly.eval(x)
    }
}

/// `Q = x^n (x - 2j)^m - (h - R(x - j, j))^2`, re-expanded for the chart.
pub fn build_q(s: &ResonantSystem, h: Complex64, j: Complex64, chart: Chart) -> Result<FamilyPolynomial> {
    let x = Poly::new(vec![Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)]);
    let xp = Poly::linear(j * 2.0);
    let base = &x.pow(s.n) * &xp.pow(s.m);
    let hr = &Poly::constant(h) - &s.r_poly(j, Chart::AtZero);
    let q = &base - &(&hr * &hr);
    let poly = match chart {
        Chart::AtZero => q,
        Chart::AtTwoJ => q.shift(j * 2.0),
    };
    if poly.coeffs.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
        return Err(Error::Overflow(format!("Q at h = {h}, j = {j}")));
    }
    Ok(FamilyPolynomial { poly, chart, h, j })
}

/// Complex phase-space point `(q1, p1, q2, p2)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhasePoint {
    pub q1: Complex64,
    pub p1: Complex64,
    pub q2: Complex64,
    pub p2: Complex64,
}

impl PhasePoint {
    pub fn real(q1: f64, p1: f64, q2: f64, p2: f64) -> Self {
        let c = |v| Complex64::new(v, 0.0);
        PhasePoint { q1: c(q1), p1: c(p1), q2: c(q2), p2: c(p2) }
    }

    /// `(xi1, eta1, xi2, eta2)` with `xi = q + ip`, `eta = q - ip`.
    pub fn to_xi_eta(&self) -> [Complex64; 4] {
        let i = Complex64::i();
        [self.q1 + i * self.p1, self.q1 - i * self.p1, self.q2 + i * self.p2, self.q2 - i * self.p2]
    }

    pub fn from_xi_eta(v: [Complex64; 4]) -> Self {
        let i2 = Complex64::new(0.0, 2.0);
        PhasePoint {
            q1: (v[0] + v[1]) / 2.0,
            p1: (v[0] - v[1]) / i2,
            q2: (v[2] + v[3]) / 2.0,
            p2: (v[2] - v[3]) / i2,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InvariantTuple {
    pub j: Complex64,
    pub pi1: Complex64,
    pub pi2: Complex64,
    pub pi3: Complex64,
}

impl InvariantTuple {
    /// `|pi2^2 + pi3^2 - (pi1 + J)^n (pi1 - J)^m|` relative to the larger side.
    pub fn syzygy_residual(&self, m: u32, n: u32) -> f64 {
        let lhs = self.pi2 * self.pi2 + self.pi3 * self.pi3;
        let rhs = (self.pi1 + self.j).powu(n) * (self.pi1 - self.j).powu(m);
        (lhs - rhs).norm() / lhs.norm().max(rhs.norm()).max(1e-300)
    }

    pub fn max_diff(&self, o: &InvariantTuple) -> f64 {
        [(self.j - o.j), (self.pi1 - o.pi1), (self.pi2 - o.pi2), (self.pi3 - o.pi3)]
            .iter()
            .map(|d| d.norm())
            .fold(0.0, f64::max)
    }
}

/// `J, pi1, pi2, pi3`; real and imaginary parts are taken holomorphically so
/// complex points are allowed.
pub fn invariant_polys(p: &PhasePoint, m: u32, n: u32) -> InvariantTuple {
    let rho1 = p.q1 * p.q1 + p.p1 * p.p1;
    let rho2 = p.q2 * p.q2 + p.p2 * p.p2;
    let [xi1, eta1, xi2, eta2] = p.to_xi_eta();
    let k = ((n as f64).powi(m as i32) * (m as f64).powi(n as i32)).sqrt();
    let a = xi1.powu(n) * xi2.powu(m);
    let b = eta1.powu(n) * eta2.powu(m);
    InvariantTuple {
        j: (rho1 * m as f64 - rho2 * n as f64) / 2.0,
        pi1: (rho1 * m as f64 + rho2 * n as f64) / 2.0,
        pi2: (a + b) * (k / 2.0),
        pi3: (a - b) * k / Complex64::new(0.0, 2.0),
    }
}

/// `(lambda^m xi1, lambda^-m eta1, lambda^-n xi2, lambda^n eta2)`.
pub fn cstar_action(lambda: Complex64, v: [Complex64; 4], m: u32, n: u32) -> Result<[Complex64; 4]> {
    if lambda.norm() == 0.0 {
        return Err(Error::InvalidInput("lambda must be nonzero".into()));
    }
    let (mi, ni) = (m as i32, n as i32);
    Ok([v[0] * lambda.powi(mi), v[1] * lambda.powi(-mi), v[2] * lambda.powi(-ni), v[3] * lambda.powi(ni)])
}

#[derive(Clone, Debug, PartialEq, Default, serde::Serialize)]
pub struct ValidationReport {
    pub violations: Vec<String>,
    /// Inequality violations waived by the small-coefficient flag.
    pub escape_hatch_used: bool,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn admitted(&self) -> bool {
        self.violations.is_empty() || self.escape_hatch_used
    }
}

/// Exponent inequalities of the admissible `R` form.
pub fn validate_system(s: &ResonantSystem) -> ValidationReport {
    let mut v = Vec::new();
    let mut structural = false;
    if s.m == 0 || s.n == 0 {
        v.push("m and n must be positive".to_string());
        structural = true;
    } else if s.m.gcd(&s.n) != 1 {
        v.push(format!("gcd(m, n) = {} != 1", s.m.gcd(&s.n)));
        structural = true;
    }
    let (np, mp) = (s.r.n_prime as f64, s.r.m_prime as f64);
    let (n, m) = (s.n as f64, s.m as f64);
    if np <= n / 2.0 {
        v.push("nPrime <= n/2".to_string());
    }
    if s.m >= 2 {
        if mp <= m / 2.0 {
            v.push("mPrime <= m/2".to_string());
        }
    } else if np + mp <= (n + 1.0) / 2.0 {
        v.push("nPrime + mPrime <= (n+1)/2".to_string());
    }
    if let Some(eps) = s.legacy_epsilon {
        if !(eps.is_finite() && eps != 0.0) {
            v.push("legacy epsilon must be finite and nonzero".to_string());
            structural = true;
        }
        if !(s.m == 1 && s.n == 2 && s.r.n_prime == 1 && s.r.m_prime == 1) {
            v.push("legacy epsilon given for a system that is not the 1:-2 form".to_string());
            structural = true;
        }
    }
    let escape = s.small_coefficient && !v.is_empty() && !structural;
    ValidationReport { violations: v, escape_hatch_used: escape }
}

/// Gate used by every numerical entry point.
pub fn require_admitted(s: &ResonantSystem) -> Result<()> {
    let r = validate_system(s);
    if r.admitted() {
        Ok(())
    } else {
        Err(Error::Inadmissible(r.violations.join("; ")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn invariants_of_unit_q1() {
        let t = invariant_polys(&PhasePoint::real(1.0, 0.0, 0.0, 0.0), 1, 2);
        assert_eq!(t.j, c(0.5));
        assert_eq!(t.pi1, c(0.5));
        assert!(t.pi2.norm() < 1e-15 && t.pi3.norm() < 1e-15);
    }

    #[test]
    fn origin_maps_to_zero() {
        let t = invariant_polys(&PhasePoint::real(0.0, 0.0, 0.0, 0.0), 3, 5);
        assert_eq!(t.max_diff(&InvariantTuple { j: c(0.0), pi1: c(0.0), pi2: c(0.0), pi3: c(0.0) }), 0.0);
    }

    #[test]
    fn legacy_q_matches_closed_form() {
        let eps = 0.05;
        let s = ResonantSystem::legacy_one_two(eps);
        let (h, j) = (c(0.013), c(-0.21));
        let q = build_q(&s, h, j, Chart::AtZero).unwrap();
        for pi1 in [0.3, 1.0, 7.5] {
            let p = c(pi1);
            let direct = (p - j) * (p + j) * (p + j) - (h - (p * p - j * j) * eps).powu(2);
            assert!((q.eval(p + j) - direct).norm() < 1e-12 * direct.norm().max(1.0));
        }
    }

    #[test]
    fn one_three_degree_is_ten() {
        let q = build_q(&ResonantSystem::one_three(), c(0.1), c(-0.5), Chart::AtZero).unwrap();
        assert_eq!(q.degree(), 10);
        assert_eq!(ResonantSystem::one_three().degree(), 10);
    }

    #[test]
    fn validation_examples() {
        assert!(validate_system(&ResonantSystem::one_three()).is_empty());
        let r = validate_system(&ResonantSystem::new(2, 3, 1, 1, BiPoly::constant(1.0)));
        assert!(r.violations.iter().any(|v| v == "nPrime <= n/2"));
        assert!(!r.admitted());
        let r = validate_system(&ResonantSystem::two_three_quadratic());
        assert!(!r.is_empty() && r.admitted());
        assert!(validate_system(&ResonantSystem::legacy_one_two(0.05)).admitted());
        assert!(!validate_system(&ResonantSystem::new(2, 4, 3, 3, BiPoly::constant(1.0))).admitted());
    }

    #[test]
    fn r_terms_consistent_with_polynomial() {
        let s = ResonantSystem::one_three();
        let j = Complex64::new(-0.4, 0.05);
        let rp = s.r_poly(j, Chart::AtZero);
        let x = Complex64::new(0.3, -0.1);
        let t = s.r_terms(x, j);
        assert!((t.r - rp.eval(x)).norm() < 1e-14);
        assert!((t.r_over_x * x - t.r).norm() < 1e-14);
        // R = -(x - 2j) x^4 = -(pi1 - J)(pi1 + J)^4
        let pi1 = x - j;
        let r_pi = -((pi1 + j).powu(4) + (pi1 - j) * (pi1 + j).powu(3) * 4.0);
        let r_j = -(-(pi1 + j).powu(4) + (pi1 - j) * (pi1 + j).powu(3) * 4.0);
        assert!((t.r_pi - r_pi).norm() < 1e-13);
        assert!((t.r_j - r_j).norm() < 1e-13);
    }
}
