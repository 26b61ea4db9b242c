//! Exact 2x2 rational matrices.

use crate::error::{Error, Result};
use num_rational::Rational64;
use num_traits::{One, Zero};
use serde::{Serialize, Serializer};
use std::fmt;
use std::ops::Mul;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct RatMatrix(pub [[Rational64; 2]; 2]);

fn r(p: i64) -> Rational64 {
    Rational64::from_integer(p)
}

impl RatMatrix {
    pub fn identity() -> Self {
        RatMatrix([[r(1), r(0)], [r(0), r(1)]])
    }

    /// `[[1, 0], [a, 1]]`
    pub fn lower(a: Rational64) -> Self {
        RatMatrix([[r(1), r(0)], [a, r(1)]])
    }

    /// `[[1, a], [0, 1]]`
    pub fn upper(a: Rational64) -> Self {
        RatMatrix([[r(1), a], [r(0), r(1)]])
    }

    pub fn from_integers(m: [[i64; 2]; 2]) -> Self {
        RatMatrix([[r(m[0][0]), r(m[0][1])], [r(m[1][0]), r(m[1][1])]])
    }

    pub fn det(&self) -> Rational64 {
        let a = &self.0;
        a[0][0] * a[1][1] - a[0][1] * a[1][0]
    }

    pub fn transpose(&self) -> Self {
        let a = &self.0;
        RatMatrix([[a[0][0], a[1][0]], [a[0][1], a[1][1]]])
    }

    pub fn inverse(&self) -> Result<Self> {
        let d = self.det();
        if d.is_zero() {
            return Err(Error::Degenerate("singular matrix".into()));
        }
        let a = &self.0;
        Ok(RatMatrix([[a[1][1] / d, -a[0][1] / d], [-a[1][0] / d, a[0][0] / d]]))
    }

    pub fn is_unipotent_lower(&self) -> bool {
        let a = &self.0;
        a[0][0].is_one() && a[1][1].is_one() && a[0][1].is_zero()
    }

    pub fn to_integers(&self) -> Option<[[i64; 2]; 2]> {
        let a = &self.0;
        let g = |x: Rational64| x.is_integer().then(|| x.to_integer());
        Some([[g(a[0][0])?, g(a[0][1])?], [g(a[1][0])?, g(a[1][1])?]])
    }

    /// `D M D^-1` with `D = diag(1, k)`: the matrix on the basis `(v1, k v2)`.
    pub fn rescaled(&self, k: i64) -> Self {
        let a = &self.0;
        let k = r(k);
        RatMatrix([[a[0][0], a[0][1] / k], [a[1][0] * k, a[1][1]]])
    }

    pub fn to_strings(&self) -> [[String; 2]; 2] {
        let a = &self.0;
        let s = |x: Rational64| format_rational(x);
        [[s(a[0][0]), s(a[0][1])], [s(a[1][0]), s(a[1][1])]]
    }
}

impl Mul for RatMatrix {
    type Output = RatMatrix;
    fn mul(self, o: RatMatrix) -> RatMatrix {
        let (a, b) = (&self.0, &o.0);
        let e = |i: usize, j: usize| a[i][0] * b[0][j] + a[i][1] * b[1][j];
        RatMatrix([[e(0, 0), e(0, 1)], [e(1, 0), e(1, 1)]])
    }
}

impl fmt::Display for RatMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = self.to_strings();
        write!(f, "[[{}, {}], [{}, {}]]", s[0][0], s[0][1], s[1][0], s[1][1])
    }
}

impl Serialize for RatMatrix {
    fn serialize<S: Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_strings().serialize(ser)
    }
}

/// `p/q` in lowest terms, or `p` for integers.
pub fn format_rational(x: Rational64) -> String {
    if x.is_integer() {
        x.to_integer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

/// Parse `p`, `p/q` or a decimal literal.
pub fn parse_rational(s: &str) -> Result<Rational64> {
    let t = s.trim();
    let bad = || Error::InvalidInput(format!("not a rational number: {s:?}"));
    if let Some((p, q)) = t.split_once('/') {
        let p: i64 = p.trim().parse().map_err(|_| bad())?;
        let q: i64 = q.trim().parse().map_err(|_| bad())?;
        if q == 0 {
            return Err(bad());
        }
        return Ok(Rational64::new(p, q));
    }
    if let Ok(p) = t.parse::<i64>() {
        return Ok(r(p));
    }
    let (neg, body) = match t.strip_prefix('-') {
        Some(b) => (true, b),
        None => (false, t.strip_prefix('+').unwrap_or(t)),
    };
    let (ip, fp) = body.split_once('.').ok_or_else(bad)?;
    if fp.len() > 15 || !fp.chars().all(|c| c.is_ascii_digit()) || !ip.chars().all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let den = 10i64.pow(fp.len() as u32);
    let ip: i64 = if ip.is_empty() { 0 } else { ip.parse().map_err(|_| bad())? };
    let fp: i64 = if fp.is_empty() { 0 } else { fp.parse().map_err(|_| bad())? };
    let v = Rational64::new(ip.checked_mul(den).and_then(|x| x.checked_add(fp)).ok_or_else(bad)?, den);
    Ok(if neg { -v } else { v })
}

/// Nearest `p / denom` with `|p| <= bound * denom` within `tol / denom` of `value`.
pub fn snap(value: f64, denom: i64, tol: f64, bound: i64) -> Result<Rational64> {
    let fail = Error::SnapFailure { value, denominator: denom };
    if !value.is_finite() || denom <= 0 {
        return Err(fail);
    }
    let p = (value * denom as f64).round();
    if p.abs() > (bound * denom) as f64 || (value - p / denom as f64).abs() > tol / denom as f64 {
        return Err(fail);
    }
    Ok(Rational64::new(p as i64, denom))
}

pub fn to_f64(x: Rational64) -> f64 {
    *x.numer() as f64 / *x.denom() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_and_inverse() {
        let a = RatMatrix::lower(Rational64::new(-2, 3));
        let b = RatMatrix::lower(Rational64::new(1, 2));
        assert_eq!((a * b).0[1][0], Rational64::new(-1, 6));
        assert_eq!(a * a.inverse().unwrap(), RatMatrix::identity());
        assert_eq!(a.det(), r(1));
    }

    #[test]
    fn rescaling() {
        let m = RatMatrix::lower(Rational64::new(-1, 2));
        assert_eq!(m.rescaled(2).to_integers(), Some([[1, 0], [-1, 1]]));
        let i = RatMatrix::from_integers([[1, 0], [-1, 1]]);
        assert_eq!(i.rescaled(1), i);
    }

    #[test]
    fn parsing() {
        assert_eq!(parse_rational("-1/6").unwrap(), Rational64::new(-1, 6));
        assert_eq!(parse_rational("0.25").unwrap(), Rational64::new(1, 4));
        assert_eq!(parse_rational("-.5").unwrap(), Rational64::new(-1, 2));
        assert_eq!(parse_rational("3").unwrap(), r(3));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("x").is_err());
        assert_eq!(format_rational(Rational64::new(2, -4)), "-1/2");
    }

    #[test]
    fn snapping() {
        assert_eq!(snap(-0.4999, 2, 1e-2, 1).unwrap(), Rational64::new(-1, 2));
        assert!(snap(0.3, 2, 1e-2, 1).is_err());
        assert!(snap(1.5, 2, 1e-2, 1).is_err());
        assert_eq!(snap(1.5, 2, 1e-2, 2).unwrap(), Rational64::new(3, 2));
    }
}
