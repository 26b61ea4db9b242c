//! Globally adaptive Gauss-Kronrod (7/15) quadrature of complex-valued
//! integrands on a real interval.

use crate::error::{Error, Result};
use num_complex::Complex64;

pub(crate) const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
pub(crate) const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
pub(crate) const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

pub const DEFAULT_ABS_TOL: f64 = 1e-13;
pub const DEFAULT_REL_TOL: f64 = 1e-12;
pub const DEFAULT_MAX_INTERVALS: usize = 4000;

#[derive(Clone, Copy, Debug)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions { abs_tol: DEFAULT_ABS_TOL, rel_tol: DEFAULT_REL_TOL, max_intervals: DEFAULT_MAX_INTERVALS }
    }
}

impl QuadOptions {
    pub fn scaled(self, factor: f64) -> Self {
        QuadOptions { abs_tol: self.abs_tol * factor, rel_tol: self.rel_tol * factor, ..self }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadResult {
    pub value: Complex64,
    pub error: f64,
    pub intervals: usize,
}

fn gk15<F: Fn(f64) -> Complex64>(f: &F, a: f64, b: f64) -> (Complex64, f64) {
    let c = 0.5 * (a + b);
    let hl = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for i in 0..7 {
        let dx = hl * XGK[i];
        let s = f(c - dx) + f(c + dx);
        kron += s * WGK[i];
        if i % 2 == 1 {
            gauss += s * WG[i / 2];
        }
    }
    (kron * hl, ((kron - gauss) * hl).norm())
}

/// Integrate `f` over `[a, b]`.
pub fn integrate<F: Fn(f64) -> Complex64>(f: F, a: f64, b: f64, opts: &QuadOptions) -> Result<QuadResult> {
    if a == b {
        return Ok(QuadResult { value: Complex64::new(0.0, 0.0), error: 0.0, intervals: 0 });
    }
    let mut ivs: Vec<(f64, f64, Complex64, f64)> = Vec::new();
    let (v, e) = gk15(&f, a, b);
    ivs.push((a, b, v, e));
    loop {
        let total: Complex64 = ivs.iter().map(|t| t.2).sum();
        let err: f64 = ivs.iter().map(|t| t.3).sum();
        if !total.is_finite() || !err.is_finite() {
            return Err(Error::QuadratureNonconvergence(f64::INFINITY));
        }
        let tol = opts.abs_tol.max(opts.rel_tol * total.norm());
        if err <= tol {
            return Ok(QuadResult { value: total, error: err, intervals: ivs.len() });
        }
        if ivs.len() >= opts.max_intervals {
            return Err(Error::QuadratureNonconvergence(err));
        }
        let (k, _) = ivs
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .unwrap();
        let (lo, hi, _, _) = ivs.swap_remove(k);
        let mid = 0.5 * (lo + hi);
        if mid <= lo.min(hi) || mid >= lo.max(hi) {
            return Err(Error::QuadratureNonconvergence(err));
        }
        let (v1, e1) = gk15(&f, lo, mid);
        let (v2, e2) = gk15(&f, mid, hi);
        ivs.push((lo, mid, v1, e1));
        ivs.push((mid, hi, v2, e2));
    }
}

/// Integrate a real function.
pub fn integrate_real<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, opts: &QuadOptions) -> Result<f64> {
    Ok(integrate(|x| Complex64::new(f(x), 0.0), a, b, opts)?.value.re)
}

/// Fixed composite rule with `panels` equal Kronrod panels; used as a
/// node-doubling certificate.
pub fn composite_kronrod<F: Fn(f64) -> Complex64>(f: F, a: f64, b: f64, panels: usize) -> Complex64 {
    let w = (b - a) / panels as f64;
    (0..panels).map(|k| gk15(&f, a + w * k as f64, a + w * (k + 1) as f64).0).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn polynomial_exact() {
        let r = integrate(|x| Complex64::new(x.powi(6), x), 0.0, 2.0, &QuadOptions::default()).unwrap();
        assert!((r.value - Complex64::new(128.0 / 7.0, 2.0)).norm() < 1e-13);
    }

    #[test]
    fn endpoint_singularity_adapts() {
        let r = integrate_real(|x| 1.0 / x.sqrt(), 0.0, 1.0, &QuadOptions { abs_tol: 1e-10, rel_tol: 1e-10, ..Default::default() })
            .unwrap();
        assert!((r - 2.0).abs() < 1e-8);
    }

    #[test]
    fn oscillatory() {
        let r = integrate(|t| Complex64::from_polar(1.0, 10.0 * t), 0.0, PI, &QuadOptions::default()).unwrap();
        assert!(r.value.norm() < 1e-12);
    }

    #[test]
    fn reversed_interval() {
        let o = QuadOptions::default();
        let a = integrate_real(|x| x.exp(), 0.0, 1.0, &o).unwrap();
        let b = integrate_real(|x| x.exp(), 1.0, 0.0, &o).unwrap();
        assert!((a + b).abs() < 1e-14);
    }
}
