//! Fractional monodromy matrices from the jumps of the rotation angle across
//! the critical line `h = 0`.
//!
//! A jump is always measured as `lim_{h->0+} - lim_{h->0-}` at fixed `j0`.
//! The loop runs counterclockwise around the origin of the `(j, h)` plane,
//! so it crosses the line from `h > 0` to `h < 0` at `j < 0` and from
//! `h < 0` to `h > 0` at `j > 0`.

use crate::error::{Error, Result};
use crate::extrapolate::{extrapolate, geometric_grid, Extrapolation};
use crate::integrals::{oval_integral, real_curve, CycleChain, IntegrandForm};
use crate::quad::QuadOptions;
use crate::ratmat::{format_rational, snap, to_f64, RatMatrix};
use crate::resonance::{require_admitted, Chart, ResonantSystem};
use crate::roots::ParameterPath;
use crate::transport::{transport_cycle, LocalBasis, TransportOptions};
use num_complex::Complex64;
use num_integer::Integer;
use num_rational::Rational64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize, Serializer};
use std::f64::consts::PI;

/// Solution of `m u - n v = 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct BezoutPair {
    pub m: u32,
    pub n: u32,
    pub u: i64,
    pub v: i64,
    /// Offset from the solution with the least non-negative `u`.
    pub k: i64,
}

impl BezoutPair {
    pub fn uv(&self) -> (i64, i64) {
        (self.u, self.v)
    }
}

pub fn bezout_uv(m: u32, n: u32, k: i64) -> Result<BezoutPair> {
    if m == 0 || n == 0 {
        return Err(Error::InvalidInput("m and n must be positive".into()));
    }
    let (mi, ni) = (m as i64, n as i64);
    let eg = mi.extended_gcd(&ni);
    if eg.gcd != 1 {
        return Err(Error::NotCoprime(eg.gcd as u32));
    }
    let u0 = eg.x.rem_euclid(ni);
    let v0 = (mi * u0 - 1) / ni;
    let (u, v) = (u0 + k * ni, v0 + k * mi);
    debug_assert_eq!(mi * u - ni * v, 1);
    Ok(BezoutPair { m, n, u, v, k })
}

/// Geometric sequence of distances `h0 * ratio^k` to the critical line.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct HGrid {
    pub h0: f64,
    pub ratio: f64,
    pub count: usize,
}

impl Default for HGrid {
    fn default() -> Self {
        HGrid { h0: 1e-2, ratio: 0.5, count: 6 }
    }
}

impl HGrid {
    pub fn values(&self) -> Result<Vec<f64>> {
        if !(self.h0 > 0.0) || !(self.ratio > 0.0 && self.ratio < 1.0) || self.count < 1 {
            return Err(Error::InvalidInput("h grid needs h0 > 0, 0 < ratio < 1 and count >= 1".into()));
        }
        Ok(geometric_grid(self.h0, self.ratio, self.count))
    }
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct NamedExtrapolation {
    pub name: String,
    #[serde(flatten)]
    pub fit: Extrapolation,
}

fn named(name: impl Into<String>, fit: Extrapolation) -> NamedExtrapolation {
    NamedExtrapolation { name: name.into(), fit }
}

/// One-sided limits of `Theta - Theta_0` and `tau` at fixed `j0`.
#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct RealLimits {
    pub j0: f64,
    pub uv: (i64, i64),
    pub theta_plus: Extrapolation,
    pub theta_minus: Extrapolation,
    pub tau_plus: Extrapolation,
    pub tau_minus: Extrapolation,
    /// Extrapolation of `Theta(h) - Theta(-h)`.
    pub theta_jump: Extrapolation,
    pub tau_jump: Extrapolation,
}

fn check_side(j0: f64) -> Result<()> {
    if !j0.is_finite() || j0 == 0.0 {
        return Err(Error::InvalidInput("j0 must be a nonzero real number".into()));
    }
    Ok(())
}

fn check_sequence(hs: &[f64]) -> Result<()> {
    if hs.is_empty() || hs.iter().any(|&h| !(h > 0.0)) || hs.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidInput("h sequence must be positive and strictly decreasing".into()));
    }
    Ok(())
}

fn finite(name: &str, e: Extrapolation) -> Result<Extrapolation> {
    if e.limit.is_finite() {
        Ok(e)
    } else {
        Err(Error::NonConvergentSequence(format!("{name} has no finite limit")))
    }
}

pub fn real_limits(s: &ResonantSystem, j0: f64, hs: &[f64], uv: (i64, i64), quad: &QuadOptions) -> Result<RealLimits> {
    check_side(j0)?;
    check_sequence(hs)?;
    let form = IntegrandForm::Theta { u: uv.0, v: uv.1 };
    let vals = hs
        .par_iter()
        .map(|&h| {
            let mut out = [0.0; 4];
            for (i, sh) in [h, -h].into_iter().enumerate() {
                let c = real_curve(s, sh, j0)?;
                out[i] = oval_integral(&c, form, quad)?.re;
                out[2 + i] = oval_integral(&c, IntegrandForm::Tau, quad)?.re;
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;
    let fit = |f: &dyn Fn(&[f64; 4]) -> f64| extrapolate(&hs.iter().zip(&vals).map(|(&h, v)| (h, f(v))).collect::<Vec<_>>());
    Ok(RealLimits {
        j0,
        uv,
        theta_plus: finite("theta(+h)", fit(&|v| v[0]))?,
        theta_minus: finite("theta(-h)", fit(&|v| v[1]))?,
        tau_plus: finite("tau(+h)", fit(&|v| v[2]))?,
        tau_minus: finite("tau(-h)", fit(&|v| v[3]))?,
        theta_jump: finite("theta jump", fit(&|v| v[0] - v[1]))?,
        tau_jump: finite("tau jump", fit(&|v| v[2] - v[3]))?,
    })
}

/// Jump of the continued rotation angle along one counterclockwise
/// half-turn `h0 -> -h0`, per `h0`.
#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct HalfTurnSample {
    pub h0: f64,
    /// Continued minus direct `Theta` at `-h0`.
    pub delta_theta: Complex64,
    pub delta_tau: Complex64,
    /// Change of the continued `Theta` along the arc itself.
    pub arc_theta: Complex64,
    pub final_chain: String,
    pub chain_discrepancy: f64,
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ComplexJump {
    pub j0: f64,
    pub uv: (i64, i64),
    pub delta_theta: Extrapolation,
    pub delta_theta_imag: Extrapolation,
    pub delta_tau: Extrapolation,
    pub delta_tau_imag: Extrapolation,
    pub arc_theta: Extrapolation,
    pub samples: Vec<HalfTurnSample>,
}

pub fn half_turn_sample(s: &ResonantSystem, j0: f64, h0: f64, uv: (i64, i64), opts: &TransportOptions) -> Result<HalfTurnSample> {
    let form = IntegrandForm::Theta { u: uv.0, v: uv.1 };
    let start = real_curve(s, h0, j0)?;
    let chain = CycleChain::single(LocalBasis::at(&start)?.oval);
    let path = ParameterPath::semicircles(j0, h0, 1);
    let r = transport_cycle(s, &chain, &path, &[form, IntegrandForm::Tau], opts)?;
    let end = real_curve(s, -h0, j0)?;
    let th = &r.continued_integrals[0];
    let ta = &r.continued_integrals[1];
    let direct_th = oval_integral(&end, form, &opts.quad)?;
    let direct_ta = oval_integral(&end, IntegrandForm::Tau, &opts.quad)?;
    Ok(HalfTurnSample {
        h0,
        delta_theta: th.last() / 2.0 - direct_th,
        delta_tau: ta.last() / 2.0 - direct_ta,
        arc_theta: (th.last() - th.values[0]) / 2.0,
        final_chain: r.final_local,
        chain_discrepancy: r.max_discrepancy,
    })
}

pub fn complex_jump(s: &ResonantSystem, j0: f64, hs: &[f64], uv: (i64, i64), opts: &TransportOptions) -> Result<ComplexJump> {
    check_side(j0)?;
    check_sequence(hs)?;
    if opts.track.chart != Chart::for_j(j0) {
        return Err(Error::InvalidInput("tracking chart does not match the sign of j0".into()));
    }
    let samples = hs.par_iter().map(|&h0| half_turn_sample(s, j0, h0, uv, opts)).collect::<Result<Vec<_>>>()?;
    let fit = |f: &dyn Fn(&HalfTurnSample) -> f64| extrapolate(&samples.iter().map(|x| (x.h0, f(x))).collect::<Vec<_>>());
    Ok(ComplexJump {
        j0,
        uv,
        delta_theta: finite("delta theta", fit(&|x| x.delta_theta.re))?,
        delta_theta_imag: finite("delta theta (imaginary part)", fit(&|x| x.delta_theta.im))?,
        delta_tau: finite("delta tau", fit(&|x| x.delta_tau.re))?,
        delta_tau_imag: finite("delta tau (imaginary part)", fit(&|x| x.delta_tau.im))?,
        arc_theta: finite("arc contribution", fit(&|x| x.arc_theta.re))?,
        samples,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum CrossingDirection {
    PlusToMinus,
    MinusToPlus,
}

impl CrossingDirection {
    /// Orientation of the loop at momentum `j0`.
    pub fn of_loop_at(j0: f64) -> Self {
        if j0 < 0.0 {
            CrossingDirection::PlusToMinus
        } else {
            CrossingDirection::MinusToPlus
        }
    }

    fn sign(self) -> f64 {
        match self {
            CrossingDirection::PlusToMinus => 1.0,
            CrossingDirection::MinusToPlus => -1.0,
        }
    }
}

/// Measured jump `lim+ - lim-` of `Theta` at one crossing.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct CrossingJump {
    pub j0: f64,
    pub direction: CrossingDirection,
    pub jump: f64,
    pub residual: f64,
}

fn ser_rational<S: Serializer>(x: &Rational64, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&format_rational(*x))
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Crossing {
    #[serde(flatten)]
    pub measured: CrossingJump,
    /// Lower-left entry of the crossing matrix before snapping.
    pub entry_value: f64,
    #[serde(serialize_with = "ser_rational")]
    pub entry: Rational64,
    pub matrix: RatMatrix,
}

/// Per-crossing matrices `[[1, 0], [-(signed jump)/(2 pi), 1]]`, snapped to
/// multiples of `1/(mn)`, and their product in crossing order.
pub fn assemble_matrix(b: &BezoutPair, jumps: &[CrossingJump]) -> Result<(Vec<Crossing>, RatMatrix)> {
    let mn = (b.m * b.n) as i64;
    let bound = 1 + b.u.abs().max(b.v.abs());
    let mut total = RatMatrix::identity();
    let mut out = Vec::new();
    for cj in jumps {
        let value = -cj.direction.sign() * cj.jump / (2.0 * PI);
        let entry = snap(value, mn, 1e-2, bound)?;
        let matrix = RatMatrix::lower(entry);
        total = total * matrix;
        out.push(Crossing { measured: *cj, entry_value: value, entry, matrix });
    }
    Ok((out, total))
}

/// Integer matrix on the basis `(v1, k v2)`.
pub fn sublattice_matrix(m: &RatMatrix, k: i64) -> Result<[[i64; 2]; 2]> {
    if k < 1 {
        return Err(Error::InvalidInput("sublattice multiplier must be positive".into()));
    }
    m.rescaled(k)
        .to_integers()
        .ok_or_else(|| Error::InvalidInput(format!("k = {k} does not make {m} integral")))
}

/// Least `k` making the lower-left entry integral.
pub fn minimal_multiplier(m: &RatMatrix) -> i64 {
    *m.0[1][0].denom()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Approach {
    Real,
    Complex,
}

/// Inputs of a monodromy computation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct MonodromySettings {
    /// Crossing point with `j < 0`.
    #[serde(default = "default_j_minus")]
    pub j_minus: f64,
    /// Crossing point with `j > 0`; ignored when `m = 1`.
    #[serde(default = "default_j_plus")]
    pub j_plus: f64,
    #[serde(default)]
    pub grid: HGrid,
    #[serde(default)]
    pub bezout_k: i64,
    #[serde(default)]
    pub sublattice_k: Option<i64>,
}

fn default_j_minus() -> f64 {
    -0.3
}

fn default_j_plus() -> f64 {
    0.5
}

impl Default for MonodromySettings {
    fn default() -> Self {
        MonodromySettings { j_minus: default_j_minus(), j_plus: default_j_plus(), grid: HGrid::default(), bezout_k: 0, sublattice_k: None }
    }
}

impl MonodromySettings {
    /// Momenta at which the loop crosses the critical line. For `m = 1` the
    /// `j > 0` side has a single small root and no jump.
    pub fn crossing_points(&self, s: &ResonantSystem) -> Result<Vec<f64>> {
        if !(self.j_minus < 0.0) {
            return Err(Error::InvalidInput("jMinus must be negative".into()));
        }
        let mut v = vec![self.j_minus];
        if s.m > 1 {
            if !(self.j_plus > 0.0) {
                return Err(Error::InvalidInput("jPlus must be positive".into()));
            }
            v.push(self.j_plus);
        }
        Ok(v)
    }
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Sublattice {
    pub k: i64,
    pub matrix: [[i64; 2]; 2],
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct MonodromyReport {
    pub approach: Approach,
    pub m: u32,
    pub n: u32,
    pub bezout: BezoutPair,
    /// Sum over crossings of the jump measured along the loop.
    pub delta_theta_gamma: f64,
    pub delta_theta_gamma_residual: f64,
    pub delta_tau_gamma: f64,
    pub delta_tau_gamma_imag: f64,
    pub matrix: RatMatrix,
    #[serde(serialize_with = "ser_rational")]
    pub determinant: Rational64,
    pub sublattice_matrix: Sublattice,
    pub crossings: Vec<Crossing>,
    pub extrapolation: Vec<NamedExtrapolation>,
    pub real_limits: Vec<RealLimits>,
    pub complex_jumps: Vec<ComplexJump>,
}

fn finish(
    approach: Approach,
    s: &ResonantSystem,
    b: BezoutPair,
    settings: &MonodromySettings,
    jumps: Vec<CrossingJump>,
    tau: (f64, f64),
    extrapolation: Vec<NamedExtrapolation>,
) -> Result<(MonodromyReport, Vec<CrossingJump>)> {
    let (crossings, matrix) = assemble_matrix(&b, &jumps)?;
    let k = settings.sublattice_k.unwrap_or_else(|| minimal_multiplier(&matrix));
    let sub = sublattice_matrix(&matrix, k)?;
    let dt: f64 = jumps.iter().map(|c| c.direction.sign() * c.jump).sum();
    let res: f64 = jumps.iter().map(|c| c.residual).sum();
    let report = MonodromyReport {
        approach,
        m: s.m,
        n: s.n,
        bezout: b,
        delta_theta_gamma: dt,
        delta_theta_gamma_residual: res,
        delta_tau_gamma: tau.0,
        delta_tau_gamma_imag: tau.1,
        determinant: matrix.det(),
        matrix,
        sublattice_matrix: Sublattice { k, matrix: sub },
        crossings,
        extrapolation,
        real_limits: Vec::new(),
        complex_jumps: Vec::new(),
    };
    Ok((report, jumps))
}

/// Monodromy from one-sided limits on the real line.
pub fn monodromy_real(s: &ResonantSystem, settings: &MonodromySettings, quad: &QuadOptions) -> Result<MonodromyReport> {
    require_admitted(s)?;
    let b = bezout_uv(s.m, s.n, settings.bezout_k)?;
    let hs = settings.grid.values()?;
    let mut lims = Vec::new();
    let mut jumps = Vec::new();
    let mut ex = Vec::new();
    let mut dtau = 0.0;
    for j0 in settings.crossing_points(s)? {
        let l = real_limits(s, j0, &hs, b.uv(), quad)?;
        let d = CrossingDirection::of_loop_at(j0);
        jumps.push(CrossingJump { j0, direction: d, jump: l.theta_jump.limit, residual: l.theta_jump.residual });
        dtau += d.sign() * l.tau_jump.limit;
        ex.push(named(format!("theta(+h), j0 = {j0}"), l.theta_plus.clone()));
        ex.push(named(format!("theta(-h), j0 = {j0}"), l.theta_minus.clone()));
        ex.push(named(format!("theta jump, j0 = {j0}"), l.theta_jump.clone()));
        lims.push(l);
    }
    let (mut r, _) = finish(Approach::Real, s, b, settings, jumps, (dtau, 0.0), ex)?;
    r.real_limits = lims;
    Ok(r)
}

/// Monodromy from analytic continuation along half-turns around `h = 0`.
pub fn monodromy_complex(s: &ResonantSystem, settings: &MonodromySettings, quad: &QuadOptions) -> Result<MonodromyReport> {
    require_admitted(s)?;
    let b = bezout_uv(s.m, s.n, settings.bezout_k)?;
    let hs = settings.grid.values()?;
    let mut cjs = Vec::new();
    let mut jumps = Vec::new();
    let mut ex = Vec::new();
    let (mut dtau, mut dtau_im) = (0.0, 0.0);
    for j0 in settings.crossing_points(s)? {
        let mut opts = TransportOptions::new(Chart::for_j(j0));
        opts.quad = *quad;
        let c = complex_jump(s, j0, &hs, b.uv(), &opts)?;
        let d = CrossingDirection::of_loop_at(j0);
        jumps.push(CrossingJump { j0, direction: d, jump: c.delta_theta.limit, residual: c.delta_theta.residual });
        dtau += d.sign() * c.delta_tau.limit;
        dtau_im += d.sign() * c.delta_tau_imag.limit;
        ex.push(named(format!("delta theta, j0 = {j0}"), c.delta_theta.clone()));
        ex.push(named(format!("delta tau, j0 = {j0}"), c.delta_tau.clone()));
        ex.push(named(format!("arc contribution, j0 = {j0}"), c.arc_theta.clone()));
        cjs.push(c);
    }
    let (mut r, _) = finish(Approach::Complex, s, b, settings, jumps, (dtau, dtau_im), ex)?;
    r.complex_jumps = cjs;
    Ok(r)
}

/// Matrix predicted from the Bezout pair: `[[1,0],[-u/n,1]] * [[1,0],[v/m,1]]`.
pub fn predicted_factors(b: &BezoutPair) -> (RatMatrix, RatMatrix) {
    (
        RatMatrix::lower(Rational64::new(-b.u, b.n as i64)),
        RatMatrix::lower(Rational64::new(b.v, b.m as i64)),
    )
}

/// Jump expected at a crossing, `2 pi u / n` for `j < 0` and `2 pi v / m` for `j > 0`.
pub fn predicted_jump(b: &BezoutPair, j0: f64) -> f64 {
    let (f1, f2) = predicted_factors(b);
    let e = if j0 < 0.0 { f1.0[1][0] } else { f2.0[1][0] };
    -CrossingDirection::of_loop_at(j0).sign() * 2.0 * PI * to_f64(e)
}
