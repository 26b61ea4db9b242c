//! Semiclassical (EBK) joint spectrum and lattice cell transport.
//!
//! The second action is the potential of the period 1-form
//! `(T dh - Theta dj) / 2 pi` on each side of the critical line `h = 0`.
//! Both potentials share one reference point and are joined by a vertical
//! path through the critical line at the reference column.

use crate::error::{Error, Result};
use crate::integrals::{oval_integral, real_curve, IntegrandForm};
use crate::monodromy::bezout_uv;
use crate::quad::{integrate, QuadOptions, WG, WGK, XGK};
use crate::ratmat::RatMatrix;
use crate::resonance::{require_admitted, ResonantSystem};
use num_complex::Complex64;
use num_rational::Rational64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::cell::RefCell;
use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::OnceLock;

const OUTER_QUAD: QuadOptions = QuadOptions { abs_tol: 1e-12, rel_tol: 1e-11, max_intervals: 2000 };
/// Stop halving towards the critical line once the completed sum moves less than this.
const STRIP_PANEL_TOL: f64 = 1e-10;
const STRIP_MAX_HALVINGS: usize = 45;
/// Absolute tolerance on `int T dh` over one lattice line.
const LINE_TOL: f64 = 1e-10;
/// Vertical snaps farther than this fraction of a quantum are ambiguous.
const VERTICAL_AMBIGUITY: f64 = 0.45;
const MAX_LOOP_STEPS: usize = 100_000;

fn return_time(s: &ResonantSystem, h: f64, j: f64) -> Result<f64> {
    let c = real_curve(s, h, j)?;
    Ok(oval_integral(&c, IntegrandForm::ReturnTime, &QuadOptions::default())?.re)
}

fn theta_full(s: &ResonantSystem, h: f64, j: f64, (u, v): (i64, i64)) -> Result<f64> {
    let c = real_curve(s, h, j)?;
    Ok(oval_integral(&c, IntegrandForm::ThetaFull { u, v }, &QuadOptions::default())?.re)
}

/// `(T, Theta_full)` from a single curve.
fn periods(s: &ResonantSystem, h: f64, j: f64, (u, v): (i64, i64)) -> Result<(f64, f64)> {
    let c = real_curve(s, h, j)?;
    let o = QuadOptions::default();
    let t = oval_integral(&c, IntegrandForm::ReturnTime, &o)?.re;
    let th = oval_integral(&c, IntegrandForm::ThetaFull { u, v }, &o)?.re;
    Ok((t, th))
}

/// Adaptive quadrature of a fallible real integrand; the first error raised
/// by the integrand wins over the quadrature's own failure.
fn integrate_fallible<F: Fn(f64) -> Result<f64>>(f: F, a: f64, b: f64, opts: &QuadOptions) -> Result<f64> {
    let err = RefCell::new(None);
    let r = integrate(
        |x| match f(x) {
            Ok(v) => Complex64::new(v, 0.0),
            Err(e) => {
                err.borrow_mut().get_or_insert(e);
                Complex64::new(f64::NAN, 0.0)
            }
        },
        a,
        b,
        opts,
    );
    if let Some(e) = err.into_inner() {
        return Err(e);
    }
    Ok(r?.value.re)
}

/// `int_{-w}^{w} T(h, j) dh` across the critical line.
///
/// Each side is split into panels `[w 2^-(k+1), w 2^-k]`; the piece left
/// next to `h = 0` is closed with the model `T ~ A ln|h| + B`. Halving stops
/// once the completed sum changes by less than `1e-10`.
pub fn strip_integral(s: &ResonantSystem, j: f64, w: f64) -> Result<f64> {
    if !(w > 0.0) {
        return Err(Error::InvalidInput("strip half-width must be positive".into()));
    }
    let mut total = 0.0;
    for sign in [1.0, -1.0] {
        let t = |h: f64| return_time(s, sign * h, j);
        let mut hi = w;
        let mut sum = 0.0;
        let mut t_hi = t(hi)?;
        let mut prev: Option<f64> = None;
        let mut estimate = f64::NAN;
        for _ in 0..STRIP_MAX_HALVINGS {
            let lo = 0.5 * hi;
            let (part, t_lo) = match (integrate_fallible(&t, lo, hi, &OUTER_QUAD), t(lo)) {
                (Ok(p), Ok(v)) => (p, v),
                // the curve degenerates numerically very close to h = 0
                (Err(e), _) | (_, Err(e)) if prev.is_none() => return Err(e),
                _ => break,
            };
            sum += part;
            let slope = (t_hi - t_lo) / std::f64::consts::LN_2;
            estimate = sum + lo * (t_lo - slope);
            hi = lo;
            t_hi = t_lo;
            if prev.is_some_and(|p| (estimate - p).abs() < STRIP_PANEL_TOL) {
                break;
            }
            prev = Some(estimate);
        }
        total += estimate;
    }
    Ok(total)
}

/// `int_a^b T(h, j) dh` along a vertical segment, passing through the
/// critical line with [`strip_integral`] when the endpoints have opposite sign.
fn vertical_integral(s: &ResonantSystem, j: f64, a: f64, b: f64, strip: f64) -> Result<f64> {
    if a > b {
        return Ok(-vertical_integral(s, j, b, a, strip)?);
    }
    if a > 0.0 || b < 0.0 {
        return integrate_fallible(|h| return_time(s, h, j), a, b, &OUTER_QUAD);
    }
    let w = strip.min(-a).min(b);
    if !(w > 0.0) {
        return Err(Error::Degenerate("vertical path ends on the critical line".into()));
    }
    let lower = integrate_fallible(|h| return_time(s, h, j), a, -w, &OUTER_QUAD)?;
    let upper = integrate_fallible(|h| return_time(s, h, j), w, b, &OUTER_QUAD)?;
    Ok(lower + strip_integral(s, j, w)? + upper)
}

fn horizontal_integral(s: &ResonantSystem, h: f64, j0: f64, j1: f64, uv: (i64, i64)) -> Result<f64> {
    integrate_fallible(|j| theta_full(s, h, j, uv), j0, j1, &OUTER_QUAD)
}

/// Reference point of the action with its mirror level below the critical line.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ActionReference {
    /// Height of the reference point, `h > 0`; `I2` vanishes there.
    pub h: f64,
    pub j: f64,
    /// Level `h < 0` where paths to the lower half-plane turn horizontal.
    pub h_lower: f64,
}

impl ActionReference {
    fn check(&self) -> Result<()> {
        if !(self.h > 0.0 && self.h_lower < 0.0) || self.j == 0.0 || !self.j.is_finite() {
            return Err(Error::InvalidInput(
                "action reference needs h > 0, hLower < 0 and j != 0".into(),
            ));
        }
        Ok(())
    }
}

/// Second action `I2(h, j)` with `I2(ref) = 0`.
///
/// For `h > 0` the path runs horizontally at `ref.h` to `j`, then
/// vertically. For `h < 0` it first descends at `ref.j` to `ref.hLower`,
/// crossing the critical line, then runs horizontally and vertically.
/// `strip` is the half-width used for the crossing.
pub fn action_i2(s: &ResonantSystem, h: f64, j: f64, r: &ActionReference, uv: (i64, i64), strip: f64) -> Result<f64> {
    r.check()?;
    if h == 0.0 {
        return Err(Error::Degenerate("h = 0 lies on the critical line".into()));
    }
    let total = if h > 0.0 {
        -horizontal_integral(s, r.h, r.j, j, uv)? + vertical_integral(s, j, r.h, h, strip)?
    } else {
        vertical_integral(s, r.j, r.h, r.h_lower, strip)? - horizontal_integral(s, r.h_lower, r.j, j, uv)?
            + vertical_integral(s, j, r.h_lower, h, strip)?
    };
    Ok(total / (2.0 * PI))
}

/// `oint (T dh - Theta_full dj)` around a closed polygon of `(h, j)` vertices.
pub fn action_form_loop(s: &ResonantSystem, vertices: &[(f64, f64)], uv: (i64, i64)) -> Result<f64> {
    if vertices.len() < 3 {
        return Err(Error::InvalidInput("a loop needs at least three vertices".into()));
    }
    let mut total = 0.0;
    for k in 0..vertices.len() {
        let (h0, j0) = vertices[k];
        let (h1, j1) = vertices[(k + 1) % vertices.len()];
        total += integrate_fallible(
            |t| {
                let (t_val, th) = periods(s, h0 + t * (h1 - h0), j0 + t * (j1 - j0), uv)?;
                Ok(t_val * (h1 - h0) - th * (j1 - j0))
            },
            0.0,
            1.0,
            &OUTER_QUAD,
        )?;
    }
    Ok(total)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct Region {
    pub j_min: f64,
    pub j_max: f64,
    /// Lower edge, below the critical line.
    pub h_min: f64,
    pub h_max: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct LatticeConfig {
    pub hbar: f64,
    pub region: Region,
    /// Half-width `hMin` of the excluded strip around `h = 0`.
    pub h_strip: f64,
    /// Maslov indices `(alpha1, alpha2)`.
    #[serde(default)]
    pub maslov: (i64, i64),
    /// Defaults to `(hMax/2, jMin/2)` with mirror level `hMin_region/2`.
    #[serde(default)]
    pub reference: Option<ActionReference>,
    /// Bezout offset selecting `(u, v)` in `Theta`.
    #[serde(default)]
    pub bezout_k: i64,
}

impl LatticeConfig {
    pub fn new(hbar: f64, region: Region, h_strip: f64) -> Self {
        LatticeConfig { hbar, region, h_strip, maslov: (0, 0), reference: None, bezout_k: 0 }
    }

    pub fn reference(&self) -> ActionReference {
        self.reference.unwrap_or_else(|| {
            let r = &self.region;
            let j = if r.j_min < 0.0 && r.j_max > 0.0 { 0.5 * r.j_min } else { 0.5 * (r.j_min + r.j_max) };
            ActionReference { h: 0.5 * r.h_max, j, h_lower: 0.5 * r.h_min }
        })
    }

    pub fn validate(&self) -> Result<()> {
        let r = &self.region;
        let bad = |m: &str| Err(Error::InvalidInput(m.into()));
        if !(self.hbar > 0.0 && self.hbar.is_finite()) {
            return bad("hbar must be positive");
        }
        if !(self.h_strip > 0.0) {
            return bad("hStrip must be positive");
        }
        if !(r.j_min < r.j_max) {
            return bad("region needs jMin < jMax");
        }
        if !(r.h_min < -self.h_strip && r.h_max > self.h_strip) {
            return bad("region must extend beyond the strip on both sides of h = 0");
        }
        let a = self.reference();
        a.check()?;
        if !(a.h > self.h_strip && a.h <= r.h_max && a.h_lower < -self.h_strip && a.h_lower >= r.h_min) {
            return bad("action reference heights must lie inside the region, outside the strip");
        }
        if !(a.j >= r.j_min && a.j <= r.j_max) {
            return bad("action reference column must lie inside the region");
        }
        Ok(())
    }

    fn line_numbers(&self) -> std::ops::RangeInclusive<i64> {
        let off = self.maslov.0 as f64 / 4.0;
        let lo = (self.region.j_min / self.hbar - off).ceil() as i64;
        let hi = (self.region.j_max / self.hbar - off).floor() as i64;
        lo..=hi
    }

    pub fn line_j(&self, n1: i64) -> f64 {
        self.hbar * (n1 as f64 + self.maslov.0 as f64 / 4.0)
    }

    pub fn level(&self, n2: i64) -> f64 {
        self.hbar * (n2 as f64 + self.maslov.1 as f64 / 4.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Side {
    Upper,
    Lower,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct LatticePoint {
    pub h: f64,
    pub j: f64,
    pub n1: i64,
    pub n2: i64,
    pub side: Side,
}

/// Points of one line `J = hbar (n1 + alpha1/4)`, sorted by increasing `h`.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct LatticeLine {
    pub n1: i64,
    pub j: f64,
    pub upper: Vec<usize>,
    pub lower: Vec<usize>,
    /// `I2` at `h = +hStrip`.
    pub strip_upper_action: f64,
    /// `I2` at `h = -hStrip`.
    pub strip_lower_action: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SpectrumLattice {
    pub config: LatticeConfig,
    pub uv: (i64, i64),
    pub points: Vec<LatticePoint>,
    /// Unit cells `[(n1, n2), (n1+1, n2), (n1+1, n2+1), (n1, n2+1)]` on one side.
    pub cells: Vec<[usize; 4]>,
    pub lines: Vec<LatticeLine>,
}

impl SpectrumLattice {
    pub fn line(&self, n1: i64) -> Option<&LatticeLine> {
        let first = self.lines.first()?.n1;
        self.lines.get(usize::try_from(n1 - first).ok()?)
    }

    pub fn find(&self, n1: i64, n2: i64, side: Side) -> Option<usize> {
        let line = self.line(n1)?;
        let list = match side {
            Side::Upper => &line.upper,
            Side::Lower => &line.lower,
        };
        let first = self.points[*list.first()?].n2;
        let i = *list.get(usize::try_from(n2 - first).ok()?)?;
        (self.points[i].n2 == n2).then_some(i)
    }

    /// Lattice rows as `h,j,n1,n2` CSV records.
    pub fn csv_rows(&self) -> impl Iterator<Item = [String; 4]> + '_ {
        self.points
            .iter()
            .map(|p| [format!("{:.17e}", p.h), format!("{:.17e}", p.j), p.n1.to_string(), p.n2.to_string()])
    }
}

/// Kronrod nodes on `[-1, 1]` in increasing order with their weights.
struct Rule {
    nodes: [f64; 15],
    weights: [f64; 15],
    gauss: [f64; 15],
    bary: [f64; 15],
}

fn rule() -> &'static Rule {
    static RULE: OnceLock<Rule> = OnceLock::new();
    RULE.get_or_init(|| {
        let mut nodes = [0.0; 15];
        let mut weights = [0.0; 15];
        let mut gauss = [0.0; 15];
        for i in 0..7 {
            nodes[i] = -XGK[i];
            nodes[14 - i] = XGK[i];
            weights[i] = WGK[i];
            weights[14 - i] = WGK[i];
            if i % 2 == 1 {
                gauss[i] = WG[i / 2];
                gauss[14 - i] = WG[i / 2];
            }
        }
        weights[7] = WGK[7];
        gauss[7] = WG[3];
        let mut bary = [0.0; 15];
        for i in 0..15 {
            bary[i] = 1.0 / (0..15).filter(|&k| k != i).map(|k| nodes[i] - nodes[k]).product::<f64>();
        }
        Rule { nodes, weights, gauss, bary }
    })
}

/// One quadrature panel of `T` with the samples kept for interpolation.
#[derive(Clone, Debug)]
struct Panel {
    a: f64,
    b: f64,
    t: [f64; 15],
    integral: f64,
}

impl Panel {
    fn sample(f: &impl Fn(f64) -> Result<f64>, a: f64, b: f64) -> Result<(Panel, f64)> {
        let r = rule();
        let (c, hl) = (0.5 * (a + b), 0.5 * (b - a));
        let mut t = [0.0; 15];
        for i in 0..15 {
            t[i] = f(c + hl * r.nodes[i])?;
        }
        let kron: f64 = (0..15).map(|i| r.weights[i] * t[i]).sum::<f64>() * hl;
        let gauss: f64 = (0..15).map(|i| r.gauss[i] * t[i]).sum::<f64>() * hl;
        Ok((Panel { a, b, t, integral: kron }, (kron - gauss).abs()))
    }

    fn x(&self, h: f64) -> f64 {
        (2.0 * h - self.a - self.b) / (self.b - self.a)
    }

    /// Degree-14 interpolant of `T` in the local variable `x`.
    fn interp(&self, x: f64) -> f64 {
        let r = rule();
        let (mut num, mut den) = (0.0, 0.0);
        for i in 0..15 {
            let d = x - r.nodes[i];
            if d == 0.0 {
                return self.t[i];
            }
            let w = r.bary[i] / d;
            num += w * self.t[i];
            den += w;
        }
        num / den
    }

    /// `int_a^h T` from the interpolant.
    fn partial(&self, x: f64) -> f64 {
        let r = rule();
        let (mid, half) = (0.5 * (x - 1.0), 0.5 * (x + 1.0));
        let s: f64 = (0..15).map(|i| r.weights[i] * self.interp(mid + half * r.nodes[i])).sum();
        s * half * 0.5 * (self.b - self.a)
    }
}

/// Piecewise model of `G(h) = int_lo^h T(h', j) dh'` on one side of a line.
struct LineModel {
    panels: Vec<Panel>,
    cum: Vec<f64>,
}

impl LineModel {
    fn build(f: impl Fn(f64) -> Result<f64>, lo: f64, hi: f64) -> Result<LineModel> {
        let len = hi - lo;
        let mut stack = vec![(lo, hi, 0usize)];
        let mut done = Vec::new();
        while let Some((a, b, depth)) = stack.pop() {
            let (p, err) = Panel::sample(&f, a, b)?;
            if err <= LINE_TOL * (b - a) / len || depth >= 40 {
                done.push(p);
            } else {
                let m = 0.5 * (a + b);
                stack.push((m, b, depth + 1));
                stack.push((a, m, depth + 1));
            }
        }
        done.sort_by(|x, y| x.a.total_cmp(&y.a));
        let mut cum = Vec::with_capacity(done.len() + 1);
        let mut acc = 0.0;
        cum.push(acc);
        for p in &done {
            acc += p.integral;
            cum.push(acc);
        }
        Ok(LineModel { panels: done, cum })
    }

    fn locate(&self, h: f64) -> usize {
        self.panels.partition_point(|p| p.b < h).min(self.panels.len() - 1)
    }

    fn value(&self, h: f64) -> f64 {
        let k = self.locate(h);
        let p = &self.panels[k];
        self.cum[k] + p.partial(p.x(h))
    }

    fn total(&self) -> f64 {
        *self.cum.last().unwrap()
    }

    /// `h` with `G(h) = g`, for `g` inside `[0, G(hi)]`.
    fn solve(&self, g: f64) -> f64 {
        let k = self.cum[1..].partition_point(|&c| c < g).min(self.panels.len() - 1);
        let p = &self.panels[k];
        let target = g - self.cum[k];
        let (mut lo, mut hi) = (-1.0, 1.0);
        let mut x = 0.0;
        let scale = 0.5 * (p.b - p.a);
        for _ in 0..100 {
            let fx = p.partial(x) - target;
            if fx > 0.0 {
                hi = x;
            } else {
                lo = x;
            }
            let d = p.interp(x) * scale;
            let mut nx = if d > 0.0 { x - fx / d } else { 0.5 * (lo + hi) };
            if !(nx > lo && nx < hi) {
                nx = 0.5 * (lo + hi);
            }
            if (nx - x).abs() < 1e-15 {
                x = nx;
                break;
            }
            x = nx;
        }
        p.a + (x + 1.0) * scale
    }
}

fn region_error(j: f64, e: Error) -> Error {
    match e {
        Error::Degenerate(m) => Error::InvalidInput(format!("lattice line j = {j} leaves the regular region: {m}")),
        other => other,
    }
}

struct LineSolution {
    n1: i64,
    j: f64,
    upper: Vec<(f64, i64)>,
    lower: Vec<(f64, i64)>,
    strip_upper_action: f64,
    strip_lower_action: f64,
}

fn levels_in(cfg: &LatticeConfig, lo: f64, hi: f64) -> std::ops::RangeInclusive<i64> {
    let off = cfg.maslov.1 as f64 / 4.0;
    ((lo / cfg.hbar - off).ceil() as i64)..=((hi / cfg.hbar - off).floor() as i64)
}

fn solve_line(s: &ResonantSystem, cfg: &LatticeConfig, r: &ActionReference, uv: (i64, i64), lower_offset: f64, n1: i64) -> Result<LineSolution> {
    let j = cfg.line_j(n1);
    let reg = &cfg.region;
    let t = |h: f64| return_time(s, h, j);
    let tp = 2.0 * PI;

    let base_up = -horizontal_integral(s, r.h, r.j, j, uv)? / tp;
    let up = LineModel::build(t, cfg.h_strip, reg.h_max)?;
    let g_ref = up.value(r.h);
    let i_up = |g: f64| base_up + (g - g_ref) / tp;
    let strip_upper_action = i_up(0.0);
    let upper = levels_in(cfg, strip_upper_action, i_up(up.total()))
        .map(|n2| (up.solve(g_ref + tp * (cfg.level(n2) - base_up)), n2))
        .collect();

    let base_low = lower_offset - horizontal_integral(s, r.h_lower, r.j, j, uv)? / tp;
    let low = LineModel::build(t, reg.h_min, -cfg.h_strip)?;
    let g_ref = low.value(r.h_lower);
    let i_low = |g: f64| base_low + (g - g_ref) / tp;
    let strip_lower_action = i_low(low.total());
    let lower = levels_in(cfg, i_low(0.0), strip_lower_action)
        .map(|n2| (low.solve(g_ref + tp * (cfg.level(n2) - base_low)), n2))
        .collect();

    Ok(LineSolution { n1, j, upper, lower, strip_upper_action, strip_lower_action })
}

/// EBK lattice: lines `J = hbar (n1 + alpha1/4)`, and on each line the
/// heights with `I2 = hbar (n2 + alpha2/4)` outside the strip `|h| < hStrip`.
pub fn joint_spectrum(s: &ResonantSystem, cfg: &LatticeConfig) -> Result<SpectrumLattice> {
    require_admitted(s)?;
    cfg.validate()?;
    let uv = bezout_uv(s.m, s.n, cfg.bezout_k)?.uv();
    let r = cfg.reference();
    let numbers: Vec<i64> = cfg.line_numbers().collect();
    if numbers.is_empty() {
        return Err(Error::InvalidInput("no lattice line inside the region".into()));
    }
    let lower_offset = vertical_integral(s, r.j, r.h, r.h_lower, cfg.h_strip)? / (2.0 * PI);
    let solved: Vec<LineSolution> = numbers
        .par_iter()
        .map(|&n1| solve_line(s, cfg, &r, uv, lower_offset, n1).map_err(|e| region_error(cfg.line_j(n1), e)))
        .collect::<Result<_>>()?;

    let mut points = Vec::new();
    let mut lines = Vec::with_capacity(solved.len());
    for l in solved {
        let mut push = |list: &[(f64, i64)], side| {
            list.iter()
                .map(|&(h, n2)| {
                    points.push(LatticePoint { h, j: l.j, n1: l.n1, n2, side });
                    points.len() - 1
                })
                .collect::<Vec<_>>()
        };
        let lower = push(&l.lower, Side::Lower);
        let upper = push(&l.upper, Side::Upper);
        lines.push(LatticeLine {
            n1: l.n1,
            j: l.j,
            upper,
            lower,
            strip_upper_action: l.strip_upper_action,
            strip_lower_action: l.strip_lower_action,
        });
    }
    if points.is_empty() {
        return Err(Error::InvalidInput("the region contains no lattice point".into()));
    }
    let mut lattice = SpectrumLattice { config: cfg.clone(), uv, points, cells: Vec::new(), lines };
    lattice.cells = (0..lattice.points.len())
        .filter_map(|i| {
            let p = lattice.points[i];
            Some([
                i,
                lattice.find(p.n1 + 1, p.n2, p.side)?,
                lattice.find(p.n1 + 1, p.n2 + 1, p.side)?,
                lattice.find(p.n1, p.n2 + 1, p.side)?,
            ])
        })
        .collect();
    Ok(lattice)
}

/// Counterclockwise rectangle in the `(j, h)` plane traversed by the cell:
/// left along `h_top`, down at `j_left`, right along `h_bottom`, up at `j_right`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct CellLoop {
    pub j_left: f64,
    pub j_right: f64,
    pub h_top: f64,
    pub h_bottom: f64,
}

impl CellLoop {
    pub fn encloses_origin(&self) -> bool {
        self.j_left < 0.0 && self.j_right > 0.0 && self.h_bottom < 0.0 && self.h_top > 0.0
    }
}

/// Cell vertices `(j, h)`; `h` is `None` while a vertex is inside the strip.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct CellFrame {
    pub vertices: [(f64, Option<f64>); 4],
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct CellTransport {
    pub cell_multiplier: i64,
    /// Rows are the images of `w1 / k` and `w2` in label coordinates `(n1, n2)`.
    pub matrix: RatMatrix,
    pub w1_final: [i64; 2],
    pub w2_final: [i64; 2],
    /// Columns `j` where the cell crossed the strip.
    pub crossings: Vec<f64>,
    pub path: CellLoop,
    pub frames: Vec<CellFrame>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Spot {
    Point(usize),
    /// Inside the strip; the value is the continuous vertical action in the
    /// chart of the side the vertex came from, shifted to the upper chart.
    Strip(f64),
}

#[derive(Clone, Copy, Debug)]
struct Vertex {
    n1: i64,
    spot: Spot,
}

enum StepError {
    Ambiguous(String),
    Fatal(Error),
}

impl From<Error> for StepError {
    fn from(e: Error) -> Self {
        StepError::Fatal(e)
    }
}

type Step<T> = std::result::Result<T, StepError>;

struct Transporter<'a> {
    s: &'a ResonantSystem,
    lat: &'a SpectrumLattice,
    strip_action: RefCell<HashMap<i64, f64>>,
    crossings: Vec<f64>,
    frames: Vec<CellFrame>,
}

impl<'a> Transporter<'a> {
    fn gap(msg: String) -> StepError {
        StepError::Fatal(Error::LatticeGap(msg))
    }

    fn line(&self, n1: i64) -> Step<&'a LatticeLine> {
        self.lat.line(n1).ok_or_else(|| Self::gap(format!("no lattice line n1 = {n1}")))
    }

    /// `(1/2pi) int T dh` across the strip at line `n1`.
    fn strip_width(&self, n1: i64) -> Step<f64> {
        if let Some(&w) = self.strip_action.borrow().get(&n1) {
            return Ok(w);
        }
        let cfg = &self.lat.config;
        let w = strip_integral(self.s, cfg.line_j(n1), cfg.h_strip)? / (2.0 * PI);
        self.strip_action.borrow_mut().insert(n1, w);
        Ok(w)
    }

    /// Offset between the lower chart and the vertical continuation of the
    /// upper chart through the strip.
    fn lower_shift(&self, line: &LatticeLine) -> Step<f64> {
        Ok(line.strip_lower_action - (line.strip_upper_action - self.strip_width(line.n1)?))
    }

    fn continuous_action(&self, v: &Vertex) -> Step<f64> {
        match v.spot {
            Spot::Strip(a) => Ok(a),
            Spot::Point(i) => {
                let p = &self.lat.points[i];
                let level = self.lat.config.level(p.n2);
                match p.side {
                    Side::Upper => Ok(level),
                    Side::Lower => Ok(level - self.lower_shift(self.line(p.n1)?)?),
                }
            }
        }
    }

    /// Snap a continuous vertical action to a point of line `n1`, or keep it in the strip.
    fn resolve(&self, n1: i64, a: f64) -> Step<Spot> {
        let line = self.line(n1)?;
        let hbar = self.lat.config.hbar;
        let snap = |list: &[usize], shift: f64, above: bool| -> Step<Option<usize>> {
            let (Some(&first), Some(&last)) = (list.first(), list.last()) else { return Ok(None) };
            let edge = if above { first } else { last };
            let edge_a = self.lat.config.level(self.lat.points[edge].n2) - shift;
            let r = ((a - edge_a) / hbar).round();
            let inside = if above { r >= 0.0 } else { r <= 0.0 };
            if !inside {
                return Ok(None);
            }
            if ((a - edge_a) / hbar - r).abs() > VERTICAL_AMBIGUITY {
                return Err(StepError::Ambiguous(format!("vertical continuation at n1 = {n1} falls between two points")));
            }
            let idx = list.iter().position(|&i| i == edge).unwrap() as i64 + r as i64;
            usize::try_from(idx)
                .ok()
                .and_then(|k| list.get(k).copied())
                .map(Some)
                .ok_or_else(|| Self::gap(format!("line n1 = {n1} ends before the cell")))
        };
        if let Some(i) = snap(&line.upper, 0.0, true)? {
            return Ok(Spot::Point(i));
        }
        let shift = self.lower_shift(line)?;
        if let Some(i) = snap(&line.lower, shift, false)? {
            return Ok(Spot::Point(i));
        }
        Ok(Spot::Strip(a))
    }

    fn vertical(&self, v: &Vertex, dir: i64) -> Step<Vertex> {
        let line = self.line(v.n1)?;
        if let Spot::Point(i) = v.spot {
            let p = &self.lat.points[i];
            let list = match p.side {
                Side::Upper => &line.upper,
                Side::Lower => &line.lower,
            };
            let pos = list.iter().position(|&q| q == i).unwrap() as i64 + dir;
            if let Some(&q) = usize::try_from(pos).ok().and_then(|k| list.get(k)) {
                return Ok(Vertex { n1: v.n1, spot: Spot::Point(q) });
            }
            let leaving_outward = (p.side == Side::Upper && dir > 0) || (p.side == Side::Lower && dir < 0);
            if leaving_outward {
                return Err(Self::gap(format!("cell leaves the region at n1 = {} ({:?} side, h = {:.4})", v.n1, p.side, p.h)));
            }
        }
        let a = self.continuous_action(v)? + dir as f64 * self.lat.config.hbar;
        Ok(Vertex { n1: v.n1, spot: self.resolve(v.n1, a)? })
    }

    fn point(&self, v: &Vertex) -> Step<&'a LatticePoint> {
        match v.spot {
            Spot::Point(i) => Ok(&self.lat.points[i]),
            Spot::Strip(_) => Err(Self::gap("horizontal move with a vertex inside the strip".into())),
        }
    }

    /// Move every vertex one line sideways. Away from the strip the labels are
    /// smooth lattice coordinates, so the continuation keeps `n2` and side.
    fn horizontal(&self, cell: &[Vertex; 4], dir: i64) -> Step<[Vertex; 4]> {
        let p: Vec<&LatticePoint> = cell.iter().map(|v| self.point(v)).collect::<Step<_>>()?;
        if p.iter().any(|q| q.side != p[0].side) {
            return Err(Self::gap("horizontal move across the critical line".into()));
        }
        let mut out = *cell;
        for (k, q) in p.iter().enumerate() {
            let n1 = q.n1 + dir;
            let i = self
                .lat
                .find(n1, q.n2, q.side)
                .ok_or_else(|| Self::gap(format!("cell leaves the region at ({n1}, {})", q.n2)))?;
            out[k] = Vertex { n1, spot: Spot::Point(i) };
        }
        Ok(out)
    }

    fn record(&mut self, cell: &[Vertex; 4]) {
        let cfg = &self.lat.config;
        let mut vertices = [(0.0, None); 4];
        for (k, v) in cell.iter().enumerate() {
            vertices[k] = (
                cfg.line_j(v.n1),
                match v.spot {
                    Spot::Point(i) => Some(self.lat.points[i].h),
                    Spot::Strip(_) => None,
                },
            );
        }
        self.frames.push(CellFrame { vertices });
    }

    fn side_of(&self, v: &Vertex) -> Option<Side> {
        match v.spot {
            Spot::Point(i) => Some(self.lat.points[i].side),
            Spot::Strip(_) => None,
        }
    }

    fn vertical_leg(&mut self, cell: &mut [Vertex; 4], dir: i64, stop: f64) -> Step<()> {
        let start_side = self.side_of(&cell[0]);
        for _ in 0..MAX_LOOP_STEPS {
            let all_real = cell.iter().all(|v| matches!(v.spot, Spot::Point(_)));
            if all_real {
                let h = self.point(&cell[0])?.h;
                if (dir < 0 && h <= stop) || (dir > 0 && h >= stop) {
                    if self.side_of(&cell[0]) != start_side {
                        self.crossings.push(self.lat.config.line_j(cell[0].n1));
                    }
                    return Ok(());
                }
            }
            let mut next = *cell;
            for k in 0..4 {
                next[k] = self.vertical(&cell[k], dir)?;
            }
            *cell = next;
            self.record(cell);
        }
        Err(Self::gap("vertical leg did not terminate".into()))
    }

    /// Step the cell along its lines while that brings its base closer to `level`.
    fn relevel(&mut self, cell: &mut [Vertex; 4], level: f64) -> Step<()> {
        let h0 = self.point(&cell[0])?.h;
        let dir = if h0 > level { -1 } else { 1 };
        let mut best = (h0 - level).abs();
        for _ in 0..MAX_LOOP_STEPS {
            let mut next = *cell;
            for k in 0..4 {
                next[k] = self.vertical(&cell[k], dir)?;
            }
            let closer = match next[0].spot {
                Spot::Point(i) if next.iter().all(|v| matches!(v.spot, Spot::Point(_))) => {
                    let d = (self.lat.points[i].h - level).abs();
                    (d < best).then_some(d)
                }
                _ => None,
            };
            match closer {
                Some(d) => {
                    best = d;
                    *cell = next;
                    self.record(cell);
                }
                None => return Ok(()),
            }
        }
        Err(Self::gap("cell could not follow the loop height".into()))
    }

    fn horizontal_leg(&mut self, cell: &mut [Vertex; 4], dir: i64, until: impl Fn(i64) -> bool) -> Step<()> {
        let level = self.point(&cell[0])?.h;
        for _ in 0..MAX_LOOP_STEPS {
            if until(cell[0].n1) {
                return Ok(());
            }
            *cell = self.horizontal(cell, dir)?;
            self.record(cell);
            self.relevel(cell, level)?;
        }
        Err(Self::gap("horizontal leg did not terminate".into()))
    }

    fn run(&mut self, lp: &CellLoop, k: i64) -> Step<([i64; 2], [i64; 2])> {
        let cfg = &self.lat.config;
        let hbar = cfg.hbar;
        let off = cfg.maslov.0 as f64 / 4.0;
        let start_n1 = ((lp.j_right / hbar) - off).floor() as i64 - k;
        let left_n1 = ((lp.j_left / hbar) - off).floor() as i64;
        if left_n1 >= start_n1 {
            return Err(StepError::Fatal(Error::InvalidInput("loop is narrower than the cell".into())));
        }
        let start_line = self.line(start_n1)?;
        let side = if lp.h_top > 0.0 { Side::Upper } else { Side::Lower };
        let list = match side {
            Side::Upper => &start_line.upper,
            Side::Lower => &start_line.lower,
        };
        let mut order: Vec<usize> = list.clone();
        order.sort_by(|&a, &b| (self.lat.points[a].h - lp.h_top).abs().total_cmp(&(self.lat.points[b].h - lp.h_top).abs()));
        let at = |n1: i64, n2: i64| self.lat.find(n1, n2, side).map(|i| Vertex { n1, spot: Spot::Point(i) });
        let mut cell = order
            .iter()
            .find_map(|&b| {
                let n2 = self.lat.points[b].n2;
                Some([at(start_n1, n2)?, at(start_n1 + k, n2)?, at(start_n1 + k, n2 + 1)?, at(start_n1, n2 + 1)?])
            })
            .ok_or_else(|| Self::gap("no complete cell at the loop start".into()))?;
        self.record(&cell);
        self.horizontal_leg(&mut cell, -1, |n1| n1 <= left_n1)?;
        self.vertical_leg(&mut cell, -1, lp.h_bottom)?;
        self.horizontal_leg(&mut cell, 1, |n1| n1 >= start_n1)?;
        self.vertical_leg(&mut cell, 1, lp.h_top)?;

        let p: Vec<&LatticePoint> = cell.iter().map(|v| self.point(v)).collect::<Step<_>>()?;
        if p.iter().any(|q| q.side != side) {
            return Err(Self::gap("cell did not return to its starting side".into()));
        }
        let d = |q: &LatticePoint| [q.n1 - p[0].n1, q.n2 - p[0].n2];
        let (w1, w2, w12) = (d(p[1]), d(p[3]), d(p[2]));
        if w12 != [w1[0] + w2[0], w1[1] + w2[1]] {
            return Err(Self::gap("transported cell is not a parallelogram".into()));
        }
        Ok((w1, w2))
    }
}

/// Transport the cell `w1 = (k, 0)`, `w2 = (0, 1)` in label coordinates
/// around `lp` and return the matrix sending `(w1/k, w2)` to their images.
///
/// Ambiguous snaps near the strip move the vertical legs by a few columns;
/// persistent ambiguity is reported as a lattice gap.
pub fn transport_cell(s: &ResonantSystem, lattice: &SpectrumLattice, lp: &CellLoop, k: i64) -> Result<CellTransport> {
    let mn = (s.m * s.n) as i64;
    if k <= 0 || k % mn != 0 {
        return Err(Error::InvalidInput(format!("cell multiplier {k} must be a positive multiple of mn = {mn}")));
    }
    let hbar = lattice.config.hbar;
    let shifts = [0i64, -1, 1, -2, 2, -3, 3, -4, 4];
    let mut last = String::new();
    for sl in shifts {
        for sr in shifts {
            let path = CellLoop { j_left: lp.j_left + sl as f64 * hbar, j_right: lp.j_right + sr as f64 * hbar, ..*lp };
            let mut t = Transporter { s, lat: lattice, strip_action: RefCell::new(HashMap::new()), crossings: Vec::new(), frames: Vec::new() };
            match t.run(&path, k) {
                Ok((w1, w2)) => {
                    let r = |x: i64, d: i64| Rational64::new(x, d);
                    let matrix = RatMatrix([[r(w1[0], k), r(w1[1], k)], [r(w2[0], 1), r(w2[1], 1)]]);
                    return Ok(CellTransport {
                        cell_multiplier: k,
                        matrix,
                        w1_final: w1,
                        w2_final: w2,
                        crossings: t.crossings,
                        path,
                        frames: t.frames,
                    });
                }
                Err(StepError::Ambiguous(m)) => last = m,
                Err(StepError::Fatal(e)) => return Err(e),
            }
        }
    }
    Err(Error::LatticeGap(format!("{last}; decrease hbar")))
}
