//! Abelian integrals `int w(x) dx / y` on `y^2 = Q(x)` over polygonal
//! contours joining branch points.
//!
//! `y` is the square root of `Q` itself, not of the monic polynomial. Along a
//! straight piece starting at a reference point `P` with known `y(P)`,
//! `y(x) = y(P) prod_k sqrt((x - r_k) / (P - r_k))` with principal roots; this
//! is the analytic continuation as long as no root lies on the piece. Pieces
//! ending at a branch point use `x = r + (P - r) s^2`, which cancels the
//! inverse square-root singularity.

use crate::discriminant::small_root_leading_terms;
use crate::error::{Error, Result};
use crate::quad::{integrate, QuadOptions};
use crate::resonance::{build_q, Chart, FamilyPolynomial, ResonantSystem};
use crate::roots::{all_roots_poly, nearest_assignment};
use num_complex::Complex64;
use std::f64::consts::PI;

/// Sign applied to the rescaled return time so that the 1:-2 limit is `-pi/(2 eps)`.
pub const TAU_SIGN: f64 = -1.0;

fn cplx(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// A member of the family together with its roots in chart coordinates.
#[derive(Clone, Debug)]
pub struct Curve {
    pub system: ResonantSystem,
    pub q: FamilyPolynomial,
    pub roots: Vec<Complex64>,
}

impl Curve {
    pub fn new(s: &ResonantSystem, h: Complex64, j: Complex64, chart: Chart) -> Result<Curve> {
        let q = build_q(s, h, j, chart)?;
        let roots = all_roots_poly(&q.poly)?;
        Ok(Curve { system: s.clone(), q, roots })
    }

    /// Curve with externally supplied (for example tracked) roots, which fixes the labels.
    pub fn with_roots(s: &ResonantSystem, h: Complex64, j: Complex64, chart: Chart, roots: Vec<Complex64>) -> Result<Curve> {
        let q = build_q(s, h, j, chart)?;
        if roots.len() != q.degree() {
            return Err(Error::InvalidInput(format!("expected {} roots, got {}", q.degree(), roots.len())));
        }
        Ok(Curve { system: s.clone(), q, roots })
    }

    pub fn h(&self) -> Complex64 {
        self.q.h
    }

    pub fn j(&self) -> Complex64 {
        self.q.j
    }

    pub fn chart(&self) -> Chart {
        self.q.chart
    }

    /// Canonical `x = pi1 + j` of a chart point.
    pub fn canonical(&self, x: Complex64) -> Complex64 {
        x + self.q.chart.offset(self.q.j)
    }

    /// Chart coordinate of a canonical point.
    pub fn from_canonical(&self, x: Complex64) -> Complex64 {
        x - self.q.chart.offset(self.q.j)
    }

    pub fn lead(&self) -> Complex64 {
        self.q.poly.lead()
    }

    /// `Q(x)` from the factored form.
    pub fn q_factored(&self, x: Complex64) -> Complex64 {
        self.roots.iter().fold(self.lead(), |acc, &r| acc * (x - r))
    }

    /// `y(x)` continued along the straight piece from `p` where `y(p) = yp`.
    pub fn continue_y(&self, p: Complex64, yp: Complex64, x: Complex64) -> Complex64 {
        self.roots.iter().fold(yp, |acc, &r| acc * ((x - r) / (p - r)).sqrt())
    }

    /// The sign of `sqrt(Q(x))` nearest `guess`.
    pub fn y_nearest(&self, x: Complex64, guess: Complex64) -> Complex64 {
        let y = self.q_factored(x).sqrt();
        if (y - guess).norm() <= (y + guess).norm() {
            y
        } else {
            -y
        }
    }

    /// Labels of the roots that collapse as `h -> 0`, in the order of the
    /// asymptotic formula (`e^{2 pi i k / n}` at chart `AtZero`).
    pub fn small_root_labels(&self) -> Result<Vec<usize>> {
        let (lead_terms, chart) = small_root_leading_terms(&self.system, self.h(), self.j());
        if chart != self.chart() {
            return Err(Error::InvalidInput("small roots requested in the wrong chart".into()));
        }
        let k = lead_terms.len();
        let mut idx: Vec<usize> = (0..self.roots.len()).collect();
        idx.sort_by(|&a, &b| self.roots[a].norm().total_cmp(&self.roots[b].norm()));
        let pool: Vec<Complex64> = idx[..k].iter().map(|&i| self.roots[i]).collect();
        let a = nearest_assignment(&lead_terms, &pool, 0.9)
            .ok_or_else(|| Error::BranchAmbiguity("small roots do not match their leading terms".into()))?;
        Ok(a.iter().map(|&i| idx[i]).collect())
    }

    /// The real oval: the two smallest real roots above `max(0, 2j)` in
    /// canonical coordinates with `Q > 0` between them, as labels.
    pub fn real_oval(&self) -> Result<(usize, usize)> {
        let j = self.j();
        if self.h().im != 0.0 || j.im != 0.0 {
            return Err(Error::InvalidInput("real oval needs real (h, j)".into()));
        }
        let lo = (2.0 * j.re).max(0.0);
        let scale = self.roots.iter().map(|r| r.norm()).fold(1.0, f64::max);
        let mut real: Vec<(f64, usize)> = self
            .roots
            .iter()
            .enumerate()
            .filter(|(_, r)| r.im.abs() <= 1e-9 * scale)
            .map(|(i, r)| (self.canonical(*r).re, i))
            .filter(|(x, _)| *x > lo)
            .collect();
        real.sort_by(|a, b| a.0.total_cmp(&b.0));
        if real.len() < 2 {
            return Err(Error::Degenerate(format!("no real oval at h = {}, j = {}", self.h(), j)));
        }
        let mid = self.from_canonical(cplx(0.5 * (real[0].0 + real[1].0)));
        if self.q.eval(mid).re <= 0.0 {
            return Err(Error::Degenerate(format!("Q is not positive on the candidate oval at h = {}", self.h())));
        }
        Ok((real[0].1, real[1].1))
    }
}

/// Distance of the real oval endpoints to the nearest other root, relative to
/// the largest root modulus. Positive values mean both endpoints are simple.
pub fn oval_endpoint_separation(s: &ResonantSystem, h: f64, j: f64) -> Result<f64> {
    let c = real_curve(s, h, j)?;
    let (a, b) = c.real_oval()?;
    let scale = c.roots.iter().map(|r| r.norm()).fold(1.0, f64::max);
    let mut gap = f64::INFINITY;
    for e in [a, b] {
        for (i, r) in c.roots.iter().enumerate() {
            if i != e {
                gap = gap.min((r - c.roots[e]).norm());
            }
        }
    }
    Ok(gap / scale)
}

/// Weight `w` of the differential `w(x) dx / y`.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "form", rename_all = "camelCase")]
pub enum IntegrandForm {
    /// `dx / y`
    Holomorphic,
    /// `dx / (x y)` with `x` the chart coordinate.
    PoleAtChartOrigin,
    /// `x^k dx / y` in the chart coordinate.
    Monomial { k: u32 },
    /// `(h u / x + h v / x') dx / y`
    Theta { u: i64, v: i64 },
    /// Rotation-angle form including the `R`-dependent terms.
    ThetaFull { u: i64, v: i64 },
    /// `TAU_SIGN / (mn) x^(n-1) x'^(m-1) dx / y`
    Tau,
    /// `1 / (mn) dx / y`
    ReturnTime,
}

impl IntegrandForm {
    pub fn weight(&self, c: &Curve, x_chart: Complex64) -> Complex64 {
        let s = &c.system;
        let (h, j) = (c.h(), c.j());
        let x = c.canonical(x_chart);
        let xp = x - j * 2.0;
        let mn = (s.m * s.n) as f64;
        match *self {
            IntegrandForm::Holomorphic => cplx(1.0),
            IntegrandForm::PoleAtChartOrigin => Complex64::new(1.0, 0.0) / x_chart,
            IntegrandForm::Monomial { k } => x_chart.powu(k),
            IntegrandForm::Theta { u, v } => {
                let mut w = Complex64::new(0.0, 0.0);
                if u != 0 {
                    w += h * u as f64 / x;
                }
                if v != 0 {
                    w += h * v as f64 / xp;
                }
                w
            }
            IntegrandForm::ThetaFull { u, v } => {
                let t = s.r_terms(x, j);
                let mut w = Complex64::new(0.0, 0.0);
                if u != 0 {
                    w += (h / x - t.r_over_x + (t.r_pi + t.r_j) / s.n as f64) * u as f64;
                }
                if v != 0 {
                    w += (h / xp - t.r_over_xp + (t.r_pi - t.r_j) / s.m as f64) * v as f64;
                }
                w
            }
            IntegrandForm::Tau => x.powu(s.n - 1) * xp.powu(s.m - 1) * (TAU_SIGN / mn),
            IntegrandForm::ReturnTime => cplx(1.0 / mn),
        }
    }

    /// Canonical-coordinate poles of the weight.
    pub fn poles(&self, c: &Curve) -> Vec<Complex64> {
        let j = c.j();
        match *self {
            IntegrandForm::PoleAtChartOrigin => vec![c.canonical(Complex64::new(0.0, 0.0))],
            IntegrandForm::Theta { u, v } | IntegrandForm::ThetaFull { u, v } => {
                let mut p = Vec::new();
                if u != 0 {
                    p.push(Complex64::new(0.0, 0.0));
                }
                if v != 0 {
                    p.push(j * 2.0);
                }
                p
            }
            _ => Vec::new(),
        }
    }
}

/// Side of the chart origin on which a straight cycle is bent.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum DetourSide {
    /// Passes the pole with larger imaginary part.
    Above,
    /// Passes the pole with smaller imaginary part.
    Below,
    None,
}

/// Leaf on which a cycle is drawn, used by [`Determination::OfCycle`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Sheet {
    Principal,
    Vanishing,
}

/// Cycle spanned by two branch points on the upper leaf.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Cycle {
    pub start: usize,
    pub end: usize,
    pub detour: DetourSide,
    pub orientation: i8,
    pub sheet: Sheet,
}

impl Cycle {
    pub fn new(start: usize, end: usize, detour: DetourSide) -> Self {
        Cycle { start, end, detour, orientation: 1, sheet: Sheet::Principal }
    }

    pub fn on_sheet(self, sheet: Sheet) -> Self {
        Cycle { sheet, ..self }
    }

    pub fn reversed(self) -> Self {
        Cycle { orientation: -self.orientation, ..self }
    }
}

/// How the sign of `y` at the contour anchor (first interior vertex) is fixed.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Determination {
    /// Principal `sqrt(Q)` at the anchor; real positive where `Q > 0`.
    Principal,
    /// The sign nearest the given value at the anchor.
    Near(Complex64),
    /// `y` given at the chart origin and continued radially to the anchor.
    AtOrigin(Complex64),
    /// `y(0) = i (h - R(0))`, continued radially; analytic in `h`.
    Vanishing,
    /// Whatever the cycle's own [`Sheet`] says.
    OfCycle,
}

/// Polyline from branch point `start` through interior vertices to branch
/// point `end`, with `y` fixed at the first interior vertex.
#[derive(Clone, Debug, PartialEq)]
pub struct Contour {
    pub pts: Vec<Complex64>,
    pub start: usize,
    pub end: usize,
    pub y_anchor: Complex64,
}

impl Contour {
    /// `y` at every interior vertex, continued along the polyline.
    pub fn interior_ys(&self, c: &Curve) -> Vec<Complex64> {
        let mut ys = vec![self.y_anchor];
        for i in 1..self.pts.len() - 2 {
            let y = c.continue_y(self.pts[i], ys[i - 1], self.pts[i + 1]);
            ys.push(y);
        }
        ys
    }

    /// Minimum over roots other than the endpoints of the distance to the
    /// polyline relative to the distance to the nearer endpoint.
    pub fn clearance(&self, c: &Curve) -> f64 {
        let (a, b) = (c.roots[self.start], c.roots[self.end]);
        let mut d = f64::INFINITY;
        for (k, &r) in c.roots.iter().enumerate() {
            if k == self.start || k == self.end {
                continue;
            }
            let scale = (r - a).norm().min((r - b).norm()).min((b - a).norm());
            for w in self.pts.windows(2) {
                d = d.min(point_segment_distance(r, w[0], w[1]) / scale);
            }
        }
        d
    }

    pub fn length(&self) -> f64 {
        self.pts.windows(2).map(|w| (w[1] - w[0]).norm()).sum()
    }
}

pub fn point_segment_distance(p: Complex64, a: Complex64, b: Complex64) -> f64 {
    let d = b - a;
    let l2 = d.norm_sqr();
    if l2 == 0.0 {
        return (p - a).norm();
    }
    let t = (((p - a) * d.conj()).re / l2).clamp(0.0, 1.0);
    (p - (a + d * t)).norm()
}

const DETOUR_VERTICES: usize = 8;

/// `y` at the chart origin on the vanishing sheet: the root of
/// `Q(0) = -(h - R(0))^2` equal to `i (h - R(0))`.
pub fn vanishing_y0(c: &Curve) -> Complex64 {
    let zero = Complex64::new(0.0, 0.0);
    let y0 = Complex64::i() * (-c.q_factored(zero)).sqrt();
    let target = Complex64::i() * (c.h() - c.system.r_poly(c.j(), c.chart()).eval(zero));
    if (y0 - target).norm() <= (y0 + target).norm() {
        y0
    } else {
        -y0
    }
}

/// Straight contour for a cycle, bent around the chart origin when the
/// requested side differs from the straight line or the pole is close.
pub fn cycle_contour(c: &Curve, cycle: &Cycle, det: Determination) -> Result<Contour> {
    if cycle.start == cycle.end || cycle.start >= c.roots.len() || cycle.end >= c.roots.len() {
        return Err(Error::InvalidInput("cycle endpoints must be distinct root labels".into()));
    }
    let (a, b) = (c.roots[cycle.start], c.roots[cycle.end]);
    if (a - b).norm() == 0.0 {
        return Err(Error::Degenerate("cycle endpoints coincide".into()));
    }
    let pole = Complex64::new(0.0, 0.0);
    let d = (b - a) / (b - a).norm();
    let len = (b - a).norm();
    let mut pts = vec![a];
    let along = ((pole - a) * d.conj()).re;
    let across = ((pole - a) * d.conj()).im; // > 0: pole on the left
    let inside = along > 0.0 && along < len;
    let nearest_root = c.roots.iter().map(|r| (r - pole).norm()).fold(f64::INFINITY, f64::min);
    let rho = (0.3 * nearest_root).min(0.3 * len);
    let want_left = match cycle.detour {
        DetourSide::Above => d.re < 0.0 || (d.re == 0.0 && d.im > 0.0),
        DetourSide::Below => d.re > 0.0 || (d.re == 0.0 && d.im < 0.0),
        DetourSide::None => across > 0.0,
    };
    let wrong_side = (across > 0.0) != want_left;
    if cycle.detour != DetourSide::None && inside && (across.abs() < rho || wrong_side) {
        // arc of radius rho from behind the pole (angle pi) to past it (angle 0)
        for i in 0..=DETOUR_VERTICES {
            let t = i as f64 / DETOUR_VERTICES as f64;
            let ang = if want_left { -PI * (1.0 - t) } else { PI * (1.0 - t) };
            pts.push(pole + d * Complex64::from_polar(rho, ang));
        }
    } else {
        pts.push(0.5 * (a + b));
    }
    pts.push(b);
    let anchor = pts[1];
    let det = match det {
        Determination::OfCycle => match cycle.sheet {
            Sheet::Principal => Determination::Principal,
            Sheet::Vanishing => Determination::Vanishing,
        },
        d => d,
    };
    let y_anchor = match det {
        Determination::Principal => c.q_factored(anchor).sqrt(),
        Determination::Near(g) => c.y_nearest(anchor, g),
        Determination::AtOrigin(y0) => c.continue_y(pole, y0, anchor),
        Determination::Vanishing => c.continue_y(pole, vanishing_y0(c), anchor),
        Determination::OfCycle => unreachable!(),
    };
    let contour = Contour { pts, start: cycle.start, end: cycle.end, y_anchor };
    if contour.clearance(c) < 1e-3 {
        return Err(Error::BranchAmbiguity("contour passes too close to a third branch point".into()));
    }
    Ok(contour)
}

/// Parameters in `(0, 1)` at which the segment `a b` is split so that every
/// piece is long only compared with its distance to the nearest feature.
fn grading(a: Complex64, b: Complex64, feats: &[Complex64]) -> Vec<f64> {
    let d = b - a;
    let len = d.norm();
    let mut ts = Vec::new();
    for &f in feats {
        let t = ((f - a) * d.conj()).re / (len * len);
        let dist = (f - (a + d * t.clamp(0.0, 1.0))).norm();
        if dist == 0.0 || dist >= 0.1 * len || (f - a).norm() < 1e-12 * len || (f - b).norm() < 1e-12 * len {
            continue;
        }
        let tc = t.clamp(0.0, 1.0);
        let mut step = dist / len;
        while step < 1.0 {
            for tt in [tc - step, tc + step] {
                if tt > 0.0 && tt < 1.0 {
                    ts.push(tt);
                }
            }
            step *= 2.0;
        }
        if tc > 0.0 && tc < 1.0 {
            ts.push(tc);
        }
    }
    ts.sort_by(f64::total_cmp);
    ts.dedup_by(|x, y| (*x - *y).abs() < 1e-9);
    ts
}

/// `int w dx / y` along the contour on its own leaf (single traverse).
pub fn contour_integral(c: &Curve, k: &Contour, form: IntegrandForm, opts: &QuadOptions) -> Result<Complex64> {
    let ys = k.interior_ys(c);
    let nseg = k.pts.len() - 1;
    let mut feats: Vec<Complex64> = c.roots.clone();
    feats.extend(form.poles(c).into_iter().map(|p| c.from_canonical(p)));
    let mut total = Complex64::new(0.0, 0.0);
    for i in 0..nseg {
        let (p, q) = (k.pts[i], k.pts[i + 1]);
        let d = q - p;
        let mut nodes = vec![p];
        nodes.extend(grading(p, q, &feats).into_iter().map(|t| p + d * t));
        nodes.push(q);
        // y at every node from the known interior vertex value
        let (known, yk) = if i == 0 { (q, ys[0]) } else { (p, ys[i - 1]) };
        let yn: Vec<Complex64> = nodes.iter().map(|&x| if x == known { yk } else { c.continue_y(known, yk, x) }).collect();
        let m = nodes.len() - 1;
        for piece in 0..m {
            let (u, w) = (nodes[piece], nodes[piece + 1]);
            let v = if i == 0 && piece == 0 {
                end_piece(c, k.start, w, yn[1], form, opts)?
            } else if i == nseg - 1 && piece == m - 1 {
                -end_piece(c, k.end, u, yn[piece], form, opts)?
            } else {
                let yu = yn[piece];
                let dd = w - u;
                integrate(|t| {
                    let x = u + dd * t;
                    form.weight(c, x) * dd / c.continue_y(u, yu, x)
                }, 0.0, 1.0, opts)?
                .value
            };
            total += v;
        }
    }
    Ok(total)
}

/// Integral from branch point `r_idx` to vertex `p` where `y(p) = yp`.
fn end_piece(c: &Curve, r_idx: usize, p: Complex64, yp: Complex64, form: IntegrandForm, opts: &QuadOptions) -> Result<Complex64> {
    let r = c.roots[r_idx];
    let d = p - r;
    Ok(integrate(
        |s| {
            let x = r + d * (s * s);
            let mut yr = yp;
            for (k, &rk) in c.roots.iter().enumerate() {
                if k != r_idx {
                    yr *= ((x - rk) / (p - rk)).sqrt();
                }
            }
            form.weight(c, x) * d * 2.0 / yr
        },
        0.0,
        1.0,
        opts,
    )?
    .value)
}

/// `oint w dx / y` around a closed polygon avoiding all branch points, with
/// `y(pts[0]) = y0`. Returns the integral and the value of `y` after one turn.
pub fn loop_integral(c: &Curve, pts: &[Complex64], y0: Complex64, form: IntegrandForm, opts: &QuadOptions) -> Result<(Complex64, Complex64)> {
    let mut total = Complex64::new(0.0, 0.0);
    let mut y = y0;
    let n = pts.len();
    for i in 0..n {
        let (p, q) = (pts[i], pts[(i + 1) % n]);
        let d = q - p;
        let yp = y;
        total += integrate(|t| {
            let x = p + d * t;
            form.weight(c, x) * d / c.continue_y(p, yp, x)
        }, 0.0, 1.0, opts)?
        .value;
        y = c.continue_y(p, yp, q);
    }
    Ok((total, y))
}

/// Full period `oint w dx / y = 2 x` the upper-leaf contour integral.
pub fn cycle_integral(c: &Curve, cycle: &Cycle, det: Determination, form: IntegrandForm, opts: &QuadOptions) -> Result<Complex64> {
    let k = cycle_contour(c, cycle, det)?;
    Ok(contour_integral(c, &k, form, opts)? * 2.0 * cycle.orientation as f64)
}

/// Integer combination of cycles, all evaluated with one determination rule.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct CycleChain {
    pub terms: Vec<(i64, Cycle)>,
}

impl CycleChain {
    pub fn single(c: Cycle) -> Self {
        CycleChain { terms: vec![(1, c)] }
    }

    /// Sorted by endpoint labels with orientation folded into the coefficient.
    pub fn normalized(&self) -> CycleChain {
        let mut t: Vec<(i64, Cycle)> = Vec::new();
        for &(k, c) in &self.terms {
            let key = Cycle { orientation: 1, ..c };
            let coeff = k * c.orientation as i64;
            match t.iter_mut().find(|(_, e)| *e == key) {
                Some(e) => e.0 += coeff,
                None => t.push((coeff, key)),
            }
        }
        t.retain(|e| e.0 != 0);
        t.sort_by_key(|e| (e.1.start, e.1.end, e.1.detour as u8, e.1.sheet as u8));
        CycleChain { terms: t }
    }

    pub fn integral(&self, c: &Curve, det: Determination, form: IntegrandForm, opts: &QuadOptions) -> Result<Complex64> {
        let mut s = Complex64::new(0.0, 0.0);
        for (k, cy) in &self.terms {
            s += cycle_integral(c, cy, det, form, opts)? * *k as f64;
        }
        Ok(s)
    }
}

/// The vanishing cycle from the `k`-th to the `(k+1)`-th small root, turning
/// counterclockwise about the chart origin.
pub fn vanishing_cycle(c: &Curve, labels: &[usize], k: usize) -> Result<Cycle> {
    let n = labels.len();
    if n < 2 {
        return Err(Error::InvalidInput("need at least two small roots".into()));
    }
    let (a, b) = (labels[k % n], labels[(k + 1) % n]);
    let (za, zb) = (c.roots[a], c.roots[b]);
    if (za - zb).norm() == 0.0 {
        return Err(Error::Degenerate("coincident endpoints".into()));
    }
    // counterclockwise about 0: the origin lies on the left of a -> b
    let left_is_up = (zb - za).re < 0.0;
    let side = if left_is_up { DetourSide::Above } else { DetourSide::Below };
    Ok(Cycle::new(a, b, side).on_sheet(Sheet::Vanishing))
}

/// Result of a residue evaluation.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Residue {
    pub value: Complex64,
    /// `(1/(2 pi i)) oint_{|x| = rho} w dx / (x y)`, the contour oracle.
    pub contour_check: Complex64,
    pub rho: f64,
}

/// `y` normalisation for residues.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum YNormalization {
    /// `y^2 = Q`
    Raw,
    /// `y^2 = Q / c_N`, the monic product of root factors.
    Monic,
}

/// Residue of `w(x) / (x y)` at the chart origin, principal determination of
/// `y(0)` (times `sign`).
pub fn residue_at_pole(c: &Curve, weight: IntegrandForm, norm: YNormalization, sign: f64) -> Result<Residue> {
    let zero = Complex64::new(0.0, 0.0);
    let q0 = c.q.eval(zero);
    let scale = c.roots.iter().map(|r| r.norm()).fold(0.0, f64::max);
    let near = c.roots.iter().map(|r| r.norm()).fold(f64::INFINITY, f64::min);
    if q0.norm() == 0.0 || near <= 1e-14 * scale.max(1e-300) {
        return Err(Error::PoleOnBranchPoint);
    }
    let factor = match norm {
        YNormalization::Raw => cplx(1.0),
        YNormalization::Monic => c.lead(),
    };
    let y0 = (q0 / factor).sqrt() * sign;
    let w0 = weight.weight(c, zero);
    let value = w0 / y0;
    // contour oracle on |x| = rho, y continued radially from the origin
    let rho = 0.1 * near;
    let y_raw0 = y0 * factor.sqrt();
    let integ = integrate(
        |t| {
            let x = Complex64::from_polar(rho, t);
            let y = c.continue_y(zero, y_raw0, x) / factor.sqrt();
            let dx = Complex64::i() * x;
            weight.weight(c, x) * dx / (x * y)
        },
        0.0,
        2.0 * PI,
        &QuadOptions::default(),
    )?;
    Ok(Residue { value, contour_check: integ.value / (Complex64::i() * 2.0 * PI), rho })
}

/// `(h0/2) (oint_{delta_0} + oint_{delta_1}) dx / (x y)` for a two-small-root
/// system at `j0 < 0`; equals `2 pi`.
pub fn pole_cycle_sum(s: &ResonantSystem, h0: f64, j0: f64) -> Result<Complex64> {
    if s.n != 2 || s.m != 1 {
        return Err(Error::InvalidInput("pole cycle sum is defined for the 1:-2 system".into()));
    }
    if j0 >= 0.0 || h0 <= 0.0 {
        return Err(Error::InvalidInput("need h0 > 0 and j0 < 0".into()));
    }
    let c = Curve::new(s, cplx(h0), cplx(j0), Chart::AtZero)?;
    let labels = c.small_root_labels()?;
    let opts = QuadOptions::default();
    let mut sum = Complex64::new(0.0, 0.0);
    for k in 0..2 {
        let cy = vanishing_cycle(&c, &labels, k)?;
        sum += cycle_integral(&c, &cy, Determination::Vanishing, IntegrandForm::PoleAtChartOrigin, &opts)?;
    }
    Ok(sum * (h0 / 2.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum ThetaMode {
    SingularPart,
    Full,
}

/// Period functions at a real regular value.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
#[serde(rename_all = "camelCase")]
pub struct PeriodSample {
    pub h: Complex64,
    pub j: Complex64,
    pub theta: Complex64,
    pub theta_is_singular_part_only: bool,
    pub tau: Complex64,
    #[serde(rename = "T")]
    pub t: Complex64,
}

/// Curve at a real point in the chart natural for `j`.
pub fn real_curve(s: &ResonantSystem, h: f64, j: f64) -> Result<Curve> {
    if h == 0.0 {
        return Err(Error::Degenerate("h = 0 lies on the critical line".into()));
    }
    Curve::new(s, cplx(h), cplx(j), Chart::for_j(j))
}

/// Half-period over the real oval (the single traverse of the real approach).
pub fn oval_integral(c: &Curve, form: IntegrandForm, opts: &QuadOptions) -> Result<Complex64> {
    let (a, b) = c.real_oval()?;
    Ok(cycle_integral(c, &Cycle::new(a, b, DetourSide::None), Determination::Principal, form, opts)? / 2.0)
}

/// Rotation angle on the real oval; `(u, v)` is the Bezout pair.
pub fn theta(s: &ResonantSystem, h: f64, j: f64, mode: ThetaMode, uv: (i64, i64)) -> Result<Complex64> {
    let c = real_curve(s, h, j)?;
    theta_on(&c, mode, uv, &QuadOptions::default())
}

pub fn theta_on(c: &Curve, mode: ThetaMode, (u, v): (i64, i64), opts: &QuadOptions) -> Result<Complex64> {
    let form = match mode {
        ThetaMode::SingularPart => IntegrandForm::Theta { u, v },
        ThetaMode::Full => IntegrandForm::ThetaFull { u, v },
    };
    oval_integral(c, form, opts)
}

/// Rescaled first-return time.
pub fn tau(s: &ResonantSystem, h: f64, j: f64) -> Result<Complex64> {
    oval_integral(&real_curve(s, h, j)?, IntegrandForm::Tau, &QuadOptions::default())
}

/// Unrescaled first-return time.
pub fn return_time_t(s: &ResonantSystem, h: f64, j: f64) -> Result<Complex64> {
    oval_integral(&real_curve(s, h, j)?, IntegrandForm::ReturnTime, &QuadOptions::default())
}

pub fn period_sample(s: &ResonantSystem, h: f64, j: f64, mode: ThetaMode, uv: (i64, i64)) -> Result<PeriodSample> {
    let c = real_curve(s, h, j)?;
    let o = QuadOptions::default();
    Ok(PeriodSample {
        h: cplx(h),
        j: cplx(j),
        theta: theta_on(&c, mode, uv, &o)?,
        theta_is_singular_part_only: mode == ThetaMode::SingularPart,
        tau: oval_integral(&c, IntegrandForm::Tau, &o)?,
        t: oval_integral(&c, IntegrandForm::ReturnTime, &o)?,
    })
}
