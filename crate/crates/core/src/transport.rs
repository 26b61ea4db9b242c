//! Transport of cycles along parameter paths.
//!
//! The ground truth is analytic continuation: every cycle is carried as a
//! polyline between its two tracked branch points (a "band") that is pushed
//! away from approaching roots and poles and pulled tight again when that is
//! safe, so its homotopy class in the plane minus roots and poles never
//! changes. The symbolic Picard-Lefschetz rewrite is a prediction compared
//! against the continued values.

use crate::discriminant::discriminant_locus;
use crate::error::{Error, Result};
use crate::integrals::{cycle_contour, contour_integral, vanishing_cycle, Contour, Curve, CycleChain, Cycle, DetourSide, Determination, IntegrandForm};
use crate::quad::QuadOptions;
use crate::resonance::{Chart, ResonantSystem};
use crate::roots::{end_permutation, track_roots, EndPermutation, ParameterPath, TrackOptions};
use num_complex::Complex64;
use std::f64::consts::PI;

const MARGIN: f64 = 0.2;
const SUBSTEP: f64 = 0.01;
const MAX_FIXES: usize = 400;
const MAX_HALVINGS: usize = 12;

/// Relative tolerance between symbolic and continued values.
pub const CHAIN_TOLERANCE: f64 = 1e-4;

/// A cycle drawn as a polyline with `y` fixed at `pts[1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Band {
    pub pts: Vec<Complex64>,
    pub start: usize,
    pub end: usize,
    pub y1: Complex64,
    /// `+1` or `-1`, carried from the cycle.
    pub orientation: i8,
}

impl Band {
    pub fn from_cycle(c: &Curve, cycle: &Cycle) -> Result<Band> {
        let k = cycle_contour(c, cycle, Determination::OfCycle)?;
        Ok(Band { pts: k.pts, start: k.start, end: k.end, y1: k.y_anchor, orientation: cycle.orientation })
    }

    pub fn contour(&self) -> Contour {
        Contour { pts: self.pts.clone(), start: self.start, end: self.end, y_anchor: self.y1 }
    }

    /// Full period over the band, `2 x` the single traverse.
    pub fn integral(&self, c: &Curve, form: IntegrandForm, opts: &QuadOptions) -> Result<Complex64> {
        Ok(contour_integral(c, &self.contour(), form, opts)? * 2.0 * self.orientation as f64)
    }
}

#[derive(Clone, Copy, Debug)]
struct Obstacle {
    z: Complex64,
    mu: f64,
    root: Option<usize>,
}

fn obstacles(roots: &[Complex64], poles: &[Complex64]) -> Vec<Obstacle> {
    let all: Vec<(Complex64, Option<usize>)> =
        roots.iter().enumerate().map(|(k, &z)| (z, Some(k))).chain(poles.iter().map(|&z| (z, None))).collect();
    all.iter()
        .enumerate()
        .map(|(i, &(z, root))| {
            let d = all
                .iter()
                .enumerate()
                .filter(|(k, _)| *k != i)
                .map(|(_, (w, _))| (w - z).norm())
                .fold(f64::INFINITY, f64::min);
            Obstacle { z, mu: MARGIN * d, root }
        })
        .collect()
}

fn cont(roots: &[Complex64], p: Complex64, yp: Complex64, x: Complex64) -> Complex64 {
    roots.iter().fold(yp, |acc, &r| acc * ((x - r) / (p - r)).sqrt())
}

fn closest_param(p: Complex64, a: Complex64, b: Complex64) -> f64 {
    let d = b - a;
    let l2 = d.norm_sqr();
    if l2 == 0.0 {
        0.0
    } else {
        (((p - a) * d.conj()).re / l2).clamp(0.0, 1.0)
    }
}

fn cross(a: Complex64, b: Complex64) -> f64 {
    a.re * b.im - a.im * b.re
}

fn in_triangle(p: Complex64, a: Complex64, b: Complex64, c: Complex64) -> bool {
    let s1 = cross(b - a, p - a);
    let s2 = cross(c - b, p - b);
    let s3 = cross(a - c, p - c);
    let tol = 1e-14 * ((b - a).norm() + (c - b).norm() + (a - c).norm()).powi(2);
    (s1 >= -tol && s2 >= -tol && s3 >= -tol) || (s1 <= tol && s2 <= tol && s3 <= tol)
}

impl Band {
    fn is_endpoint(&self, o: &Obstacle, seg: usize) -> bool {
        let last = self.pts.len() - 2;
        match o.root {
            Some(k) => (seg == 0 && k == self.start) || (seg == last && k == self.end),
            None => false,
        }
    }

    fn is_vertex_root(&self, o: &Obstacle, a: Complex64, b: Complex64) -> bool {
        o.z == a || o.z == b
    }

    /// Whether any obstacle lies in the triangle `a b c`, ignoring obstacles
    /// located exactly at one of the band endpoints shared with the triangle.
    fn sweeps(&self, obs: &[Obstacle], a: Complex64, b: Complex64, c: Complex64) -> bool {
        obs.iter().any(|o| {
            if o.z == a || o.z == b || o.z == c {
                return false;
            }
            in_triangle(o.z, a, b, c)
        })
    }

    /// The new first vertex is always reachable from the old one along a
    /// root-free straight piece.
    fn set_y1_after_edit(&mut self, roots: &[Complex64], old_pts: &[Complex64]) {
        if self.pts[1] != old_pts[1] {
            self.y1 = cont(roots, old_pts[1], self.y1, self.pts[1]);
        }
    }

    /// One fix (push or vertex move) for the first margin violation found.
    fn fix_one(&mut self, roots: &[Complex64], obs: &[Obstacle]) -> Result<bool> {
        let nseg = self.pts.len() - 1;
        for seg in 0..nseg {
            let (a, b) = (self.pts[seg], self.pts[seg + 1]);
            for o in obs {
                if self.is_endpoint(o, seg) || self.is_vertex_root(o, a, b) {
                    continue;
                }
                let t = closest_param(o.z, a, b);
                let c = a + (b - a) * t;
                let d = (o.z - c).norm();
                if d >= o.mu {
                    continue;
                }
                let old = self.pts.clone();
                let len = (b - a).norm();
                let amp = 2.0 * o.mu;
                let near_a = t * len;
                let near_b = (1.0 - t) * len;
                let a_interior = seg > 0;
                let b_interior = seg + 1 < nseg;
                let target_vertex = if near_a < amp && a_interior {
                    Some(seg)
                } else if near_b < amp && b_interior {
                    Some(seg + 1)
                } else {
                    None
                };
                if let Some(vi) = target_vertex {
                    let v = self.pts[vi];
                    let dir = if (v - o.z).norm() > 0.0 { (v - o.z) / (v - o.z).norm() } else { Complex64::i() };
                    let v2 = o.z + dir * amp.max((v - o.z).norm() + o.mu);
                    let (p, n) = (self.pts[vi - 1], self.pts[vi + 1]);
                    if self.sweeps(obs, p, v, v2) || self.sweeps(obs, n, v, v2) {
                        return Err(Error::ContinuityBreak { t: f64::NAN, reason: "vertex move would sweep an obstacle".into() });
                    }
                    self.pts[vi] = v2;
                } else {
                    if near_a < amp || near_b < amp {
                        return Err(Error::ContinuityBreak { t: f64::NAN, reason: "obstacle approaches a band endpoint".into() });
                    }
                    let tan = (b - a) / len;
                    let side = cross(b - a, o.z - a).signum();
                    let normal = Complex64::i() * tan;
                    let w = c - normal * (side * (amp - d));
                    if !self.sweeps(obs, a, w, b) {
                        self.pts.insert(seg + 1, w);
                    } else {
                        let half = amp.min(0.45 * near_a).min(0.45 * near_b);
                        let b1 = c - tan * half;
                        let b2 = c + tan * half;
                        let apex = c - normal * (side * amp);
                        if self.sweeps(obs, b1, apex, b2) {
                            return Err(Error::ContinuityBreak { t: f64::NAN, reason: "push would sweep an obstacle".into() });
                        }
                        self.pts.splice(seg + 1..seg + 1, [b1, apex, b2]);
                    }
                }
                self.set_y1_after_edit(roots, &old);
                return Ok(true);
            }
        }
        Ok(false)
    }

    fn tighten(&mut self, roots: &[Complex64], obs: &[Obstacle]) {
        let mut changed = true;
        while changed && self.pts.len() > 3 {
            changed = false;
            let mut i = 1;
            while i + 1 < self.pts.len() && self.pts.len() > 3 {
                let (p, v, n) = (self.pts[i - 1], self.pts[i], self.pts[i + 1]);
                let seg_start = if i == 1 { Some(self.start) } else { None };
                let seg_end = if i + 1 == self.pts.len() - 1 { Some(self.end) } else { None };
                let clear = obs.iter().all(|o| {
                    if o.root.is_some() && (o.root == seg_start || o.root == seg_end) {
                        return true;
                    }
                    let t = closest_param(o.z, p, n);
                    (o.z - (p + (n - p) * t)).norm() >= 1.5 * o.mu
                });
                if clear && !self.sweeps(obs, p, v, n) {
                    let old = self.pts.clone();
                    self.pts.remove(i);
                    self.set_y1_after_edit(roots, &old);
                    changed = true;
                } else {
                    i += 1;
                }
            }
        }
    }

    /// Restore margins and tighten at a fixed root configuration.
    fn settle(&mut self, roots: &[Complex64], poles: &[Complex64]) -> Result<()> {
        let obs = obstacles(roots, poles);
        let mut fixes = 0;
        while self.fix_one(roots, &obs)? {
            fixes += 1;
            if fixes > MAX_FIXES {
                return Err(Error::ContinuityBreak { t: f64::NAN, reason: "band does not settle".into() });
            }
        }
        self.tighten(roots, &obs);
        Ok(())
    }
}

fn lerp(a: &[Complex64], b: &[Complex64], s: f64) -> Vec<Complex64> {
    a.iter().zip(b).map(|(x, y)| x + (y - x) * s).collect()
}

fn y_of(lead: Complex64, roots: &[Complex64], x: Complex64) -> Complex64 {
    roots.iter().fold(lead, |acc, &r| acc * (x - r)).sqrt()
}

/// Follow a band while roots move linearly from `r0` to `r1` (and poles from
/// `p0` to `p1`); the leading coefficient is interpolated likewise.
fn advance(
    band: &mut Band,
    (r0, l0, p0): (&[Complex64], Complex64, &[Complex64]),
    (r1, l1, p1): (&[Complex64], Complex64, &[Complex64]),
    depth: usize,
) -> Result<()> {
    let obs0 = obstacles(r0, p0);
    let mut ratio: f64 = 0.0;
    for (k, o) in obs0.iter().enumerate() {
        let dz = if k < r0.len() { (r1[k] - r0[k]).norm() } else { (p1[k - r0.len()] - p0[k - r0.len()]).norm() };
        ratio = ratio.max(dz / (o.mu / MARGIN));
    }
    let n = (ratio / SUBSTEP).ceil().max(1.0) as usize;
    let mut prev_r = r0.to_vec();
    let mut prev_p = p0.to_vec();
    let mut prev_l = l0;
    for i in 1..=n {
        let s = i as f64 / n as f64;
        let r = lerp(r0, r1, s);
        let p = lerp(p0, p1, s);
        let l = l0 + (l1 - l0) * s;
        let last = band.pts.len() - 1;
        band.pts[0] = r[band.start];
        band.pts[last] = r[band.end];
        let cand = y_of(l, &r, band.pts[1]);
        let (dp, dm) = ((cand - band.y1).norm(), (cand + band.y1).norm());
        if dp.min(dm) > 0.5 * dp.max(dm) {
            if depth >= MAX_HALVINGS {
                return Err(Error::ContinuityBreak { t: f64::NAN, reason: "sign of y at the band anchor is ambiguous".into() });
            }
            band.pts[0] = prev_r[band.start];
            band.pts[last] = prev_r[band.end];
            let rm = lerp(&prev_r, &r, 0.5);
            let pm = lerp(&prev_p, &p, 0.5);
            let lm = prev_l + (l - prev_l) * 0.5;
            advance(band, (&prev_r, prev_l, &prev_p), (&rm, lm, &pm), depth + 1)?;
            advance(band, (&rm, lm, &pm), (&r, l, &p), depth + 1)?;
        } else {
            band.y1 = if dp <= dm { cand } else { -cand };
            band.settle(&r, &p)?;
        }
        prev_r = r;
        prev_p = p;
        prev_l = l;
    }
    Ok(())
}

/// Poles of the forms in chart coordinates.
fn chart_poles(c: &Curve, forms: &[IntegrandForm]) -> Vec<Complex64> {
    let mut out: Vec<Complex64> = Vec::new();
    for f in forms {
        for p in f.poles(c) {
            let z = c.from_canonical(p);
            if !out.iter().any(|w| (w - z).norm() <= 1e-15 * (1.0 + z.norm())) {
                out.push(z);
            }
        }
    }
    out
}

#[derive(Clone, Debug)]
pub struct TransportOptions {
    pub track: TrackOptions,
    pub quad: QuadOptions,
    /// Integrals are evaluated at most at this many path samples.
    pub max_eval_samples: usize,
}

impl TransportOptions {
    pub fn new(chart: Chart) -> Self {
        TransportOptions { track: TrackOptions::new(chart), quad: QuadOptions::default(), max_eval_samples: 64 }
    }
}

/// Values of one form along the path.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ContinuedSeries {
    pub form: IntegrandForm,
    pub t: Vec<f64>,
    pub values: Vec<Complex64>,
    /// Largest jump relative to `10 x local derivative x step`.
    pub continuity_ratio: f64,
}

impl ContinuedSeries {
    pub fn last(&self) -> Complex64 {
        *self.values.last().unwrap()
    }
}

/// Analytic continuation of chain integrals along a path.
#[derive(Clone, Debug)]
pub struct Continuation {
    pub series: Vec<ContinuedSeries>,
    pub bands: Vec<(i64, Band)>,
    pub start: Curve,
    pub end: Curve,
    pub permutation: EndPermutation,
    pub h: Vec<Complex64>,
}

fn continuity_ratio(t: &[f64], v: &[Complex64]) -> f64 {
    let n = v.len();
    if n < 4 {
        return 0.0;
    }
    let floor = 1e-9 * v.iter().map(|z| z.norm()).fold(1.0, f64::max);
    let mut worst: f64 = 0.0;
    for k in 1..n {
        let dt = t[k] - t[k - 1];
        let jump = (v[k] - v[k - 1]).norm();
        let mut rates = Vec::new();
        if k >= 2 {
            rates.push((v[k - 1] - v[k - 2]).norm() / (t[k - 1] - t[k - 2]));
        }
        if k + 1 < n {
            rates.push((v[k + 1] - v[k]).norm() / (t[k + 1] - t[k]));
        }
        let est = rates.iter().cloned().fold(0.0, f64::max);
        worst = worst.max(jump / (10.0 * est * dt + floor));
    }
    worst
}

/// Continue the integrals of `chain` (labels refer to the roots at the path
/// start, as returned by the root solver) along `path`.
pub fn continue_chain(s: &ResonantSystem, chain: &CycleChain, path: &ParameterPath, forms: &[IntegrandForm], opts: &TransportOptions) -> Result<Continuation> {
    let traj = track_roots(s, path, &opts.track)?;
    let chart = opts.track.chart;
    let curve_at = |k: usize| Curve::with_roots(s, traj.h[k], traj.j[k], chart, traj.roots[k].clone());
    let start = curve_at(0)?;
    let mut bands: Vec<(i64, Band)> = Vec::new();
    for &(k, cy) in &chain.terms {
        bands.push((k, Band::from_cycle(&start, &cy)?));
    }
    let nsamp = traj.t.len();
    let stride = ((nsamp - 1) as f64 / opts.max_eval_samples.max(1) as f64).ceil().max(1.0) as usize;
    let eval_at = |i: usize| i % stride == 0 || i == nsamp - 1;
    let mut series: Vec<ContinuedSeries> =
        forms.iter().map(|&f| ContinuedSeries { form: f, t: Vec::new(), values: Vec::new(), continuity_ratio: 0.0 }).collect();
    let mut prev = start.clone();
    let mut prev_poles = chart_poles(&prev, forms);
    for (_, b) in bands.iter_mut() {
        b.settle(&prev.roots, &prev_poles)?;
    }
    for i in 0..nsamp {
        let cur = if i == 0 { start.clone() } else { curve_at(i)? };
        let poles = chart_poles(&cur, forms);
        if i > 0 {
            for (_, b) in bands.iter_mut() {
                advance(b, (&prev.roots, prev.lead(), &prev_poles), (&cur.roots, cur.lead(), &poles), 0).map_err(|e| match e {
                    Error::ContinuityBreak { reason, .. } => Error::ContinuityBreak { t: traj.t[i], reason },
                    e => e,
                })?;
            }
        }
        if eval_at(i) {
            for sr in series.iter_mut() {
                let mut v = Complex64::new(0.0, 0.0);
                for (k, b) in &bands {
                    v += b.integral(&cur, sr.form, &opts.quad)? * *k as f64;
                }
                sr.t.push(traj.t[i]);
                sr.values.push(v);
            }
        }
        prev = cur;
        prev_poles = poles;
    }
    for sr in series.iter_mut() {
        sr.continuity_ratio = continuity_ratio(&sr.t, &sr.values);
        if sr.continuity_ratio > 1.0 {
            return Err(Error::ContinuityBreak { t: f64::NAN, reason: format!("continued values jump (ratio {:.3})", sr.continuity_ratio) });
        }
    }
    let permutation = end_permutation(&traj)?;
    Ok(Continuation { series, bands, start, end: prev, permutation, h: traj.h })
}

/// Continued value of one cycle integral at the path end.
pub fn continue_integral(s: &ResonantSystem, form: IntegrandForm, c: Cycle, path: &ParameterPath, opts: &TransportOptions) -> Result<Complex64> {
    Ok(continue_chain(s, &CycleChain::single(c), path, &[form], opts)?.series[0].last())
}

/// Position-labelled cycles near the critical line: the real oval and the
/// vanishing cycles between consecutive small roots.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize)]
pub enum LocalCycle {
    Oval,
    Vanishing(usize),
}

/// Integer combination of [`LocalCycle`]s.
#[derive(Clone, Debug, PartialEq, Eq, Default, serde::Serialize)]
pub struct LocalChain {
    pub terms: std::collections::BTreeMap<LocalCycle, i64>,
}

impl LocalChain {
    pub fn of(c: LocalCycle) -> Self {
        let mut l = LocalChain::default();
        l.add(c, 1);
        l
    }

    pub fn add(&mut self, c: LocalCycle, k: i64) {
        let e = self.terms.entry(c).or_insert(0);
        *e += k;
        if *e == 0 {
            self.terms.remove(&c);
        }
    }

    pub fn add_chain(&mut self, other: &LocalChain, k: i64) {
        for (&c, &v) in &other.terms {
            self.add(c, v * k);
        }
    }

    /// One counterclockwise half-turn of `h` around the critical line,
    /// starting at real `h` of sign `sigma`: `delta -> delta + sigma delta_0`
    /// and `delta_k -> delta_{k+1}` (`count` small roots).
    pub fn semicircle(&self, count: usize, sigma: i64) -> LocalChain {
        let mut out = LocalChain::default();
        for (&c, &k) in &self.terms {
            match c {
                LocalCycle::Oval => {
                    out.add(LocalCycle::Oval, k);
                    out.add(LocalCycle::Vanishing(0), sigma * k);
                }
                LocalCycle::Vanishing(i) => out.add(LocalCycle::Vanishing((i + 1) % count), k),
            }
        }
        out
    }

    /// Clockwise half-turn from real `h` of sign `sigma`:
    /// `delta -> delta + sigma delta_{count-1}`, `delta_k -> delta_{k-1}`; the
    /// inverse of [`LocalChain::semicircle`] started from `-sigma`.
    pub fn semicircle_back(&self, count: usize, sigma: i64) -> LocalChain {
        let mut out = LocalChain::default();
        for (&c, &k) in &self.terms {
            match c {
                LocalCycle::Oval => {
                    out.add(LocalCycle::Oval, k);
                    out.add(LocalCycle::Vanishing(count - 1), sigma * k);
                }
                LocalCycle::Vanishing(i) => out.add(LocalCycle::Vanishing((i + count - 1) % count), k),
            }
        }
        out
    }

    /// `semicircles` signed half-turns starting from real `h` of sign `sigma`.
    pub fn transported(&self, semicircles: i64, count: usize, sigma: i64) -> LocalChain {
        let mut c = self.clone();
        let mut sg = sigma;
        for _ in 0..semicircles.unsigned_abs() {
            c = if semicircles > 0 { c.semicircle(count, sg) } else { c.semicircle_back(count, sg) };
            sg = -sg;
        }
        c
    }

    fn fmt_term(c: LocalCycle) -> String {
        match c {
            LocalCycle::Oval => "delta".into(),
            LocalCycle::Vanishing(k) => format!("delta_{k}"),
        }
    }

    /// Human-readable form such as `delta + delta_0 - delta_1`.
    pub fn display(&self) -> String {
        let mut s = String::new();
        for (i, (&c, &k)) in self.terms.iter().enumerate() {
            let sign = if k < 0 { "-" } else if i > 0 { "+" } else { "" };
            let sep = if i > 0 { " " } else { "" };
            let mag = if k.abs() == 1 { String::new() } else { format!("{}*", k.abs()) };
            s.push_str(&format!("{sep}{sign}{}{mag}{}", if i > 0 { " " } else { "" }, Self::fmt_term(c)));
        }
        if s.is_empty() {
            "0".into()
        } else {
            s
        }
    }
}

/// Real oval and vanishing cycles of a real curve near the critical line.
pub struct LocalBasis {
    pub oval: Cycle,
    pub vanishing: Vec<Cycle>,
}

impl LocalBasis {
    pub fn at(c: &Curve) -> Result<LocalBasis> {
        let (a, b) = c.real_oval()?;
        let labels = c.small_root_labels()?;
        let vanishing = (0..labels.len()).map(|k| vanishing_cycle(c, &labels, k)).collect::<Result<Vec<_>>>()?;
        Ok(LocalBasis { oval: Cycle::new(a, b, DetourSide::None), vanishing })
    }

    pub fn cycle(&self, l: LocalCycle) -> Cycle {
        match l {
            LocalCycle::Oval => self.oval,
            LocalCycle::Vanishing(k) => self.vanishing[k],
        }
    }

    pub fn to_chain(&self, l: &LocalChain) -> CycleChain {
        CycleChain { terms: l.terms.iter().map(|(&c, &k)| (k, self.cycle(c))).collect() }
    }

    /// Express a label chain in this basis.
    pub fn identify(&self, chain: &CycleChain) -> Result<LocalChain> {
        let mut out = LocalChain::default();
        for &(k, cy) in &chain.terms {
            let mut hit = None;
            let cands = std::iter::once((LocalCycle::Oval, self.oval))
                .chain(self.vanishing.iter().enumerate().map(|(i, &v)| (LocalCycle::Vanishing(i), v)));
            for (l, b) in cands {
                if cy.sheet != b.sheet || cy.detour != b.detour {
                    continue;
                }
                if cy.start == b.start && cy.end == b.end {
                    hit = Some((l, 1));
                } else if cy.start == b.end && cy.end == b.start && b.detour == DetourSide::None {
                    hit = Some((l, -1));
                }
            }
            let (l, sgn) = hit.ok_or_else(|| Error::InvalidInput("chain term is neither the real oval nor a vanishing cycle".into()))?;
            out.add(l, k * sgn * cy.orientation as i64);
        }
        Ok(out)
    }
}

/// Outcome of transporting a chain.
#[derive(Clone, Debug, serde::Serialize)]
#[serde(rename_all = "camelCase")]
pub struct TransportResult {
    pub initial_chain: CycleChain,
    pub initial_local: String,
    pub final_chain: CycleChain,
    pub final_local: String,
    pub semicircles: i64,
    pub continued_integrals: Vec<ContinuedSeries>,
    /// Chain-evaluated integrals of `final_chain` at the path end.
    pub chain_integrals: Vec<(IntegrandForm, Complex64)>,
    pub max_discrepancy: f64,
    pub permutation_used: EndPermutation,
}

fn half_turns(h: &[Complex64]) -> Result<i64> {
    let mut ang = 0.0;
    for w in h.windows(2) {
        ang += (w[1] / w[0]).arg();
    }
    let n = (ang / PI).round();
    if (ang - n * PI).abs() > 1e-6 {
        return Err(Error::InvalidInput("path must end on the real axis of h".into()));
    }
    Ok(n as i64)
}

/// Transport a chain of real-oval and vanishing cycles along a path of
/// half-turns around the critical line at fixed sign of `j`.
pub fn transport_cycle(s: &ResonantSystem, chain: &CycleChain, path: &ParameterPath, forms: &[IntegrandForm], opts: &TransportOptions) -> Result<TransportResult> {
    check_local_path(s, path, opts)?;
    let cont = continue_chain(s, chain, path, forms, opts)?;
    let semis = half_turns(&cont.h)?;
    let start = realified(s, &cont.start)?;
    let b0 = LocalBasis::at(&start)?;
    let local0 = b0.identify(chain)?;
    let end = realified(s, &cont.end)?;
    let b1 = LocalBasis::at(&end)?;
    let count = b0.vanishing.len();
    // labels must have rotated by `semis` positions
    let l0 = start.small_root_labels()?;
    let l1 = end.small_root_labels()?;
    for p in 0..count {
        let q = ((p as i64 + semis).rem_euclid(count as i64)) as usize;
        if l0[p] != l1[q] {
            return Err(Error::BranchAmbiguity("small roots did not rotate as the half-turn count predicts".into()));
        }
    }
    let sigma = if start.h().re > 0.0 { 1 } else { -1 };
    let local1 = local0.transported(semis, count, sigma);
    let final_chain = b1.to_chain(&local1);
    let mut chain_integrals = Vec::new();
    let mut worst: f64 = 0.0;
    for sr in &cont.series {
        let v = final_chain.integral(&end, Determination::OfCycle, sr.form, &opts.quad)?;
        let scale = v.norm().max(sr.last().norm()).max(1.0);
        worst = worst.max((v - sr.last()).norm() / scale);
        chain_integrals.push((sr.form, v));
    }
    if worst > CHAIN_TOLERANCE {
        return Err(Error::ChainMismatch(worst));
    }
    Ok(TransportResult {
        initial_chain: chain.clone(),
        initial_local: local0.display(),
        final_chain,
        final_local: local1.display(),
        semicircles: semis,
        continued_integrals: cont.series,
        chain_integrals,
        max_discrepancy: worst,
        permutation_used: cont.permutation,
    })
}

/// The same curve with rounding-level imaginary parts of `(h, j)` removed.
fn realified(s: &ResonantSystem, c: &Curve) -> Result<Curve> {
    let (h, j) = (c.h(), c.j());
    let tiny = |z: Complex64| z.im.abs() <= 1e-12 * z.norm();
    if !tiny(h) || !tiny(j) {
        return Err(Error::InvalidInput("path must end at a real parameter value".into()));
    }
    Curve::with_roots(s, Complex64::new(h.re, 0.0), Complex64::new(j.re, 0.0), c.chart(), c.roots.clone())
}

fn check_local_path(s: &ResonantSystem, path: &ParameterPath, opts: &TransportOptions) -> Result<()> {
    let loc = discriminant_locus(s);
    let n = 256 * path.segments.len();
    let (_, j0) = path.eval(0.0);
    for t in [0.0, 1.0] {
        let (h, _) = path.eval(t);
        if h.im.abs() > 1e-12 * h.norm() {
            return Err(Error::InvalidInput("path must start and end at real h".into()));
        }
    }
    for i in 0..=n {
        let (h, j) = path.eval(i as f64 / n as f64);
        if j.im != 0.0 || j.re * j0.re <= 0.0 {
            return Err(Error::InvalidInput("j must stay real with a fixed sign".into()));
        }
        if Chart::for_j(j.re) != opts.track.chart {
            return Err(Error::InvalidInput("tracking chart does not match the sign of j".into()));
        }
        if h.norm() >= loc.branch_magnitude(j) {
            return Err(Error::InvalidInput("path reaches the discriminant branches".into()));
        }
    }
    Ok(())
}
