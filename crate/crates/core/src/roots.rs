//! Simultaneous root finding and continuation of labelled roots along
//! parameter paths.

use crate::error::{Error, Result};
use crate::poly::Poly;
use crate::resonance::{build_q, Chart, ResonantSystem};
use num_complex::Complex64;
use std::f64::consts::PI;

pub const ABERTH_MAX_ITER: usize = 200;
pub const DEFAULT_STEPS_PER_SEGMENT: usize = 256;
pub const MAX_STORED_SAMPLES: usize = 1024;

/// Sum of `|c_k| |x|^k`; the natural scale for a backward-error residual.
pub fn abs_scale(p: &Poly, x: Complex64) -> f64 {
    let r = x.norm();
    p.coeffs.iter().rev().fold(0.0, |acc, c| acc * r + c.norm())
}

/// Backward-error residual `|p(x)| / sum |c_k||x|^k`.
pub fn relative_residual(p: &Poly, x: Complex64) -> f64 {
    let s = abs_scale(p, x);
    if s == 0.0 {
        0.0
    } else {
        p.eval(x).norm() / s
    }
}

fn initial_guesses(p: &Poly, phase: f64) -> Vec<Complex64> {
    // radii from the upper convex hull of (k, log|c_k|)
    let n = p.degree();
    let pts: Vec<(f64, f64)> = p
        .coeffs
        .iter()
        .enumerate()
        .filter(|(_, c)| c.norm() > 0.0)
        .map(|(k, c)| (k as f64, c.norm().ln()))
        .collect();
    let mut hull: Vec<(f64, f64)> = Vec::new();
    for &q in &pts {
        while hull.len() >= 2 {
            let (a, b) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            if (b.0 - a.0) * (q.1 - a.1) - (b.1 - a.1) * (q.0 - a.0) >= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(q);
    }
    let mut z = Vec::with_capacity(n);
    for w in hull.windows(2) {
        let (a, b) = (w[0], w[1]);
        let cnt = (b.0 - a.0) as usize;
        let r = ((a.1 - b.1) / (b.0 - a.0)).exp();
        for i in 0..cnt {
            let ang = 2.0 * PI * i as f64 / cnt as f64 + 2.0 * PI * z.len() as f64 / n as f64 + phase;
            z.push(Complex64::from_polar(r, ang));
        }
    }
    z
}

/// All roots of `p` by Aberth-Ehrlich iteration with Newton polishing.
///
/// Multiple roots come back as clusters.
pub fn all_roots_poly(p: &Poly) -> Result<Vec<Complex64>> {
    let n = p.degree();
    if n == 0 {
        return Ok(Vec::new());
    }
    if p.lead().norm() == 0.0 {
        return Err(Error::Degenerate("vanishing leading coefficient".into()));
    }
    // factor out exact zeros
    let zeros = p.coeffs.iter().take_while(|c| c.norm() == 0.0).count();
    if zeros > 0 {
        let reduced = Poly::new(p.coeffs[zeros..].to_vec());
        let mut r = all_roots_poly(&reduced)?;
        r.extend(std::iter::repeat(Complex64::new(0.0, 0.0)).take(zeros));
        return Ok(r);
    }
    if n == 1 {
        return Ok(vec![-p.coeffs[0] / p.coeffs[1]]);
    }
    let dp = p.deriv();
    let mut best: Option<(f64, Vec<Complex64>)> = None;
    for (k, &phase) in GUESS_PHASES.iter().enumerate() {
        let scale = 1.0 + 0.07 * k as f64;
        let z0 = initial_guesses(p, phase).into_iter().map(|z| z * scale).collect();
        let (z, worst) = aberth(p, &dp, z0);
        if std::env::var("ABERTH_DEBUG").is_ok() { eprintln!("attempt {k} worst {worst:e}"); }
        if worst <= 1e-10 && z.iter().all(|v| v.is_finite()) {
            return Ok(z);
        }
        if best.as_ref().map_or(true, |b| worst < b.0) {
            best = Some((worst, z));
        }
    }
    Err(Error::RootNonConvergence { iterations: ABERTH_MAX_ITER, residual: best.map_or(f64::INFINITY, |b| b.0) })
}

const GUESS_PHASES: [f64; 5] = [0.4, 1.7, 0.9, 2.6, 0.15];

fn aberth(p: &Poly, dp: &Poly, mut z: Vec<Complex64>) -> (Vec<Complex64>, f64) {
    let n = z.len();
    let mut converged = vec![false; n];
    for _ in 0..ABERTH_MAX_ITER {
        let mut all_done = true;
        for i in 0..n {
            if converged[i] {
                continue;
            }
            let zi = z[i];
            let pv = p.eval(zi);
            if pv.norm() == 0.0 {
                converged[i] = true;
                continue;
            }
            let ratio = pv / dp.eval(zi);
            let s: Complex64 = (0..n)
                .filter(|&k| k != i)
                .map(|k| {
                    let d = zi - z[k];
                    if d.norm() == 0.0 {
                        Complex64::new(1e300, 0.0)
                    } else {
                        Complex64::new(1.0, 0.0) / d
                    }
                })
                .sum();
            let denom = Complex64::new(1.0, 0.0) - ratio * s;
            let w = if denom.norm() == 0.0 || !denom.is_finite() { ratio } else { ratio / denom };
            if !w.is_finite() {
                all_done = false;
                continue;
            }
            z[i] = zi - w;
            if w.norm() <= 4.0 * f64::EPSILON * z[i].norm().max(1e-300) {
                converged[i] = true;
            } else {
                all_done = false;
            }
        }
        if all_done {
            // roots frozen at a poor residual get another chance, nudged off
            // any root they may have collapsed onto
            let mut reopened = false;
            for i in 0..n {
                if relative_residual(p, z[i]) > 1e-12 {
                    let kick = 1e-3 * z[i].norm().max(1e-3);
                    z[i] += Complex64::from_polar(kick, 1.0 + i as f64);
                    converged[i] = false;
                    reopened = true;
                }
            }
            if !reopened {
                break;
            }
        }
    }
    for zi in z.iter_mut() {
        polish(p, dp, zi, 3);
    }
    let worst = z
        .iter()
        .map(|&zi| if zi.is_finite() { relative_residual(p, zi) } else { f64::INFINITY })
        .fold(0.0, f64::max);
    (z, worst)
}

fn polish(p: &Poly, dp: &Poly, z: &mut Complex64, iters: usize) {
    for _ in 0..iters {
        let r0 = relative_residual(p, *z);
        let d = dp.eval(*z);
        if d.norm() == 0.0 {
            return;
        }
        let cand = *z - p.eval(*z) / d;
        if cand.is_finite() && relative_residual(p, cand) <= r0 {
            *z = cand;
        } else {
            return;
        }
    }
}

/// Newton iteration from `z0`; `None` when it fails to converge.
pub fn newton(p: &Poly, z0: Complex64, max_iter: usize) -> Option<Complex64> {
    let mut z = z0;
    for _ in 0..max_iter {
        let (v, d) = p.eval_with_deriv(z);
        if d.norm() == 0.0 {
            return None;
        }
        let step = v / d;
        z -= step;
        if !z.is_finite() {
            return None;
        }
        if step.norm() <= 1e-15 * z.norm().max(1e-300) || relative_residual(p, z) < 1e-15 {
            break;
        }
    }
    (relative_residual(p, z) < 1e-11).then_some(z)
}

/// Minimum over pairs of `|r_a - r_b|`.
pub fn min_pairwise_gap(roots: &[Complex64]) -> f64 {
    let mut g = f64::INFINITY;
    for a in 0..roots.len() {
        for b in a + 1..roots.len() {
            g = g.min((roots[a] - roots[b]).norm());
        }
    }
    g
}

/// Distance from each root to its nearest neighbour.
pub fn nearest_gaps(roots: &[Complex64]) -> Vec<f64> {
    (0..roots.len())
        .map(|a| {
            (0..roots.len())
                .filter(|&b| b != a)
                .map(|b| (roots[a] - roots[b]).norm())
                .fold(f64::INFINITY, f64::min)
        })
        .collect()
}

/// One piece of a parameter path, parametrised by `s` in `[0, 1]`.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "kind", rename_all = "camelCase")]
pub enum Segment {
    /// Straight segment in `(h, j)` with real endpoints.
    #[serde(rename_all = "camelCase")]
    RealSegment { h_start: f64, j_start: f64, h_end: f64, j_end: f64 },
    /// `h = radius * exp(i (startAngle + sweep s))` at fixed real `j`.
    #[serde(rename_all = "camelCase")]
    Semicircle { j: f64, radius: f64, start_angle: f64, sweep: f64 },
    /// Straight segment between arbitrary complex endpoints.
    #[serde(rename_all = "camelCase")]
    ComplexSegment { h_start: Complex64, j_start: Complex64, h_end: Complex64, j_end: Complex64 },
}

impl Segment {
    pub fn eval(&self, s: f64) -> (Complex64, Complex64) {
        match *self {
            Segment::RealSegment { h_start, j_start, h_end, j_end } => (
                Complex64::new(h_start + (h_end - h_start) * s, 0.0),
                Complex64::new(j_start + (j_end - j_start) * s, 0.0),
            ),
            Segment::Semicircle { j, radius, start_angle, sweep } => {
                (Complex64::from_polar(radius, start_angle + sweep * s), Complex64::new(j, 0.0))
            }
            Segment::ComplexSegment { h_start, j_start, h_end, j_end } => {
                (h_start + (h_end - h_start) * s, j_start + (j_end - j_start) * s)
            }
        }
    }

    pub fn reversed(&self) -> Segment {
        match *self {
            Segment::RealSegment { h_start, j_start, h_end, j_end } => {
                Segment::RealSegment { h_start: h_end, j_start: j_end, h_end: h_start, j_end: j_start }
            }
            Segment::Semicircle { j, radius, start_angle, sweep } => {
                Segment::Semicircle { j, radius, start_angle: start_angle + sweep, sweep: -sweep }
            }
            Segment::ComplexSegment { h_start, j_start, h_end, j_end } => {
                Segment::ComplexSegment { h_start: h_end, j_start: j_end, h_end: h_start, j_end: j_start }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ParameterPath {
    pub segments: Vec<Segment>,
    #[serde(default = "default_samples")]
    pub samples_hint: usize,
}

fn default_samples() -> usize {
    DEFAULT_STEPS_PER_SEGMENT
}

impl ParameterPath {
    pub fn new(segments: Vec<Segment>) -> Self {
        ParameterPath { segments, samples_hint: DEFAULT_STEPS_PER_SEGMENT }
    }

    /// Arc of `count` consecutive semicircles around `h = 0` starting from `h0 > 0`,
    /// turning counterclockwise.
    pub fn semicircles(j0: f64, h0: f64, count: usize) -> Self {
        Self::semicircles_from(j0, h0, 0.0, PI, count)
    }

    /// Consecutive half-turns of the arc `radius * exp(i (start + sweep k))`.
    pub fn semicircles_from(j0: f64, radius: f64, start_angle: f64, sweep: f64, count: usize) -> Self {
        ParameterPath::new(
            (0..count)
                .map(|k| Segment::Semicircle { j: j0, radius, start_angle: start_angle + sweep * k as f64, sweep })
                .collect(),
        )
    }

    pub fn constant(h: f64, j: f64) -> Self {
        ParameterPath::new(vec![Segment::RealSegment { h_start: h, j_start: j, h_end: h, j_end: j }])
    }

    pub fn then(mut self, other: ParameterPath) -> Self {
        self.segments.extend(other.segments);
        self
    }

    pub fn reversed(&self) -> Self {
        ParameterPath {
            segments: self.segments.iter().rev().map(|s| s.reversed()).collect(),
            samples_hint: self.samples_hint,
        }
    }

    /// `(h, j)` at global parameter `t` in `[0, 1]`; segments share equal parameter length.
    pub fn eval(&self, t: f64) -> (Complex64, Complex64) {
        let k = self.segments.len();
        let u = (t.clamp(0.0, 1.0) * k as f64).min(k as f64);
        let idx = (u.floor() as usize).min(k - 1);
        self.segments[idx].eval(u - idx as f64)
    }

    pub fn validate(&self) -> Result<()> {
        if self.segments.is_empty() {
            return Err(Error::InvalidInput("empty parameter path".into()));
        }
        for w in self.segments.windows(2) {
            let (a, b) = (w[0].eval(1.0), w[1].eval(0.0));
            let d = (a.0 - b.0).norm() + (a.1 - b.1).norm();
            if d > 1e-12 * (1.0 + a.0.norm() + a.1.norm()) {
                return Err(Error::InvalidInput("path segments are not contiguous".into()));
            }
        }
        Ok(())
    }

    pub fn is_closed(&self) -> bool {
        let (a, b) = (self.eval(0.0), self.eval(1.0));
        (a.0 - b.0).norm() + (a.1 - b.1).norm() < 1e-12 * (1.0 + a.0.norm() + a.1.norm())
    }
}

#[derive(Clone, Debug)]
pub struct TrackOptions {
    pub chart: Chart,
    pub steps_per_segment: usize,
    pub min_step: f64,
}

impl TrackOptions {
    pub fn new(chart: Chart) -> Self {
        TrackOptions { chart, steps_per_segment: DEFAULT_STEPS_PER_SEGMENT, min_step: 1e-12 }
    }
}

#[derive(Clone, Debug, serde::Serialize)]
#[serde(rename_all = "camelCase")]
pub struct StepDiagnostic {
    pub max_residual: f64,
    pub min_gap: f64,
}

#[derive(Clone, Debug)]
pub struct RootTrajectory {
    pub t: Vec<f64>,
    pub h: Vec<Complex64>,
    pub j: Vec<Complex64>,
    /// `roots[sample][label]`
    pub roots: Vec<Vec<Complex64>>,
    pub diagnostics: Vec<StepDiagnostic>,
    pub chart: Chart,
}

impl RootTrajectory {
    pub fn first(&self) -> &[Complex64] {
        &self.roots[0]
    }

    pub fn last(&self) -> &[Complex64] {
        self.roots.last().unwrap()
    }

    /// Evenly thinned copy with at most `max` samples, endpoints kept.
    pub fn decimated(&self, max: usize) -> RootTrajectory {
        let len = self.t.len();
        if len <= max || max < 2 {
            return self.clone();
        }
        let idx: Vec<usize> = (0..max).map(|k| k * (len - 1) / (max - 1)).collect();
        RootTrajectory {
            t: idx.iter().map(|&i| self.t[i]).collect(),
            h: idx.iter().map(|&i| self.h[i]).collect(),
            j: idx.iter().map(|&i| self.j[i]).collect(),
            roots: idx.iter().map(|&i| self.roots[i].clone()).collect(),
            diagnostics: idx.iter().map(|&i| self.diagnostics[i].clone()).collect(),
            chart: self.chart,
        }
    }

    /// Net argument change of each labelled root about the chart origin.
    pub fn winding_angles(&self) -> Vec<f64> {
        let n = self.roots[0].len();
        (0..n)
            .map(|k| {
                self.roots
                    .windows(2)
                    .map(|w| (w[1][k] / w[0][k]).arg())
                    .filter(|a| a.is_finite())
                    .sum()
            })
            .collect()
    }
}

/// Polynomial in the chart variable at path parameter `t`.
pub fn q_at(s: &ResonantSystem, path: &ParameterPath, chart: Chart, t: f64) -> Result<Poly> {
    let (h, j) = path.eval(t);
    Ok(build_q(s, h, j, chart)?.poly)
}

fn q_t_at(s: &ResonantSystem, path: &ParameterPath, chart: Chart, t: f64, x: &[Complex64]) -> Result<Vec<Complex64>> {
    let d = 1e-6;
    let (ta, tb) = ((t - d).max(0.0), (t + d).min(1.0));
    let (pa, pb) = (q_at(s, path, chart, ta)?, q_at(s, path, chart, tb)?);
    Ok(x.iter().map(|&z| (pb.eval(z) - pa.eval(z)) / (tb - ta)).collect())
}

/// Continue `roots` (roots of `Q` at `t_start`) to `t_end`. Returns every accepted
/// step including the start.
pub fn track_between(
    s: &ResonantSystem,
    path: &ParameterPath,
    opts: &TrackOptions,
    t_start: f64,
    t_end: f64,
    roots: Vec<Complex64>,
) -> Result<Vec<(f64, Vec<Complex64>, StepDiagnostic)>> {
    let base = 1.0 / (opts.steps_per_segment.max(1) * path.segments.len()) as f64;
    let dir = if t_end >= t_start { 1.0 } else { -1.0 };
    let mut t = t_start;
    let mut cur = roots;
    let p0 = q_at(s, path, opts.chart, t)?;
    let diag0 = StepDiagnostic {
        max_residual: cur.iter().map(|&z| relative_residual(&p0, z)).fold(0.0, f64::max),
        min_gap: min_pairwise_gap(&cur),
    };
    let mut out = vec![(t, cur.clone(), diag0)];
    let mut dt = base;
    while (t_end - t) * dir > 1e-15 {
        let step = dt.min((t_end - t).abs());
        let t_new = t + dir * step;
        match try_step(s, path, opts, t, t_new, &cur)? {
            Some((next, diag)) => {
                t = t_new;
                cur = next;
                out.push((t, cur.clone(), diag));
                dt = (dt * 1.5).min(base);
            }
            None => {
                dt *= 0.5;
                if dt < opts.min_step {
                    return Err(Error::StepCollapse { t });
                }
            }
        }
    }
    Ok(out)
}

fn try_step(
    s: &ResonantSystem,
    path: &ParameterPath,
    opts: &TrackOptions,
    t: f64,
    t_new: f64,
    cur: &[Complex64],
) -> Result<Option<(Vec<Complex64>, StepDiagnostic)>> {
    let p_old = q_at(s, path, opts.chart, t)?;
    let dp_old = p_old.deriv();
    let qt = q_t_at(s, path, opts.chart, t, cur)?;
    let gaps = nearest_gaps(cur);
    let dt = t_new - t;
    let mut pred = Vec::with_capacity(cur.len());
    for (k, &z) in cur.iter().enumerate() {
        let dz = -qt[k] / dp_old.eval(z) * dt;
        if !dz.is_finite() || dz.norm() > 0.25 * gaps[k] {
            return Ok(None);
        }
        pred.push(z + dz);
    }
    let p_new = q_at(s, path, opts.chart, t_new)?;
    let mut next = Vec::with_capacity(cur.len());
    let mut newton_ok = true;
    for &z in &pred {
        match newton(&p_new, z, 30) {
            Some(r) => next.push(r),
            None => {
                newton_ok = false;
                break;
            }
        }
    }
    if !newton_ok {
        // warm-start failure: re-solve and match to the prediction
        let fresh = match all_roots_poly(&p_new) {
            Ok(r) => r,
            Err(_) => return Ok(None),
        };
        match match_nearest(&pred, &fresh) {
            Some(m) => next = m,
            None => return Ok(None),
        }
    }
    for k in 0..cur.len() {
        if (next[k] - cur[k]).norm() > 0.5 * gaps[k] {
            return Ok(None);
        }
    }
    let new_gaps = nearest_gaps(&next);
    for k in 0..cur.len() {
        if new_gaps[k] < 0.25 * gaps[k] && (next[k] - pred[k]).norm() > 0.25 * new_gaps[k] {
            return Ok(None);
        }
    }
    let max_residual = next.iter().map(|&z| relative_residual(&p_new, z)).fold(0.0, f64::max);
    if max_residual > 1e-10 {
        return Err(Error::ResidualBlowup { t: t_new, residual: max_residual });
    }
    let diag = StepDiagnostic { max_residual, min_gap: min_pairwise_gap(&next) };
    Ok(Some((next, diag)))
}

/// Bijective nearest matching of `targets` onto `pool`, or `None` if ambiguous.
pub fn match_nearest(targets: &[Complex64], pool: &[Complex64]) -> Option<Vec<Complex64>> {
    let idx = nearest_assignment(targets, pool, 0.5)?;
    Some(idx.iter().map(|&i| pool[i]).collect())
}

/// For each target, the index of the nearest pool element. Requires the nearest
/// distance to be at most `ratio` times the second nearest, and a bijection.
pub fn nearest_assignment(targets: &[Complex64], pool: &[Complex64], ratio: f64) -> Option<Vec<usize>> {
    if targets.len() != pool.len() {
        return None;
    }
    let mut used = vec![false; pool.len()];
    let mut out = Vec::with_capacity(targets.len());
    for &z in targets {
        let mut d: Vec<(f64, usize)> = pool.iter().enumerate().map(|(i, &w)| ((z - w).norm(), i)).collect();
        d.sort_by(|a, b| a.0.total_cmp(&b.0));
        if d.len() > 1 && d[0].0 > ratio * d[1].0 {
            return None;
        }
        if used[d[0].1] {
            return None;
        }
        used[d[0].1] = true;
        out.push(d[0].1);
    }
    Some(out)
}

/// Track all roots of `Q` along the whole path.
pub fn track_roots(s: &ResonantSystem, path: &ParameterPath, opts: &TrackOptions) -> Result<RootTrajectory> {
    path.validate()?;
    let p0 = q_at(s, path, opts.chart, 0.0)?;
    let start = all_roots_poly(&p0)?;
    if min_pairwise_gap(&start) < 1e-9 * start.iter().map(|z| z.norm()).fold(1e-300, f64::max) {
        return Err(Error::Degenerate("initial roots are not simple".into()));
    }
    let steps = track_between(s, path, opts, 0.0, 1.0, start)?;
    let mut traj = RootTrajectory {
        t: Vec::with_capacity(steps.len()),
        h: Vec::with_capacity(steps.len()),
        j: Vec::with_capacity(steps.len()),
        roots: Vec::with_capacity(steps.len()),
        diagnostics: Vec::with_capacity(steps.len()),
        chart: opts.chart,
    };
    for (t, r, d) in steps {
        let (h, j) = path.eval(t);
        traj.t.push(t);
        traj.h.push(h);
        traj.j.push(j);
        traj.roots.push(r);
        traj.diagnostics.push(d);
    }
    Ok(traj)
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
#[serde(rename_all = "camelCase")]
pub struct EndPermutation {
    /// `perm[k]` is the initial label whose position label `k` occupies at the end.
    pub perm: Vec<usize>,
    pub winding_angles: Vec<f64>,
}

impl EndPermutation {
    pub fn is_identity(&self) -> bool {
        self.perm.iter().enumerate().all(|(k, &p)| k == p)
    }

    pub fn compose(&self, other: &EndPermutation) -> Vec<usize> {
        other.perm.iter().map(|&p| self.perm[p]).collect()
    }

    /// Cycles of length greater than one.
    pub fn cycles(&self) -> Vec<Vec<usize>> {
        let n = self.perm.len();
        let mut seen = vec![false; n];
        let mut out = Vec::new();
        for s in 0..n {
            if seen[s] {
                continue;
            }
            let mut c = vec![s];
            seen[s] = true;
            let mut k = self.perm[s];
            while k != s {
                seen[k] = true;
                c.push(k);
                k = self.perm[k];
            }
            if c.len() > 1 {
                out.push(c);
            }
        }
        out
    }
}

/// Match final roots to the initial root set.
pub fn end_permutation(traj: &RootTrajectory) -> Result<EndPermutation> {
    let perm = nearest_assignment(traj.last(), traj.first(), 0.5)
        .ok_or_else(|| Error::AmbiguousMatching { label: ambiguous_label(traj) })?;
    Ok(EndPermutation { perm, winding_angles: traj.winding_angles() })
}

fn ambiguous_label(traj: &RootTrajectory) -> usize {
    for k in 0..traj.last().len() {
        if nearest_assignment(&traj.last()[k..k + 1], &traj.first()[..1], 0.5).is_none() {
            return k;
        }
    }
    0
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn synthetic_roots_recovered() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let roots: Vec<Complex64> =
                (0..8).map(|_| Complex64::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0))).collect();
            let p = Poly::from_roots(&roots, Complex64::new(1.3, -0.2));
            let found = all_roots_poly(&p).unwrap();
            let m = match_nearest(&roots, &found).unwrap();
            for (a, b) in roots.iter().zip(&m) {
                assert!((a - b).norm() < 1e-9, "{a} {b}");
            }
        }
    }

    #[test]
    fn clustered_roots_are_returned() {
        let p = Poly::from_roots(&[c(0.0), c(0.0), c(0.0), c(-1.0)], c(1.0));
        let r = all_roots_poly(&p).unwrap();
        assert_eq!(r.len(), 4);
        assert_eq!(r.iter().filter(|z| z.norm() < 1e-12).count(), 3);
    }

    #[test]
    fn triple_root_without_exact_zero() {
        let p = Poly::from_roots(&[c(0.3), c(0.3), c(0.3), c(-1.0)], c(1.0));
        let r = all_roots_poly(&p).unwrap();
        assert_eq!(r.iter().filter(|z| (*z - c(0.3)).norm() < 1e-4).count(), 3);
    }

    #[test]
    fn path_reverse_and_contiguity() {
        let p = ParameterPath::semicircles(-0.3, 0.005, 2);
        p.validate().unwrap();
        let r = p.reversed();
        let (a, b) = (p.eval(0.3), r.eval(0.7));
        assert!((a.0 - b.0).norm() < 1e-15);
    }
}
