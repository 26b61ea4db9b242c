//! Limits of sequences sampled on geometric grids `h_k -> 0`.

use serde::Serialize;

/// Fitted limit of `f(h)` as `h -> 0`.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Extrapolation {
    pub limit: f64,
    /// Spread between the last two extrapolated estimates.
    pub residual: f64,
    /// Fitted leading correction power `p` in `f(h) = L + a h^p`.
    pub order: Option<f64>,
    pub samples: Vec<(f64, f64)>,
}

fn richardson(h: [f64; 3], y: [f64; 3]) -> Option<(f64, f64)> {
    let (d1, d2) = (y[1] - y[0], y[2] - y[1]);
    let q = h[0] / h[1];
    if d2 == 0.0 {
        return Some((y[2], f64::INFINITY));
    }
    let r = d1 / d2;
    if !r.is_finite() || r <= 1.05 || (h[1] / h[2] - q).abs() > 1e-9 * q {
        return None;
    }
    let p = r.ln() / q.ln();
    let lim = y[2] + d2 / (q.powf(p) - 1.0);
    Some((lim, p))
}

/// Richardson extrapolation with the order estimated from the last three
/// samples; falls back to the last value when the differences do not
/// contract geometrically. Samples must have decreasing `h` with a fixed ratio.
pub fn extrapolate(samples: &[(f64, f64)]) -> Extrapolation {
    let n = samples.len();
    let last = samples.last().map(|s| s.1).unwrap_or(f64::NAN);
    let plain_residual = if n >= 2 { (samples[n - 1].1 - samples[n - 2].1).abs() } else { f64::INFINITY };
    let fallback = Extrapolation { limit: last, residual: plain_residual, order: None, samples: samples.to_vec() };
    if n < 3 {
        return fallback;
    }
    let est = |k: usize| {
        let w = &samples[k - 3..k];
        richardson([w[0].0, w[1].0, w[2].0], [w[0].1, w[1].1, w[2].1])
    };
    match est(n) {
        Some((lim, p)) if p.is_infinite() => Extrapolation { limit: lim, residual: 0.0, order: None, samples: samples.to_vec() },
        Some((lim, p)) => {
            let residual = match if n >= 4 { est(n - 1) } else { None } {
                Some((prev, _)) if prev.is_finite() => (lim - prev).abs(),
                _ => plain_residual,
            };
            Extrapolation { limit: lim, residual, order: Some(p), samples: samples.to_vec() }
        }
        None => fallback,
    }
}

/// The grid `h0 * ratio^k`, `k = 0..count`.
pub fn geometric_grid(h0: f64, ratio: f64, count: usize) -> Vec<f64> {
    (0..count).map(|k| h0 * ratio.powi(k as i32)).collect()
}
