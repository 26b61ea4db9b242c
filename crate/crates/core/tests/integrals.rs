use fracmon::integrals::*;
use fracmon::quad::{composite_kronrod, QuadOptions};
use fracmon::resonance::{Chart, ResonantSystem};
use num_complex::Complex64;
use std::f64::consts::PI;

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Independent real-line evaluation: Q from its defining expression, sine substitution on
/// the oval, real arithmetic throughout.
fn real_oracle(s: &ResonantSystem, h: f64, j: f64, w: impl Fn(f64) -> f64) -> f64 {
    let (m, n) = (s.m as i32, s.n as i32);
    let r = |x: f64| -> f64 {
        let xp = x - 2.0 * j;
        match (m, n) {
            (1, 2) => 0.05 * x * xp,
            (1, 3) => -xp * x.powi(4),
            _ => (x * xp).powi(2),
        }
    };
    let qf = |x: f64| x.powi(n) * (x - 2.0 * j).powi(m) - (h - r(x)).powi(2);
    let curve = Curve::new(s, c(h), c(j), Chart::AtZero).unwrap();
    let (ia, ib) = curve.real_oval().unwrap();
    let gap = |k: usize| {
        (0..curve.roots.len())
            .filter(|&i| i != k)
            .map(|i| (curve.roots[i] - curve.roots[k]).norm())
            .fold(f64::INFINITY, f64::min)
    };
    // bisection on the oracle's own Q, starting from rough root positions
    let refine = |x0: f64, w: f64| {
        let (mut lo, mut hi) = (x0 - w, x0 + w);
        let neg_lo = qf(lo) < 0.0;
        assert!(neg_lo != (qf(hi) < 0.0), "no sign change around {x0}");
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if (qf(mid) < 0.0) == neg_lo {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    };
    let a = refine(curve.roots[ia].re, 0.25 * gap(ia));
    let b = refine(curve.roots[ib].re, 0.25 * gap(ib));
    let (mid, hw) = (0.5 * (a + b), 0.5 * (b - a));
    composite_kronrod(
        |t| {
            let x = mid + hw * t.sin();
            let qv = qf(x);
            Complex64::new(if qv <= 0.0 { 0.0 } else { w(x) / qv.sqrt() * hw * t.cos() }, 0.0)
        },
        -PI / 2.0,
        PI / 2.0,
        20000,
    )
    .re
}

/// (system, h, j, theta, tau, T) from a 40-digit tanh-sinh quadrature of the
/// real-line integrals with the oval endpoints found at the same precision.
const REFERENCE: [(&str, f64, f64, f64, f64, f64); 6] = [
    ("1:-2", 0.01, -0.2, 1.5368418894761271489, -30.780609218714677074, 4.2028861000492203894),
    ("1:-2", -0.02, -0.3, -1.4625706038927247762, -30.642397007087992112, 3.3752199781210130063),
    ("1:-2", 0.003, -0.1, 1.5347798251577914448, -30.967360298942942183, 6.1254548618853229261),
    ("1:-3", 0.02, -0.5, 1.0067580650011772445, -0.19623729641469291553, 2.1758075331133282451),
    ("2:-3", 1e-4, 0.5, 1.5712551033755372818, -0.22649838202646326972, 1.5190824858600658736),
    ("2:-3", -0.003, -0.5, -1.9612681639816505781, -0.069422937824810235415, 2.3764761267026455529),
];

fn named(name: &str) -> (ResonantSystem, (i64, i64)) {
    match name {
        "1:-2" => (ResonantSystem::legacy_one_two(0.05), (1, 0)),
        "1:-3" => (ResonantSystem::one_three(), (1, 0)),
        _ => (ResonantSystem::two_three(), (2, 1)),
    }
}

#[test]
fn real_approach_matches_reference() {
    for (name, h, j, th_ref, tau_ref, t_ref) in REFERENCE {
        let (s, uv) = named(name);
        let p = period_sample(&s, h, j, ThetaMode::SingularPart, uv).unwrap();
        for (got, want, what) in [(p.theta, th_ref, "theta"), (p.tau, tau_ref, "tau"), (p.t, t_ref, "T")] {
            assert!(got.im.abs() < 1e-8, "{name} {what} imaginary part {got}");
            assert!((got.re - want).abs() < 1e-8, "{name} ({h}, {j}) {what}: {} vs {want}", got.re);
        }
        assert!(p.t.re > 0.0);
    }
}

#[test]
fn real_approach_matches_double_precision_quadrature() {
    for (name, h, j, _, _, _) in REFERENCE {
        let (s, (u, v)) = named(name);
        let (m, n) = (s.m as i32, s.n as i32);
        let th = theta(&s, h, j, ThetaMode::SingularPart, (u, v)).unwrap().re;
        let want = real_oracle(&s, h, j, |x| h * u as f64 / x + h * v as f64 / (x - 2.0 * j));
        assert!((th - want).abs() < 1e-6, "{name} theta {th} vs {want}");
        let ta = tau(&s, h, j).unwrap().re;
        let want = -real_oracle(&s, h, j, |x| x.powi(n - 1) * (x - 2.0 * j).powi(m - 1)) / (m * n) as f64;
        assert!((ta - want).abs() < 1e-6 * want.abs().max(1.0), "{name} tau {ta} vs {want}");
    }
}

#[test]
fn full_theta_reduces_to_singular_part_for_legacy() {
    let s = ResonantSystem::legacy_one_two(0.05);
    let a = theta(&s, 0.01, -0.2, ThetaMode::SingularPart, (1, 0)).unwrap();
    let b = theta(&s, 0.01, -0.2, ThetaMode::Full, (1, 0)).unwrap();
    assert!((a - b).norm() < 1e-10);
}

#[test]
fn legacy_theta_one_sided_values() {
    // Odd part is pi/2; the even part is the finite-j offset eps*sqrt(-2j),
    // which vanishes only in the double limit.
    let s = ResonantSystem::legacy_one_two(0.05);
    let p = theta(&s, 1e-5, -0.2, ThetaMode::SingularPart, (1, 0)).unwrap().re;
    let m = theta(&s, -1e-5, -0.2, ThetaMode::SingularPart, (1, 0)).unwrap().re;
    assert!(((p - m) / 2.0 - PI / 2.0).abs() < 0.01 * PI / 2.0, "odd part {}", (p - m) / 2.0);
    let offset = (p + m) / 2.0;
    assert!((offset - 0.05 * 0.4f64.sqrt()).abs() < 2e-3, "offset {offset}");
}

#[test]
fn one_three_theta_limits() {
    let s = ResonantSystem::one_three();
    for sgn in [1.0, -1.0] {
        let t = theta(&s, sgn * 1e-6, -0.5, ThetaMode::SingularPart, (1, 0)).unwrap().re;
        assert!((t - sgn * PI / 3.0).abs() < 0.01 * PI / 3.0, "{t}");
    }
}

#[test]
fn tau_continuity() {
    let s = ResonantSystem::legacy_one_two(0.05);
    let a = tau(&s, 1e-5, -0.2).unwrap().re;
    let b = tau(&s, -1e-5, -0.2).unwrap().re;
    assert!((a - b).abs() < 1e-3, "{a} {b}");
    assert!(a < 0.0);
    let s = ResonantSystem::one_three();
    let a = tau(&s, 1e-6, -0.5).unwrap().re;
    let b = tau(&s, -1e-6, -0.5).unwrap().re;
    assert!((a - b).abs() < 1e-3, "{a} {b}");
    assert!(tau(&s, 0.0, -0.5).is_err());
}

#[test]
fn return_time_diverges_logarithmically() {
    let s = ResonantSystem::legacy_one_two(0.05);
    let hs: Vec<f64> = (0..6).map(|k| 1e-3 * 0.5f64.powi(k)).collect();
    let t: Vec<f64> = hs.iter().map(|&h| return_time_t(&s, h, -0.2).unwrap().re).collect();
    let ta: Vec<f64> = hs.iter().map(|&h| tau(&s, h, -0.2).unwrap().re).collect();
    let d: Vec<f64> = t.windows(2).map(|w| w[1] - w[0]).collect();
    assert!(d.iter().all(|&x| x > 0.0));
    // constant increment per halving: the slope of T against log(1/h)
    let slope = d.last().unwrap() / 2f64.ln();
    assert!((d[d.len() - 1] - d[d.len() - 2]).abs() < 1e-2 * d[d.len() - 1]);
    assert!(slope > 0.0);
    let ratios: Vec<f64> = t.iter().zip(&ta).map(|(a, b)| (a / b).abs()).collect();
    assert!(ratios.windows(2).all(|w| w[1] > w[0]));
}

#[test]
fn holomorphic_loop_vanishes() {
    let s = ResonantSystem::one_three();
    let cv = Curve::new(&s, c(0.02), c(-0.5), Chart::AtZero).unwrap();
    let centre = Complex64::new(0.5, 0.7);
    let pts: Vec<Complex64> = (0..12).map(|k| centre + Complex64::from_polar(0.01, 2.0 * PI * k as f64 / 12.0)).collect();
    let y0 = cv.q_factored(pts[0]).sqrt();
    let (v, y1) = loop_integral(&cv, &pts, y0, IntegrandForm::Holomorphic, &QuadOptions::default()).unwrap();
    assert!(v.norm() < 1e-12);
    assert!((y1 - y0).norm() < 1e-12 * y0.norm());
}

#[test]
fn residue_one_two() {
    let s = ResonantSystem::legacy_one_two(0.05);
    let cv = Curve::new(&s, c(0.01), c(-0.3), Chart::AtZero).unwrap();
    let r = residue_at_pole(&cv, IntegrandForm::Holomorphic, YNormalization::Monic, 1.0).unwrap();
    assert!((r.value - c(5.0)).norm() < 1e-8, "{:?}", r);
    assert!((r.contour_check - r.value).norm() < 1e-8);
    let raw = residue_at_pole(&cv, IntegrandForm::Holomorphic, YNormalization::Raw, 1.0).unwrap();
    assert!((raw.value - Complex64::new(0.0, -100.0)).norm() < 1e-6);
}

#[test]
fn pole_cycle_sum_is_two_pi() {
    let s = ResonantSystem::legacy_one_two(0.05);
    for (h0, j0) in [(0.01, -0.3), (0.02, -0.4)] {
        let v = pole_cycle_sum(&s, h0, j0).unwrap();
        assert!((v - c(2.0 * PI)).norm() < 1e-6, "{v}");
    }
}

#[test]
fn pole_cycle_sum_commutes() {
    let s = ResonantSystem::legacy_one_two(0.05);
    let cv = Curve::new(&s, c(0.01), c(-0.3), Chart::AtZero).unwrap();
    let l = cv.small_root_labels().unwrap();
    let o = QuadOptions::default();
    let f = IntegrandForm::PoleAtChartOrigin;
    let d0 = vanishing_cycle(&cv, &l, 0).unwrap();
    let d1 = vanishing_cycle(&cv, &l, 1).unwrap();
    let a = CycleChain { terms: vec![(1, d0), (1, d1)] }.integral(&cv, Determination::Vanishing, f, &o).unwrap();
    let b = CycleChain { terms: vec![(1, d1), (1, d0)] }.integral(&cv, Determination::Vanishing, f, &o).unwrap();
    assert!((a - b).norm() < 1e-14);
}

#[test]
fn orientation_and_linearity() {
    let s = ResonantSystem::one_three();
    let cv = Curve::new(&s, c(1e-3), c(-0.5), Chart::AtZero).unwrap();
    let l = cv.small_root_labels().unwrap();
    let o = QuadOptions::default();
    let f = IntegrandForm::Theta { u: 1, v: 0 };
    let det = Determination::Vanishing;
    let d0 = vanishing_cycle(&cv, &l, 0).unwrap();
    let d1 = vanishing_cycle(&cv, &l, 1).unwrap();
    let a = cycle_integral(&cv, &d0, det, f, &o).unwrap();
    let b = cycle_integral(&cv, &d0.reversed(), det, f, &o).unwrap();
    assert!((a + b).norm() < 1e-12 * a.norm().max(1.0));
    let i1 = cycle_integral(&cv, &d1, det, f, &o).unwrap();
    let chain = CycleChain { terms: vec![(2, d0), (-3, d1)] };
    let v = chain.integral(&cv, det, f, &o).unwrap();
    assert!((v - (a * 2.0 - i1 * 3.0)).norm() < 1e-12 * v.norm().max(1.0));
    let norm = chain.normalized();
    assert_eq!(norm.terms.len(), 2);
}

#[test]
fn vanishing_cycles_share_the_limit() {
    // (h/2) oint_{delta_k} dx/(x y) -> 2 pi / n for every k
    let s = ResonantSystem::one_three();
    let h = 1e-7;
    let cv = Curve::new(&s, c(h), c(-0.5), Chart::AtZero).unwrap();
    let l = cv.small_root_labels().unwrap();
    for k in 0..3 {
        let cy = vanishing_cycle(&cv, &l, k).unwrap();
        let v = cycle_integral(&cv, &cy, Determination::Vanishing, IntegrandForm::PoleAtChartOrigin, &QuadOptions::default()).unwrap()
            * (h / 2.0);
        assert!((v.re.abs() - 2.0 * PI / 3.0).abs() < 1e-2, "k={k} {v}");
    }
}

#[test]
fn node_doubling_certificate() {
    let s = ResonantSystem::one_three();
    let cv = Curve::new(&s, c(0.02), c(-0.5), Chart::AtZero).unwrap();
    let f = IntegrandForm::Theta { u: 1, v: 0 };
    let a = oval_integral(&cv, f, &QuadOptions::default()).unwrap();
    let b = oval_integral(&cv, f, &QuadOptions::default().scaled(1e-2)).unwrap();
    assert!((a - b).norm() < 1e-10);
}
