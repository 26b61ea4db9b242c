use fracmon::discriminant::*;
use fracmon::resonance::{build_q, Chart, ResonantSystem};
use fracmon::roots::{all_roots_poly, min_pairwise_gap};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use std::f64::consts::PI;

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn systems() -> Vec<ResonantSystem> {
    vec![ResonantSystem::legacy_one_two(0.05), ResonantSystem::one_three(), ResonantSystem::two_three()]
}

fn relative_gap(qn: &TriPoly, h: Complex64, j: Complex64) -> f64 {
    let r = all_roots_poly(&qn.to_poly(h, j)).unwrap();
    min_pairwise_gap(&r) / r.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

#[test]
fn locus_points_have_multiple_roots() {
    for s in systems() {
        let qn = principal_part(&s);
        let loc = discriminant_locus(&s);
        for k in 0..10 {
            let mag = 0.05 + 0.05 * k as f64;
            for j in [c(-mag), c(mag)] {
                for h in &loc.branches(j)[1..] {
                    let g = relative_gap(&qn, *h, j);
                    assert!(g < 1e-6, "{}:-{} j={j} h={h} gap {g}", s.m, s.n);
                }
            }
        }
    }
}

#[test]
fn off_locus_roots_are_separated() {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
    for s in systems() {
        let loc = discriminant_locus(&s);
        let q_full = |h: Complex64, j: Complex64| build_q(&s, h, j, Chart::AtZero).unwrap();
        let mut count = 0;
        while count < 100 {
            let h = Complex64::new(rng.gen_range(-0.8..0.8), rng.gen_range(-0.8..0.8));
            let j = c(rng.gen_range(-0.5..0.5));
            if loc.branches(j).iter().any(|b| (h - b).norm() < 0.1) {
                continue;
            }
            count += 1;
            let r = all_roots_poly(&q_full(h, j).poly).unwrap();
            let g = min_pairwise_gap(&r) / r.iter().map(|z| z.norm()).fold(0.0, f64::max);
            assert!(g > 1e-4, "{}:-{} h={h} j={j} gap {g}", s.m, s.n);
        }
    }
}

#[test]
fn principal_part_is_quasi_homogeneous() {
    let s = ResonantSystem::legacy_one_two(0.05);
    let qn = principal_part(&s);
    let (x, j, h) = (Complex64::new(0.3, 0.1), c(-0.2), Complex64::new(0.01, -0.02));
    for r in [0.5f64, 2.0, 3.7] {
        let lhs = qn.eval(x * r * r, j * r * r, h * r.powi(3));
        let rhs = qn.eval(x, j, h) * r.powi(6);
        assert!((lhs - rhs).norm() < 1e-12 * rhs.norm().max(1e-12));
    }
}

#[test]
fn asymptotic_roots_one_three() {
    let s = ResonantSystem::one_three();
    let a = asymptotic_roots(&s, c(1e-3), c(-0.5)).unwrap();
    assert_eq!(a.chart, Chart::AtZero);
    for (k, z) in a.small_roots.iter().enumerate() {
        assert!((z.norm() - 1e-2).abs() < 1e-12);
        let want = 2.0 * PI * k as f64 / 3.0;
        let d = (z.arg() - want).rem_euclid(2.0 * PI);
        assert!(d < 1e-9 || (2.0 * PI - d) < 1e-9);
    }
    let q = build_q(&s, c(1e-3), c(-0.5), Chart::AtZero).unwrap();
    let all = all_roots_poly(&q.poly).unwrap();
    let (matched, large) = split_small(&all, &a.small_roots);
    assert_eq!(large.len(), 7);
    for (m, z) in matched.iter().zip(&a.small_roots) {
        // correction of relative order h^(2/3)
        assert!((m - z).norm() < 5.0 * 1e-2 * (1e-3f64).powf(2.0 / 3.0), "{m} vs {z}");
    }
}

#[test]
fn asymptotic_roots_two_three_right() {
    let s = ResonantSystem::two_three();
    let a = asymptotic_roots(&s, c(1e-4), c(0.5)).unwrap();
    assert_eq!(a.chart, Chart::AtTwoJ);
    assert_eq!(a.small_roots.len(), 2);
    assert!((a.small_roots[0].norm() - 1e-4).abs() < 1e-14);
    assert!(((a.small_roots[1].arg()).abs() - PI).abs() < 1e-9);
    let q = build_q(&s, c(1e-4), c(0.5), Chart::AtTwoJ).unwrap();
    let all = all_roots_poly(&q.poly).unwrap();
    let (matched, _) = split_small(&all, &a.small_roots);
    for (m, z) in matched.iter().zip(&a.small_roots) {
        assert!((m - z).norm() < 1e-2 * z.norm());
    }
}

#[test]
fn asymptotic_guards() {
    let s = ResonantSystem::one_three();
    assert!(asymptotic_roots(&s, c(1e-3), c(0.0)).is_err());
    assert!(asymptotic_roots(&s, c(0.2), c(-0.5)).is_err());
    let z = asymptotic_roots(&s, c(0.0), c(-0.5)).unwrap();
    assert!(z.small_roots.iter().all(|r| r.norm() == 0.0));
}

#[test]
fn equal_argument_spacing() {
    for s in systems() {
        for j in [c(-0.3), c(0.3)] {
            let (r, _) = small_root_leading_terms(&s, Complex64::new(1e-4, 2e-5), j);
            let k = r.len() as f64;
            for w in r.windows(2) {
                let d = (w[1] / w[0]).arg().rem_euclid(2.0 * PI);
                assert!((d - 2.0 * PI / k).abs() < 1e-9);
                assert!((w[1].norm() - w[0].norm()).abs() < 1e-15);
            }
        }
    }
}

#[test]
fn root_products() {
    let s = ResonantSystem::one_three();
    let (h, j) = (c(1e-3), c(-0.5));
    let q = build_q(&s, h, j, Chart::AtZero).unwrap();
    let r = all_roots_poly(&q.poly).unwrap();
    let res = root_product_check(&r, &s, h, j).unwrap();
    assert!(res.all < 1e-8, "{res:?}");
    // the small-root identity holds to leading order; relative correction ~ h^(2/3)
    assert!(res.small < 0.1 && res.large < 0.1, "{res:?}");

    let s = ResonantSystem::legacy_one_two(0.05);
    let (h, j) = (c(1e-3), c(-0.3));
    let q = build_q(&s, h, j, Chart::AtZero).unwrap();
    let r = all_roots_poly(&q.poly).unwrap();
    let res = root_product_check(&r, &s, h, j).unwrap();
    assert!(res.all < 1e-8, "{res:?}");
    assert!(res.small < 1e-2 && res.large < 1e-2, "{res:?}");
    assert!(root_product_check(&r[1..], &s, h, j).is_err());
    let zero = root_product_check(&all_roots_poly(&build_q(&s, c(0.0), j, Chart::AtZero).unwrap().poly).unwrap(), &s, c(0.0), j).unwrap();
    assert_eq!(zero.small, 0.0);
}
