use fracmon::poly::BiPoly;
use fracmon::resonance::*;
use fracmon::spectrum::action_form_loop;
use fracmon::Complex64;
use proptest::prelude::*;
use std::f64::consts::PI;

fn coords() -> impl Strategy<Value = (f64, f64, f64, f64)> {
    (-1.5f64..1.5, -1.5f64..1.5, -1.5f64..1.5, -1.5f64..1.5)
}

fn coprime() -> impl Strategy<Value = (u32, u32)> {
    prop_oneof![Just((1, 2)), Just((1, 3)), Just((1, 4)), Just((2, 3)), Just((3, 4)), Just((2, 5)), Just((3, 5))]
}

fn polar(r: f64, t: f64) -> Complex64 {
    Complex64::from_polar(r, t)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn syzygy_holds_on_real_points((q1, p1, q2, p2) in coords(), (m, n) in coprime()) {
        let t = invariant_polys(&PhasePoint::real(q1, p1, q2, p2), m, n);
        prop_assert!(t.syzygy_residual(m, n) < 1e-10);
    }

    #[test]
    fn syzygy_holds_on_complex_points((q1, p1, q2, p2) in coords(), (a, b, c, d) in coords(), (m, n) in coprime()) {
        let z = |x: f64, y: f64| Complex64::new(x, y);
        let p = PhasePoint { q1: z(q1, a), p1: z(p1, b), q2: z(q2, c), p2: z(p2, d) };
        prop_assert!(invariant_polys(&p, m, n).syzygy_residual(m, n) < 1e-10);
    }

    #[test]
    fn cstar_action_preserves_invariants((q1, p1, q2, p2) in coords(), r in 0.5f64..2.0, arg in -PI..PI, (m, n) in coprime()) {
        let p = PhasePoint::real(q1, p1, q2, p2);
        let before = invariant_polys(&p, m, n);
        let moved = PhasePoint::from_xi_eta(cstar_action(polar(r, arg), p.to_xi_eta(), m, n).unwrap());
        let after = invariant_polys(&moved, m, n);
        let scale = [before.j, before.pi1, before.pi2, before.pi3].iter().map(|z| z.norm()).fold(1.0, f64::max);
        prop_assert!(after.max_diff(&before) < 1e-10 * scale);
    }

    #[test]
    fn charts_agree_after_shift(h in -0.5f64..0.5, hi in -0.1f64..0.1, j in -0.8f64..0.8, ji in -0.1f64..0.1) {
        let (h, j) = (Complex64::new(h, hi), Complex64::new(j, ji));
        for s in [ResonantSystem::legacy_one_two(0.05), ResonantSystem::one_three(), ResonantSystem::two_three()] {
            let zero = build_q(&s, h, j, Chart::AtZero).unwrap();
            let two = build_q(&s, h, j, Chart::AtTwoJ).unwrap();
            prop_assert!(zero.poly.shift(j * 2.0).max_abs_diff(&two.poly) < 1e-12 * zero.poly.norm().max(1.0));
        }
    }
}

#[test]
fn cstar_examples() {
    let p = PhasePoint::real(0.3, -0.7, 1.1, 0.2);
    let v = p.to_xi_eta();
    assert_eq!(cstar_action(Complex64::new(1.0, 0.0), v, 2, 3).unwrap(), v);
    assert!(cstar_action(Complex64::new(0.0, 0.0), v, 2, 3).is_err());
    for (lambda, m, n, tol) in [(polar(1.0, PI / 4.0), 1, 2, 1e-12), (Complex64::new(2.0, 0.0), 2, 3, 1e-10)] {
        let before = invariant_polys(&p, m, n);
        let after = invariant_polys(&PhasePoint::from_xi_eta(cstar_action(lambda, v, m, n).unwrap()), m, n);
        assert!(after.max_diff(&before) < tol);
    }
}

#[test]
fn unperturbed_roots_at_the_critical_line() {
    let s = ResonantSystem::new(1, 3, 2, 1, BiPoly { terms: vec![] });
    let j = Complex64::new(-0.5, 0.0);
    let q = build_q(&s, Complex64::new(0.0, 0.0), j, Chart::AtZero).unwrap();
    let want = fracmon::poly::Poly::from_roots(&[0.0, 0.0, 0.0, -1.0].map(|x| Complex64::new(x, 0.0)), Complex64::new(1.0, 0.0));
    assert!(q.poly.max_abs_diff(&want) < 1e-15);
}

#[test]
fn equal_perturbations_give_equal_polynomials() {
    let moved = ResonantSystem::new(1, 3, 3, 1, BiPoly { terms: vec![(1, 0, -1.0), (0, 1, -1.0)] });
    let (h, j) = (Complex64::new(0.07, 0.01), Complex64::new(-0.3, 0.0));
    for chart in [Chart::AtZero, Chart::AtTwoJ] {
        let a = build_q(&ResonantSystem::one_three(), h, j, chart).unwrap();
        let b = build_q(&moved, h, j, chart).unwrap();
        assert!(a.poly.max_abs_diff(&b.poly) < 1e-14);
    }
}

fn quadrilateral(h: (f64, f64), j: (f64, f64)) -> impl Strategy<Value = Vec<(f64, f64)>> {
    proptest::collection::vec((h.0..h.1, j.0..j.1), 4)
}

fn perimeter(v: &[(f64, f64)]) -> f64 {
    (0..v.len())
        .map(|i| {
            let (a, b) = (v[i], v[(i + 1) % v.len()]);
            (a.0 - b.0).hypot(a.1 - b.1)
        })
        .sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(5))]

    #[test]
    fn action_form_is_closed_above_the_critical_line(v in quadrilateral((0.03, 0.2), (-0.18, 0.18))) {
        let x = action_form_loop(&ResonantSystem::one_three(), &v, (1, 0)).unwrap();
        prop_assert!(x.abs() < 1e-6 * perimeter(&v), "loop integral {x:e}");
    }

    #[test]
    fn action_form_is_closed_below_the_critical_line(v in quadrilateral((-0.7, -0.05), (-0.18, 0.18))) {
        let x = action_form_loop(&ResonantSystem::one_three(), &v, (1, 0)).unwrap();
        prop_assert!(x.abs() < 1e-6 * perimeter(&v), "loop integral {x:e}");
    }
}
