use fracmon::discriminant::asymptotic_roots;
use fracmon::integrals::{cycle_integral, theta, Curve, CycleChain, Determination, IntegrandForm, ThetaMode};
use fracmon::quad::QuadOptions;
use fracmon::resonance::{Chart, ResonantSystem};
use fracmon::roots::{ParameterPath, Segment};
use fracmon::transport::{continue_chain, continue_integral, transport_cycle, LocalBasis, LocalChain, LocalCycle, TransportOptions};
use fracmon::{Complex64, Error};
use std::f64::consts::PI;

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

const FORMS: [IntegrandForm; 3] = [IntegrandForm::Theta { u: 1, v: 0 }, IntegrandForm::Tau, IntegrandForm::Holomorphic];

fn oval_chain(s: &ResonantSystem, h0: f64, j0: f64) -> (Curve, LocalBasis, CycleChain) {
    let start = Curve::new(s, c(h0), c(j0), Chart::for_j(j0)).unwrap();
    let basis = LocalBasis::at(&start).unwrap();
    let chain = CycleChain::single(basis.oval);
    (start, basis, chain)
}

fn opts(j0: f64) -> TransportOptions {
    TransportOptions::new(Chart::for_j(j0))
}

#[test]
fn trivial_path_keeps_chain_and_values() {
    let s = ResonantSystem::legacy_one_two(0.05);
    let (start, _, chain) = oval_chain(&s, 0.005, -0.3);
    let r = transport_cycle(&s, &chain, &ParameterPath::constant(0.005, -0.3), &FORMS, &opts(-0.3)).unwrap();
    assert_eq!(r.semicircles, 0);
    assert_eq!(r.final_local, "delta");
    assert_eq!(r.final_chain.normalized(), chain.normalized());
    for sr in &r.continued_integrals {
        let direct = cycle_integral(&start, &chain.terms[0].1, Determination::OfCycle, sr.form, &QuadOptions::default()).unwrap();
        assert!((sr.last() - direct).norm() < 1e-12 * direct.norm().max(1.0));
    }
}

#[test]
fn legacy_semicircle_adds_the_vanishing_cycle() {
    let s = ResonantSystem::legacy_one_two(0.05);
    let (_, _, chain) = oval_chain(&s, 0.005, -0.3);
    let r = transport_cycle(&s, &chain, &ParameterPath::semicircles(-0.3, 0.005, 1), &FORMS, &opts(-0.3)).unwrap();
    assert_eq!(r.final_local, "delta + delta_0");
    assert!(r.max_discrepancy < 1e-6, "{}", r.max_discrepancy);
    assert!(r.permutation_used.cycles().len() == 1);
}

#[test]
fn one_three_semicircle_chains() {
    let s = ResonantSystem::one_three();
    let (_, _, chain) = oval_chain(&s, 0.002, -0.5);
    let want = ["delta + delta_0", "delta - delta_0 + delta_1", "delta + delta_0 - delta_1 + delta_2"];
    for (k, w) in want.iter().enumerate() {
        let path = ParameterPath::semicircles(-0.5, 0.002, k + 1);
        let r = transport_cycle(&s, &chain, &path, &FORMS, &opts(-0.5)).unwrap();
        assert_eq!(&r.final_local, w);
        assert!(r.max_discrepancy < 1e-6, "{} {}", w, r.max_discrepancy);
    }
}

#[test]
fn clockwise_and_negative_start() {
    let s = ResonantSystem::one_three();
    let (_, _, chain) = oval_chain(&s, 0.002, -0.5);
    let back = ParameterPath::semicircles_from(-0.5, 0.002, 0.0, -PI, 1);
    let r = transport_cycle(&s, &chain, &back, &FORMS, &opts(-0.5)).unwrap();
    assert_eq!(r.final_local, "delta + delta_2");
    assert!(r.max_discrepancy < 1e-6);
    let (_, _, neg) = oval_chain(&s, -0.002, -0.5);
    let path = ParameterPath::semicircles_from(-0.5, 0.002, PI, PI, 1);
    let r = transport_cycle(&s, &neg, &path, &FORMS, &opts(-0.5)).unwrap();
    assert_eq!(r.final_local, "delta - delta_0");
    assert!(r.max_discrepancy < 1e-6);
}

#[test]
fn symbolic_rule_inverts() {
    let d = LocalChain::of(LocalCycle::Oval);
    for sigma in [1, -1] {
        let there = d.semicircle(3, sigma);
        assert_eq!(there.semicircle_back(3, -sigma), d);
    }
    assert_eq!(d.transported(4, 2, 1), d.transported(2, 2, 1).transported(2, 2, 1));
}

#[test]
fn composition_of_paths() {
    let s = ResonantSystem::one_three();
    let (_, _, chain) = oval_chain(&s, 0.002, -0.5);
    let a = ParameterPath::semicircles(-0.5, 0.002, 1);
    let b = ParameterPath::semicircles_from(-0.5, 0.002, PI, PI, 1);
    let ab = transport_cycle(&s, &chain, &a.clone().then(b.clone()), &FORMS, &opts(-0.5)).unwrap();
    let ra = transport_cycle(&s, &chain, &a, &FORMS, &opts(-0.5)).unwrap();
    // restate A's result on B's own root labels
    let mid = Curve::new(&s, c(-0.002), c(-0.5), Chart::AtZero).unwrap();
    let mid_basis = LocalBasis::at(&mid).unwrap();
    let mut local = LocalChain::default();
    local.add(LocalCycle::Oval, 1);
    local.add(LocalCycle::Vanishing(0), 1);
    assert_eq!(ra.final_local, local.display());
    let rb = transport_cycle(&s, &mid_basis.to_chain(&local), &b, &FORMS, &opts(-0.5)).unwrap();
    assert_eq!(rb.final_local, ab.final_local);
    for (x, y) in ab.continued_integrals.iter().zip(&rb.continued_integrals) {
        assert!((x.last() - y.last()).norm() < 1e-8 * x.last().norm().max(1.0), "{:?}", x.form);
    }
}

#[test]
fn closed_loop_off_the_critical_line_is_trivial() {
    let s = ResonantSystem::legacy_one_two(0.05);
    let (_, _, chain) = oval_chain(&s, 0.01, -0.3);
    let pts = [c(0.01), Complex64::new(0.015, 0.004), Complex64::new(0.02, 0.0), Complex64::new(0.015, -0.004), c(0.01)];
    let segs = pts
        .windows(2)
        .map(|w| Segment::ComplexSegment { h_start: w[0], j_start: c(-0.3), h_end: w[1], j_end: c(-0.3) })
        .collect();
    let r = transport_cycle(&s, &chain, &ParameterPath::new(segs), &FORMS, &opts(-0.3)).unwrap();
    assert_eq!(r.final_local, "delta");
    for sr in &r.continued_integrals {
        assert!((sr.last() - sr.values[0]).norm() < 1e-8 * sr.values[0].norm().max(1.0), "{:?}", sr.form);
    }
}

#[test]
fn orientation_flips_continued_values() {
    let s = ResonantSystem::legacy_one_two(0.05);
    let (_, basis, _) = oval_chain(&s, 0.005, -0.3);
    let path = ParameterPath::semicircles(-0.3, 0.005, 1);
    let o = opts(-0.3);
    let f = IntegrandForm::Theta { u: 1, v: 0 };
    let a = continue_integral(&s, f, basis.oval, &path, &o).unwrap();
    let b = continue_integral(&s, f, basis.oval.reversed(), &path, &o).unwrap();
    assert!((a + b).norm() < 1e-12);
}

#[test]
fn continued_theta_minus_direct_is_delta0() {
    let s = ResonantSystem::legacy_one_two(0.05);
    let (_, basis, _) = oval_chain(&s, 0.005, -0.3);
    let f = IntegrandForm::Theta { u: 1, v: 0 };
    let cont = continue_chain(&s, &CycleChain::single(basis.oval), &ParameterPath::semicircles(-0.3, 0.005, 1), &[f], &opts(-0.3)).unwrap();
    let end = Curve::with_roots(&s, c(-0.005), c(-0.3), Chart::AtZero, cont.end.roots.clone()).unwrap();
    let eb = LocalBasis::at(&end).unwrap();
    let o = QuadOptions::default();
    let direct = cycle_integral(&end, &eb.oval, Determination::OfCycle, f, &o).unwrap();
    let d0 = cycle_integral(&end, &eb.vanishing[0], Determination::OfCycle, f, &o).unwrap();
    assert!((cont.series[0].last() - direct - d0).norm() < 1e-6);
    // half-period jump is pi
    assert!(((cont.series[0].last() - direct).re / 2.0 - PI).abs() < 1e-6);
}

#[test]
fn arctan_model_along_the_arc() {
    let s = ResonantSystem::one_three();
    let h0 = 1e-5;
    let plus = theta(&s, h0, -0.5, ThetaMode::SingularPart, (1, 0)).unwrap().re;
    let minus = theta(&s, -h0, -0.5, ThetaMode::SingularPart, (1, 0)).unwrap().re;
    assert!((plus - PI / 3.0).abs() < 1e-2 * PI / 3.0, "{plus}");
    assert!((minus + PI / 3.0).abs() < 1e-2 * PI / 3.0, "{minus}");
    let (_, basis, _) = oval_chain(&s, h0, -0.5);
    let f = IntegrandForm::Theta { u: 1, v: 0 };
    let cont = continue_chain(&s, &CycleChain::single(basis.oval), &ParameterPath::semicircles(-0.5, h0, 1), &[f], &opts(-0.5)).unwrap();
    let re: Vec<f64> = cont.series[0].values.iter().map(|v| v.re / 2.0).collect();
    assert!(re.windows(2).all(|w| w[1] >= w[0] - 1e-9), "{re:?}");
    // continued end value is the direct value plus the jump 2 pi / n
    let jump = re.last().unwrap() - minus;
    assert!((jump - 2.0 * PI / 3.0).abs() < 1e-2, "{jump}");
}

#[test]
fn two_semicircles_have_no_theta_jump_in_the_limit() {
    let s = ResonantSystem::one_three();
    let f = IntegrandForm::Theta { u: 1, v: 0 };
    let mut last = f64::INFINITY;
    for &h0 in &[4e-3, 1e-3, 2.5e-4] {
        let start = Curve::new(&s, c(h0), c(-0.5), Chart::AtZero).unwrap();
        let b = LocalBasis::at(&start).unwrap();
        let mut l = LocalChain::default();
        l.add(LocalCycle::Vanishing(0), -1);
        l.add(LocalCycle::Vanishing(1), 1);
        let v = b.to_chain(&l).integral(&start, Determination::OfCycle, f, &QuadOptions::default()).unwrap().norm() / 2.0;
        assert!(v < last);
        last = v;
    }
    assert!(last < 1e-2, "{last}");
}

#[test]
fn vanishing_endpoints_match_asymptotics() {
    let s = ResonantSystem::one_three();
    let h = 1e-3;
    let curve = Curve::new(&s, c(h), c(-0.5), Chart::AtZero).unwrap();
    let labels = curve.small_root_labels().unwrap();
    let asym = asymptotic_roots(&s, c(h), c(-0.5)).unwrap();
    let b = LocalBasis::at(&curve).unwrap();
    for (k, cy) in b.vanishing.iter().enumerate() {
        assert_eq!(cy.start, labels[k]);
        assert_eq!(cy.end, labels[(k + 1) % 3]);
        assert!((curve.roots[cy.start] - asym.small_roots[k]).norm() < 10.0 * h.powf(4.0 / 3.0));
    }
}

#[test]
fn unsupported_paths_are_rejected() {
    let s = ResonantSystem::legacy_one_two(0.05);
    let (_, _, chain) = oval_chain(&s, 0.005, -0.3);
    let big = ParameterPath::semicircles(-0.3, 0.5, 1);
    assert!(matches!(transport_cycle(&s, &chain, &big, &FORMS, &opts(-0.3)), Err(Error::InvalidInput(_))));
    let quarter = ParameterPath::semicircles_from(-0.3, 0.005, 0.0, PI / 2.0, 1);
    let e = transport_cycle(&s, &chain, &quarter, &FORMS, &opts(-0.3));
    assert!(matches!(e, Err(Error::InvalidInput(_))), "{e:?}");
}
