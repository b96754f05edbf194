use fblab_core::measure::{
    c_alpha, density_conversion_bound, density_report, generate_set, lebesgue_density, mu_alpha_interval,
    mu_density, MuAlpha, RadialSet, SetSpec,
};
use proptest::prelude::*;

/// Composite Simpson rule for `c_α x^{2α+1}` restricted to the set.
fn mu_brute(alpha: f64, set: &RadialSet, lo: f64, hi: f64, n: usize) -> f64 {
    let h = (hi - lo) / n as f64;
    let c = c_alpha(alpha);
    let f = |x: f64| c * x.powf(2.0 * alpha + 1.0);
    let mut sum = 0.0;
    for i in 0..n {
        let a = lo + i as f64 * h;
        if set.contains(a + 0.5 * h) {
            sum += h / 6.0 * (f(a) + 4.0 * f(a + 0.5 * h) + f(a + h));
        }
    }
    sum
}

#[test]
fn mu_examples() {
    // μ_0([0,1]) = π, μ_{1/2}([0,1]) = 4π/3
    let pi = std::f64::consts::PI;
    assert!((mu_alpha_interval(0.0, 0.0, 1.0).unwrap() - pi).abs() < 1e-14);
    assert!((mu_alpha_interval(0.5, 0.0, 1.0).unwrap() - 4.0 * pi / 3.0).abs() < 1e-14);
    let full = RadialSet::full(10.0).unwrap();
    for &alpha in &[-0.3, 0.0, 0.5, 2.0] {
        let exact = mu_alpha_interval(alpha, 0.3, 2.7).unwrap();
        let brute = mu_brute(alpha, &full, 0.3, 2.7, 4000);
        assert!((exact - brute).abs() < 1e-10 * exact, "{alpha}");
    }
}

#[test]
fn set_measure_against_pointwise_oracle() {
    let e = RadialSet::periodic(1.0, vec![[0.0, 0.25], [0.5, 0.625]], 100.0).unwrap();
    let mu = MuAlpha::new(0.5).unwrap();
    // endpoints sit on panel boundaries, so each panel is inside or outside
    let brute = mu_brute(0.5, &e, 0.0, 6.0, 6 * 64);
    assert!((e.mu_measure(&mu, 0.0, 6.0) - brute).abs() < 1e-10 * brute);
    assert!((e.lebesgue_measure(0.0, 6.0) - 6.0 * 0.375).abs() < 1e-14);
}

#[test]
fn long_tail_measure_keeps_precision() {
    let mu = MuAlpha::new(1.0).unwrap();
    let a = 1.0e4;
    let got = mu.interval(a, a + 1e-6);
    let want = c_alpha(1.0) * a.powi(3) * 1e-6;
    assert!((got - want).abs() < 1e-6 * want);
}

#[test]
fn lebesgue_density_matches_window_scan() {
    let e = RadialSet::periodic(1.7, vec![[0.2, 0.9], [1.1, 1.4]], 1000.0).unwrap();
    let exact = lebesgue_density(&e, 1.0).unwrap();
    // scan windows over many periods with a pointwise count
    let mut brute = f64::INFINITY;
    for i in 0..20_000 {
        let r = i as f64 * 0.005;
        let inside = (0..2000).filter(|k| e.contains(r + (*k as f64 + 0.5) / 2000.0)).count();
        brute = brute.min(inside as f64 / 2000.0);
    }
    assert!((exact.gamma - brute).abs() < 2e-3, "{} {brute}", exact.gamma);
    assert!(exact.gamma <= brute + 1e-3);
}

#[test]
fn periodic_half_density() {
    let e = generate_set(
        &SetSpec::Periodic { period: 1.0, blocks: vec![[0.0, 0.5]] },
        1000.0,
        0,
    )
    .unwrap();
    let rep = density_report(0.5, &e, 1.0).unwrap();
    assert!((rep.gamma_lebesgue - 0.5).abs() < 1e-14);
    // worst window starts at the origin where the weight favours [1/2, 1]
    let mu_first = e.mu_measure(&MuAlpha::new(0.5).unwrap(), 0.0, 1.0) / mu_alpha_interval(0.5, 0.0, 1.0).unwrap();
    assert!((rep.gamma_mu - mu_first).abs() < 1e-12);
    assert!((mu_first - 1.0 / 8.0).abs() < 1e-14);
    assert!(rep.argmin_r < 1e-9);
}

#[test]
fn conversion_bound_holds() {
    let specs = [
        SetSpec::Periodic { period: 1.0, blocks: vec![[0.0, 0.5]] },
        SetSpec::Periodic { period: 0.7, blocks: vec![[0.3, 0.5]] },
        SetSpec::RandomUnion { gamma: 0.3, window: 1.0 },
        SetSpec::ComplementThin { first_gap: 0.5 },
    ];
    for spec in &specs {
        let e = generate_set(spec, 200.0, 9).unwrap();
        let gamma = lebesgue_density(&e, 1.0).unwrap().gamma;
        for &alpha in &[0.0, 0.5, 1.0, 2.0] {
            let g_mu = mu_density(alpha, &e, 1.0).unwrap().gamma;
            let bound = density_conversion_bound(alpha, gamma).unwrap();
            assert!(g_mu >= bound, "{spec:?} alpha={alpha} {g_mu} < {bound}");
        }
    }
}

#[test]
fn random_union_meets_requested_density() {
    for &gamma in &[0.1, 0.3, 0.6, 0.9] {
        for seed in 0..4 {
            let spec = SetSpec::RandomUnion { gamma, window: 1.0 };
            let e = generate_set(&spec, 300.0, seed).unwrap();
            let got = lebesgue_density(&e, 1.0).unwrap().gamma;
            assert!(got >= gamma - 1e-12, "gamma={gamma} seed={seed} got={got}");
            assert_eq!(e, generate_set(&spec, 300.0, seed).unwrap());
        }
    }
    let a = generate_set(&SetSpec::RandomUnion { gamma: 0.3, window: 1.0 }, 50.0, 1).unwrap();
    let b = generate_set(&SetSpec::RandomUnion { gamma: 0.3, window: 1.0 }, 50.0, 2).unwrap();
    assert_ne!(a, b);
}

#[test]
fn complement_thin_is_relatively_dense() {
    let e = generate_set(&SetSpec::ComplementThin { first_gap: 0.5 }, 500.0, 0).unwrap();
    assert!(!e.contains(1.5) && e.contains(1.0) && e.contains(2.1));
    let rep = density_report(1.0, &e, 1.0).unwrap();
    assert!((rep.gamma_lebesgue - 0.5).abs() < 1e-12);
    assert!(rep.gamma_mu > 0.0);
}

#[test]
fn invalid_specs() {
    assert!(generate_set(&SetSpec::Periodic { period: 1.0, blocks: vec![[0.0, 1.0]] }, 10.0, 0).is_err());
    assert!(generate_set(&SetSpec::RandomUnion { gamma: 0.0, window: 1.0 }, 10.0, 0).is_err());
    assert!(generate_set(&SetSpec::RandomUnion { gamma: 0.5, window: -1.0 }, 10.0, 0).is_err());
    assert!(generate_set(&SetSpec::ComplementThin { first_gap: 1.0 }, 10.0, 0).is_err());
    let e = RadialSet::new(vec![[0.0, 1.0]], None, 5.0).unwrap();
    assert!(lebesgue_density(&e, 6.0).is_err());
    assert!(mu_density(-0.5, &e, 1.0).is_err());
}

fn block() -> impl Strategy<Value = [f64; 2]> {
    (0.0f64..0.9, 0.01f64..0.5).prop_map(|(a, len)| [a, (a + len).min(1.0)])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn mu_is_additive(alpha in -0.45f64..4.0, a in 0.0f64..50.0, l1 in 0.0f64..10.0, l2 in 0.0f64..10.0) {
        let mu = MuAlpha::new(alpha).unwrap();
        let (b, c) = (a + l1, a + l1 + l2);
        let whole = mu.interval(a, c);
        prop_assert!((whole - mu.interval(a, b) - mu.interval(b, c)).abs() <= 1e-12 * whole.max(1e-300));
    }

    #[test]
    fn densities_grow_with_the_set(base in block(), extra in block(), alpha in 0.0f64..2.0) {
        let small = RadialSet::from_union(vec![base], Some(1.0), 60.0).unwrap();
        let big = small.with_added(&[extra]).unwrap();
        let ls = lebesgue_density(&small, 1.0).unwrap().gamma;
        let lb = lebesgue_density(&big, 1.0).unwrap().gamma;
        prop_assert!(lb >= ls - 1e-12);
        let ms = small.mu_measure(&MuAlpha::new(alpha).unwrap(), 0.0, 60.0);
        let mb = big.mu_measure(&MuAlpha::new(alpha).unwrap(), 0.0, 60.0);
        prop_assert!(mb >= ms * (1.0 - 1e-12));
    }

    #[test]
    fn densities_lie_in_unit_interval(base in block(), alpha in -0.4f64..3.0) {
        let e = RadialSet::from_union(vec![base], Some(1.0), 40.0).unwrap();
        let rep = density_report(alpha, &e, 1.0).unwrap();
        prop_assert!((0.0..=1.0).contains(&rep.gamma_lebesgue));
        prop_assert!((0.0..=1.0).contains(&rep.gamma_mu));
    }
}
