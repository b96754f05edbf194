use fblab_core::bessel::hiprec::j_reference;
use fblab_core::bessel::{decompose_exponentials, j_asymptotic, j_eval, j_series, kernel_zeros, BesselOrder};
use fblab_core::inequality::decomposition_residual;
use proptest::prelude::*;

fn order(alpha: f64) -> BesselOrder {
    BesselOrder::new(alpha).unwrap()
}

#[test]
fn eval_examples() {
    let o = order(2.5);
    let want = j_reference(2.5, 50.0);
    assert!((j_eval(&o, 50.0) - want).abs() < 1e-10 * want.abs().max(o.envelope(50.0)));
    let near = order(-0.499);
    assert!((j_eval(&near, 1.0) - 1f64.cos()).abs() < 2e-3);
}

#[test]
fn half_order_closed_form() {
    let o = order(0.5);
    for i in 1..400 {
        let x = 0.37 * i as f64;
        assert!((o.eval(x) - x.sin() / x).abs() < 1e-14, "{x}");
    }
    let o = order(1.5);
    for i in 1..400 {
        let x = 0.41 * i as f64;
        let exact = 3.0 * (x.sin() - x * x.cos()) / x.powi(3);
        assert!((o.eval(x) - exact).abs() < 1e-13, "{x}");
    }
}

#[test]
fn asymptotic_remainder_is_bounded() {
    for &alpha in &[0.0, 0.3, 1.5] {
        let o = order(alpha);
        let mut x = 5.13;
        while x < 200.0 {
            let (tilde, bound) = j_asymptotic(&o, x).unwrap();
            let err = (j_reference(alpha, x) - tilde).abs();
            assert!(err <= bound * 1.05, "alpha={alpha} x={x} err={err:e} bound={bound:e}");
            x += 0.731;
        }
    }
    assert!(j_asymptotic(&order(0.0), 0.0).is_err());
}

#[test]
fn order_zero_zeros() {
    let z = kernel_zeros(&order(0.0), 3).unwrap();
    let want = [2.404_825_557_695_773, 5.520_078_110_286_311, 8.653_727_912_911_013];
    for (a, b) in z.iter().zip(want) {
        assert!((a - b).abs() < 1e-12, "{a} {b}");
    }
}

#[test]
fn zeros_interlace_with_next_order() {
    let a = kernel_zeros(&order(0.7), 20).unwrap();
    let b = kernel_zeros(&order(1.7), 20).unwrap();
    for i in 0..19 {
        assert!(a[i] < b[i] && b[i] < a[i + 1]);
    }
}

#[test]
fn decomposition_low_orders() {
    let grid: Vec<f64> = (0..2000).map(|i| 1.0 + 0.25 * i as f64).collect();
    for m in 0..=3 {
        let r = decomposition_residual(m, &grid).unwrap();
        assert!(r < 1e-12, "m={m} residual={r:e}");
    }
}

#[test]
fn decomposition_high_orders_within_conditioning() {
    // beyond m = 3 the sum cancels near s ~ 1, so compare with the size of
    // the individual terms rather than with a fixed tolerance
    for m in 4..=6u32 {
        let dec = decompose_exponentials(m);
        let alpha = m as f64 + 0.5;
        for i in 0..300 {
            let s = 1.0 + 0.5 * i as f64;
            let terms: f64 = dec
                .plus
                .iter()
                .enumerate()
                .map(|(k, c)| 2.0 * c.norm() * s.powi(-(m as i32) - 1 - k as i32))
                .sum();
            let scale = j_reference(alpha, s).abs().max(s.powi(-(m as i32) - 1));
            let allowed = 64.0 * f64::EPSILON * terms / scale;
            let r = decomposition_residual(m, &[s]).unwrap();
            assert!(r <= allowed.max(1e-12), "m={m} s={s} r={r:e} allowed={allowed:e}");
        }
    }
}

#[test]
fn decomposition_real_part_matches_eval() {
    for m in 0..=6 {
        let dec = decompose_exponentials(m);
        for &s in &[1.5, 7.0, 40.0] {
            let z = dec.reconstruct(s);
            assert!((z.re - dec.eval(s)).abs() <= 1e-12 * z.re.abs().max(1e-3));
        }
    }
}

proptest! {
    #[test]
    fn value_at_origin(alpha in -0.49f64..8.0) {
        prop_assert_eq!(order(alpha).eval(0.0), 1.0);
    }

    #[test]
    fn bounded_by_one(alpha in -0.49f64..6.0, x in 0.0f64..600.0) {
        prop_assert!(order(alpha).eval(x).abs() <= 1.0 + 1e-14);
    }

    #[test]
    fn three_term_identity(alpha in -0.45f64..5.0, x in 0.0f64..300.0) {
        let a = order(alpha).eval(x);
        let b = order(alpha + 1.0).eval(x);
        let c = order(alpha + 2.0).eval(x);
        let lhs = a + x * x * c / (4.0 * (alpha + 1.0) * (alpha + 2.0));
        let scale = order(alpha).envelope(x) * (1.0 + x);
        prop_assert!((lhs - b).abs() <= 1e-9 * scale, "lhs={} rhs={}", lhs, b);
    }

    #[test]
    fn derivative_matches_difference(alpha in -0.4f64..4.0, x in 0.5f64..80.0) {
        let o = order(alpha);
        let h = 1e-5;
        let fd = (o.eval(x + h) - o.eval(x - h)) / (2.0 * h);
        prop_assert!((o.derivative(x) - fd).abs() < 1e-7);
    }

    #[test]
    fn series_agrees_with_dispatch(alpha in -0.45f64..4.0, x in 0.0f64..15.0) {
        let o = order(alpha);
        let s = j_series(&o, x, 1e-15).unwrap();
        prop_assert!((s - o.eval(x)).abs() < 1e-11);
    }

    #[test]
    fn crossover_is_continuous(alpha in -0.45f64..7.0) {
        let o = order(alpha);
        let x0 = o.crossover();
        let (xl, xr) = (x0 * (1.0 - 1e-13), x0 * (1.0 + 1e-13));
        let jump = o.eval(xl) - o.eval(xr);
        let exact = j_reference(alpha, xl) - j_reference(alpha, xr);
        let scale = j_reference(alpha, x0).abs().max(o.envelope(x0));
        prop_assert!((jump - exact).abs() <= 1e-9 * scale);
    }
}
