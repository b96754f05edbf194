use std::sync::Arc;

use fblab_core::measure::{c_alpha, RadialSet};
use fblab_core::numeric::orthonormal_legendre;
use fblab_core::pls::{
    gj_constant, kappa, kappa_with_minimizer, multiband_sweep, sweep_r, ConcentrationProblem, PlsConfig,
};
use fblab_core::transform::{band_nodes_for, synthesize_bandlimited, BandProfile, GridOptions, RadialGrid};
use fblab_core::Complex64;
use nalgebra::DVector;

fn small() -> PlsConfig {
    PlsConfig {
        t_max: 60.0,
        ..PlsConfig::default()
    }
}

fn half_periodic() -> RadialSet {
    RadialSet::periodic(1.0, vec![[0.0, 0.5]], 1000.0).unwrap()
}

/// `∫_{E∩[0,T]} |f|² + (‖g‖² - ∫_{[0,T]} |f|²)` with f synthesized from g
/// by the transform module, i.e. the quotient for `E ∪ [T, ∞)`.
fn rayleigh(alpha: f64, band: [f64; 2], set: &RadialSet, t_max: f64, profile: &BandProfile) -> f64 {
    let cuts = set.pieces(0.0, t_max).into_iter().flat_map(|iv| [iv[0], iv[1]]).collect();
    let options = GridOptions::for_frequency(band[1]).with_breakpoints(cuts);
    let grid = Arc::new(RadialGrid::new(alpha, t_max, &options).unwrap());
    let f = synthesize_bandlimited(profile, grid).unwrap();
    let mut inside = 0.0;
    let mut total = 0.0;
    for ((&t, &w), v) in f.grid.nodes.iter().zip(&f.grid.weights).zip(&f.values) {
        total += w * v.norm_sqr();
        if set.contains(t) {
            inside += w * v.norm_sqr();
        }
    }
    inside + profile.norm_sq() - total
}

fn modal_profile(alpha: f64, band: [f64; 2], coeffs: &DVector<f64>, t_max: f64) -> BandProfile {
    let dim = coeffs.len();
    let sc = c_alpha(alpha).sqrt();
    let mut leg = vec![0.0; dim];
    BandProfile::from_fn(alpha, &[band], band_nodes_for(t_max, dim), |y| {
        orthonormal_legendre(dim, band[0], band[1], y, &mut leg);
        let p: f64 = coeffs.iter().zip(&leg).map(|(c, l)| c * l).sum();
        Complex64::new(p / (sc * y.powf(alpha + 0.5)), 0.0)
    })
    .unwrap()
}

#[test]
fn minimizer_quotient_matches_transform_route() {
    let alpha = 0.5;
    let band = [4.0, 5.0];
    let set = half_periodic();
    let config = small();
    let problem = ConcentrationProblem::new(alpha, &[band], &set, &config).unwrap();
    let (est, v) = kappa_with_minimizer(&problem).unwrap();
    assert!(est.kappa_lower <= est.kappa);
    assert!(est.hermitian_defect < 1e-12);
    let profile = modal_profile(alpha, band, &v, config.t_max);
    assert!((profile.norm_sq() - 1.0).abs() < 1e-10);
    let q = rayleigh(alpha, band, &set, config.t_max, &profile);
    assert!((q - est.kappa).abs() < 1e-8, "quotient {q} vs kappa {}", est.kappa);

    // every other band-limited profile concentrates at least as well
    for seed in 0..5 {
        let other = BandProfile::random_legendre(alpha, &[band], band_nodes_for(config.t_max, 12), 12, seed).unwrap();
        let q = rayleigh(alpha, band, &set, config.t_max, &other);
        assert!(q >= est.kappa - 1e-8, "seed {seed}: {q} < {}", est.kappa);
    }
}

#[test]
fn full_line_concentrates_everything() {
    let set = RadialSet::full(1000.0).unwrap();
    for &alpha in &[0.0, 0.5, 1.3] {
        let p = ConcentrationProblem::new(alpha, &[[3.0, 4.0]], &set, &small()).unwrap();
        let k = kappa(&p).unwrap();
        assert!((k.kappa - 1.0).abs() < 1e-10, "alpha={alpha} {}", k.kappa);
        assert!(k.kappa >= 1.0 - 2.0 * k.tail_bound);
    }
    let two = multiband_sweep(0.5, &[vec![2.0, 10.0]], &set, &small(), 0).unwrap();
    assert!((two.entries[0].kappa - 1.0).abs() < 1e-10);
}

#[test]
fn kappa_grows_with_the_set() {
    let alpha = 0.5;
    let thin = RadialSet::periodic(1.0, vec![[0.0, 0.3]], 1000.0).unwrap();
    let half = half_periodic();
    let thick = RadialSet::periodic(1.0, vec![[0.0, 0.7]], 1000.0).unwrap();
    let mut prev = 0.0;
    for set in [&thin, &half, &thick] {
        let k = kappa(&ConcentrationProblem::new(alpha, &[[6.0, 7.0]], set, &small()).unwrap())
            .unwrap()
            .kappa;
        assert!((0.0..=1.0).contains(&k));
        assert!(k > prev - 1e-9, "{k} < {prev}");
        prev = k;
    }
}

#[test]
fn sweeps_are_reproducible() {
    let set = half_periodic();
    let run = || {
        let res = sweep_r(0.5, &set, &[4.0, 8.0], &small(), 3).unwrap();
        let mut buf = Vec::new();
        res.write_csv(&mut buf).unwrap();
        (res, buf)
    };
    let (a, bytes_a) = run();
    let (_, bytes_b) = run();
    assert_eq!(bytes_a, bytes_b);
    let text = String::from_utf8(bytes_a).unwrap();
    assert!(text.starts_with("positions,kappa,tail_bound,band_dim,t_max,"));
    assert_eq!(a.summary.min_kappa, a.entries.iter().map(|e| e.kappa).fold(1.0, f64::min));
    assert!(a.summary.ratio >= 1.0);
}

#[test]
fn single_band_multiband_matches_sweep() {
    let set = half_periodic();
    let a = sweep_r(0.5, &set, &[5.0], &small(), 0).unwrap();
    let b = multiband_sweep(0.5, &[vec![5.0]], &set, &small(), 0).unwrap();
    assert_eq!(a.entries[0].kappa, b.entries[0].kappa);
}

#[test]
fn refinement_reports_changes() {
    let config = PlsConfig {
        t_max: 40.0,
        refine: true,
        ..PlsConfig::default()
    };
    let res = sweep_r(0.5, &half_periodic(), &[3.0], &config, 0).unwrap();
    let e = &res.entries[0];
    assert!(e.kappa_band_refined.is_some() && e.kappa_t_refined.is_some());
    assert_eq!(e.converged, Some(e.refinement_change().unwrap() <= 0.05));
}

#[test]
fn invalid_inputs() {
    let set = half_periodic();
    assert!(sweep_r(0.5, &set, &[], &small(), 0).is_err());
    assert!(sweep_r(0.5, &set, &[4.0, 2.0], &small(), 0).is_err());
    let coarse = PlsConfig {
        band_dim: 4,
        ..small()
    };
    assert!(ConcentrationProblem::new(0.5, &[[1.0, 2.0]], &set, &coarse).is_err());
    assert!(ConcentrationProblem::new(-0.5, &[[1.0, 2.0]], &set, &small()).is_err());
    assert!(ConcentrationProblem::new(0.5, &[[1.0, 2.5]], &set, &small()).is_err());
}

#[test]
fn tail_guard_trips_on_short_truncation() {
    let set = RadialSet::new(vec![[0.0, 5.0]], None, 1000.0).unwrap();
    let config = PlsConfig {
        t_max: 6.0,
        tail_tolerance: 1e-6,
        ..PlsConfig::default()
    };
    let err = kappa(&ConcentrationProblem::new(0.5, &[[1.0, 2.0]], &set, &config).unwrap()).unwrap_err();
    assert!(err.is_numerical(), "{err}");
}

#[test]
fn gj_constant_example() {
    let c = gj_constant(0.0, 0.5, 1.0).unwrap();
    let exponent = 160.0 * 3f64.sqrt() * std::f64::consts::PI / (2.0 * 2f64.ln()) + 1.0;
    let log10 = 1.5f64.log10() + exponent * 600f64.log10();
    assert!((c.log10_c - log10).abs() < 1e-9 * log10);
    assert!((c.log10_c - 1747.5).abs() < 1.0, "{}", c.log10_c);
    let d = gj_constant(0.5, 0.5, 1.0).unwrap();
    assert!(d.log_c > c.log_c);
}
