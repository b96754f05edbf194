//! Numerical checks of the inequalities behind the annulus estimate:
//! the Nazarov-Turán comparison for exponential polynomials, a Bernstein
//! inequality for `g(x) = f(√x)` with `f` Fourier-Bessel bandlimited, and the
//! accuracy of the exponential decomposition of half-integer kernels.

use std::f64::consts::PI;
use std::io::Write;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng as _, RngCore};
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bessel::{decompose_exponentials, hiprec::j_reference, BesselOrder};
use crate::error::{Error, Result};
use crate::measure::RadialSet;
use crate::numeric::{orthonormal_legendre, pairwise_sum, pochhammer, GaussLegendre};
use crate::rng;
use crate::transform::{band_nodes_for, BandProfile, GridOptions, RadialGrid};

/// Minimum quadrature nodes per unit of `max(1, max|λ|) · |I|`.
pub const NT_NODES_PER_UNIT: usize = 64;

/// Working constant for the Nazarov-Turán bound.
pub const DEFAULT_C0: f64 = 20.0;

/// Highest derivative order accepted by [`bernstein_ratio`].
pub const MAX_BERNSTEIN_ORDER: u32 = 4;

/// One exponential term `p(x) e^{2πiλx}`, `p(x) = Σ_j coeffs[j] x^j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpTerm {
    pub lambda: f64,
    pub coeffs: Vec<Complex64>,
}

/// `r(x) = Σ_k p_k(x) e^{2πiλ_k x}` with distinct frequencies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpPolynomial {
    terms: Vec<ExpTerm>,
}

impl ExpPolynomial {
    pub fn new(terms: Vec<ExpTerm>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::invalid("terms", "at least one term is required"));
        }
        for (i, a) in terms.iter().enumerate() {
            if !a.lambda.is_finite() {
                return Err(Error::invalid("lambda", "frequencies must be finite"));
            }
            if terms[..i].iter().any(|b| b.lambda == a.lambda) {
                return Err(Error::invalid("lambda", format!("frequency {} repeated", a.lambda)));
            }
        }
        if terms.iter().all(|t| t.coeffs.iter().all(|c| c.norm() == 0.0)) {
            return Err(Error::invalid("coeffs", "all coefficients vanish"));
        }
        Ok(ExpPolynomial { terms })
    }

    pub fn terms(&self) -> &[ExpTerm] {
        &self.terms
    }

    /// Number of frequencies.
    pub fn n(&self) -> usize {
        self.terms.len()
    }

    /// Maximal polynomial degree plus one.
    pub fn m(&self) -> usize {
        self.terms.iter().map(|t| t.coeffs.len()).max().unwrap_or(0).max(1)
    }

    pub fn max_frequency(&self) -> f64 {
        self.terms.iter().map(|t| t.lambda.abs()).fold(0.0, f64::max)
    }

    pub fn eval(&self, x: f64) -> Complex64 {
        self.terms
            .iter()
            .map(|t| {
                let poly = t
                    .coeffs
                    .iter()
                    .rev()
                    .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * x + c);
                poly * Complex64::from_polar(1.0, 2.0 * PI * t.lambda * x)
            })
            .sum()
    }

    /// Random complex Gaussian coefficients, frequencies uniform in
    /// `[-max_lambda, max_lambda]`.
    pub fn random(n: usize, m: usize, max_lambda: f64, rng: &mut impl RngCore) -> Result<Self> {
        if n == 0 || m == 0 {
            return Err(Error::invalid("N", "N and M must be positive"));
        }
        let mut terms: Vec<ExpTerm> = Vec::with_capacity(n);
        while terms.len() < n {
            let lambda = rng.random_range(-max_lambda..=max_lambda);
            if terms.iter().any(|t| t.lambda == lambda) {
                continue;
            }
            let coeffs = (0..m)
                .map(|_| {
                    let re: f64 = StandardNormal.sample(rng);
                    let im: f64 = StandardNormal.sample(rng);
                    Complex64::new(re, im)
                })
                .collect();
            terms.push(ExpTerm { lambda, coeffs });
        }
        ExpPolynomial::new(terms)
    }
}

/// Outcome of one Nazarov-Turán comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NtReport {
    /// `‖r‖_{L^p(I)} / ‖r‖_{L^p(E)}`.
    pub ratio: f64,
    /// `(C₀|I|/|E|)^{NM - (p-1)/p}`.
    pub bound: f64,
    pub holds: bool,
    pub interval_length: f64,
    pub set_length: f64,
}

/// Quadrature options for [`nazarov_turan_ratio`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NtOptions {
    pub c0: f64,
    pub nodes_per_unit: usize,
}

impl Default for NtOptions {
    fn default() -> Self {
        NtOptions {
            c0: DEFAULT_C0,
            nodes_per_unit: NT_NODES_PER_UNIT,
        }
    }
}

/// `∫|r|^p` over the given pieces with 16-point panels.
fn lp_power(r: &ExpPolynomial, pieces: &[[f64; 2]], p: f64, panel: f64, rule: &GaussLegendre) -> f64 {
    let mut terms = Vec::new();
    let mut xs = Vec::new();
    let mut ws = Vec::new();
    for iv in pieces {
        let panels = ((iv[1] - iv[0]) / panel).ceil().max(1.0) as usize;
        let h = (iv[1] - iv[0]) / panels as f64;
        for k in 0..panels {
            let lo = iv[0] + h * k as f64;
            xs.clear();
            ws.clear();
            rule.push_mapped(lo, lo + h, &mut xs, &mut ws);
            terms.extend(xs.iter().zip(&ws).map(|(&x, &w)| w * r.eval(x).norm().powf(p)));
        }
    }
    pairwise_sum(&terms)
}

/// Compare `L^p` norms of `r` on `I` and on `E ∩ I`.
pub fn nazarov_turan_ratio(
    r: &ExpPolynomial,
    interval: [f64; 2],
    set: &RadialSet,
    p: f64,
    options: &NtOptions,
) -> Result<NtReport> {
    let [a, b] = interval;
    if !(b > a) || !(a >= 0.0) {
        return Err(Error::invalid("interval", format!("need 0 ≤ a < b, got [{a}, {b}]")));
    }
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::invalid("p", format!("need 1 ≤ p < ∞, got {p}")));
    }
    if !(options.c0 > 0.0) {
        return Err(Error::invalid("c0", "calibration constant must be positive"));
    }
    if options.nodes_per_unit < NT_NODES_PER_UNIT {
        return Err(Error::UnderResolved(format!(
            "{} nodes per unit frequency-length, need {NT_NODES_PER_UNIT}",
            options.nodes_per_unit
        )));
    }
    let pieces = set.pieces(a, b);
    let set_length: f64 = pieces.iter().map(|iv| iv[1] - iv[0]).sum();
    if !(set_length > 0.0) {
        return Err(Error::invalid("E", "E ∩ I has zero length"));
    }
    let rule = GaussLegendre::new(16);
    let scale = r.max_frequency().max(1.0);
    let panel = 16.0 / (options.nodes_per_unit as f64 * scale);
    let on_i = lp_power(r, &[interval], p, panel, &rule);
    let on_e = lp_power(r, &pieces, p, panel, &rule);
    if !(on_e > 0.0) {
        return Err(Error::NotConverged("r vanishes on E to quadrature precision".into()));
    }
    let ratio = (on_i / on_e).powf(1.0 / p);
    let len = b - a;
    let exponent = (r.n() * r.m()) as f64 - (p - 1.0) / p;
    let bound = (options.c0 * len / set_length).powf(exponent);
    Ok(NtReport {
        ratio,
        bound,
        holds: ratio <= bound,
        interval_length: len,
        set_length,
    })
}

/// Monte-Carlo calibration setup.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NtTrialConfig {
    pub n: usize,
    pub m: usize,
    pub trials: usize,
    pub interval: [f64; 2],
    /// E, intersected with the interval.
    pub set: RadialSet,
    pub p: f64,
    pub max_lambda: f64,
    #[serde(default)]
    pub options: NtOptions,
}

/// One Monte-Carlo trial. `seed` alone reproduces the trial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NtTrial {
    pub seed: u64,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "|I|")]
    pub interval_length: f64,
    #[serde(rename = "|E|")]
    pub set_length: f64,
    pub ratio: f64,
    pub bound: f64,
}

/// Summary written next to the trial log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NtCalibration {
    pub c0: f64,
    pub p: f64,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "M")]
    pub m: usize,
    pub trials: usize,
    pub max_ratio: f64,
    /// Largest `ln ratio / ln bound`; below 1 means every trial satisfied the bound.
    pub max_log_ratio_over_log_bound: f64,
    pub violations: usize,
}

/// Seed of trial `index` under root `seed`: the first word of stream
/// `index`. Trial generators are then seeded from that value.
pub fn trial_seed(seed: u64, index: u64) -> u64 {
    rng::stream(seed, index).next_u64()
}

pub fn nazarov_turan_trials(config: &NtTrialConfig, seed: u64) -> Result<(Vec<NtTrial>, NtCalibration)> {
    let trials = (0..config.trials as u64)
        .into_par_iter()
        .map(|i| {
            let s = trial_seed(seed, i);
            let mut gen = rng::root(s);
            let r = ExpPolynomial::random(config.n, config.m, config.max_lambda, &mut gen)?;
            let rep = nazarov_turan_ratio(&r, config.interval, &config.set, config.p, &config.options)?;
            Ok(NtTrial {
                seed: s,
                n: config.n,
                m: config.m,
                interval_length: rep.interval_length,
                set_length: rep.set_length,
                ratio: rep.ratio,
                bound: rep.bound,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let max_ratio = trials.iter().map(|t| t.ratio).fold(0.0, f64::max);
    let worst = trials
        .iter()
        .map(|t| t.ratio.ln() / t.bound.ln())
        .fold(f64::NEG_INFINITY, f64::max);
    let violations = trials.iter().filter(|t| t.ratio > t.bound).count();
    let calibration = NtCalibration {
        c0: config.options.c0,
        p: config.p,
        n: config.n,
        m: config.m,
        trials: trials.len(),
        max_ratio,
        max_log_ratio_over_log_bound: worst,
        violations,
    };
    Ok((trials, calibration))
}

/// CSV with header `seed,N,M,|I|,|E|,ratio,bound`.
pub fn write_trials_csv<W: Write>(out: W, trials: &[NtTrial]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for t in trials {
        w.serialize(t)?;
    }
    w.flush()?;
    Ok(())
}

/// Bernstein check output.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BernsteinReport {
    /// `∫|g^{(k)}(s)|² s^{α+k} ds / ((πR)^{2k} ∫|g(s)|² s^α ds)`.
    pub ratio: f64,
    pub lhs: f64,
    pub rhs: f64,
    /// Share of either integral carried by `[t_max/2, t_max]`.
    pub tail_share: f64,
}

/// Truncation for [`bernstein_ratio`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BernsteinOptions {
    pub t_max: f64,
    /// Largest accepted [`BernsteinReport::tail_share`].
    pub tail_tolerance: f64,
}

impl Default for BernsteinOptions {
    fn default() -> Self {
        BernsteinOptions {
            t_max: 40.0,
            tail_tolerance: 1e-6,
        }
    }
}

/// Bernstein ratio for `f = F_α^{-1} g` with `g` the band profile and
/// `G(x) = f(√x)`. With `u = 2πy√x`,
///
/// ```text
/// d/dx j_α(2πy√x) = -π²y²/(α+1) · j_{α+1}(2πy√x),
/// ```
///
/// so `G^{(k)}(t²) = c_α (-π²)^k / (α+1)_k ∫ g(y) y^{2k} j_{α+k}(2πty) y^{2α+1} dy`.
/// Both sides are integrated in `t = √s` on `[0, t_max]`.
pub fn bernstein_ratio(
    profile: &BandProfile,
    r: f64,
    k: u32,
    options: &BernsteinOptions,
) -> Result<BernsteinReport> {
    if k > MAX_BERNSTEIN_ORDER {
        return Err(Error::invalid(
            "k",
            format!("derivative order {k} above the supported {MAX_BERNSTEIN_ORDER}"),
        ));
    }
    if !(r > 0.0) || profile.max_edge() > r + 1e-12 {
        return Err(Error::invalid(
            "R",
            format!("bands must lie in [0, R], max edge {} > R = {r}", profile.max_edge()),
        ));
    }
    if !(profile.norm_sq() > 0.0) {
        return Err(Error::invalid("profile", "zero profile"));
    }
    let t_max = options.t_max;
    let need = band_nodes_for(t_max, 2 * k as usize);
    if profile.nodes_per_band < need {
        return Err(Error::UnderResolved(format!(
            "{} nodes per band cannot resolve t ≤ {t_max}; need {need}",
            profile.nodes_per_band
        )));
    }
    let alpha = profile.alpha;
    let kf = k as f64;
    let base = BesselOrder::new(alpha)?;
    let raised = BesselOrder::new(alpha + kf)?;
    let grid = Arc::new(RadialGrid::new(
        alpha,
        t_max,
        &GridOptions::for_frequency(profile.max_edge()).with_breakpoints(vec![0.5 * t_max]),
    )?);
    let factor = PI.powi(2 * k as i32) / pochhammer(alpha + 1.0, k as usize);
    // per node: (t, lhs integrand, rhs integrand), both times dt
    let rows: Vec<(f64, f64, f64)> = grid
        .nodes
        .par_iter()
        .zip(&grid.dx_weights)
        .map_init(
            || (Vec::new(), Vec::new()),
            |(fb, db), (&t, &w)| {
                fb.clear();
                db.clear();
                for ((&y, &bw), &g) in profile
                    .band_nodes
                    .iter()
                    .zip(&profile.band_weights)
                    .zip(&profile.samples)
                {
                    // band weights carry c_α y^{2α+1}
                    fb.push(g * (bw * base.eval(2.0 * PI * t * y)));
                    db.push(g * (bw * y.powi(2 * k as i32) * raised.eval(2.0 * PI * t * y)));
                }
                let f = pairwise_sum(fb);
                let d = pairwise_sum(db) * factor;
                let lhs = 2.0 * w * d.norm_sqr() * t.powf(2.0 * alpha + 2.0 * kf + 1.0);
                let rhs = 2.0 * w * f.norm_sqr() * t.powf(2.0 * alpha + 1.0);
                (t, lhs, rhs)
            },
        )
        .collect();
    let lhs_terms: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let rhs_terms: Vec<f64> = rows.iter().map(|r| r.2).collect();
    let lhs = pairwise_sum(&lhs_terms);
    let rhs_plain = pairwise_sum(&rhs_terms);
    let half = 0.5 * t_max;
    let late = |col: &dyn Fn(&(f64, f64, f64)) -> f64| -> f64 {
        rows.iter().filter(|r| r.0 > half).map(col).sum()
    };
    let tail_share = f64::max(
        if lhs > 0.0 { late(&|r| r.1) / lhs } else { 0.0 },
        late(&|r| r.2) / rhs_plain,
    );
    if tail_share > options.tail_tolerance {
        return Err(Error::NotConverged(format!(
            "share {tail_share:.3e} of the mass in [{half}, {t_max}]; increase t_max"
        )));
    }
    let rhs = (PI * r).powi(2 * k as i32) * rhs_plain;
    Ok(BernsteinReport {
        ratio: lhs / rhs,
        lhs,
        rhs,
        tail_share,
    })
}

/// Real profile `(u(1-u))^6 · P(u)` on `[0, R]`, `u = y/R`, with `P` a
/// Gaussian combination of Legendre polynomials of degree `≤ degree`.
/// Bands are `[b, b+1]` for `b < R`, so `R` must be an integer.
pub fn smooth_profile(alpha: f64, r: f64, nodes_per_band: usize, degree: usize, seed: u64) -> Result<BandProfile> {
    if !(r >= 1.0) || r.fract() != 0.0 {
        return Err(Error::invalid("R", format!("need an integer R ≥ 1, got {r}")));
    }
    let mut gen = rng::root(seed);
    let coeffs: Vec<f64> = (0..=degree).map(|_| StandardNormal.sample(&mut gen)).collect();
    let bands: Vec<[f64; 2]> = (0..r as usize).map(|b| [b as f64, b as f64 + 1.0]).collect();
    let mut basis = vec![0.0; degree + 1];
    BandProfile::from_fn(alpha, &bands, nodes_per_band, |y| {
        let u = y / r;
        orthonormal_legendre(degree + 1, 0.0, 1.0, u, &mut basis);
        let p: f64 = coeffs.iter().zip(&basis).map(|(c, b)| c * b).sum();
        Complex64::new((u * (1.0 - u)).powi(6) * p, 0.0)
    })
}

/// `max_s |j(s) - Σ_± Σ_j c_{±,j} e^{±is} s^{-j-1}| / max(|j(s)|, s^{-m-1})`
/// against the extended-precision series.
pub fn decomposition_residual(m: u32, s_grid: &[f64]) -> Result<f64> {
    if m > 6 {
        return Err(Error::invalid("m", format!("orders up to 6 are supported, got {m}")));
    }
    if let Some(&bad) = s_grid.iter().find(|&&s| !(s >= 1.0)) {
        return Err(Error::invalid("s", format!("need s ≥ 1, got {bad}")));
    }
    let dec = decompose_exponentials(m);
    let alpha = m as f64 + 0.5;
    Ok(s_grid
        .par_iter()
        .map(|&s| {
            let exact = j_reference(alpha, s);
            let approx = dec.reconstruct(s);
            let err = (approx - Complex64::new(exact, 0.0)).norm();
            err / exact.abs().max(s.powi(-(m as i32) - 1))
        })
        .reduce(|| 0.0, f64::max))
}
