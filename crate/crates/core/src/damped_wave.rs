//! Radial fractional damped wave equation
//! `w_tt + γ(r) w_t + (-Δ+1)^{s/2} w = 0` on the ball of radius `L` with a
//! Dirichlet condition at `r = L`, discretized in the Fourier-Bessel modes
//! `j_α(q_i r/L)`, `α = d/2 - 1`.
//!
//! The multiplier is taken literally as `(ρ² + 1)^{s/2}` with
//! `ρ_i = q_i/(2πL)`. Propagation runs in energy coordinates
//! `z = (Λ^{1/2} ŵ, ŵ_t)`, where the energy is the Euclidean norm of `z`.

use std::f64::consts::PI;
use std::io::Write;

use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bessel::{kernel_zeros, BesselOrder};
use crate::error::{Error, Result};
use crate::measure::RadialSet;
use crate::numeric::GaussLegendre;
use crate::rng;
use crate::Complex64;

pub const MAX_MODES: usize = 512;
pub const MIN_RADIUS: f64 = 40.0;
/// Minimum samples in the window used by [`fit_decay`].
pub const MIN_FIT_SAMPLES: usize = 32;
/// Relative energy increase tolerated between consecutive samples.
pub const MONOTONE_TOLERANCE: f64 = 1e-8;

const GRAM_NODES: usize = 12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DampedWaveConfig {
    pub d: u32,
    pub s: f64,
    /// Support of the damping; `γ = c0` on it and `0` elsewhere.
    pub damping: RadialSet,
    pub c0: f64,
    #[serde(rename = "L")]
    pub l: f64,
    pub modes: usize,
    pub t_final: f64,
    pub output_dt: f64,
}

impl DampedWaveConfig {
    pub fn alpha(&self) -> f64 {
        self.d as f64 / 2.0 - 1.0
    }

    pub fn validate(&self) -> Result<()> {
        if self.d < 2 {
            return Err(Error::invalid(
                "d",
                format!("d = {} gives α = d/2 - 1 ≤ -1/2; need d ≥ 2", self.d),
            ));
        }
        if !(self.s > 0.0) || !self.s.is_finite() {
            return Err(Error::invalid("s", "fractional order must be positive"));
        }
        if !(self.c0 >= 0.0) || !self.c0.is_finite() {
            return Err(Error::invalid("c0", "damping level must be finite and ≥ 0"));
        }
        if !(self.l >= MIN_RADIUS) || !self.l.is_finite() {
            return Err(Error::invalid("L", format!("need L ≥ {MIN_RADIUS}, got {}", self.l)));
        }
        if self.modes == 0 || self.modes > MAX_MODES {
            return Err(Error::invalid("modes", format!("need 1..={MAX_MODES} modes, got {}", self.modes)));
        }
        if !(self.output_dt > 0.0) || !(self.t_final >= self.output_dt) {
            return Err(Error::invalid("t_final", "need 0 < output_dt ≤ t_final"));
        }
        let steps = self.t_final / self.output_dt;
        if (steps - steps.round()).abs() > 1e-9 * steps {
            return Err(Error::invalid("output_dt", "t_final must be a multiple of output_dt"));
        }
        Ok(())
    }

    fn steps(&self) -> usize {
        (self.t_final / self.output_dt).round() as usize
    }
}

/// Discrete operator data: `ρ_i`, `Λ_i = (ρ_i² + 1)^{s/2}` and the damping
/// Gram matrix `Γ_ij = c0 ∫_{E ∩ [0,L]} φ_i φ_j r^{2α+1} dr`.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorMatrix {
    pub s: f64,
    pub zeros: Vec<f64>,
    pub rho: Vec<f64>,
    pub lambda: DVector<f64>,
    pub gamma: DMatrix<f64>,
}

/// `‖j_α(q r/L)‖²` in `L²([0,L], r^{2α+1} dr)` for a zero `q` of `j_α`.
fn mode_norm_sq(alpha: f64, next: &BesselOrder, q: f64, l: f64) -> f64 {
    let jn = next.eval(q);
    l.powf(2.0 * alpha + 2.0) * q * q * jn * jn / (8.0 * (alpha + 1.0).powi(2))
}

/// Orthonormal mode values `φ_i(r)` scaled by `sqrt(w r^{2α+1})` on a
/// composite rule over `pieces`. Rows are nodes.
fn weighted_modes(
    alpha: f64,
    zeros: &[f64],
    l: f64,
    pieces: &[[f64; 2]],
) -> Result<DMatrix<f64>> {
    let order = BesselOrder::new(alpha)?;
    let next = BesselOrder::new(alpha + 1.0)?;
    let scale: Vec<f64> = zeros
        .iter()
        .map(|&q| 1.0 / mode_norm_sq(alpha, &next, q, l).sqrt())
        .collect();
    let q_max = zeros.last().copied().unwrap_or(1.0);
    // products of two modes complete at most one oscillation per panel
    let width = f64::min(0.5, PI * l / q_max);
    let rule = GaussLegendre::new(GRAM_NODES);
    let mut nodes = Vec::new();
    let mut weights = Vec::new();
    for iv in pieces {
        let panels = ((iv[1] - iv[0]) / width).ceil().max(1.0) as usize;
        let h = (iv[1] - iv[0]) / panels as f64;
        for k in 0..panels {
            let a = iv[0] + h * k as f64;
            rule.push_mapped(a, a + h, &mut nodes, &mut weights);
        }
    }
    let rows: Vec<Vec<f64>> = nodes
        .par_iter()
        .zip(&weights)
        .map(|(&r, &w)| {
            let root = (w * r.powf(2.0 * alpha + 1.0)).sqrt();
            zeros
                .iter()
                .zip(&scale)
                .map(|(&q, &c)| root * c * order.eval(q * r / l))
                .collect()
        })
        .collect();
    let n = zeros.len();
    Ok(DMatrix::from_fn(rows.len(), n, |i, j| rows[i][j]))
}

/// Gram matrix of the orthonormal modes over `E ∩ [0, L]` (unscaled by `c0`).
pub fn mode_gram(alpha: f64, zeros: &[f64], l: f64, set: &RadialSet) -> Result<DMatrix<f64>> {
    let pieces = set.pieces(0.0, l);
    if pieces.is_empty() {
        return Ok(DMatrix::zeros(zeros.len(), zeros.len()));
    }
    let phi = weighted_modes(alpha, zeros, l, &pieces)?;
    let g = phi.tr_mul(&phi);
    Ok((&g + g.transpose()) * 0.5)
}

pub fn build_generator(config: &DampedWaveConfig) -> Result<GeneratorMatrix> {
    config.validate()?;
    let alpha = config.alpha();
    let order = BesselOrder::new(alpha)?;
    let zeros = kernel_zeros(&order, config.modes)?;
    let rho: Vec<f64> = zeros.iter().map(|q| q / (2.0 * PI * config.l)).collect();
    let lambda = DVector::from_iterator(
        rho.len(),
        rho.iter().map(|r| (r * r + 1.0).powf(config.s / 2.0)),
    );
    let gamma = if config.c0 == 0.0 {
        DMatrix::zeros(zeros.len(), zeros.len())
    } else {
        mode_gram(alpha, &zeros, config.l, &config.damping)? * config.c0
    };
    Ok(GeneratorMatrix {
        s: config.s,
        zeros,
        rho,
        lambda,
        gamma,
    })
}

impl GeneratorMatrix {
    pub fn modes(&self) -> usize {
        self.rho.len()
    }

    /// `[[0, I], [-Λ, -Γ]]` acting on `(ŵ, ŵ_t)`.
    pub fn block_matrix(&self) -> DMatrix<f64> {
        let n = self.modes();
        let mut a = DMatrix::zeros(2 * n, 2 * n);
        for i in 0..n {
            a[(i, n + i)] = 1.0;
            a[(n + i, i)] = -self.lambda[i];
        }
        a.view_mut((n, n), (n, n)).copy_from(&(-&self.gamma));
        a
    }

    /// `[[0, Λ^{1/2}], [-Λ^{1/2}, -Γ]]` acting on `z = (Λ^{1/2} ŵ, ŵ_t)`.
    pub fn energy_matrix(&self) -> DMatrix<f64> {
        let n = self.modes();
        let mut a = DMatrix::zeros(2 * n, 2 * n);
        for i in 0..n {
            let w = self.lambda[i].sqrt();
            a[(i, n + i)] = w;
            a[(n + i, i)] = -w;
        }
        a.view_mut((n, n), (n, n)).copy_from(&(-&self.gamma));
        a
    }

    pub fn eigenvalues(&self) -> Result<Vec<Complex64>> {
        let a = self.energy_matrix();
        let schur = nalgebra::linalg::Schur::try_new(a, f64::EPSILON, 10_000)
            .ok_or_else(|| Error::NotConverged("Schur iteration did not converge".into()))?;
        Ok(schur.complex_eigenvalues().iter().copied().collect())
    }

    /// Largest group speed `dω/dk` over the modes, `ω = Λ^{1/2}`, `k = 2πρ`.
    pub fn max_group_speed(&self) -> f64 {
        let s = self.s;
        self.rho
            .iter()
            .map(|&r| s / 2.0 * r * (r * r + 1.0).powf(s / 4.0 - 1.0) / (2.0 * PI))
            .fold(0.0, f64::max)
    }
}

/// Largest real part of the generator spectrum.
pub fn spectral_abscissa(config: &DampedWaveConfig) -> Result<f64> {
    let generator = build_generator(config)?;
    Ok(generator
        .eigenvalues()?
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max))
}

/// Spectral coefficients of `(w(0), w_t(0))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitialData {
    pub w0: Vec<f64>,
    pub w1: Vec<f64>,
}

impl InitialData {
    /// Gaussian coefficients weighted so every mode carries comparable
    /// `H^s × H^{s/2}` mass, normalized to unit total.
    pub fn random(generator: &GeneratorMatrix, seed: u64) -> Self {
        let mut gen = rng::root(seed);
        let n = generator.modes();
        let mut w0 = Vec::with_capacity(n);
        let mut w1 = Vec::with_capacity(n);
        for i in 0..n {
            let lam = generator.lambda[i];
            let a: f64 = StandardNormal.sample(&mut gen);
            let b: f64 = StandardNormal.sample(&mut gen);
            w0.push(a / lam);
            w1.push(b / lam.sqrt());
        }
        let norm: f64 = (0..n)
            .map(|i| {
                let lam = generator.lambda[i];
                lam * lam * w0[i] * w0[i] + lam * w1[i] * w1[i]
            })
            .sum::<f64>()
            .sqrt();
        w0.iter_mut().chain(w1.iter_mut()).for_each(|v| *v /= norm);
        InitialData { w0, w1 }
    }

    pub fn single_mode(n: usize, mode: usize, amplitude: f64) -> Self {
        let mut w0 = vec![0.0; n];
        w0[mode] = amplitude;
        InitialData {
            w0,
            w1: vec![0.0; n],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecayModel {
    Exp,
    Poly,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FittedDecay {
    pub model: DecayModel,
    pub rate: f64,
    pub r_squared: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyTrace {
    pub times: Vec<f64>,
    pub energies: Vec<f64>,
    /// Wave-travel horizon `L / max group speed`; fits ignore later samples.
    pub horizon: f64,
    pub fitted: Option<FittedDecay>,
}

impl EnergyTrace {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "E", "logE"])?;
        for (t, e) in self.times.iter().zip(&self.energies) {
            w.write_record([t.to_string(), e.to_string(), e.ln().to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn evolve(config: &DampedWaveConfig, initial: &InitialData) -> Result<EnergyTrace> {
    let generator = build_generator(config)?;
    evolve_with(&generator, config, initial)
}

/// Propagate with the exact step `exp(A Δt)` (Padé scaling and squaring)
/// applied repeatedly at the output spacing.
pub fn evolve_with(
    generator: &GeneratorMatrix,
    config: &DampedWaveConfig,
    initial: &InitialData,
) -> Result<EnergyTrace> {
    config.validate()?;
    let n = generator.modes();
    if initial.w0.len() != n || initial.w1.len() != n {
        return Err(Error::invalid("initial", format!("need {n} coefficients per component")));
    }
    let mut z = DVector::from_fn(2 * n, |i, _| {
        if i < n {
            generator.lambda[i].sqrt() * initial.w0[i]
        } else {
            initial.w1[i - n]
        }
    });
    if !(z.norm() > 0.0) {
        return Err(Error::invalid("initial", "zero initial data"));
    }
    let step = (generator.energy_matrix() * config.output_dt).exp();
    let steps = config.steps();
    let mut times = Vec::with_capacity(steps + 1);
    let mut energies = Vec::with_capacity(steps + 1);
    times.push(0.0);
    energies.push(z.norm());
    for k in 1..=steps {
        z = &step * z;
        times.push(k as f64 * config.output_dt);
        energies.push(z.norm());
    }
    if let Some(bad) = energies.iter().find(|e| !(**e > 0.0) || !e.is_finite()) {
        return Err(Error::NotConverged(format!("energy left the positive range: {bad}")));
    }
    Ok(EnergyTrace {
        times,
        energies,
        horizon: config.l / generator.max_group_speed(),
        fitted: None,
    })
}

/// Least-squares slope of `log E` against `t` (exp) or `log(1+t)` (poly)
/// over the tail half of the pre-horizon samples. The rate is minus the slope.
pub fn fit_decay(trace: &EnergyTrace, model: DecayModel) -> Result<FittedDecay> {
    if trace.times.len() != trace.energies.len() {
        return Err(Error::invalid("trace", "times and energies differ in length"));
    }
    let window = trace.times.partition_point(|&t| t <= trace.horizon);
    if window < MIN_FIT_SAMPLES {
        return Err(Error::invalid(
            "trace",
            format!("{window} samples before the horizon, need {MIN_FIT_SAMPLES}"),
        ));
    }
    if let Some(bad) = trace.energies[..window].iter().find(|e| !(**e > 0.0)) {
        return Err(Error::invalid("trace", format!("non-positive energy {bad}")));
    }
    let tail = window / 2..window;
    for k in tail.start + 1..tail.end {
        if trace.energies[k] > trace.energies[k - 1] * (1.0 + MONOTONE_TOLERANCE) {
            return Err(Error::NotConverged(format!(
                "energy increases at t = {} beyond tolerance",
                trace.times[k]
            )));
        }
    }
    let xs: Vec<f64> = trace.times[tail.clone()]
        .iter()
        .map(|&t| match model {
            DecayModel::Exp => t,
            DecayModel::Poly => t.ln_1p(),
        })
        .collect();
    let ys: Vec<f64> = trace.energies[tail].iter().map(|e| e.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r_squared = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    Ok(FittedDecay {
        model,
        rate: -slope,
        r_squared,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(c0: f64, damping: RadialSet) -> DampedWaveConfig {
        DampedWaveConfig {
            d: 3,
            s: 2.0,
            damping,
            c0,
            l: 40.0,
            modes: 16,
            t_final: 10.0,
            output_dt: 0.5,
        }
    }

    #[test]
    fn rejects_invalid_configs() {
        let mut c = config(1.0, RadialSet::full(40.0).unwrap());
        c.d = 1;
        assert!(matches!(build_generator(&c), Err(Error::InvalidParameter { .. })));
        let mut c = config(1.0, RadialSet::full(40.0).unwrap());
        c.output_dt = 0.3;
        assert!(c.validate().is_err());
        let mut c = config(1.0, RadialSet::full(40.0).unwrap());
        c.modes = MAX_MODES + 1;
        assert!(c.validate().is_err());
    }

    #[test]
    fn s_two_multiplier_is_exact() {
        let g = build_generator(&config(0.0, RadialSet::empty(40.0).unwrap())).unwrap();
        for (l, r) in g.lambda.iter().zip(&g.rho) {
            assert_eq!(*l, r * r + 1.0);
        }
        assert!(g.lambda.as_slice().windows(2).all(|w| w[1] > w[0]));
    }
}
